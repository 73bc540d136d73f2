"""Train/test index partitions for the evaluation protocols."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def fold_assignment(labels, folds: int, seed: int = 0) -> tuple[np.ndarray, bool]:
    """Assign every point to one of ``folds`` folds.

    Seeded shuffle then contiguous chunking, stratified by category when
    every category present has at least ``folds`` members. ``folds >= N``
    degenerates to leave-one-out in index order.

    Returns:
        (fold index per point, whether stratification was applied)
    """
    labels = np.asarray(labels)
    N = len(labels)
    if folds < 2:
        raise InvalidInputError(f"need at least 2 folds, got {folds}")
    if N < 2:
        raise InvalidInputError("cross-validation needs at least 2 points")
    if folds >= N:
        return np.arange(N), False
    rng = np.random.default_rng(seed)
    assignment = np.empty(N, dtype=np.int64)
    cats, counts = np.unique(labels, return_counts=True)
    stratified = bool(np.all(counts >= folds))
    if stratified:
        for c in cats:
            members = rng.permutation(np.flatnonzero(labels == c))
            for f, chunk in enumerate(np.array_split(members, folds)):
                assignment[chunk] = f
    else:
        for f, chunk in enumerate(np.array_split(rng.permutation(N), folds)):
            assignment[chunk] = f
    return assignment, stratified


def kfold_splits(labels, folds: int, seed: int = 0):
    """List of ``(train_idx, test_idx)`` pairs, both sorted ascending."""
    assignment, stratified = fold_assignment(labels, folds, seed)
    k = int(assignment.max()) + 1
    out = [(np.flatnonzero(assignment != f), np.flatnonzero(assignment == f)) for f in range(k)]
    return out, stratified


def holdout_split(N: int, fraction: float, seed: int = 0):
    if not 0 < fraction < 1:
        raise InvalidInputError(f"holdout fraction must be in (0, 1), got {fraction}")
    if N < 2:
        raise InvalidInputError("holdout needs at least 2 points")
    n_test = min(max(int(round(fraction * N)), 1), N - 1)
    perm = np.random.default_rng(seed).permutation(N)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])
