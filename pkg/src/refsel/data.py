"""Dataset construction and ingestion.

CSV dataset format (UTF-8, comma separated, header mandatory)::

    x0,x1,label
    0.5,1.25,A
    2,3,B
    1,1,

The last column is always ``label``; an empty cell marks an unlabelled
(transfer) stimulus. Categories are ordered by first appearance.

Proportions format: feature columns followed by one count column per
category. Count columns are named ``count_<category>``, or the number of
feature columns is passed explicitly::

    x0,x1,count_A,count_B
    0,0,8,2
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import UNLABELLED, Dataset
from .errors import InvalidInputError, ParseError
from .selection import check_seed

COUNT_PREFIX = "count_"


def _fmt(v) -> str:
    return format(float(v), ".17g")


# -- 5-4 category structure -------------------------------------------------

FIVE_FOUR_A = ((0, 0, 1, 1), (0, 1, 1, 1), (1, 0, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0))
FIVE_FOUR_B = ((0, 0, 0, 0), (0, 0, 0, 1), (0, 1, 0, 1), (0, 1, 1, 0))
FIVE_FOUR_TRANSFER = ((0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 0), (1, 0, 0, 1),
                      (1, 0, 1, 0), (1, 1, 0, 0), (1, 1, 1, 1))


@dataclass(frozen=True)
class FiveFourStructure:
    training: Dataset
    transfer: np.ndarray

    def as_dataset(self) -> Dataset:
        """Training and transfer stimuli together; transfer rows unlabelled."""
        feats = np.vstack([self.training.features, self.transfer])
        labels = np.concatenate([self.training.labels,
                                 np.full(len(self.transfer), UNLABELLED)])
        return Dataset(feats, labels, self.training.categories, self.training.feature_names)


def gen_5_4() -> FiveFourStructure:
    """A 5-4 category structure over four binary features.

    Category A has five stimuli, B four, and the remaining seven 4-bit
    vectors are transfer stimuli. Every feature takes 1 in a strict majority
    of A. For B, a strict 0-majority on all four features cannot coexist
    with two B-stimuli carrying two 1s each, so B only requires 0 to be a
    mode (at least half). One A-stimulus has exactly two 0s; two
    B-stimuli have exactly two 1s.

    The instance is the first solution, in lexicographic order of the
    stimulus codes, of ``search_5_4_structures(typical=True)``.
    """
    feats = np.array(FIVE_FOUR_A + FIVE_FOUR_B, dtype=float)
    labels = np.array([0] * 5 + [1] * 4)
    training = Dataset(feats, labels, ("A", "B"), ("f1", "f2", "f3", "f4"))
    transfer = np.array(FIVE_FOUR_TRANSFER, dtype=float)
    transfer.setflags(write=False)
    return FiveFourStructure(training, transfer)


def _bits(code):
    return tuple((code >> (3 - i)) & 1 for i in range(4))


def _mode_holds(stims, value, strict):
    for f in range(4):
        hits = sum(1 for s in stims if s[f] == value)
        if (hits <= len(stims) - hits) if strict else (hits < len(stims) - hits):
            return False
    return True


def search_5_4_structures(strict_b: bool = False, typical: bool = True):
    """Enumerate (A, B) labelings of the 16 4-bit vectors meeting the 5-4 constraints.

    Args:
        strict_b: require a strict 0-majority on every feature within B.
        typical: additionally forbid A-stimuli with more than two 0s and
            B-stimuli with more than two 1s.

    Returns:
        list of (A stimuli, B stimuli) tuples, each sorted by stimulus code.
    """
    vecs = [_bits(c) for c in range(16)]
    zeros = [v.count(0) for v in vecs]

    def a_ok(idx):
        stims = [vecs[i] for i in idx]
        if not _mode_holds(stims, 1, strict=True):
            return False
        if sum(1 for i in idx if zeros[i] == 2) != 1:
            return False
        return not typical or all(zeros[i] <= 2 for i in idx)

    def b_ok(idx):
        stims = [vecs[i] for i in idx]
        if not _mode_holds(stims, 0, strict=strict_b):
            return False
        if sum(1 for i in idx if 4 - zeros[i] == 2) != 2:
            return False
        return not typical or all(4 - zeros[i] <= 2 for i in idx)

    a_sets = [a for a in itertools.combinations(range(16), 5) if a_ok(a)]
    b_sets = [b for b in itertools.combinations(range(16), 4) if b_ok(b)]
    out = []
    for a in a_sets:
        for b in b_sets:
            if not set(a) & set(b):
                out.append((tuple(vecs[i] for i in a), tuple(vecs[i] for i in b)))
    return out


# -- synthetic Gaussian data ------------------------------------------------

def gen_gaussian(per_class_counts: Sequence[int], means, sigmas, noise_rate: float = 0.0,
                 seed: int = 0, categories: Sequence[str] | None = None):
    """Spherical Gaussian classes with optional uniform label noise.

    ``floor(noise_rate * N)`` points, chosen uniformly, get a label drawn
    uniformly from the other categories.

    Returns:
        (dataset, sorted array of flipped indices)
    """
    counts = [int(c) for c in per_class_counts]
    means = np.atleast_2d(np.asarray(means, dtype=float))
    c = len(counts)
    if c < 1 or any(k < 0 for k in counts) or sum(counts) < 1:
        raise InvalidInputError("per_class_counts must be non-negative with a positive total")
    if means.shape[0] != c:
        raise InvalidInputError(f"expected {c} means, got {means.shape[0]}")
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.ndim == 0:
        sigmas = np.full(c, float(sigmas))
    if sigmas.shape != (c,) or np.any(sigmas < 0):
        raise InvalidInputError("sigmas must be one non-negative scalar per category")
    if not 0 <= noise_rate < 1:
        raise InvalidInputError(f"noise_rate must be in [0, 1), got {noise_rate}")
    if categories is None:
        categories = [chr(ord("A") + i) if c <= 26 else f"c{i}" for i in range(c)]
    if len(categories) != c:
        raise InvalidInputError(f"expected {c} category names")
    if noise_rate > 0 and c < 2:
        raise InvalidInputError("label noise needs at least two categories")
    rng = np.random.default_rng(check_seed(seed))
    n = means.shape[1]
    feats = np.vstack([means[i] + sigmas[i] * rng.standard_normal((counts[i], n))
                       for i in range(c)])
    labels = np.repeat(np.arange(c), counts)
    N = len(labels)
    n_flip = int(np.floor(noise_rate * N))
    flipped = np.sort(rng.choice(N, size=n_flip, replace=False)) if n_flip else \
        np.empty(0, dtype=np.int64)
    for i in flipped:
        shift = int(rng.integers(1, c))
        labels[i] = (labels[i] + shift) % c
    return Dataset(feats, labels, tuple(categories)), flipped


# -- CSV --------------------------------------------------------------------

def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(dataset.feature_names) + ["label"])
    for x, y in zip(dataset.features, dataset.labels):
        w.writerow([_fmt(v) for v in x] + ["" if y == UNLABELLED else dataset.categories[y]])
    return buf.getvalue()


def save_csv(dataset: Dataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(dataset))


def _read_rows(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror}", path) from e
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ParseError("empty file", path, 1)
    return rows


def _parse_float(cell, path, line, col):
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"column {col!r}: non-numeric value {cell!r}", path, line) from None
    if not np.isfinite(v):
        raise ParseError(f"column {col!r}: non-finite value {cell!r}", path, line)
    return v


def load_csv(path, categories: Sequence[str] | None = None) -> Dataset:
    """Read a dataset CSV; ``categories`` fixes the category order if given."""
    rows = _read_rows(path)
    header = [h.strip() for h in rows[0]]
    if header[-1] != "label" or len(header) < 2:
        raise ParseError("header must name the feature columns followed by 'label'", path, 1)
    names = header[:-1]
    feats, raw_labels = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
        feats.append([_parse_float(cell, path, line, col) for cell, col in zip(row[:-1], names)])
        raw_labels.append(row[-1].strip())
    if not feats:
        raise ParseError("no data rows", path)
    if categories is None:
        categories = list(dict.fromkeys(lab for lab in raw_labels if lab))
    index = {cat: i for i, cat in enumerate(categories)}
    labels = []
    for line, lab in enumerate(raw_labels, start=2):
        if not lab:
            labels.append(UNLABELLED)
        elif lab not in index:
            raise ParseError(f"label {lab!r} not in {list(categories)}", path, line)
        else:
            labels.append(index[lab])
    if not categories:
        raise ParseError("no labelled rows; cannot infer the category set", path)
    return Dataset(np.array(feats), np.array(labels, dtype=np.int64), tuple(categories),
                   tuple(names))


# -- proportions tables -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProportionsTable:
    """Per-stimulus category choice counts ``m_i`` out of ``M`` participants."""

    stimuli: np.ndarray
    counts: np.ndarray
    categories: tuple[str, ...]

    def __post_init__(self):
        stimuli = np.atleast_2d(np.asarray(self.stimuli, dtype=float))
        counts = np.atleast_2d(np.asarray(self.counts))
        if counts.shape != (stimuli.shape[0], len(self.categories)):
            raise InvalidInputError("counts must have one row per stimulus and one column per category")
        if not np.all(np.isfinite(stimuli)):
            raise InvalidInputError("stimuli must be finite")
        if np.any(counts < 0) or not np.array_equal(counts, np.round(counts)):
            raise InvalidInputError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        if np.any(counts.sum(axis=1) == 0):
            raise InvalidInputError("every row needs at least one response")
        object.__setattr__(self, "stimuli", stimuli)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "categories", tuple(self.categories))

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def proportions(self) -> np.ndarray:
        return self.counts / self.totals[:, None]

    def __len__(self):
        return self.stimuli.shape[0]


def load_proportions(path, n_features: int | None = None, strict_m: bool = False) -> ProportionsTable:
    """Read a proportions CSV.

    Args:
        n_features: number of leading feature columns. When omitted, the
            trailing columns named ``count_<category>`` are the counts.
        strict_m: require the same total ``M`` on every row.
    """
    rows = _read_rows(path)
    header = [h.strip() for h in rows[0]]
    if n_features is None:
        n_features = len(header)
        while n_features > 0 and header[n_features - 1].startswith(COUNT_PREFIX):
            n_features -= 1
    if n_features < 1 or n_features >= len(header):
        raise ParseError("need at least one feature column and one count column", path, 1)
    cats = [h[len(COUNT_PREFIX):] if h.startswith(COUNT_PREFIX) else h for h in header[n_features:]]
    stimuli, counts = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
        stimuli.append([_parse_float(cell, path, line, col)
                        for cell, col in zip(row[:n_features], header)])
        rc = []
        for cell, col in zip(row[n_features:], header[n_features:]):
            try:
                v = int(cell)
            except ValueError:
                raise ParseError(f"column {col!r}: count {cell!r} is not an integer", path, line) from None
            if v < 0:
                raise ParseError(f"column {col!r}: negative count {v}", path, line)
            rc.append(v)
        if sum(rc) == 0:
            raise ParseError("row has zero total responses", path, line)
        counts.append(rc)
    if not counts:
        raise ParseError("no data rows", path)
    totals = {sum(rc) for rc in counts}
    if strict_m and len(totals) > 1:
        raise ParseError(f"row totals differ ({sorted(totals)}) but a constant M is required", path)
    return ProportionsTable(np.array(stimuli), np.array(counts), tuple(cats))


def save_proportions(table: ProportionsTable, path, feature_names: Sequence[str] | None = None):
    n = table.stimuli.shape[1]
    names = list(feature_names or [f"x{i}" for i in range(n)])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [COUNT_PREFIX + c for c in table.categories])
        for x, m in zip(table.stimuli, table.counts):
            w.writerow([_fmt(v) for v in x] + [str(int(v)) for v in m])
