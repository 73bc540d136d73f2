"""Reference-set selection and prototype generation for nearest-neighbour
categorisation, with psychological categorisation models expressed as
reference-set builders."""

from .core import EUCLIDEAN, Dataset, LabeledPoint, Metric, SimilarityParams, distance, similarity
from .data import (FiveFourStructure, ProportionsTable, gen_5_4, gen_gaussian, load_csv,
                   load_proportions, save_csv, save_proportions)
from .errors import (CapacityError, ConfigError, EmptyResultError, EvaluationError,
                     InfeasibleError, InvalidInputError, InvalidStateError, NumericError,
                     ParseError, RefselError)
from .harness import EvaluationReport, Protocol, benchmark, evaluate, fit_gamma, fit_score
from .nn import (ReferenceSet, classify_1nn, classify_knn, from_json, is_consistent,
                 load_refset, predict_proportions, save_refset, to_json, training_accuracy)
from .psych import (PartitionRecord, RmcParams, SustainParams, pure_exemplar, pure_prototype,
                    rex, rex_leopold_i, rmc, sustain, vam_best, vam_enumerate)
from .replacement import (ClusteringParams, LvqParams, cluster_post_supervised,
                          cluster_pre_supervised, gmm_mmc, kmeans, lvq1, nearest_mean_prototypes)
from .selection import (EditingParams, cnn, criterion_j, enn, exhaustive_select, hybrid_enn_cnn,
                        minimal_consistent_oracle, random_editing)

__version__ = "0.1.0"

__all__ = [
    "EUCLIDEAN", "Dataset", "LabeledPoint", "Metric", "SimilarityParams", "distance", "similarity",
    "FiveFourStructure", "ProportionsTable", "gen_5_4", "gen_gaussian", "load_csv",
    "load_proportions", "save_csv", "save_proportions",
    "CapacityError", "ConfigError", "EmptyResultError", "EvaluationError", "InfeasibleError",
    "InvalidInputError", "InvalidStateError", "NumericError", "ParseError", "RefselError",
    "EvaluationReport", "Protocol", "benchmark", "evaluate", "fit_gamma", "fit_score",
    "ReferenceSet", "classify_1nn", "classify_knn", "from_json", "is_consistent", "load_refset",
    "predict_proportions", "save_refset", "to_json", "training_accuracy",
    "PartitionRecord", "RmcParams", "SustainParams", "pure_exemplar", "pure_prototype", "rex",
    "rex_leopold_i", "rmc", "sustain", "vam_best", "vam_enumerate",
    "ClusteringParams", "LvqParams", "cluster_post_supervised", "cluster_pre_supervised",
    "gmm_mmc", "kmeans", "lvq1", "nearest_mean_prototypes",
    "EditingParams", "cnn", "criterion_j", "enn", "exhaustive_select", "hybrid_enn_cnn",
    "minimal_consistent_oracle", "random_editing",
]
