"""Locally linear embedding with a learned Mahalanobis neighborhood metric.

The package covers the full workflow: synthetic and file-based datasets,
metric state and updates, exact neighbor search, closed-form reconstruction
weights, the embedding eigenproblem, an alternating fitting pipeline, and
rank-based quality evaluation.
"""

from .data import (DataMatrix, builtin_iris, generate_swiss_roll, load_csv,
                   load_idx, scale_features, subsample, write_csv)
from .embedding import (DEFAULT_NULL_TOL, EmbeddingResult, embedding_matrix,
                        solve_embedding)
from .errors import NumericalError
from .evaluation import (QualityReport, continuity, evaluate_embedding,
                         knn_accuracy, linear_accuracy, rank_table,
                         silhouette, stratified_split, trustworthiness)
from .metric import (MetricState, OptimizerConfig, adam_update_L,
                     cholesky_factor, gradient_L, init_identity, init_random,
                     learning_rate_bound, load_metric, mahalanobis_distance,
                     metric_from_matrix, residual_gradient_M, save_metric,
                     sgd_update_L, sgd_update_M)
from .neighbors import NeighborIndex, knn
from .pipeline import PipelineConfig, fit_alle, fit_lle
from .reconstruction import (DEFAULT_GRAM_REG, WeightMatrix, compute_residuals,
                             local_gram, reconstruction_error,
                             reconstruction_weights, solve_all_weights)

__version__ = "0.1.0"

__all__ = [
    "DataMatrix", "builtin_iris", "generate_swiss_roll", "load_csv",
    "load_idx", "scale_features", "subsample", "write_csv",
    "DEFAULT_NULL_TOL", "EmbeddingResult", "embedding_matrix",
    "solve_embedding", "NumericalError",
    "QualityReport", "continuity", "evaluate_embedding", "knn_accuracy",
    "linear_accuracy", "rank_table", "silhouette", "stratified_split",
    "trustworthiness",
    "MetricState", "OptimizerConfig", "adam_update_L", "cholesky_factor",
    "gradient_L", "init_identity", "init_random", "learning_rate_bound",
    "load_metric", "mahalanobis_distance", "metric_from_matrix",
    "residual_gradient_M", "save_metric", "sgd_update_L", "sgd_update_M",
    "NeighborIndex", "knn",
    "PipelineConfig", "fit_alle", "fit_lle",
    "DEFAULT_GRAM_REG", "WeightMatrix", "compute_residuals", "local_gram",
    "reconstruction_error", "reconstruction_weights", "solve_all_weights",
    "__version__",
]
