"""Feature ranking with deep-belief-network autoencoders and Extended Garson attribution."""

from .attribution import ImportanceVector, cumulative_weights, ega, garson, normalize_columns, top_k
from .baselines import WaldRanking, WaldSelector, wald_rank_classification, wald_rank_regression
from .core import ColumnSpec, Dataset, RngStream, check_rng, dataset_from_arrays, read_csv, write_csv
from .dbna import DBNAutoencoder, DbnaModel, DbnaTrainConfig, train_dbna
from .exceptions import (
    ConfigError, ConvergenceError, DataError, NumericalError, PerfectSeparationError, StageError,
)
from .metrics import auc, kfold_cv, mape, paired_t_test, select_better_method, smape, two_sample_t_test
from .pipeline import ExperimentConfig, emit_chart_data, generate_synthetic, run_experiment
from .preprocess import Recipe, Standardizer, apply_recipe, load_recipe
from .rbm import BernoulliRBM, RbmParams, RbmTrainConfig, train_rbm

__version__ = "0.1.0"

__all__ = [
    "BernoulliRBM", "ColumnSpec", "ConfigError", "ConvergenceError", "DBNAutoencoder", "DataError",
    "Dataset", "DbnaModel", "DbnaTrainConfig", "ExperimentConfig", "ImportanceVector",
    "NumericalError", "PerfectSeparationError", "RbmParams", "RbmTrainConfig", "Recipe",
    "RngStream", "StageError", "Standardizer", "WaldRanking", "WaldSelector", "apply_recipe", "auc",
    "check_rng", "cumulative_weights", "dataset_from_arrays", "ega", "emit_chart_data", "garson",
    "generate_synthetic", "kfold_cv", "load_recipe", "mape", "normalize_columns", "paired_t_test",
    "read_csv", "run_experiment", "select_better_method", "smape", "top_k", "train_dbna",
    "train_rbm", "two_sample_t_test", "wald_rank_classification", "wald_rank_regression",
    "write_csv",
]
