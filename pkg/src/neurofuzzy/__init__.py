"""Neuro-fuzzy (ANFIS) and Levenberg-Marquardt network regression for dew point temperature."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    Metrics,
    SplitDataset,
    compute_metrics,
    fit_scaler,
    gen_synthetic,
    load_csv,
    split_random,
    write_csv,
)
from .errors import (
    DegenerateActivationError,
    DivergenceError,
    InvalidArgumentError,
    NeuroFuzzyError,
    ParseError,
    ScaleError,
    SchemaError,
    TrainingDataError,
)
from .fuzzy import (
    AnfisModel,
    GaussianMf,
    InputPartition,
    anfis_predict,
    firing_strengths,
    grid_partition,
    mf_eval,
    normalize_strengths,
    rule_output,
)
from .hybrid import AnfisTrainConfig, TrainHistory, lse_consequents, premise_gradients, train_anfis
from .mlp import BnnRegressor, LmConfig, MlpModel, fit_bnn, init_mlp, mlp_forward, mlp_jacobian, train_lm
from .serialize import load_model, save_model
