"""Hybrid photonic-quantum reservoir computing toolkit."""

from .baselines import EsnConfig, esn_init, esn_run, fit_ar_aic, quantum_only_run
from .data import (
    LorenzParams,
    MackeyGlassParams,
    TimeSeries,
    add_gaussian_noise,
    gen_lorenz,
    gen_mackey_glass,
    load_csv,
    make_supervised,
    normalize,
)
from .errors import (
    ConfigurationError,
    DegenerateError,
    DimensionError,
    DivergenceError,
    HpqrcError,
    IngestionError,
    PairingError,
    ParameterError,
    SizingError,
    SolverError,
)
from .metrics import accuracy_pct, auc, bootstrap_ci, nmse, paired_t_test, roi, roi_time
from .photonic import PhotonicConfig, PhotonicReservoir, PidController
from .pipeline import HybridConfig, HybridReservoir, forecast, run_pipeline
from .quantum import QuantumConfig, QuantumReservoir, q_step
from .readout import ReadoutModel, cross_validate, fit_iterative, fit_ridge, predict

__version__ = "0.1.0"
