"""Testing the Markov property of multivariate time series with deep conditional generators."""

from .engine import OrderReport, TestConfig, TestReport, estimate_order, run_test
from .errors import (ConfigurationError, InputError, MarkovTestError, NumericalError,
                     SimulationError, StageError, TrainingError)
from .mdn import FactorizedConditionalModel, MdnHyperParams, UnivariateMdn, fit_factorized
from .series import TimeSeries, embed, read_csv
from .sim_models import paper_model, simulate

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "FactorizedConditionalModel", "InputError", "MarkovTestError",
    "MdnHyperParams", "NumericalError", "OrderReport", "SimulationError", "StageError",
    "TestConfig", "TestReport", "TimeSeries", "TrainingError", "UnivariateMdn", "embed",
    "estimate_order", "fit_factorized", "paper_model", "read_csv", "run_test", "simulate",
]
