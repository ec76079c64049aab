"""Volatility modelling and spillover analysis toolkit.

Fits a family of GARCH-type conditional-volatility models by Gaussian
quasi-maximum likelihood with AIC selection, measures cross-market
volatility transmission through a generalized-VAR forecast-error variance
decomposition, and compares both around an event date.
"""

from .data import (
    DescriptiveStats,
    EventWindowConfig,
    PricePanel,
    ReturnSeries,
    describe,
    log_returns,
    read_price_csv,
    split_event,
)
from .exceptions import DataError, NumericalError, VolspillError
from .garch import (
    Family,
    GarchFit,
    GarchParams,
    GarchSpec,
    MeanParams,
    aic,
    asymmetry_degree,
    fit,
    free_param_names,
    leverage,
    log_likelihood,
    loglik_gradient,
    persistence,
    select_model,
    simulate,
    validate_params,
    variance_recursion,
)
from .spillover import (
    SpilloverTable,
    VarModel,
    VolatilityPanel,
    fit_var,
    generalized_fevd,
    ma_coefficients,
    net_directional,
    select_var_lag,
    spillover_table,
)

__version__ = "0.1.0"

__all__ = [
    "DescriptiveStats",
    "EventWindowConfig",
    "PricePanel",
    "ReturnSeries",
    "describe",
    "log_returns",
    "read_price_csv",
    "split_event",
    "DataError",
    "NumericalError",
    "VolspillError",
    "Family",
    "GarchFit",
    "GarchParams",
    "GarchSpec",
    "MeanParams",
    "aic",
    "asymmetry_degree",
    "fit",
    "free_param_names",
    "leverage",
    "log_likelihood",
    "loglik_gradient",
    "persistence",
    "select_model",
    "simulate",
    "validate_params",
    "variance_recursion",
    "SpilloverTable",
    "VarModel",
    "VolatilityPanel",
    "fit_var",
    "generalized_fevd",
    "ma_coefficients",
    "net_directional",
    "select_var_lag",
    "spillover_table",
    "__version__",
]
