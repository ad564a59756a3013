"""Low-rank posterior covariance for linear-Gaussian inverse problems.

Configurations are plain dicts using the same keys as the command-line tool
(see ``config_keys()``); missing keys take their defaults.
"""

from ._core import (
    ConfigError,
    Hessian,
    LowRankMat,
    NumericalError,
    add,
    analytic_poisson_eig,
    analytic_table,
    config_keys,
    convdiff_operator,
    discrete_fd_eig,
    dot,
    eigs,
    from_dense,
    heat_operator,
    norm,
    oracle,
    resolve_config,
    separable_eigvec,
    smallest_modes,
    truncate,
    variance,
)

__all__ = [
    "ConfigError",
    "Hessian",
    "LowRankMat",
    "NumericalError",
    "add",
    "analytic_poisson_eig",
    "analytic_table",
    "config_keys",
    "convdiff_operator",
    "discrete_fd_eig",
    "dot",
    "eigs",
    "from_dense",
    "heat_operator",
    "norm",
    "oracle",
    "resolve_config",
    "separable_eigvec",
    "smallest_modes",
    "truncate",
    "variance",
]
