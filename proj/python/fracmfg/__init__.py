"""Time-fractional mean field games: Python access to the C++ core."""

from ._core import (
    DomainError,
    FracMfgError,
    IoError,
    NumericalError,
    ParameterError,
    fractional_apply,
    gaussian_density,
    mittag_leffler,
    run,
    simulate,
    solve_fp,
    solve_hjb,
    solve_mfg,
    validation_battery,
    version,
    wasserstein1,
)

__version__ = version()

__all__ = [
    "DomainError",
    "FracMfgError",
    "IoError",
    "NumericalError",
    "ParameterError",
    "fractional_apply",
    "gaussian_density",
    "mittag_leffler",
    "run",
    "simulate",
    "solve_fp",
    "solve_hjb",
    "solve_mfg",
    "validation_battery",
    "version",
    "wasserstein1",
]
