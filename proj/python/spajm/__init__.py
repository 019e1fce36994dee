"""Additive joint longitudinal-survival models via MCMC."""

from ._core import (
    ConfigError,
    IoError,
    NumericError,
    __version__,
    augment,
    benchmark,
    bspline_design,
    canonical_config,
    derive_seed,
    difference_penalty,
    f_bump,
    f_geo,
    f_sine,
    fit,
    gra_laplacian,
    hdi,
    simulate,
    summarize,
    weibull_cumulative_hazard,
    write_lattice_gra,
)

__all__ = [
    "ConfigError",
    "IoError",
    "NumericError",
    "__version__",
    "augment",
    "benchmark",
    "bspline_design",
    "canonical_config",
    "derive_seed",
    "difference_penalty",
    "f_bump",
    "f_geo",
    "f_sine",
    "fit",
    "gra_laplacian",
    "hdi",
    "simulate",
    "summarize",
    "weibull_cumulative_hazard",
    "write_lattice_gra",
]
