"""Spatial generalized linear mixed models for areal data."""

from ._core import (
    DataError,
    NumericalError,
    apportion_cents,
    fit,
    gelman_rubin,
    geweke,
    icar_precision,
    log_density,
    moran_basis,
    run_cli,
    simulate,
    vif_gvif,
)

__all__ = [
    "DataError",
    "NumericalError",
    "apportion_cents",
    "fit",
    "gelman_rubin",
    "geweke",
    "icar_precision",
    "log_density",
    "moran_basis",
    "run_cli",
    "simulate",
    "vif_gvif",
]
