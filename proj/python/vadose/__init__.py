"""Parallel finite-volume simulation of variably saturated flow in porous media."""

from vadose._core import (
    BlowupError,
    CaseSpec,
    Error,
    FactorError,
    FluxSeries,
    Gardner,
    GardnerPoint,
    InvalidInput,
    NoConvergence,
    SpecError,
    StepFloorError,
    SyncError,
    VanGenuchten,
    __version__,
    capillary_capacity,
    chord_slope_capacity,
    flux_at,
    gardner_analytic_h,
    gardner_flux_bound,
    hydraulic_conductivity,
    lognormal_ks_field,
    parse_case,
    parse_flux_series,
    render_case,
    render_daily_forcing,
    run,
    validate_gardner,
    water_content,
)

__all__ = [
    "BlowupError",
    "CaseSpec",
    "Error",
    "FactorError",
    "FluxSeries",
    "Gardner",
    "GardnerPoint",
    "InvalidInput",
    "NoConvergence",
    "SpecError",
    "StepFloorError",
    "SyncError",
    "VanGenuchten",
    "__version__",
    "capillary_capacity",
    "chord_slope_capacity",
    "flux_at",
    "gardner_analytic_h",
    "gardner_flux_bound",
    "hydraulic_conductivity",
    "lognormal_ks_field",
    "parse_case",
    "parse_flux_series",
    "render_case",
    "render_daily_forcing",
    "run",
    "validate_gardner",
    "water_content",
]
