"""Python access to the resilient state estimation core."""

from ._core import (  # noqa: F401
    AttackSupport,
    ConfigError,
    DetectabilityVerdict,
    DimensionError,
    Error,
    FilterError,
    FilterState,
    ModeModel,
    NumericalError,
    OperationMode,
    PlantTopology,
    Scenario,
    SignalProfile,
    StaticMMEstimator,
    TransformedMode,
    build_benchmark,
    build_mode,
    design_rejection,
    enumerate_modes,
    filter_step,
    init_filter,
    log_likelihood,
    lqr,
    max_correctable,
    model_count,
    resilience_guarantee,
    simulate,
    strong_detectability,
    three_area_network,
    transform,
    update_probabilities,
)

__all__ = [name for name in dir() if not name.startswith("_")]
