"""Classical two-variant source model of EPR-B coincidence experiments."""
from .analytic import (
    ChshSetting,
    chsh_S,
    chsh_SS,
    cor,
    correlation,
    correlation_denominator,
    correlation_numerator,
    cross_term_decomposition,
    field,
    projector,
    source_left,
    source_right,
    ss_surface,
)
from .coincidence import (
    Pairs,
    WindowConfig,
    WindowedStats,
    chsh_estimate,
    counts,
    pair_events,
    visibility,
    visibility_scan,
    window_sweep,
)
from .simcore import (
    DetectionEvent,
    EventStream,
    SourceConfig,
    detect,
    generate_emissions,
    pulse_polarization,
    run_experiment,
)

__version__ = "0.1.0"
