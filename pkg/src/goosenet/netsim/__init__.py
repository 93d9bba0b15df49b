from .sim import Simulation, SimulationResult, build, run
from .topology import (
    DEFAULT_BANDWIDTH,
    Ied,
    Link,
    Span,
    Switch,
    Tap,
    Topology,
    TrafficGen,
    ValidationError,
)
from .traffic import (
    Background,
    GoosePublisher,
    SvStream,
    TrafficSpec,
    background_schedule,
    burst_period,
    sv_bandwidth,
    sv_frame_rate,
)

__all__ = [
    "Background",
    "DEFAULT_BANDWIDTH",
    "GoosePublisher",
    "Ied",
    "Link",
    "Simulation",
    "SimulationResult",
    "Span",
    "SvStream",
    "Switch",
    "Tap",
    "Topology",
    "TrafficGen",
    "TrafficSpec",
    "ValidationError",
    "background_schedule",
    "build",
    "burst_period",
    "run",
    "sv_bandwidth",
    "sv_frame_rate",
]
