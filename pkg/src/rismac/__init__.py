"""rismac: discrete-event simulator of centralized, distributed and hybrid
MAC protocols for RIS-aided multi-user uplink networks."""

from .config import ScenarioConfig, parse_scenario, emit_scenario
from .metrics import RunMetrics, throughput_bps, energy_efficiency, jain_index

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig", "parse_scenario", "emit_scenario",
    "RunMetrics", "throughput_bps", "energy_efficiency", "jain_index",
    "__version__",
]
