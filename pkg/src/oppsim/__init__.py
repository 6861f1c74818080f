"""oppsim: deterministic store-carry-and-forward network simulator."""

__version__ = "0.1.0"

from .contacts import (  # noqa: F401
    CommunityParams,
    ContactEvent,
    ContactSequence,
    WaypointParams,
    WorkloadItem,
    gen_community_schedule,
    gen_random_waypoint,
    gen_workload,
    parse_roster,
    parse_trace,
    parse_workload,
)
from .engine import RunParams, Simulator, run_scenario  # noqa: F401
from .metrics import RunReport, aggregate, compute_metrics  # noqa: F401
from .protocols import PROTOCOLS, make_policy  # noqa: F401
from .social import AnalyticsParams  # noqa: F401
from .types import ConfigError, OppSimError, ScenarioError  # noqa: F401
