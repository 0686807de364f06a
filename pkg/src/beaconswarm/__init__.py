"""Self-guided beacon/forager swarm: deterministic simulator, metrics, and
experiment harness.

A swarm released from a nest disc splits into stationary beacons, which store
per-direction weights and guiding vectors, and mobile foragers, which follow
the cross-wired field (outbound traffic reinforces the homing signal and vice
versa) to form trails between the nest and an initially unknown target.
"""

__version__ = "0.1.0"

from .geometry import (Arena, Disc, DiscObstacle, RectObstacle, Vec2,  # noqa: F401
                       clearance, in_region, sample_point_in_region,
                       shortest_path_length)
from .model import (Agent, AgentMode, BeaconBroadcast, BeaconMemory,  # noqa: F401
                    ForagerBroadcast, SimParams, init_swarm, opposite_state,
                    transition_mode, validate_params)
from .extensions import ExtensionParams  # noqa: F401
from .engine import EventLog, SimState, run, step  # noqa: F401
from .metrics import (Dendrogram, MergeEvent, count_trips,  # noqa: F401
                      detect_t_conv, entropy_normalizer, hierarchic_entropy,
                      lower_bound_delay, navigation_delay, single_linkage,
                      social_entropy)
