"""Single-vehicle perimeter defense on the segment [-1, 1]."""
from .core import (
    EPS,
    Environment,
    InputInstance,
    Intruder,
    InvalidInstance,
    RegimeViolation,
    Side,
    intruder_position,
    perimeter_hit_time,
    validate_instance,
)
from .engine import MotionPlan, SimResult, Trajectory, replay, run_batch, simulate
from .oracle import competitive_ratio, exhaustive_offline, interception_time, normalize_extreme_speed, optimal_offline
from .policies import POLICY_NAMES, make_policy
from .regimes import classify

__version__ = "0.1.0"
