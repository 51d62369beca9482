from __future__ import annotations

from ..core import EPS
from ..engine import MotionPlan, SimView, Trajectory
from .base import BasePolicy


class FollowTrajectory(BasePolicy):
    """Open-loop policy that drives a precomputed unit-speed trajectory.

    Used to push oracle witnesses and normalized profiles back through the
    engine. After the last segment the vehicle holds its final position.
    """

    name = "follow"

    def __init__(self, env, trajectory: Trajectory):
        super().__init__(env)
        self.trajectory = trajectory
        self._i = 0

    def decide(self, view: SimView) -> MotionPlan:
        segs = self.trajectory.segments
        t = view.time
        while self._i < len(segs) and segs[self._i].t_end <= t + EPS:
            self._i += 1
        if self._i >= len(segs):
            end = segs[-1].x_end if segs else view.vehicle.position
            return MotionPlan(end)
        seg = segs[self._i]
        if t < seg.t_start - EPS:
            return MotionPlan(seg.x_start, seg.t_start)
        return MotionPlan(seg.x_end, seg.t_end)
