from __future__ import annotations

from ..core import EPS, sign
from ..engine import MotionPlan, SimView
from ..oracle import InterceptQuery, interception_time
from .base import BasePolicy


class FirstComeFirstServed(BasePolicy):
    """Pursue the earliest-arrived active intruder at unit speed.

    Ties on arrival time go to the intruder on the vehicle's side, then to the
    right endpoint, then to the lower id.
    """

    name = "fcfs"
    tie_break = "same side as vehicle, then right, then lowest id"

    def __init__(self, env):
        super().__init__(env)
        self.targets: list[int] = []

    def _priority(self, it, x):
        vs = sign(x)
        return (
            it.arrival_time,
            0 if (vs != 0 and it.side == vs) else 1,
            0 if it.side > 0 else 1,
            it.id,
        )

    def decide(self, view: SimView) -> MotionPlan:
        if not view.active:
            return self.hold(view)
        x = view.vehicle.position
        it, p = min(view.active, key=lambda e: self._priority(e[0], x))
        if not self.targets or self.targets[-1] != it.id:
            self.targets.append(it.id)
        hit = interception_time(InterceptQuery(x, view.time, it), self.env)
        if hit is not None:
            return MotionPlan(hit[1])
        # Cannot catch it, but still run toward it until it is lost.
        return MotionPlan(1.0 if p > x + EPS else -1.0)

    def diagnostics(self) -> dict:
        return {"forced": False, "tie_break": self.tie_break, "pursuit_order": list(self.targets)}
