from __future__ import annotations

from ..core import EPS
from ..engine import MotionPlan, SimView
from .base import BasePolicy


class Sweep(BasePolicy):
    """Open-loop sweep between the endpoints, starting toward +1.

    With ``stop_when_empty`` the vehicle keeps its heading only while some active
    intruder lies ahead of it; otherwise it turns toward intruders behind it, or
    idles if there are none.
    """

    name = "sweep"

    def __init__(self, env, stop_when_empty: bool = False):
        super().__init__(env)
        self.stop_when_empty = stop_when_empty
        if stop_when_empty:
            self.name = "sweep-stop"
        self.direction = 1
        self.turns: list[float] = []

    def _turn(self, view: SimView, direction: int) -> None:
        if direction != self.direction:
            self.direction = direction
            self.turns.append(view.time)

    def decide(self, view: SimView) -> MotionPlan:
        x = view.vehicle.position
        if x >= 1.0 - EPS:
            self._turn(view, -1)
        elif x <= -1.0 + EPS:
            self._turn(view, 1)
        if not self.stop_when_empty:
            return MotionPlan(float(self.direction))

        ahead = any((p - x) * self.direction > EPS for _, p in view.active)
        if ahead:
            return MotionPlan(float(self.direction))
        behind = any((p - x) * self.direction < -EPS for _, p in view.active)
        if behind:
            self._turn(view, -self.direction)
            return MotionPlan(float(self.direction))
        return self.hold(view)

    def diagnostics(self) -> dict:
        return {"forced": False, "turn_times": list(self.turns), "stop_when_empty": self.stop_when_empty}
