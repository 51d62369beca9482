from __future__ import annotations

from ..core import EPS, Environment, RegimeViolation
from ..engine import MotionPlan, SimView


class BasePolicy:
    name = "base"

    def __init__(self, env: Environment):
        self.env = env
        self.forced = False

    def decide(self, view: SimView) -> MotionPlan:
        raise NotImplementedError

    def finish(self, view: SimView) -> None:
        pass

    def diagnostics(self) -> dict:
        return {"forced": self.forced}

    @staticmethod
    def hold(view: SimView, wake_time=None) -> MotionPlan:
        return MotionPlan(view.vehicle.position, wake_time)

    def _gate(self, ok: bool, condition: str, force: bool) -> None:
        if ok:
            return
        if not force:
            raise RegimeViolation(
                f"{self.name} requires {condition} (rho={self.env.rho}, v={self.env.v}); pass force=True to run anyway"
            )
        self.forced = True


def at(x: float, point: float) -> bool:
    return abs(x - point) <= EPS
