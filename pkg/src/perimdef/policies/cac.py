"""Compare-and-Capture.

The vehicle parks at an anchor ``±rho`` and, at the start of each epoch,
compares the intruders beyond it on its own side with those in a fixed band on
the other side. It then captures the larger group and returns to the matching
anchor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..core import EPS
from ..engine import MotionPlan, SimView
from ..oracle import InterceptQuery, interception_time
from ..regimes import cac_condition_band, cac_condition_timing
from .base import BasePolicy, at


@dataclass
class CacEpochLog:
    k: int
    start_time: float
    anchor: float
    same: list[int]
    opp: list[int]
    branch: str
    end_time: Optional[float] = None
    captured: list[int] = field(default_factory=list)
    lost: list[int] = field(default_factory=list)
    # Members of the group not chosen that were neither captured in this epoch
    # nor carried over into the next epoch's sets.
    charged: list[int] = field(default_factory=list)

    @property
    def n_same(self) -> int:
        return len(self.same)

    @property
    def n_opp(self) -> int:
        return len(self.opp)


class CompareAndCapture(BasePolicy):
    name = "cac"

    def __init__(self, env, force: bool = False):
        super().__init__(env)
        rho, v = env.rho, env.v
        self._gate(
            cac_condition_timing(rho, v) and cac_condition_band(rho, v),
            "rho v/(1-rho) + v^2/(1+v)^2 <= 1/4 and rho + 2 rho v + 2v(1-rho)/(1+v) <= 1",
            force,
        )
        self.startup_band = rho + 3 * rho * v
        self.opp_lo = rho + 2 * rho * v
        self.opp_hi = self.opp_lo + 2 * v * (1 - rho) / (1 + v)
        self.startup_delay = max(0.0, (1 - rho - 3 * rho * v) / v)

        self.phase = "waiting"
        self.start_at: Optional[float] = None
        self.anchor: Optional[float] = None
        self.chase_target: Optional[float] = None
        self.epochs: list[CacEpochLog] = []
        self.startup: dict = {}
        self._open: Optional[CacEpochLog] = None
        self._seen_captured: set[int] = set()
        self._seen_lost: set[int] = set()
        self._startup_captured: list[int] = []
        self._startup_lost: list[int] = []

    # -- bookkeeping -----------------------------------------------------------

    def _account(self, view: SimView) -> None:
        new_c = sorted(view.captured_ids - self._seen_captured)
        new_l = sorted(view.lost_ids - self._seen_lost)
        self._seen_captured |= set(new_c)
        self._seen_lost |= set(new_l)
        if self._open is not None:
            self._open.captured += new_c
            self._open.lost += new_l
        else:
            self._startup_captured += new_c
            self._startup_lost += new_l

    def _close(self, view: SimView, next_sets: set[int]) -> None:
        ep = self._open
        if ep is None:
            return
        ep.end_time = view.time
        passed = ep.opp if ep.branch == "same" else ep.same
        got = set(ep.captured)
        ep.charged = [i for i in passed if i not in got and i not in next_sets]
        self._open = None

    def _sets(self, view: SimView, anchor: float):
        side = 1 if anchor > 0 else -1
        same, opp = [], []
        for it, p in view.active:
            if it.side == side and abs(p) > self.env.rho + EPS:
                same.append((it, p))
            elif it.side == -side and self.opp_lo - EPS <= abs(p) <= self.opp_hi + EPS:
                opp.append((it, p))
        return same, opp

    def _chase(self, view: SimView, members) -> Optional[float]:
        """Interception point of the farthest member, or None if it cannot be caught."""
        if not members:
            return None
        it, _ = max(members, key=lambda e: (abs(e[1]), -e[0].id))
        hit = interception_time(InterceptQuery(view.vehicle.position, view.time, it), self.env)
        return None if hit is None else hit[1]

    # -- policy ----------------------------------------------------------------

    def decide(self, view: SimView) -> MotionPlan:
        self._account(view)
        x, t = view.vehicle.position, view.time
        while True:
            if self.phase == "waiting":
                if not view.arrived:
                    return self.hold(view)
                first = min(it.arrival_time for it in view.arrived)
                self.start_at = first + self.startup_delay
                self.phase = "startup"
            if self.phase == "startup":
                if t < self.start_at - EPS:
                    return self.hold(view, self.start_at)
                right = sum(1 for it, p in view.active if p >= self.startup_band - EPS)
                left = sum(1 for it, p in view.active if p <= -self.startup_band + EPS)
                self.anchor = self.env.rho if right > left else -self.env.rho
                self.startup = {"time": t, "right": right, "left": left, "anchor": self.anchor}
                self.phase = "to_anchor"
            if self.phase == "to_anchor":
                if not at(x, self.anchor):
                    return MotionPlan(self.anchor)
                self.phase = "epoch"
            if self.phase == "epoch":
                same, opp = self._sets(view, self.anchor)
                self._close(view, {it.id for it, _ in same} | {it.id for it, _ in opp})
                if not view.active:
                    return self.hold(view)
                branch = "same" if len(same) > len(opp) else "opposite"
                self._open = CacEpochLog(
                    k=len(self.epochs) + 1,
                    start_time=t,
                    anchor=self.anchor,
                    same=sorted(it.id for it, _ in same),
                    opp=sorted(it.id for it, _ in opp),
                    branch=branch,
                )
                self.epochs.append(self._open)
                if branch == "same":
                    self.chase_target = self._chase(view, same)
                    self.phase = "chase" if self.chase_target is not None else "epoch"
                    if self.phase == "epoch":
                        # Nothing catchable beyond the anchor; the epoch is empty.
                        return self.hold(view)
                else:
                    self.anchor = -self.anchor
                    self.phase = "cross"
            if self.phase == "cross":
                if not at(x, self.anchor):
                    return MotionPlan(self.anchor)
                opp_ids = set(self._open.opp)
                survivors = [(it, p) for it, p in view.active if it.id in opp_ids]
                self.chase_target = self._chase(view, survivors)
                if self.chase_target is None:
                    self.phase = "epoch"
                    continue
                self.phase = "chase"
            if self.phase == "chase":
                if not at(x, self.chase_target):
                    return MotionPlan(self.chase_target)
                self.phase = "return"
            if self.phase == "return":
                if not at(x, self.anchor):
                    return MotionPlan(self.anchor)
                self.phase = "epoch"
                continue
            return self.hold(view)

    def finish(self, view: SimView) -> None:
        self._account(view)
        self._close(view, set())

    def diagnostics(self) -> dict:
        return {
            "forced": self.forced,
            "startup": dict(self.startup, captured=self._startup_captured, lost=self._startup_lost),
            "epochs": self.epochs,
            "bands": {"startup": self.startup_band, "opp_lo": self.opp_lo, "opp_hi": self.opp_hi},
        }


def audit_epochs(diag: dict) -> dict:
    """Check the per-epoch accounting recorded by a CaC run.

    Returns lists of offending epoch indices for each property:
    ``half_capture`` (captured fewer than the intruders charged to the epoch) and
    ``safety`` (an intruder lost during the epoch that was in neither of its
    sets nor charged to the previous epoch).
    """
    bad_half, bad_safety = [], []
    prev_charged: set[int] = set()
    for ep in diag["epochs"]:
        if len(ep.captured) < len(ep.charged):
            bad_half.append(ep.k)
        allowed = set(ep.same) | set(ep.opp) | prev_charged
        if any(i not in allowed for i in ep.lost):
            bad_safety.append(ep.k)
        prev_charged = set(ep.charged)
    startup_lost = diag["startup"].get("lost", [])
    return {"half_capture": bad_half, "safety": bad_safety, "startup_lost": list(startup_lost)}
