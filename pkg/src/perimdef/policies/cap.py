"""Capture-with-Patience.

Time is cut into windows of length ``2 rho`` measured from the first arrival.
The vehicle waits at ``+rho`` or ``-rho`` and lets intruders walk into it; at
each decision instant it switches anchor only when the next-but-one window on
the far side outnumbers three consecutive windows on its own side.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from ..core import EPS, InputInstance
from ..engine import MotionPlan, SimResult, SimView
from ..regimes import cap_condition
from .base import BasePolicy, at


@dataclass
class CapDecision:
    j: int
    time: float
    anchor: float
    opp_next: int
    same_window: tuple[int, int, int]
    decision: str  # "stay", "switch" or "skip" (vehicle not parked at its anchor)


def window_index(arrival: float, clock0: float, rho: float) -> int:
    """1-based index of the ``2 rho`` window containing ``arrival``."""
    return int(math.floor((arrival - clock0) / (2 * rho) + 1e-9)) + 1


class CaptureWithPatience(BasePolicy):
    name = "cap"

    def __init__(self, env, force: bool = False):
        super().__init__(env)
        self._gate(cap_condition(env.rho, env.v), "v <= (1-rho)/(6 rho)", force)
        self.clock0: Optional[float] = None
        self.phase = "waiting"
        self.anchor: Optional[float] = None
        self.next_j = 0
        self.counts: Counter = Counter()
        self._n_counted = 0
        self.decisions: list[CapDecision] = []
        self.startup: dict = {}

    def _count(self, view: SimView) -> None:
        for it in view.arrived[self._n_counted:]:
            self.counts[(window_index(it.arrival_time, self.clock0, self.env.rho), int(it.side))] += 1
        self._n_counted = len(view.arrived)

    def decision_time(self, j: int) -> float:
        return self.clock0 + self.env.z + 2 * self.env.rho * j

    def decide(self, view: SimView) -> MotionPlan:
        rho = self.env.rho
        t, x = view.time, view.vehicle.position
        if self.clock0 is None:
            if not view.arrived:
                return self.hold(view)
            self.clock0 = min(it.arrival_time for it in view.arrived)
            self.phase = "startup"
        self._count(view)

        if self.phase == "startup":
            if t < self.clock0 + 2 * rho - EPS:
                return self.hold(view, self.clock0 + 2 * rho)
            left, right = self.counts[(1, -1)], self.counts[(1, 1)]
            self.anchor = -rho if left > right else rho
            self.startup = {"time": t, "left": left, "right": right, "anchor": self.anchor}
            self.phase = "anchored"

        self._decide_due(t, x)
        return MotionPlan(self.anchor, self.decision_time(self.next_j))

    def _decide_due(self, t: float, x: float) -> None:
        while self.decision_time(self.next_j) <= t + EPS:
            j = self.next_j
            side = 1 if self.anchor > 0 else -1
            opp = self.counts[(j + 2, -side)]
            same = tuple(self.counts[(j + i, side)] for i in (1, 2, 3))
            if not at(x, self.anchor):
                choice = "skip"
            elif opp > sum(same):
                choice = "switch"
                self.anchor = -self.anchor
            else:
                choice = "stay"
            self.decisions.append(CapDecision(j, t, self.anchor if choice != "switch" else -self.anchor, opp, same, choice))
            self.next_j += 1

    def finish(self, view: SimView) -> None:
        # Decisions falling on the final instant are still logged.
        if self.anchor is not None:
            self._count(view)
            self._decide_due(view.time, view.vehicle.position)

    def diagnostics(self) -> dict:
        windows = sorted({w for w, _ in self.counts})
        return {
            "forced": self.forced,
            "clock0": self.clock0,
            "startup": self.startup,
            "decisions": self.decisions,
            "windows": {w: {"left": self.counts[(w, -1)], "right": self.counts[(w, 1)]} for w in windows},
        }


def audit_decisions(result: SimResult) -> dict:
    """Check the ping-pong and one-of-two-windows properties on a CAP run.

    ``pingpong``: decision indices j where a switch at j is followed by a switch
    at j+1. ``pattern``: decision indices where the window the vehicle committed
    to (own side window j+1 when staying, far side window j+2 after a switch)
    was not captured in full.
    """
    diag = result.diagnostics
    decisions: list[CapDecision] = diag["decisions"]
    clock0 = diag["clock0"]
    rho = result.env.rho
    pingpong = [
        d.j for d, e in zip(decisions, decisions[1:]) if d.decision == "switch" and e.decision == "switch"
    ]
    got = result.captured_ids
    members = window_members(result.instance, clock0, rho) if clock0 is not None else {}
    pattern = []
    for d in decisions:
        side = 1 if d.anchor > 0 else -1
        if d.decision == "stay":
            need = members.get((d.j + 1, side), [])
        elif d.decision == "switch":
            need = members.get((d.j + 2, -side), [])
        else:
            continue
        if any(i not in got for i in need):
            pattern.append(d.j)
    return {"pingpong": pingpong, "pattern": pattern}


def window_members(inst: InputInstance, clock0: float, rho: float) -> dict[tuple[int, int], list[int]]:
    out: dict[tuple[int, int], list[int]] = {}
    for it in inst:
        out.setdefault((window_index(it.arrival_time, clock0, rho), int(it.side)), []).append(it.id)
    return out
