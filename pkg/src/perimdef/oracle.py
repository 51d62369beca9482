"""Offline optimum, bang-bang normalization and competitive ratios.

``optimal_offline`` is an exact dynamic program over (captured subset, last
capture) that stores the earliest time each state can be completed. Keeping
only the earliest time is safe: a vehicle that captured intruder ``j`` early
can shadow ``j``'s path (speed ``v < 1``) and be wherever a later capture of
``j`` would have left it, so the earliest state dominates every later one.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import EPS, Environment, InputInstance, Intruder, perimeter_hit_time, raw_position
from .engine import Segment, SimResult, Trajectory, simulate


class TooLarge(ValueError):
    pass


class InfeasibleProfile(ValueError):
    pass


@dataclass(frozen=True)
class InterceptQuery:
    x: float
    t: float
    intruder: Intruder

    def __post_init__(self):
        if abs(self.x) > 1.0 + EPS:
            raise ValueError(f"vehicle position {self.x} outside [-1, 1]")
        if self.t < 0:
            raise ValueError("query time must be non-negative")


def interception_time(q: InterceptQuery, env: Environment) -> Optional[tuple[float, float]]:
    """Earliest ``(time, position)`` at which a unit-speed vehicle can meet the intruder.

    The vehicle may arrive early on the intruder's path and wait. Returns
    ``None`` when the intruder reaches the perimeter first.
    """
    it = q.intruder
    hit = perimeter_hit_time(it, env)
    t0 = max(q.t, it.arrival_time)
    p = raw_position(it, t0, env)
    gap = abs(p - q.x) - (t0 - q.t)
    if gap <= 0:
        tau = t0
    else:
        # Intruder outward of the vehicle closes at 1 + v; inward of it, at 1 - v.
        rate = 1.0 + env.v if it.side * (p - q.x) > 0 else 1.0 - env.v
        tau = t0 + gap / rate
    if tau > hit + EPS:
        return None
    tau = min(tau, hit)
    return tau, raw_position(it, tau, env)


def _intercept_many(x: np.ndarray, t: np.ndarray, a: float, s: int, env: Environment) -> np.ndarray:
    """Vectorized ``interception_time``; infeasible entries are ``inf``."""
    hit = a + env.z
    t0 = np.maximum(t, a)
    p = s * (1.0 - env.v * (t0 - a))
    gap = np.abs(p - x) - (t0 - t)
    rate = np.where(s * (p - x) > 0, 1.0 + env.v, 1.0 - env.v)
    tau = np.where(gap <= 0, t0, t0 + np.maximum(gap, 0.0) / rate)
    tau = np.where(tau > hit + EPS, np.inf, np.minimum(tau, hit))
    return tau


@dataclass
class OfflineSchedule:
    captures: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def value(self) -> int:
        return len(self.captures)

    def profile(self, start: tuple[float, float] = (0.0, 0.0)) -> list[tuple[float, float]]:
        """Capture profile ``[(x_0, k_0), (x_1, k_1), ...]`` starting at the origin."""
        return [start] + [(x, t) for _, t, x in self.captures]

    def trajectory(self, horizon: Optional[float] = None) -> Trajectory:
        return normalize_extreme_speed(None, self.profile(), horizon=horizon)

    def to_dict(self) -> dict:
        return {"captures": [{"id": i, "t": t, "x": x} for i, t, x in self.captures], "value": self.value}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def optimal_offline(inst: InputInstance, env: Environment, max_n: int = 15) -> OfflineSchedule:
    n = len(inst)
    if n > max_n:
        raise TooLarge(f"instance has {n} intruders, oracle limit is {max_n}")
    if n == 0:
        return OfflineSchedule()
    intr = list(inst)
    arr = [it.arrival_time for it in intr]
    side = [int(it.side) for it in intr]
    full = 1 << n
    f = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int8)
    zero = np.zeros(1)
    for k in range(n):
        f[1 << k, k] = _intercept_many(zero, zero, arr[k], side[k], env)[0]

    masks = np.arange(full, dtype=np.int64)
    popcount = np.zeros(full, dtype=np.int64)
    for k in range(n):
        popcount += (masks >> k) & 1
    layers = [masks[popcount == m] for m in range(n + 1)]

    best_m = 1 if np.isfinite(f[[1 << k for k in range(n)], range(n)]).any() else 0
    for m in range(1, n):
        layer = layers[m]
        reached = False
        for j in range(n):
            sel = layer[((layer >> j) & 1) == 1]
            tj = f[sel, j]
            ok = np.isfinite(tj)
            if not ok.any():
                continue
            sel, tj = sel[ok], tj[ok]
            xj = side[j] * (1.0 - env.v * (tj - arr[j]))
            for k in range(n):
                if k == j:
                    continue
                free = ((sel >> k) & 1) == 0
                if not free.any():
                    continue
                tau = _intercept_many(xj[free], tj[free], arr[k], side[k], env)
                new = sel[free] | (1 << k)
                better = tau < f[new, k]
                if better.any():
                    f[new[better], k] = tau[better]
                    parent[new[better], k] = j
                    reached = True
        if reached:
            best_m = m + 1
        else:
            break

    if best_m == 0:
        return OfflineSchedule()
    layer = layers[best_m]
    sub = f[layer]
    flat = int(np.argmin(sub))
    mask, last = int(layer[flat // n]), flat % n
    order = []
    while last >= 0:
        order.append((last, float(f[mask, last])))
        prev = int(parent[mask, last])
        mask ^= 1 << last
        last = prev
    order.reverse()
    caps = [(intr[k].id, t, raw_position(intr[k], t, env)) for k, t in order]
    return OfflineSchedule(caps)


def _meet(x: float, t: float, it: Intruder, env: Environment) -> Optional[float]:
    """Earliest meeting time by solving ``x ± (tau - t) = pos(tau)`` directly.

    Independent of ``interception_time``; used only by the brute-force oracle.
    """
    hit = perimeter_hit_time(it, env)
    t0 = max(t, it.arrival_time)
    if t0 > hit + EPS:
        return None

    def reachable(tau: float) -> bool:
        return abs(raw_position(it, tau, env) - x) <= (tau - t) + EPS

    if reachable(t0):
        return t0
    s, v, a = it.side, env.v, it.arrival_time
    cands = []
    # x + (tau - t) = s (1 - v (tau - a))
    cands.append((s + s * v * a - x + t) / (1.0 + s * v))
    # x - (tau - t) = s (1 - v (tau - a))
    cands.append((s + s * v * a - x - t) / (s * v - 1.0))
    ok = [c for c in cands if t0 - EPS <= c <= hit + EPS and reachable(c)]
    if not ok:
        return None
    return min(max(min(ok), t0), hit)


def exhaustive_offline(inst: InputInstance, env: Environment, max_n: int = 8) -> int:
    """Maximum captures by enumerating every capture order of every subset."""
    n = len(inst)
    if n > max_n:
        raise TooLarge(f"instance has {n} intruders, brute-force limit is {max_n}")
    intr = list(inst)
    best = 0

    def extend(x: float, t: float, remaining: frozenset, depth: int) -> None:
        nonlocal best
        best = max(best, depth)
        if depth + len(remaining) <= best:
            return
        for k in remaining:
            tau = _meet(x, t, intr[k], env)
            if tau is not None:
                extend(raw_position(intr[k], tau, env), tau, remaining - {k}, depth + 1)

    extend(0.0, 0.0, frozenset(range(n)), 0)
    return best


def normalize_extreme_speed(
    traj: Optional[Trajectory],
    profile: Sequence[tuple[float, float]],
    horizon: Optional[float] = None,
) -> Trajectory:
    """Bang-bang trajectory visiting every ``(x_i, k_i)`` of a capture profile.

    From each profile point the vehicle leaves immediately at unit speed for the
    next one and holds there until that point's time. ``traj`` (the original
    trajectory, optional) only extends the final hold to its end time.
    """
    if not profile:
        raise InfeasibleProfile("empty profile")
    pts = [(float(x), float(k)) for x, k in profile]
    for (x0, k0), (x1, k1) in zip(pts, pts[1:]):
        if abs(x1) > 1.0 + EPS:
            raise InfeasibleProfile(f"profile point {x1} outside [-1, 1]")
        if abs(x1 - x0) > (k1 - k0) + EPS:
            raise InfeasibleProfile(
                f"cannot move {abs(x1 - x0):.6g} in {k1 - k0:.6g} time ({x0} at {k0} -> {x1} at {k1})"
            )
    segs: list[Segment] = []

    def push(t0: float, x0: float, vel: int, t1: float) -> None:
        if t1 <= t0:
            return
        if segs and segs[-1].velocity == vel and segs[-1].t_end == t0:
            p = segs[-1]
            segs[-1] = Segment(p.t_start, p.x_start, vel, t1)
        else:
            segs.append(Segment(t0, x0, vel, t1))

    for (x0, k0), (x1, k1) in zip(pts, pts[1:]):
        d = x1 - x0
        move = min(abs(d), k1 - k0)
        vel = 0 if abs(d) <= EPS else (1 if d > 0 else -1)
        if vel:
            push(k0, x0, vel, k0 + move)
        push(k0 + (move if vel else 0.0), x1, 0, k1)
    end = horizon if horizon is not None else (traj.end_time if traj is not None else None)
    if end is not None:
        push(pts[-1][1], pts[-1][0], 0, end)
    return Trajectory(tuple(segs))


@dataclass(frozen=True)
class RatioReport:
    n_alg: int
    n_opt: int

    @property
    def ratio(self) -> float:
        if self.n_alg == 0:
            return 1.0 if self.n_opt == 0 else math.inf
        return self.n_opt / self.n_alg

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.ratio)

    def to_dict(self) -> dict:
        return {"n_alg": self.n_alg, "n_opt": self.n_opt, "ratio": "Unbounded" if self.unbounded else self.ratio}


def evaluate_ratio(
    policy,
    inst: InputInstance,
    env: Environment,
    max_n: int = 15,
    force: bool = False,
) -> tuple[RatioReport, SimResult, OfflineSchedule]:
    """Simulate ``policy`` (name or policy object) on ``inst`` and solve the offline optimum."""
    from .policies import make_policy

    if len(inst) > max_n:
        raise TooLarge(f"instance has {len(inst)} intruders, oracle limit is {max_n}")
    pol = make_policy(policy, env, force=force) if isinstance(policy, str) else policy
    res = simulate(inst, pol, env)
    sched = optimal_offline(inst, env, max_n=max_n)
    return RatioReport(res.n_captured, sched.value), res, sched


def competitive_ratio(policy, inst: InputInstance, env: Environment, max_n: int = 15, force: bool = False) -> RatioReport:
    return evaluate_ratio(policy, inst, env, max_n=max_n, force=force)[0]
