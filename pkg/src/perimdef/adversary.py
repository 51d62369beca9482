"""Lower-bound instance generators and the Poisson arrival generator.

Random instances use ``numpy.random.default_rng(seed)``, i.e. the PCG64 bit
generator, so a (config, seed) pair regenerates the same instance bit for bit.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import EPS, Environment, InputInstance, RegimeViolation
from .engine import Segment, Trajectory, replay
from .oracle import OfflineSchedule
from .regimes import cap_bound, fcfs_unbounded_condition, thm1_bound, thm2_bound


class StreamBurstAdversary:
    """Reactive stream-then-burst construction against any online policy.

    A stream of single intruders arrives at +1 every ``period`` time units from
    ``start``. The first time the vehicle reaches ``+rho`` a burst of ``c + 1``
    intruders is released at -1 at that instant and the stream stops. A policy
    that never reaches ``+rho`` only ever sees the stream (capped at
    ``stream_cap`` so that runs terminate).
    """

    def __init__(self, c: int, env: Environment, stream_cap: int = 12, period: float = 2.0, start: float = 1.0):
        if c < 0:
            raise ValueError("c must be non-negative")
        self.c = c
        self.env = env
        self.stream_cap = stream_cap
        self.period = period
        self.start = start
        self.released = 0
        self.burst_time: Optional[float] = None

    def _next_release(self) -> float:
        return self.start + self.period * self.released

    @property
    def fired(self) -> bool:
        return self.burst_time is not None

    @property
    def exhausted(self) -> bool:
        return self.fired or self.released >= self.stream_cap

    def next_time(self, now: float) -> Optional[float]:
        if self.exhausted:
            return None
        return self._next_release()

    def watch_positions(self) -> tuple[float, ...]:
        return () if self.fired else (self.env.rho,)

    def observe(self, now: float, vehicle_position: float) -> list[tuple[float, int]]:
        if self.exhausted:
            return []
        out = []
        while self.released < self.stream_cap and self._next_release() <= now + EPS:
            out.append((self._next_release(), 1))
            self.released += 1
        if vehicle_position >= self.env.rho - EPS:
            self.burst_time = now
            out.extend((now, -1) for _ in range(self.c + 1))
        return out

    def summary(self) -> dict:
        return {"c": self.c, "stream_released": self.released, "burst_time": self.burst_time}


def gen_thm1_adaptive(c: int, env: Environment, stream_cap: int = 12) -> StreamBurstAdversary:
    if not v_exceeds_thm1(env):
        warnings.warn(
            f"v={env.v} <= (1-rho)/(2 rho)={thm1_bound(env.rho):.6g}: stream intruders can be caught, "
            "the construction no longer forces an unbounded ratio",
            stacklevel=2,
        )
    return StreamBurstAdversary(c, env, stream_cap)


def v_exceeds_thm1(env: Environment) -> bool:
    return env.v > thm1_bound(env.rho) + EPS


def gen_thm2_suite(env: Environment, eps: Optional[float] = None) -> list[InputInstance]:
    """Two-intruder instances no single online policy can fully serve.

    Intruder ``a`` (id 0) enters at -1 and ``b`` (id 1) at +1. On the boundary
    v = (1-rho)/(1+rho) returns three instances with default offset ``rho v``;
    above it returns two with offset ``1 + rho - (1-rho)/v``.
    """
    rho, v = env.rho, env.v
    bound = thm2_bound(rho)
    if v < bound - EPS:
        raise RegimeViolation(f"needs v >= (1-rho)/(1+rho) = {bound:.6g}, got v={v}")
    if abs(v - bound) <= EPS:
        e = rho * v if eps is None else eps
        return [
            InputInstance.from_arrivals([(1.0, -1), (1.0, 1)]),
            InputInstance.from_arrivals([(1.0, -1), (1.0 + e, 1)]),
            InputInstance.from_arrivals([(1.0 + e, -1), (1.0, 1)]),
        ]
    e = 1 + rho - (1 - rho) / v if eps is None else eps
    return [
        InputInstance.from_arrivals([(1.0, -1), (1.0 + e, 1)]),
        InputInstance.from_arrivals([(1.0 + e, -1), (1.0, 1)]),
    ]


def gen_fcfs_killer(c: int, env: Environment, eps: float = 0.01) -> InputInstance:
    """One decoy at +1 at time 0, then ``c + 1`` intruders at -1 at time ``eps``."""
    if not fcfs_unbounded_condition(env.rho, env.v, eps):
        raise RegimeViolation(f"needs 2/(v+1) + rho > (1-rho)/v + eps (rho={env.rho}, v={env.v}, eps={eps})")
    return InputInstance.from_arrivals([(0.0, 1)] + [(eps, -1)] * (c + 1))


def gen_sweep_killer(n: int, env: Environment, eps: float = 1e-3) -> InputInstance:
    """Intruders at +1 just after each departure of the sweeping vehicle from +1.

    Sweep leaves +1 at times 1, 5, 9, ...; intruder i arrives at 1 + eps + 4i.
    Every one of them is lost when v > (1-rho)/(3+rho).
    """
    return InputInstance.from_arrivals([(1.0 + eps + 4.0 * i, 1) for i in range(n)])


# -- two-stream construction against CAP --------------------------------------------


def gen_cap_lowerbound(
    k_plus: int, k_minus: Optional[int], env: Environment, force: bool = False
) -> InputInstance:
    """Sparse stream at +1 (every 6 rho) against a dense stream at -1 (every 2 rho).

    ``k_minus`` defaults to ``3 * k_plus`` so both streams cover the same span.
    """
    rho, v = env.rho, env.v
    if not force and v > cap_bound(rho) + EPS:
        raise RegimeViolation(f"needs v <= (1-rho)/(6 rho) = {cap_bound(rho):.6g}, got v={v}")
    if k_minus is None:
        k_minus = 3 * k_plus
    plus = [(6 * i * rho, 1) for i in range(k_plus + 1)]
    minus = [(3 * rho + rho / v + 2 * i * rho, -1) for i in range(k_minus + 1)]
    return InputInstance.from_arrivals(plus + minus)


def cap_lb_turn_point(rho: float) -> tuple[float, float, float]:
    """``(p1, p2, wait)``: the two turning points of the reference cycle and the dwell at p2."""
    if rho <= 0.5:
        return rho, -2 * rho, 0.0
    return rho, -1.0, 2 * (2 * rho - 1)


def reference_cycle_trajectory(env: Environment, horizon: float) -> Trajectory:
    """Leave the origin at ``z - rho``, then shuttle p1 -> p2 -> p1 with period 6 rho."""
    rho, z = env.rho, env.z
    p1, p2, wait = cap_lb_turn_point(rho)
    segs = [Segment(0.0, 0.0, 0, z - rho), Segment(z - rho, 0.0, 1, z)]
    t = z
    leg = p1 - p2
    while t < horizon:
        segs.append(Segment(t, p1, -1, t + leg))
        t += leg
        if wait > 0:
            segs.append(Segment(t, p2, 0, t + wait))
            t += wait
        segs.append(Segment(t, p2, 1, t + leg))
        t += leg
    return Trajectory(tuple(segs))


def reference_offline_cap_lb(
    k_plus: int, k_minus: Optional[int], env: Environment, inst: Optional[InputInstance] = None
) -> OfflineSchedule:
    """Hand-built offline schedule for the two-stream instance.

    The captures are read off by replaying the shuttle trajectory against the
    instance (or against ``inst``, e.g. a truncated copy).
    """
    rho, v = env.rho, env.v
    if v > min(1 / 3, cap_bound(rho)) + EPS:
        raise RegimeViolation(f"needs v <= min(1/3, (1-rho)/(6 rho)) = {min(1 / 3, cap_bound(rho)):.6g}, got v={v}")
    if inst is None:
        inst = gen_cap_lowerbound(k_plus, k_minus, env)
    horizon = max((it.arrival_time for it in inst), default=0.0) + env.z + 6 * rho
    traj = reference_cycle_trajectory(env, horizon)
    hits = replay(traj, inst, env)
    caps = sorted(((i, t, x) for i, (t, x) in hits.items()), key=lambda c: (c[1], c[0]))
    return OfflineSchedule(caps)


# -- stochastic arrivals -----------------------------------------------------------


@dataclass(frozen=True)
class PoissonConfig:
    lam: float
    duration: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


def gen_poisson(cfg: PoissonConfig) -> InputInstance:
    """Poisson arrivals on [0, duration], each at either endpoint with probability 1/2."""
    rng = np.random.default_rng(cfg.seed)
    arrivals = []
    t = 0.0
    scale = 1.0 / cfg.lam
    while True:
        t += float(rng.exponential(scale))
        if t > cfg.duration:
            break
        arrivals.append((t, 1 if rng.random() < 0.5 else -1))
    return InputInstance.from_arrivals(arrivals)


def expected_count(cfg: PoissonConfig) -> float:
    return cfg.lam * cfg.duration


def interarrival_samples(lam: float, n: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).exponential(1.0 / lam, size=n)


__all__ = [
    "PoissonConfig",
    "StreamBurstAdversary",
    "cap_lb_turn_point",
    "expected_count",
    "gen_cap_lowerbound",
    "gen_fcfs_killer",
    "gen_poisson",
    "gen_sweep_killer",
    "gen_thm1_adaptive",
    "gen_thm2_suite",
    "reference_cycle_trajectory",
    "reference_offline_cap_lb",
]
