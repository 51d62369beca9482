"""Event-driven simulation of one vehicle against an intruder instance.

Every event time is the root of a linear equation, so the loop jumps from
event to event in closed form: intruder arrivals, captures, losses, the vehicle
reaching its target, policy wake-ups and adversary injections.
"""
from __future__ import annotations

import csv
import heapq
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Callable, Optional, Protocol, Sequence, Union

from .core import (
    EPS,
    Environment,
    InputInstance,
    Intruder,
    Side,
    VehicleState,
    check_instance,
    perimeter_hit_time,
    raw_position,
)


class InvalidPlan(RuntimeError):
    pass


class NonterminatingAdversary(RuntimeError):
    pass


@dataclass(frozen=True)
class MotionPlan:
    """Move toward ``target`` at unit speed, then idle.

    ``wake_time`` asks the engine to re-query the policy at that absolute time
    even if nothing else happens.
    """

    target: float
    wake_time: Optional[float] = None


@dataclass(frozen=True)
class SimView:
    time: float
    vehicle: VehicleState
    active: tuple[tuple[Intruder, float], ...]
    arrived: tuple[Intruder, ...]
    captured_ids: frozenset[int]
    lost_ids: frozenset[int]
    env: Environment


class Policy(Protocol):
    name: str

    def decide(self, view: SimView) -> MotionPlan: ...

    def finish(self, view: SimView) -> None: ...

    def diagnostics(self) -> dict: ...


class AdaptiveAdversary(Protocol):
    """Reactive intruder source consulted at every event."""

    def next_time(self, now: float) -> Optional[float]:
        """Next absolute time at which the adversary wants to be consulted."""

    def watch_positions(self) -> Sequence[float]:
        """Vehicle positions whose crossing must be an event."""

    def observe(self, now: float, vehicle_position: float) -> list[tuple[float, int]]:
        """Return ``(arrival_time, side)`` pairs to inject; arrival_time >= now."""

    @property
    def exhausted(self) -> bool: ...


@dataclass(frozen=True)
class Segment:
    t_start: float
    x_start: float
    velocity: int
    t_end: float

    @property
    def x_end(self) -> float:
        return self.x_start + self.velocity * (self.t_end - self.t_start)

    def position(self, t: float) -> float:
        return self.x_start + self.velocity * (t - self.t_start)


@dataclass(frozen=True)
class Trajectory:
    segments: tuple[Segment, ...] = ()

    @property
    def start_time(self) -> float:
        return self.segments[0].t_start if self.segments else 0.0

    @property
    def end_time(self) -> float:
        return self.segments[-1].t_end if self.segments else 0.0

    def position(self, t: float) -> float:
        if not self.segments:
            return 0.0
        if t <= self.segments[0].t_start:
            return self.segments[0].x_start
        for seg in self.segments:
            if t <= seg.t_end:
                return seg.position(t)
        return self.segments[-1].x_end

    def to_list(self) -> list[list[float]]:
        return [[s.t_start, s.x_start, s.velocity, s.t_end] for s in self.segments]

    @classmethod
    def from_list(cls, rows) -> "Trajectory":
        return cls(tuple(Segment(float(a), float(b), int(c), float(d)) for a, b, c, d in rows))


@dataclass(frozen=True)
class Capture:
    id: int
    time: float
    position: float


@dataclass(frozen=True)
class Loss:
    id: int
    time: float
    position: float


@dataclass
class SimResult:
    policy: str
    env: Environment
    instance: InputInstance
    captures: list[Capture]
    losses: list[Loss]
    trajectory: Trajectory
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_captured(self) -> int:
        return len(self.captures)

    @property
    def n_lost(self) -> int:
        return len(self.losses)

    @property
    def captured_ids(self) -> set[int]:
        return {c.id for c in self.captures}

    @property
    def capture_fraction(self) -> float:
        n = len(self.instance)
        return self.n_captured / n if n else 1.0

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "env": self.env.to_dict(),
            "instance": self.instance.to_dict(),
            "captures": [asdict(c) for c in self.captures],
            "losses": [asdict(c) for c in self.losses],
            "trajectory": self.trajectory.to_list(),
            "diagnostics": _jsonable(self.diagnostics),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    SUMMARY_FIELDS = ("policy", "rho", "v", "n_intruders", "n_captured", "n_lost", "capture_fraction")

    def summary_row(self) -> dict:
        return {
            "policy": self.policy,
            "rho": self.env.rho,
            "v": self.env.v,
            "n_intruders": len(self.instance),
            "n_captured": self.n_captured,
            "n_lost": self.n_lost,
            "capture_fraction": self.capture_fraction,
        }

    def summary_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.SUMMARY_FIELDS, lineterminator="\n")
        if header:
            w.writeheader()
        w.writerow(self.summary_row())
        return buf.getvalue()


def _jsonable(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def coincidence_time(
    vehicle: VehicleState,
    velocity: int,
    intr: Intruder,
    env: Environment,
    until: float = math.inf,
) -> Optional[float]:
    """Earliest time >= vehicle.time at which the straight vehicle path meets the intruder.

    ``until`` bounds the vehicle leg (e.g. the time it reaches its target).
    Returns ``None`` when the meeting falls outside the intruder's lifetime or
    after ``until``.
    """
    s = intr.side
    a = intr.arrival_time
    # x + vel (t - t0) = s (1 - v (t - a)); the denominator never vanishes since v < 1.
    t = (s + s * env.v * a - vehicle.position + velocity * vehicle.time) / (velocity + s * env.v)
    lo = max(vehicle.time, a)
    if t < lo - EPS or t > perimeter_hit_time(intr, env) + EPS or t > until + EPS:
        return None
    return max(t, vehicle.time)


def simulate(
    inst: InputInstance,
    policy: Policy,
    env: Environment,
    adversary: Optional[AdaptiveAdversary] = None,
    *,
    max_injections: int = 100_000,
    max_events: int = 10_000_000,
) -> SimResult:
    check_instance(inst)
    z = env.z
    pending: list[tuple[float, int, Intruder]] = [(it.arrival_time, it.id, it) for it in inst]
    heapq.heapify(pending)
    all_intruders: list[Intruder] = list(inst)
    next_id = max((it.id for it in inst), default=-1) + 1
    injected = 0

    active: dict[int, Intruder] = {}
    arrived: list[Intruder] = []
    captures: list[Capture] = []
    losses: list[Loss] = []
    captured_ids: set[int] = set()
    lost_ids: set[int] = set()
    segments: list[Segment] = []

    t = 0.0
    x = 0.0
    plan = MotionPlan(0.0)

    def view() -> SimView:
        return SimView(
            time=t,
            vehicle=VehicleState(x, t),
            active=tuple((it, raw_position(it, t, env)) for it in active.values()),
            arrived=tuple(arrived),
            captured_ids=frozenset(captured_ids),
            lost_ids=frozenset(lost_ids),
            env=env,
        )

    for _ in range(max_events):
        if adversary is not None:
            for arr, side in adversary.observe(t, x):
                injected += 1
                if injected > max_injections:
                    raise NonterminatingAdversary(f"adversary exceeded {max_injections} injections")
                it = Intruder(next_id, max(float(arr), t), Side(side))
                next_id += 1
                all_intruders.append(it)
                heapq.heappush(pending, (it.arrival_time, it.id, it))

        while pending and pending[0][0] <= t:
            it = heapq.heappop(pending)[2]
            active[it.id] = it
            arrived.append(it)

        # Captures before losses: coincidence exactly at the hit time counts as capture.
        for iid in [i for i, it in active.items() if abs(raw_position(it, t, env) - x) <= EPS]:
            it = active.pop(iid)
            captures.append(Capture(iid, t, raw_position(it, t, env)))
            captured_ids.add(iid)
        for iid in [i for i, it in active.items() if it.arrival_time + z <= t]:
            it = active.pop(iid)
            losses.append(Loss(iid, it.arrival_time + z, it.side * env.rho))
            lost_ids.add(iid)

        if not active and not pending and (adversary is None or adversary.exhausted):
            break

        plan = policy.decide(view())
        target = plan.target
        if not -1.0 - EPS <= target <= 1.0 + EPS or target != target:
            raise InvalidPlan(f"{policy.name}: target {target} outside [-1, 1]")
        target = min(1.0, max(-1.0, target))
        if plan.wake_time is not None and plan.wake_time < t - EPS:
            raise InvalidPlan(f"{policy.name}: wake_time {plan.wake_time} before now {t}")

        dist = target - x
        vel = 0 if abs(dist) <= EPS else (1 if dist > 0 else -1)
        t_reach = t + abs(dist) if vel else math.inf

        t_next = t_reach
        if plan.wake_time is not None and plan.wake_time > t:
            t_next = min(t_next, plan.wake_time)
        if pending:
            t_next = min(t_next, pending[0][0])
        if adversary is not None:
            nt = adversary.next_time(t)
            if nt is not None and nt > t:
                t_next = min(t_next, nt)
            if vel:
                for w in adversary.watch_positions():
                    d = (w - x) * vel
                    if d > EPS and d <= abs(dist) + EPS:
                        t_next = min(t_next, t + d)
        here = VehicleState(x, t)
        for it in active.values():
            t_next = min(t_next, it.arrival_time + z)
            tc = coincidence_time(here, vel, it, env, until=t_reach)
            if tc is not None and tc > t:
                t_next = min(t_next, tc)

        if math.isinf(t_next):
            # Nothing can ever happen again (e.g. idle policy, adversary waiting on a
            # crossing that will not occur).
            break

        x_new = x + vel * (t_next - t)
        if vel and (t_next >= t_reach or (target - x_new) * vel <= 0):
            x_new = target
        x_new = min(1.0, max(-1.0, x_new))
        if segments and segments[-1].velocity == vel and segments[-1].t_end == t:
            prev = segments[-1]
            segments[-1] = Segment(prev.t_start, prev.x_start, vel, t_next)
        else:
            segments.append(Segment(t, x, vel, t_next))
        t, x = t_next, x_new
    else:
        raise RuntimeError(f"simulation exceeded {max_events} events")

    policy.finish(view())
    realized = InputInstance(tuple(sorted(all_intruders, key=lambda it: (it.arrival_time, it.id))))
    return SimResult(
        policy=policy.name,
        env=env,
        instance=realized,
        captures=captures,
        losses=losses,
        trajectory=Trajectory(tuple(segments)),
        diagnostics=policy.diagnostics(),
    )


def replay(traj: Trajectory, inst: InputInstance, env: Environment) -> dict[int, tuple[float, float]]:
    """Open-loop replay: first coincidence of ``traj`` with each intruder path.

    Intruders do not interact, so each one is captured at the first instant the
    trajectory meets it inside its lifetime. After the trajectory ends the
    vehicle is treated as parked at its final position.
    """
    legs = list(traj.segments)
    if legs:
        legs.append(Segment(legs[-1].t_end, legs[-1].x_end, 0, math.inf))
    else:
        legs = [Segment(0.0, 0.0, 0, math.inf)]
    out: dict[int, tuple[float, float]] = {}
    for it in inst:
        for seg in legs:
            if seg.t_end < it.arrival_time - EPS:
                continue
            if seg.t_start > perimeter_hit_time(it, env) + EPS:
                break
            tc = coincidence_time(VehicleState(seg.x_start, seg.t_start), seg.velocity, it, env, until=seg.t_end)
            if tc is not None:
                out[it.id] = (tc, raw_position(it, tc, env))
                break
    return out


# --- batch execution -------------------------------------------------------------


@dataclass(frozen=True)
class BatchJob:
    instance: Any
    policy: Union[str, Callable[[Environment], Policy]]
    env: Environment
    seed: Optional[int] = None
    force: bool = False


@dataclass(frozen=True)
class JobError:
    index: int
    error: str
    kind: str


def _run_job(args: tuple[int, BatchJob]) -> Union[SimResult, JobError]:
    from .adversary import PoissonConfig, gen_poisson
    from .policies import make_policy

    index, job = args
    try:
        inst = job.instance
        if isinstance(inst, PoissonConfig):
            inst = gen_poisson(inst)
        if isinstance(job.policy, str):
            pol = make_policy(job.policy, job.env, force=job.force)
        else:
            pol = job.policy(job.env)
        res = simulate(inst, pol, job.env)
        res.diagnostics = dict(res.diagnostics, seed=job.seed)
        return res
    except Exception as exc:  # per-job isolation
        return JobError(index, str(exc), type(exc).__name__)


def run_batch(jobs: Sequence[BatchJob], parallelism: int = 1) -> list[Union[SimResult, JobError]]:
    """Run independent jobs; results come back in job order.

    A failing job yields a ``JobError`` in its slot instead of aborting the batch.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be a positive integer")
    indexed = list(enumerate(jobs))
    if parallelism == 1 or len(indexed) <= 1:
        return [_run_job(a) for a in indexed]
    with ProcessPoolExecutor(max_workers=parallelism) as ex:
        return list(ex.map(_run_job, indexed, chunksize=max(1, len(indexed) // (4 * parallelism))))
