"""Domain types and intruder kinematics for perimeter defense on [-1, 1].

The protected region is [-rho, rho]. Intruders appear at an endpoint and walk
inward at constant speed ``v`` (vehicle speed is 1). An intruder that reaches
``±rho`` without being intercepted is lost.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence, Union

EPS = 1e-9


class RegimeViolation(ValueError):
    """Raised when a construction or policy is used outside its parameter regime."""


class InvalidInstance(ValueError):
    pass


class Side(IntEnum):
    LEFT = -1
    RIGHT = 1


@dataclass(frozen=True)
class Environment:
    rho: float
    v: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0.0 < self.v < 1.0:
            raise ValueError(f"v must lie in (0, 1), got {self.v}")

    @property
    def z(self) -> float:
        """Transit time from an endpoint to the perimeter."""
        return (1.0 - self.rho) / self.v

    def to_dict(self) -> dict:
        return {"rho": self.rho, "v": self.v}

    @classmethod
    def from_dict(cls, d: dict) -> "Environment":
        return cls(float(d["rho"]), float(d["v"]))


@dataclass(frozen=True)
class Intruder:
    id: int
    arrival_time: float
    side: Side

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))


@dataclass(frozen=True)
class VehicleState:
    position: float
    time: float


@dataclass(frozen=True)
class NotYetArrived:
    pass


@dataclass(frozen=True)
class Active:
    position: float


@dataclass(frozen=True)
class Resolved:
    pass


KinematicState = Union[NotYetArrived, Active, Resolved]


def perimeter_hit_time(intr: Intruder, env: Environment) -> float:
    return intr.arrival_time + env.z


def raw_position(intr: Intruder, t: float, env: Environment) -> float:
    """Position on the intruder's straight path, no validity window applied."""
    return intr.side * (1.0 - env.v * (t - intr.arrival_time))


def intruder_position(intr: Intruder, t: float, env: Environment) -> KinematicState:
    """Kinematic state at time ``t``, ignoring any capture.

    The intruder is still ``Active`` exactly at its perimeter-hit time so that a
    vehicle waiting at the perimeter point can capture it.
    """
    if t < intr.arrival_time:
        return NotYetArrived()
    if t > perimeter_hit_time(intr, env):
        return Resolved()
    return Active(raw_position(intr, t, env))


@dataclass(frozen=True)
class InputInstance:
    """Finite multiset of intruders, ordered by (arrival_time, id)."""

    intruders: tuple[Intruder, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intruders", tuple(self.intruders))

    def __len__(self) -> int:
        return len(self.intruders)

    def __iter__(self):
        return iter(self.intruders)

    def __getitem__(self, i):
        return self.intruders[i]

    @classmethod
    def from_arrivals(cls, arrivals: Iterable[tuple[float, int]]) -> "InputInstance":
        """Build from ``(t, side)`` pairs; ids follow the given order, then sorted."""
        intruders = [Intruder(i, float(t), Side(s)) for i, (t, s) in enumerate(arrivals)]
        intruders.sort(key=lambda it: (it.arrival_time, it.id))
        return cls(tuple(intruders))

    def by_id(self) -> dict[int, Intruder]:
        return {it.id: it for it in self.intruders}

    def truncated(self, n: int) -> "InputInstance":
        """First ``n`` intruders in arrival order."""
        return InputInstance(self.intruders[:n])

    def to_dict(self) -> dict:
        ordered = sorted(self.intruders, key=lambda it: it.id)
        return {"intruders": [{"t": it.arrival_time, "side": int(it.side)} for it in ordered]}

    @classmethod
    def from_dict(cls, d: dict) -> "InputInstance":
        return cls.from_arrivals((e["t"], e["side"]) for e in d["intruders"])

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "InputInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json(indent=2) + "\n")


def validate_instance(inst: InputInstance) -> list[str]:
    """List of violations; an empty list means the instance is valid."""
    problems = []
    seen: set[int] = set()
    prev = None
    for it in inst.intruders:
        if it.arrival_time < 0:
            problems.append(f"negative arrival time for intruder {it.id}: {it.arrival_time}")
        if it.arrival_time != it.arrival_time:
            problems.append(f"arrival time of intruder {it.id} is NaN")
        if it.id in seen:
            problems.append(f"duplicate intruder id {it.id}")
        seen.add(it.id)
        key = (it.arrival_time, it.id)
        if prev is not None and key < prev:
            problems.append(f"intruder {it.id} out of order")
        prev = key
    return problems


def check_instance(inst: InputInstance) -> None:
    problems = validate_instance(inst)
    if problems:
        raise InvalidInstance("; ".join(problems))


def sign(x: float) -> int:
    if x > EPS:
        return 1
    if x < -EPS:
        return -1
    return 0


def load_environment(path: Union[str, Path]) -> Environment:
    return Environment.from_dict(json.loads(Path(path).read_text()))


def as_instance(obj: Union[InputInstance, Sequence[tuple[float, int]]]) -> InputInstance:
    if isinstance(obj, InputInstance):
        return obj
    return InputInstance.from_arrivals(obj)
