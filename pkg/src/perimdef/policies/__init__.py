"""Online policies, selectable by name."""
from __future__ import annotations

from functools import partial

from ..core import Environment
from .base import BasePolicy
from .cac import CacEpochLog, CompareAndCapture, audit_epochs
from .cap import CapDecision, CaptureWithPatience, audit_decisions, window_index
from .fcfs import FirstComeFirstServed
from .replay import FollowTrajectory
from .sweep import Sweep

POLICY_NAMES = ("sweep", "sweep-stop", "fcfs", "cac", "cap")


def make_policy(name: str, env: Environment, force: bool = False) -> BasePolicy:
    """Fresh policy instance. ``force`` runs CaC/CAP outside their proven regime."""
    if name == "sweep":
        return Sweep(env)
    if name == "sweep-stop":
        return Sweep(env, stop_when_empty=True)
    if name == "fcfs":
        return FirstComeFirstServed(env)
    if name == "cac":
        return CompareAndCapture(env, force=force)
    if name == "cap":
        return CaptureWithPatience(env, force=force)
    raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")


def policy_factory(name: str, force: bool = False):
    """Picklable ``env -> policy`` callable for batch jobs."""
    if name not in POLICY_NAMES:
        raise ValueError(f"unknown policy {name!r}")
    return partial(make_policy, name, force=force)


__all__ = [
    "POLICY_NAMES",
    "BasePolicy",
    "CacEpochLog",
    "CapDecision",
    "CaptureWithPatience",
    "CompareAndCapture",
    "FirstComeFirstServed",
    "FollowTrajectory",
    "Sweep",
    "audit_decisions",
    "audit_epochs",
    "make_policy",
    "policy_factory",
    "window_index",
]
