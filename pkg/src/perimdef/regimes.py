"""Parameter-regime predicates and boundary curves in the (rho, v) plane.

Inclusive bounds (``<=``, ``>=``) accept values within ``EPS`` of the boundary;
strict bounds require clearing it by more than ``EPS``. This keeps
classification deterministic at exact boundaries like ``rho=0.2, v=2/3``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .core import EPS, Environment

CURVES = ("thm1", "thm2", "sweep", "cac", "cap", "fcfs")


def _le(a: float, b: float) -> bool:
    return a <= b + EPS


def _gt(a: float, b: float) -> bool:
    return a > b + EPS


# -- closed-form bounds on v ------------------------------------------------------


def thm1_bound(rho: float) -> float:
    return (1 - rho) / (2 * rho)


def thm2_bound(rho: float) -> float:
    return (1 - rho) / (1 + rho)


def sweep_bound(rho: float) -> float:
    return (1 - rho) / (3 + rho)


def cap_bound(rho: float) -> float:
    return (1 - rho) / (6 * rho)


def fcfs_bound(rho: float) -> float:
    """Root of ``2/(v+1) + rho = (1-rho)/v``; FCFS is unbounded above it."""
    return (math.sqrt(1 + 8 * rho) - 1 - 2 * rho) / (2 * rho)


def timing_lhs(rho: float, v: float) -> float:
    return rho * v / (1 - rho) + v * v / (1 + v) ** 2


def band_lhs(rho: float, v: float) -> float:
    return rho + 2 * rho * v + 2 * v * (1 - rho) / (1 + v)


# -- predicates --------------------------------------------------------------------


def no_c_condition(rho: float, v: float) -> bool:
    return _gt(v, thm1_bound(rho))


def at_best_2_condition(rho: float, v: float) -> bool:
    return v >= thm2_bound(rho) - EPS


def sweep_condition(rho: float, v: float) -> bool:
    return _le(v, sweep_bound(rho))


def cac_condition_timing(rho: float, v: float) -> bool:
    return _le(timing_lhs(rho, v), 0.25)


def cac_condition_band(rho: float, v: float) -> bool:
    return _le(band_lhs(rho, v), 1.0)


def cac_condition(rho: float, v: float) -> bool:
    return cac_condition_timing(rho, v) and cac_condition_band(rho, v)


def cap_condition(rho: float, v: float) -> bool:
    return _le(v, cap_bound(rho))


def fcfs_unbounded_condition(rho: float, v: float, eps: float = 0.0) -> bool:
    return _gt(2 / (v + 1) + rho, (1 - rho) / v + eps)


@dataclass(frozen=True)
class RegimeReport:
    rho: float
    v: float
    no_c_competitive: bool
    at_best_2: bool
    sweep_1: bool
    cac_2: bool
    cap_4: bool
    fcfs_unbounded: bool

    @property
    def best_guarantee(self) -> Optional[int]:
        if self.sweep_1:
            return 1
        if self.cac_2:
            return 2
        if self.cap_4:
            return 4
        return None

    def to_dict(self) -> dict:
        return dict(asdict(self), best_guarantee=self.best_guarantee)


def classify(env: Environment, fcfs_eps: float = 0.0) -> RegimeReport:
    rho, v = env.rho, env.v
    return RegimeReport(
        rho=rho,
        v=v,
        no_c_competitive=no_c_condition(rho, v),
        at_best_2=at_best_2_condition(rho, v),
        sweep_1=sweep_condition(rho, v),
        cac_2=cac_condition(rho, v),
        cap_4=cap_condition(rho, v),
        fcfs_unbounded=fcfs_unbounded_condition(rho, v, fcfs_eps),
    )


# -- curves ------------------------------------------------------------------------


def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    """Root of an increasing ``f`` with ``f(lo) < 0 < f(hi)``."""
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# The timing condition gets steep as rho -> 1 (slope ~ rho/(1-rho)), so the
# roots are bisected well past 1e-10 to keep the residual under 1e-9.
ROOT_TOL = 1e-14


def timing_root(rho: float) -> float:
    return _bisect(lambda v: timing_lhs(rho, v) - 0.25, 0.0, 1.0, ROOT_TOL)


def band_root(rho: float) -> float:
    return _bisect(lambda v: band_lhs(rho, v) - 1.0, 0.0, 1.0, ROOT_TOL)


def cac_bound(rho: float) -> float:
    """Largest v where both CaC conditions hold (the binding one is tight there)."""
    return min(timing_root(rho), band_root(rho))


def cac_binding(rho: float) -> str:
    return "timing" if timing_root(rho) <= band_root(rho) else "band"


_BOUNDS: dict[str, Callable[[float], float]] = {
    "thm1": thm1_bound,
    "thm2": thm2_bound,
    "sweep": sweep_bound,
    "cac": cac_bound,
    "cap": cap_bound,
    "fcfs": fcfs_bound,
}

# rho below which the formula leaves (0, 1); curves are sampled above it.
_DOMAIN_LO = {"thm1": 1 / 3, "cap": 1 / 7}


def boundary_v(curve: str, rho: float) -> float:
    if curve not in _BOUNDS:
        raise ValueError(f"unknown curve {curve!r}; choose from {', '.join(CURVES)}")
    return _BOUNDS[curve](rho)


def curve_samples(curve: str, n: int, rho_min: float = 0.01, rho_max: float = 0.99) -> list[tuple[float, float]]:
    """``n`` points of a boundary curve, rho uniform over the range where v < 1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    boundary_v(curve, 0.5)  # validates the name
    lo = rho_min
    if curve in _DOMAIN_LO:
        lo = max(lo, _DOMAIN_LO[curve] + 1e-3)
    return [(float(r), boundary_v(curve, float(r))) for r in np.linspace(lo, rho_max, n)]


def cac_cap_crossover(lo: float = 0.15, hi: float = 0.5) -> float:
    """rho at which the CaC and CAP boundary curves meet."""
    return _bisect(lambda r: cac_bound(r) - cap_bound(r), lo, hi, tol=1e-13)


# -- CSV output --------------------------------------------------------------------

GRID_FIELDS = ("rho", "v", "no_c_competitive", "at_best_2", "sweep_1", "cac_2", "cap_4", "fcfs_unbounded", "best_guarantee")


def grid_rows(n: int) -> list[dict]:
    """Classification of an ``n x n`` grid of cell centres in (0, 1)^2."""
    pts = (np.arange(n) + 0.5) / n
    rows = []
    for rho in pts:
        for v in pts:
            d = classify(Environment(float(rho), float(v))).to_dict()
            rows.append({k: d[k] for k in GRID_FIELDS})
    return rows


def _write_csv(rows: list[dict], fields, path: Union[str, Path, None]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r[k] is None else r[k]) for k in fields})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_grid_csv(n: int, path=None) -> str:
    return _write_csv(grid_rows(n), GRID_FIELDS, path)


def write_curve_csv(curve: str, n: int, path=None) -> str:
    rows = [{"curve": curve, "rho": r, "v": v} for r, v in curve_samples(curve, n)]
    return _write_csv(rows, ("curve", "rho", "v"), path)
