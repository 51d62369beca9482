"""Command-line interface: ``perimdef <subcommand> ...``.

Exit codes: 0 ok, 2 usage, 3 regime violation, 4 instance too large for the oracle.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import adversary as adv
from .core import Environment, InputInstance, RegimeViolation
from .engine import BatchJob, JobError, run_batch, simulate
from .oracle import TooLarge, evaluate_ratio, optimal_offline
from .policies import POLICY_NAMES, make_policy
from .regimes import CURVES, cac_cap_crossover, classify, thm2_bound, write_curve_csv, write_grid_csv

EXIT_OK, EXIT_USAGE, EXIT_REGIME, EXIT_TOO_LARGE = 0, 2, 3, 4


class UsageError(ValueError):
    pass


# -- helpers -----------------------------------------------------------------------


def parse_gen(spec: str) -> tuple[str, dict]:
    """``"poisson:lambda=5,duration=20"`` -> ``("poisson", {"lambda": 5.0, "duration": 20.0})``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"bad generator parameter {item!r} (expected key=value)")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"generator parameter {key!r} is not a number: {val!r}") from None
    return name.strip(), params


def generate(spec: str, env: Environment, seed: Optional[int]) -> InputInstance:
    name, p = parse_gen(spec)
    try:
        if name == "poisson":
            cfg = adv.PoissonConfig(p.get("lambda", 5.0), p.get("duration", 20.0), int(seed or 0))
            return adv.gen_poisson(cfg)
        if name == "fcfs":
            return adv.gen_fcfs_killer(int(p.get("c", 3)), env, p.get("eps", 0.01))
        if name == "cap-lb":
            km = p.get("k_minus")
            return adv.gen_cap_lowerbound(int(p.get("k_plus", 2)), None if km is None else int(km), env)
        if name == "sweep-killer":
            return adv.gen_sweep_killer(int(p.get("n", 20)), env, p.get("eps", 1e-3))
        if name == "thm2":
            suite = adv.gen_thm2_suite(env, p.get("eps"))
            return suite[int(p.get("index", 0))]
    except (KeyError, IndexError) as exc:
        raise UsageError(f"bad generator spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown generator {name!r} (poisson, fcfs, cap-lb, sweep-killer, thm2)")


def load_instance(args, env: Environment) -> InputInstance:
    if args.instance and args.gen:
        raise UsageError("give either --instance or --gen, not both")
    if args.instance:
        return InputInstance.load(args.instance)
    if args.gen:
        return generate(args.gen, env, args.seed)
    raise UsageError("an instance is required (--instance FILE or --gen SPEC)")


def write_text(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def number(text: str) -> float:
    """Decimal or exact fraction such as ``2/3``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def float_list(text: str) -> list[float]:
    """Comma list ``0.1,0.2`` or range ``start:stop:step`` (stop inclusive)."""
    if ":" in text:
        a, b, s = (float(x) for x in text.split(":"))
        n = int(round((b - a) / s)) + 1
        return [round(a + i * s, 10) for i in range(n)]
    return [float(x) for x in text.split(",") if x]


# -- subcommands -------------------------------------------------------------------


def cmd_simulate(args) -> int:
    env = Environment(args.rho, args.v)
    inst = load_instance(args, env)
    policy = make_policy(args.policy, env, force=args.force)
    res = simulate(inst, policy, env)
    if args.format == "csv":
        text = res.summary_csv()
    else:
        text = res.to_json(indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(f"{res.policy}: captured={res.n_captured} lost={res.n_lost} fraction={res.capture_fraction:.4f}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    env = Environment(args.rho, args.v)
    inst = load_instance(args, env)
    sched = optimal_offline(inst, env, max_n=args.max_n)
    write_text(sched.to_json(indent=2) + "\n", args.out)
    if args.out:
        print(f"offline optimum: {sched.value} of {len(inst)}")
    return EXIT_OK


def cmd_ratio(args) -> int:
    env = Environment(args.rho, args.v)
    inst = load_instance(args, env)
    report, _, _ = evaluate_ratio(args.policy, inst, env, max_n=args.max_n, force=args.force)
    d = report.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(d, indent=2) + "\n")
    shown = "Unbounded" if report.unbounded else f"{report.ratio:.6g}"
    print(f"{args.policy}: n_alg={report.n_alg} n_opt={report.n_opt} ratio={shown}")
    return EXIT_OK


def cmd_adversary(args) -> int:
    env = Environment(args.rho, args.v)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    c = args.construction
    if c == "thm2":
        bound = thm2_bound(env.rho)
        if v_near(env.v, bound, args.boundary_tol) and env.v != bound:
            # A rounded command-line value such as 0.6667 means the boundary case.
            print(f"v={env.v} is within {args.boundary_tol:g} of (1-rho)/(1+rho); using v={bound!r}")
            env = Environment(env.rho, bound)
        suite = adv.gen_thm2_suite(env, args.eps)
        names = ["i1", "i2", "i3"] if len(suite) == 3 else ["i4", "i5"]
        for name, inst in zip(names, suite):
            inst.save(out / f"{name}.json")
            written.append(f"{name}.json")
    elif c == "fcfs":
        adv.gen_fcfs_killer(args.c, env, 0.01 if args.eps is None else args.eps).save(out / "fcfs_killer.json")
        written.append("fcfs_killer.json")
    elif c == "cap-lb":
        inst = adv.gen_cap_lowerbound(args.k_plus, args.k_minus, env)
        inst.save(out / "cap_lb.json")
        ref = adv.reference_offline_cap_lb(args.k_plus, args.k_minus, env)
        (out / "cap_lb_reference.json").write_text(ref.to_json(indent=2) + "\n")
        written += ["cap_lb.json", "cap_lb_reference.json"]
    elif c == "sweep-killer":
        adv.gen_sweep_killer(args.n, env, 1e-3 if args.eps is None else args.eps).save(out / "sweep_killer.json")
        written.append("sweep_killer.json")
    elif c == "poisson":
        adv.gen_poisson(adv.PoissonConfig(args.lam, args.duration, args.seed)).save(out / "poisson.json")
        written.append("poisson.json")
    elif c == "thm1":
        a = adv.gen_thm1_adaptive(args.c, env, args.stream_cap)
        res = simulate(InputInstance(), make_policy(args.policy, env, force=True), env, a)
        res.instance.save(out / "thm1_realized.json")
        (out / "thm1_result.json").write_text(res.to_json(indent=2) + "\n")
        written += ["thm1_realized.json", "thm1_result.json"]
        print(f"{args.policy}: captured={res.n_captured} of {len(res.instance)} realized intruders")
    print("wrote " + ", ".join(str(out / w) for w in written))
    return EXIT_OK


def v_near(v: float, bound: float, tol: float) -> bool:
    return abs(v - bound) <= tol


def cmd_regimes(args) -> int:
    if args.rho is not None or args.v is not None:
        if args.rho is None or args.v is None:
            raise UsageError("classification needs both --rho and --v")
        print(json.dumps(classify(Environment(args.rho, args.v)).to_dict(), indent=2))
        return EXIT_OK
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_grid_csv(args.grid, out / "grid.csv")
    for curve in CURVES:
        write_curve_csv(curve, args.curve_points, out / f"curve_{curve}.csv")
    print(f"wrote grid.csv ({args.grid}x{args.grid}) and {len(CURVES)} curve files to {out}")
    print(f"cac/cap crossover at rho = {cac_cap_crossover():.10f}")
    return EXIT_OK


EXPERIMENT_FIELDS = ("policy", "v", "mean_capture_fraction", "std_capture_fraction", "runs", "errors", "forced")


def run_experiment(
    lam: float,
    rho: float,
    v_grid: list[float],
    runs: int,
    duration: float,
    seed: int,
    policies: list[str],
    parallelism: int = 1,
) -> list[dict]:
    """Mean and std of capture fraction per (policy, v) over ``runs`` Poisson instances.

    Run ``r`` uses seed ``seed + r`` for every cell, so all cells share the same
    arrival streams. Policies outside their proven regime are run in forced mode.
    """
    if runs < 1:
        raise UsageError("runs must be at least 1")
    if any(not 0 < v < 1 for v in v_grid):
        raise UsageError("v values must lie in (0, 1)")
    for p in policies:
        if p not in POLICY_NAMES:
            raise UsageError(f"unknown policy {p!r}")
    jobs = []
    for p in policies:
        for v in v_grid:
            env = Environment(rho, v)
            for r in range(runs):
                jobs.append(BatchJob(adv.PoissonConfig(lam, duration, seed + r), p, env, seed=seed + r, force=True))
    results = run_batch(jobs, parallelism=parallelism)
    rows = []
    k = 0
    for p in policies:
        for v in v_grid:
            cell = results[k : k + runs]
            k += runs
            ok = [r for r in cell if not isinstance(r, JobError)]
            fr = np.array([r.capture_fraction for r in ok])
            rows.append(
                {
                    "policy": p,
                    "v": v,
                    "mean_capture_fraction": float(fr.mean()) if len(fr) else float("nan"),
                    "std_capture_fraction": float(fr.std()) if len(fr) else float("nan"),
                    "runs": len(ok),
                    "errors": len(cell) - len(ok),
                    "forced": bool(ok and ok[0].diagnostics.get("forced")),
                }
            )
    return rows


def experiment_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=EXPERIMENT_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{r[k]:.6f}" if isinstance(r[k], float) and k != "v" else r[k]) for k in EXPERIMENT_FIELDS})
    return buf.getvalue()


def cmd_experiment(args) -> int:
    rows = run_experiment(
        args.lam,
        args.rho,
        float_list(args.v_grid),
        args.runs,
        args.duration,
        args.seed,
        [p for p in args.policies.split(",") if p],
        parallelism=args.parallelism,
    )
    write_text(experiment_csv(rows), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="perimdef", description="Single-vehicle perimeter defense on [-1, 1].")
    sub = ap.add_subparsers(dest="command", required=True)

    def env_flags(p, required=True):
        p.add_argument("--rho", type=number, required=required)
        p.add_argument("--v", type=number, required=required)

    def instance_flags(p):
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--gen", help="generator spec, e.g. poisson:lambda=5,duration=20")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="run one policy on one instance")
    env_flags(p)
    instance_flags(p)
    p.add_argument("--policy", choices=POLICY_NAMES, required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--force", action="store_true", help="run CaC/CAP outside their regime")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact offline optimum")
    env_flags(p)
    instance_flags(p)
    p.add_argument("--max-n", type=int, default=15)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("ratio", help="online captures vs offline optimum")
    env_flags(p)
    instance_flags(p)
    p.add_argument("--policy", choices=POLICY_NAMES, required=True)
    p.add_argument("--max-n", type=int, default=15)
    p.add_argument("--force", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("adversary", help="write lower-bound instances")
    env_flags(p)
    p.add_argument("--construction", choices=("thm1", "thm2", "fcfs", "cap-lb", "sweep-killer", "poisson"), required=True)
    p.add_argument("--c", type=int, default=3)
    p.add_argument("--eps", type=float)
    p.add_argument("--k-plus", type=int, default=2)
    p.add_argument("--k-minus", type=int)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--lambda", dest="lam", type=float, default=5.0)
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=POLICY_NAMES, default="sweep", help="opponent for the adaptive construction")
    p.add_argument("--stream-cap", type=int, default=12)
    p.add_argument("--boundary-tol", type=float, default=1e-4, help="snap v to the thm2 boundary within this distance")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("regimes", help="classify one environment or write regime curves")
    env_flags(p, required=False)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--curve-points", type=int, default=200)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_regimes)

    p = sub.add_parser("experiment", help="capture fraction vs v on Poisson arrivals")
    p.add_argument("--lambda", dest="lam", type=float, default=5.0)
    p.add_argument("--rho", type=float, default=0.2)
    p.add_argument("--v-grid", default="0.05:0.6:0.05")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--policies", default="sweep,cac,cap")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except RegimeViolation as exc:
        print(f"regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except TooLarge as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
