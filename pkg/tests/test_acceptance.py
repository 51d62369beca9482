"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that the conftest hook prints in the
terminal summary; running this file as a script prints the same lines.
"""
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE, random_instance

from perimdef.adversary import (
    PoissonConfig,
    gen_cap_lowerbound,
    gen_fcfs_killer,
    gen_poisson,
    gen_sweep_killer,
    gen_thm1_adaptive,
    gen_thm2_suite,
    reference_offline_cap_lb,
)
from perimdef.cli import run_experiment
from perimdef.core import Environment, InputInstance
from perimdef.engine import simulate
from perimdef.oracle import (
    InfeasibleProfile,
    RatioReport,
    competitive_ratio,
    exhaustive_offline,
    normalize_extreme_speed,
    optimal_offline,
)
from perimdef.policies import FollowTrajectory, audit_decisions, audit_epochs, make_policy
from perimdef.regimes import (
    band_lhs,
    boundary_v,
    cac_binding,
    cac_cap_crossover,
    cac_condition_band,
    cac_condition_timing,
    classify,
    curve_samples,
    timing_lhs,
)


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (ok, detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_sweep_completeness():
    env = Environment(0.2, 0.25)
    t0 = time.perf_counter()
    fracs = [simulate(gen_poisson(PoissonConfig(5, 20, s)), make_policy("sweep", env), env).capture_fraction for s in range(1, 51)]
    dt = time.perf_counter() - t0
    ok = all(f == 1.0 for f in fracs) and dt < 5.0
    record(1, ok, f"min capture fraction {min(fracs)} over 50 runs in {dt:.2f}s")


def test_criterion_02_sweep_failure():
    env = Environment(0.2, 0.3)
    inst = gen_sweep_killer(20, env, eps=1e-3)
    res = simulate(inst, make_policy("sweep", env), env)
    record(2, res.n_captured == 0 and len(inst) == 20, f"sweep captured {res.n_captured} of {len(inst)}")


def test_criterion_03_cac_half_capture():
    env = Environment(0.2, 0.25)
    rng = np.random.default_rng(3)
    short = epochs_bad = safety_bad = startup_bad = 0
    for _ in range(1000):
        inst = random_instance(rng, n_max=30)
        res = simulate(inst, make_policy("cac", env), env)
        audit = audit_epochs(res.diagnostics)
        short += res.n_captured < math.ceil(len(inst) / 2)
        epochs_bad += bool(audit["half_capture"])
        safety_bad += bool(audit["safety"])
        startup_bad += bool(audit["startup_lost"])
    ok = short == epochs_bad == safety_bad == startup_bad == 0
    record(
        3,
        ok,
        f"runs below ceil(n/2): {short}; runs with an epoch captured < charged: {epochs_bad}; "
        f"unexpected losses: {safety_bad + startup_bad}",
    )


def test_criterion_04_cap_quarter_capture():
    rho = 0.2
    rng = np.random.default_rng(4)
    below = pingpong = pattern = 0
    for v in (0.25, 0.5, 2 / 3):
        env = Environment(rho, v)
        for _ in range(1000):
            # Window 0 (before the first arrival) and every window after the last
            # arrival are empty, which supplies the dummy boundary intervals.
            inst = random_instance(rng, n_max=30, rho=rho)
            res = simulate(inst, make_policy("cap", env), env)
            audit = audit_decisions(res)
            below += res.n_captured < len(inst) / 4
            pingpong += bool(audit["pingpong"])
            pattern += bool(audit["pattern"])
    ok = below == pingpong == pattern == 0
    record(4, ok, f"3000 runs: below n/4 {below}, ping-pong breaks {pingpong}, window-pattern breaks {pattern}")


def test_criterion_05_cap_lower_bound():
    env = Environment(0.2, 0.25)
    rho = env.rho
    ratios, problems = {}, []
    for kp in (2, 4, 8):
        inst = gen_cap_lowerbound(kp, 3 * kp, env)
        ref = reference_offline_cap_lb(kp, 3 * kp, env)
        if ref.value != len(inst):
            problems.append(f"reference captured {ref.value}/{len(inst)} at k_plus={kp}")
        res = simulate(inst, make_policy("cap", env), env)
        # Steady state: intruders arriving in [6 rho, 6 rho k_plus).
        mid = {it.id for it in inst if 6 * rho - 1e-9 <= it.arrival_time < 6 * rho * kp - 1e-9}
        got = len(mid & res.captured_ids)
        lost = len(mid) - got
        if lost != 3 * got:
            problems.append(f"steady capture:loss {got}:{lost} at k_plus={kp}")
        ratios[kp] = ref.value / res.n_captured
        head = inst.truncated(14)
        dp = optimal_offline(head, env).value
        ref_head = reference_offline_cap_lb(kp, 3 * kp, env, inst=head).value
        if dp != ref_head:
            problems.append(f"DP {dp} vs reference {ref_head} on 14-intruder slice at k_plus={kp}")
    if ratios[2] < 3:
        problems.append(f"ratio {ratios[2]:.3f} < 3 at k_plus=2")
    if ratios[8] < 3.5:
        problems.append(f"ratio {ratios[8]:.3f} < 3.5 at k_plus=8")
    if not ratios[2] < ratios[4] < ratios[8]:
        problems.append("ratio not increasing in k_plus")
    shown = ", ".join(f"k_plus={k}: {r:.3f}" for k, r in ratios.items())
    record(5, not problems, f"ratios {shown}" + ("; " + "; ".join(problems) if problems else ""))


def test_criterion_06_oracle_exactness():
    rng = np.random.default_rng(6)
    grid = [(r, v) for r in (0.1, 0.2, 0.3, 0.5, 0.7, 0.9) for v in (0.1, 0.25, 0.5, 0.8, 0.95)]
    t0 = time.perf_counter()
    mismatch = replay_bad = 0
    for k in range(500):
        rho, v = grid[k % len(grid)]
        env = Environment(rho, v)
        inst = random_instance(rng, n_max=8, horizon=4.0, rho=rho)
        sched = optimal_offline(inst, env)
        mismatch += sched.value != exhaustive_offline(inst, env)
        res = simulate(inst, FollowTrajectory(env, sched.trajectory()), env)
        replay_bad += res.n_captured != sched.value
    dt = time.perf_counter() - t0
    ok = mismatch == 0 and replay_bad == 0 and dt < 60
    record(6, ok, f"500 instances: DP/brute-force mismatches {mismatch}, replay mismatches {replay_bad}, {dt:.1f}s")


def test_criterion_07_two_intruder_suite():
    env = Environment(0.2, 2 / 3)
    suite = gen_thm2_suite(env)
    values = [optimal_offline(i, env).value for i in suite]
    worst = {}
    for p in ("sweep", "fcfs", "cac", "cap"):
        worst[p] = min(simulate(i, make_policy(p, env, force=True), env).n_captured for i in suite)
    ok = len(suite) == 3 and values == [2, 2, 2] and all(w <= 1 for w in worst.values())
    record(7, ok, f"oracle values {values}; worst captures per policy {worst}")


def test_criterion_08_stream_burst_unbounded():
    env = Environment(0.6, 0.5)
    rows, ok = [], True
    for p in ("sweep", "fcfs", "cac", "cap"):
        adv = gen_thm1_adaptive(10, env)
        res = simulate(InputInstance(), make_policy(p, env, force=True), env, adv)
        n_opt = optimal_offline(res.instance, env).value
        rep = RatioReport(res.n_captured, n_opt)
        good = res.n_captured <= 1 and n_opt >= 11 and (rep.unbounded or rep.ratio >= 11)
        ok &= good
        rows.append(f"{p}: {res.n_captured}/{n_opt} ratio {'Unbounded' if rep.unbounded else round(rep.ratio, 3)}")
    record(8, ok, "; ".join(rows))


def test_criterion_09_fcfs_killer():
    env = Environment(0.5, 0.8)
    inst = gen_fcfs_killer(3, env, eps=0.01)
    rep = competitive_ratio("fcfs", inst, env)
    ok = rep.n_alg == 1 and rep.n_opt >= 4 and rep.ratio >= 4
    record(9, ok, f"fcfs {rep.n_alg}, oracle {rep.n_opt}, ratio {rep.ratio}")


def test_criterion_10_capture_fraction_experiment():
    v_grid = [round(0.05 * k, 2) for k in range(1, 13)]
    t0 = time.perf_counter()
    rows = run_experiment(5.0, 0.2, v_grid, 50, 20.0, 1, ["sweep", "cac", "cap"], parallelism=1)
    dt = time.perf_counter() - t0
    mean = {(r["policy"], r["v"]): r["mean_capture_fraction"] for r in rows}
    problems = []
    cap_bad = [v for v in v_grid if not 0.4 <= mean[("cap", v)] <= 0.6]
    if cap_bad:
        problems.append(f"CAP mean outside [0.4, 0.6] at v={cap_bad}")
    cac_bad = [v for v in v_grid if classify(Environment(0.2, v)).cac_2 and mean[("cac", v)] < 0.5]
    if cac_bad:
        problems.append(f"CaC mean < 0.5 at v={cac_bad}")
    upper = v_grid[len(v_grid) // 2 :]
    gaps = [abs(mean[("sweep", v)] - mean[("cac", v)]) for v in upper]
    if any(b > a for a, b in zip(gaps, gaps[1:])):
        problems.append("|sweep - cac| gap over v=" + ",".join(map(str, upper)) + " is " + ",".join(f"{g:.3f}" for g in gaps))
    if dt >= 120:
        problems.append(f"runtime {dt:.1f}s")
    if sum(r["errors"] for r in rows):
        problems.append("failed jobs")
    record(10, not problems, f"{len(rows)} cells in {dt:.1f}s" + ("; " + "; ".join(problems) if problems else ""))


def test_criterion_11_extreme_speed_transform():
    rng = np.random.default_rng(11)
    missed = 0
    for k in range(100):
        rho = [0.2, 0.4, 0.6][k % 3]
        v = [0.25, 0.5, 0.8][(k // 3) % 3]
        env = Environment(rho, v)
        inst = random_instance(rng, n_max=8, horizon=5.0, rho=rho)
        sched = optimal_offline(inst, env)
        traj = normalize_extreme_speed(None, sched.profile())
        res = simulate(inst, FollowTrajectory(env, traj), env)
        missed += not {c[0] for c in sched.captures} <= res.captured_ids
    wrong_raise = 0
    for _ in range(500):
        m = int(rng.integers(1, 6))
        xs = np.concatenate([[0.0], rng.uniform(-1, 1, m)])
        ks = np.concatenate([[0.0], np.cumsum(rng.uniform(0, 2, m))])
        profile = list(zip(xs.tolist(), ks.tolist()))
        infeasible = any(abs(x1 - x0) > k1 - k0 + 1e-9 for (x0, k0), (x1, k1) in zip(profile, profile[1:]))
        try:
            normalize_extreme_speed(None, profile)
            raised = False
        except InfeasibleProfile:
            raised = True
        wrong_raise += raised != infeasible
    ok = missed == 0 and wrong_raise == 0
    record(11, ok, f"100 witnesses: {missed} with missed captures; 500 random profiles: {wrong_raise} wrong InfeasibleProfile outcomes")


def test_criterion_12_regime_curves():
    problems = []
    for curve, want in (("sweep", 0.25), ("cap", 2 / 3), ("thm2", 2 / 3)):
        got = boundary_v(curve, 0.2)
        if abs(got - want) > 1e-12:
            problems.append(f"{curve}(0.2) = {got!r}")
    for rho, v in curve_samples("cac", 200):
        t, b = timing_lhs(rho, v), band_lhs(rho, v)
        if cac_binding(rho) == "timing":
            tight, other = abs(t - 0.25) <= 1e-9, cac_condition_band(rho, v)
        else:
            tight, other = abs(b - 1.0) <= 1e-9, cac_condition_timing(rho, v)
        if not (tight and other):
            problems.append(f"cac point rho={rho:.4f} not on its binding condition")
            break
    bad_order = []
    for rho, v_cac in curve_samples("cac", 200):
        if rho > 0.3:
            continue
        v_cap = min(1.0, boundary_v("cap", rho))
        v_sweep = boundary_v("sweep", rho)
        if not v_cap >= v_cac >= v_sweep:
            bad_order.append(round(rho, 4))
    if bad_order:
        problems.append(f"cap >= cac >= sweep fails at rho={bad_order} (curves cross at rho={cac_cap_crossover():.6f})")
    record(12, not problems, "boundaries and cac curve checked" + ("; " + "; ".join(problems) if problems else ""))


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
