"""Acceptance criteria. Each test prints one PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest;
under pytest the lines are collected and repeated in the terminal summary.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracle  # noqa: E402
from helpers import concrete, p1, uvc_chain, uvc_files, uvc_queries  # noqa: E402
from tickmc.composer import check_stochastic  # noqa: E402
from tickmc.dsl import load_model, pretty_print  # noqa: E402
from tickmc.engine import eval_query  # noqa: E402
from tickmc.simulator import estimate_points  # noqa: E402
from tickmc.uvc import bundled_text, risk_reduction_and_sil  # noqa: E402
from tickmc.uvc.case import AWARENESS_RISK_ORDER, ODS_QUALITY_ORDER  # noqa: E402

# tolerances
ORACLE_ABS = 1e-12
ORACLE_MAX_N = 6
ORACLE_BUDGET_S = 10
SIM_SAMPLES = 10**6
SIM_TICKS = (3, 10, 20)
SIM_SIGMAS = 4
SIM_BUDGET_S = 120
HAND_T, HAND_VALUE, HAND_ABS = 3, 0.091, 1e-12
DIRECTION_FROM_T = 3
DIRECTION_BUDGET_S = 30
HORIZON = 30
RRF_NORMAL_RANGE = (3.0, 300.0)
RRF_STEP = 10.0  # high ODS should add about one more decade over normal
RRF_STEP_TOL = 3.0  # factor each way
P2_HORIZONS = (5, 10, 20, 30)
ROW_SUM_TOL = 1e-9
SIM_SEED = 42

SCENARIOS = [f"{a}_{o}" for a in AWARENESS_RISK_ORDER for o in ODS_QUALITY_ORDER]


RESULT_LINES: list[str] = []


def report(ok: bool, name: str, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULT_LINES.append(line)
    print(line)
    assert ok, line


def cumulative_curves():
    out = {}
    ts = list(range(HORIZON + 1))
    for name in SCENARIOS:
        out[name] = dict(eval_query(uvc_chain(name, HORIZON), p1("cumulative"), ts).points)
    return out


# ---------------------------------------------------------------------------


def test_oracle_exact():
    start = time.perf_counter()
    worst = 0.0
    checked = 0
    atoms = p1().predicate
    for n in range(ORACLE_MAX_N + 1):
        for name in SCENARIOS:
            cn = concrete(name, n)
            d = uvc_chain(name, n)
            paths = oracle.enumerate_paths(cn, n)
            for t in range(n + 1):
                want = float(sum(w for w, trail in paths if oracle.matches(trail[t], atoms)))
                got = eval_query(d, p1(), [t]).value
                worst = max(worst, abs(got - want))
                checked += 1
    elapsed = time.perf_counter() - start
    ok = worst <= ORACLE_ABS and elapsed < ORACLE_BUDGET_S
    report(ok, "oracle equivalence (exact)",
           f"{checked} (scenario, N<={ORACLE_MAX_N}, t) points, max |engine-paths| = "
           f"{worst:.2e} (tol {ORACLE_ABS:g}), {elapsed:.1f}s (budget {ORACLE_BUDGET_S}s)")


def test_oracle_statistical():
    start = time.perf_counter()
    worst_name, worst_z, failures = None, 0.0, []
    for name in SCENARIOS:
        d = uvc_chain(name, HORIZON)
        exact = dict(eval_query(d, p1(), list(SIM_TICKS)).points)
        ests = estimate_points(concrete(name, HORIZON), p1(), list(SIM_TICKS), SIM_SAMPLES,
                               seed=SIM_SEED)
        for est in ests:
            p = exact[est.t]
            # when no run (or every run) hits, the sample error is 0; fall back to
            # the binomial error at the exact value
            sigma = est.std_err if 0 < est.successes < est.samples else \
                math.sqrt(p * (1 - p) / est.samples)
            diff = abs(est.p_hat - p)
            z = diff / sigma if sigma > 0 else (0.0 if diff == 0 else math.inf)
            if z > worst_z:
                worst_name, worst_z = f"{name}@t={est.t}", z
            if z > SIM_SIGMAS:
                failures.append(f"{name}@t={est.t}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < SIM_BUDGET_S
    report(ok, "oracle equivalence (statistical)",
           f"{len(SCENARIOS) * len(SIM_TICKS)} points at {SIM_SAMPLES:.0e} samples, worst "
           f"{worst_z:.2f} sigma ({worst_name}), limit {SIM_SIGMAS} sigma, "
           f"{elapsed:.1f}s (budget {SIM_BUDGET_S}s)"
           + (f", outside: {failures}" if failures else ""))


def test_hand_value():
    value = eval_query(uvc_chain("deliberate_failure", HORIZON), p1(), [HAND_T]).value
    by_paths = float(oracle.p_exact_by_paths(concrete("deliberate_failure", HAND_T),
                                             p1().predicate, HAND_T))
    ok = abs(value - HAND_VALUE) <= HAND_ABS and abs(by_paths - HAND_VALUE) <= HAND_ABS
    report(ok, "hand value",
           f"deliberate/failure exact P1(t={HAND_T}) = {value!r}, path enumeration "
           f"{by_paths!r}, expected {HAND_VALUE} +- {HAND_ABS:g}")


def test_directional():
    start = time.perf_counter()
    curves = cumulative_curves()
    ods_bad, aw_bad = [], []
    for t in range(DIRECTION_FROM_T, HORIZON + 1):
        for level in AWARENESS_RISK_ORDER:
            vals = [curves[f"{level}_{o}"][t] for o in ODS_QUALITY_ORDER]
            if not vals[0] >= vals[1] >= vals[2]:
                ods_bad.append((level, t))
        for ods in ODS_QUALITY_ORDER:
            vals = [curves[f"{a}_{ods}"][t] for a in AWARENESS_RISK_ORDER]
            if not vals[0] >= vals[1] >= vals[2]:
                aw_bad.append((ods, t))
    elapsed = time.perf_counter() - start
    ok = not ods_bad and not aw_bad and elapsed < DIRECTION_BUDGET_S
    detail = (f"failure>=normal>=high violated at {len(ods_bad)} (level, t) points; "
              f"deliberate>=lessAware>=aware violated at {len(aw_bad)} (ods, t) points")
    if aw_bad:
        profiles = sorted({o for o, _ in aw_bad})
        first = min(t for _, t in aw_bad)
        t = HORIZON
        detail += (f" (profiles {profiles}, from t={first}; at t={t} high ODS: " + ", ".join(
            f"{a}={curves[f'{a}_highPerformance'][t]:.2e}" for a in AWARENESS_RISK_ORDER) + ")")
    report(ok, "directional reproduction", detail + f", {elapsed:.1f}s")


def test_order_of_magnitude():
    curves = cumulative_curves()
    fail_p = curves["deliberate_failure"][HORIZON]
    normal = risk_reduction_and_sil(fail_p, curves["deliberate_normal"][HORIZON])
    high = risk_reduction_and_sil(fail_p, curves["deliberate_highPerformance"][HORIZON])
    step = high.rrf / normal.rrf
    lo, hi = RRF_STEP / RRF_STEP_TOL, RRF_STEP * RRF_STEP_TOL
    checks = {
        "P1(failure) > 0.1": fail_p > 0.1,
        "RRF(normal) in [3, 300]": RRF_NORMAL_RANGE[0] <= normal.rrf <= RRF_NORMAL_RANGE[1],
        f"RRF(high)/RRF(normal) in [{lo:.2f}, {hi:g}]": lo <= step <= hi,
    }
    detail = (f"t={HORIZON} cumulative, deliberate: P1(failure)={fail_p:.4f}, "
              f"RRF(normal)={normal.rrf:.3g} ({normal.band}), RRF(high)={high.rrf:.4g} "
              f"({high.band}), ratio={step:.3g}; "
              + "; ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in checks.items())
              + f" (one-sided RRF(high) >= RRF(normal): {'ok' if step >= 1 else 'NO'})")
    report(all(checks.values()), "order-of-magnitude reproduction", detail)


def test_p2_deadlock_free():
    p2 = uvc_queries().query("P2")
    bad = [(name, n) for n in P2_HORIZONS for name in SCENARIOS
           if not eval_query(uvc_chain(name, n), p2).deadlock_free]
    report(not bad, "P2 deadlock freedom",
           f"{len(SCENARIOS) * len(P2_HORIZONS)} (scenario, N) chains, violations: {bad or 0}")


def test_structural():
    problems = []
    chains = 0
    for n in (0, 1, 5, HORIZON):
        for name in SCENARIOS:
            d = uvc_chain(name, n)
            chains += 1
            if np.any(np.abs(d.row_sums() - 1.0) > ROW_SUM_TOL) or check_stochastic(d):
                problems.append(f"row sums {name}/N={n}")
            coo = d.matrix.tocoo()
            ticks = d.ticks
            live = ticks[coo.row] < d.horizon
            if not (np.all(ticks[coo.col][live] == ticks[coo.row][live] + 1)
                    and np.all(coo.row[~live] == coo.col[~live])):
                problems.append(f"tick layers {name}/N={n}")
    text = bundled_text("uvc.psm")
    net = load_model(text)
    if load_model(pretty_print(net)) != net:
        problems.append("DSL round trip")
    curves = cumulative_curves()
    for name, c in curves.items():
        pts = [c[t] for t in range(HORIZON + 1)]
        if any(b < a for a, b in zip(pts, pts[1:])):
            problems.append(f"monotonicity {name}")
        if eval_query(uvc_chain(name, HORIZON), p1(), [0]).value != 0.0:
            problems.append(f"P1(t=0) {name}")
    report(not problems, "structural suite",
           f"{chains} chains (row sums within {ROW_SUM_TOL:g}, tick layers), DSL round trip, "
           f"cumulative monotonicity, P1(t=0)=0; problems: {problems or 'none'}")


def _cli(threads: int, *argv) -> str:
    env = dict(os.environ, TICKMC_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "tickmc.cli", *map(str, argv)],
                          capture_output=True, text=True, env=env, check=True).stdout


def test_determinism():
    f = uvc_files()
    sweep = ("sweep", f["psm"], "--props", f["pprop"], "--mode", "cumulative",
             "--t-range", "1..30")
    sim = ("simulate", f["psm"], "--props", f["pprop"], "--config", "deliberate_failure",
           "--t-range", "1..10", "--samples", 200_000, "--seed", SIM_SEED)
    sweeps = {_cli(k, *sweep) for k in (1, 2, 4)}
    sims = {_cli(k, *sim) for k in (1, 2, 4)}
    ok = len(sweeps) == 1 and len(sims) == 1
    report(ok, "determinism",
           f"sweep payloads distinct across 1/2/4 threads: {len(sweeps)}, simulate --seed "
           f"{SIM_SEED}: {len(sims)}")


if __name__ == "__main__":
    failed = 0
    for fn in (test_oracle_exact, test_oracle_statistical, test_hand_value, test_directional,
               test_order_of_magnitude, test_p2_deadlock_free, test_structural,
               test_determinism):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
