"""Acceptance suite: one check per numbered criterion, each printing PASS or FAIL.

Run under pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``. Each ``criterion_N`` returns
``(passed, detail)`` and the pytest wrappers assert on ``passed``.
"""
from __future__ import annotations

import functools
import math
import time
import warnings

import numpy as np
import pytest

from caradory.geometry import VertexSet, diameter, lp_norm
from caradory.instances import (
    ball_instance,
    exact_small_oracle,
    gen_random_polytope,
    hadamard_instance,
    regular_simplex_instance,
)
from caradory.objectives import (
    ObjectiveSpec,
    dual_exponent,
    lp_sq_gradient,
    lp_sq_value,
    lp_value,
    moreau_gradient,
    moreau_value,
    prox_lp,
)
from caradory.solvers import SolverConfig, projection_solve, smoothed_fw_solve, solve

RESULTS: dict[int, tuple[bool, str]] = {}

SMOOTH_PS = (2.0, 3.0, 7.0)
NONSMOOTH_PS = (1.0, 1.5, math.inf)


def _record(number, outcome):
    passed, detail = outcome
    RESULTS[number] = (bool(passed), detail)
    return passed, detail


def summary_lines():
    return [
        f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}" for k, (ok, detail) in sorted(RESULTS.items())
    ]


def _g2(n, p):
    # written out independently of the library helper
    return 1.0 if math.isinf(p) else float(n) ** (1.0 / p - 0.5)


# ---------------------------------------------------------------------------
# 1-3: plain FW on dense-target random polytopes


@functools.lru_cache(maxsize=None)
def _dense_fw_runs():
    """FW runs for 20 seeds x p x {open, closed} to accuracy 0.01 D_p, plus wall time."""
    runs = []
    t0 = time.perf_counter()
    for seed in range(20):
        for p in SMOOTH_PS:
            inst = gen_random_polytope(100, 101, 101, seed, p=p)
            D = diameter(inst.feasible_set, p)
            for step in ("open", "closed"):
                cfg = SolverConfig("fw", step, epsilon=0.01 * D, max_iter=10**6)
                _, trace = solve(inst.feasible_set, inst.objective, cfg)
                runs.append((seed, p, step, D, trace))
    return runs, time.perf_counter() - t0


def criterion_1():
    runs, elapsed = _dense_fw_runs()
    worst, violations = 0.0, 0
    for _, p, step, D, trace in runs:
        c = 2.0 if step == "open" else 4.0
        for r in trace.records[1:]:
            bound = c * (p - 1.0) * D**2 / (r.t + 2.0)
            worst = max(worst, r.f_value / bound)
            violations += r.f_value > bound
    converged = all(tr.status.value == "Converged" for *_, tr in runs)
    ok = violations == 0 and elapsed < 30.0 and converged
    return ok, (
        f"{len(runs)} runs, max f/envelope = {worst:.3f}, violations = {violations}, "
        f"all converged = {converged}, runtime {elapsed:.1f}s (< 30s)"
    )


def criterion_2():
    runs, _ = _dense_fw_runs()
    worst, violations = 0.0, 0
    for _, p, _, D, trace in runs:
        f1 = trace.records[1].f_value
        bound = 0.5 * (p - 1.0) * D**2
        worst = max(worst, f1 / bound)
        violations += f1 > bound
    return violations == 0, f"{len(runs)} runs, max f(x_1)/bound = {worst:.3f}, violations = {violations}"


def criterion_3():
    runs, _ = _dense_fw_runs()
    worst, violations, missing = 0.0, 0, 0
    for _, p, _, D, trace in runs:
        eps = 0.05 * D
        hit = trace.first_reaching(0.5 * eps**2)
        if hit is None:
            missing += 1
            continue
        bound = 8.0 * (p - 1.0) * D**2 / eps**2 + 1.0
        worst = max(worst, hit.cardinality / bound)
        violations += hit.cardinality > bound
    ok = violations == 0 and missing == 0
    return ok, f"{len(runs)} runs, max card/bound = {worst:.4f}, violations = {violations}, unreached = {missing}"


# ---------------------------------------------------------------------------
# 4: cardinality against ln(1/eps) at the barycenter of a regular simplex


def criterion_4():
    inst = regular_simplex_instance(100, 2.0)
    levels = np.logspace(-2, -4, 5)
    cards = []
    for eps in levels:
        combo, trace = solve(inst.feasible_set, inst.objective, SolverConfig("fw", "closed", epsilon=eps, max_iter=10**6))
        cards.append(combo.cardinality)
    x = np.log(1.0 / levels)
    y = np.array(cards, dtype=float)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        # a constant response has no explained variance: R^2 is undefined, counted as failure
        r2 = float("nan")
    else:
        slope, intercept = np.polyfit(x, y, 1)
        r2 = 1.0 - float(np.sum((y - (slope * x + intercept)) ** 2)) / ss_tot
    ok = bool(r2 >= 0.9)
    return ok, f"n=100, eps={[float(f'{e:.3g}') for e in levels]}, cardinalities={cards}, R^2 = {r2:.3f} (need >= 0.9)"


# ---------------------------------------------------------------------------
# 5-6: nonsmooth norms


def criterion_5():
    worst, violations, runs = 0.0, 0, 0
    for seed in range(5):
        inst = gen_random_polytope(50, 60, 60, seed)
        D2 = diameter(inst.feasible_set, 2.0)
        for p in NONSMOOTH_PS:
            spec = ObjectiveSpec(inst.objective.target, p)
            cfg = SolverConfig("hcgs", epsilon=1e-3 * D2, max_iter=3000)
            combo, trace = solve(inst.feasible_set, spec, cfg)
            G = _g2(50, p)
            if not math.isclose(trace.meta["G_2"], G, rel_tol=1e-12):
                return False, f"solver used G_2={trace.meta['G_2']}, expected {G}"
            for r in trace.records:
                if r.t < 2:
                    continue
                bound = 4.0 * G * D2 / math.sqrt(r.t + 1.0)
                worst = max(worst, r.f_value / bound)
                violations += r.f_value > bound
            runs += 1
    return violations == 0, f"{runs} runs, max lp_value/envelope = {worst:.3f}, violations = {violations}"


def criterion_6():
    worst, violations, runs = 0.0, 0, 0
    bad_setup = []
    for seed in range(3):
        inst = gen_random_polytope(50, 60, 60, seed)
        D2 = diameter(inst.feasible_set, 2.0)
        for p in NONSMOOTH_PS:
            spec = ObjectiveSpec(inst.objective.target, p)
            G = _g2(50, p)
            for frac in (0.2, 0.1):
                eps = frac * D2
                cfg = SolverConfig("smoothed-fw", epsilon=eps, max_iter=10**9)
                # f_min=None: no early stop, so the terminal iterate is the one after the full budget
                combo, trace = smoothed_fw_solve(inst.feasible_set, spec, cfg, f_min=None)
                budget = math.floor(4.0 * G**2 * D2**2 / eps**2)
                beta = eps / G**2
                if trace.final.t != budget or any(
                    r.beta is not None and not math.isclose(r.beta, beta, rel_tol=1e-12) for r in trace.records
                ):
                    bad_setup.append((seed, p, frac))
                err = lp_value(combo.point, spec)
                worst = max(worst, err / eps)
                violations += err > eps
                runs += 1
    ok = violations == 0 and not bad_setup
    return ok, f"{runs} runs, max terminal gap/eps = {worst:.3f}, violations = {violations}, setup mismatches = {bad_setup}"


# ---------------------------------------------------------------------------
# 7: Hadamard lower bound


def criterion_7():
    n = 64
    violations, checked = 0, 0
    details = []
    fcfw_ok = True
    for p in (4.0, 13.0):
        inst = hadamard_instance(n, p)
        for algo in ("fw", "afw", "fcfw"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                _, trace = solve(inst.feasible_set, inst.objective, SolverConfig(algo, epsilon=0.05, max_iter=200_000))
            for r in trace.records:
                eps_t = math.sqrt(2.0 * max(r.f_value, 0.0))
                if eps_t == 0.0:
                    continue
                checked += 1
                violations += r.cardinality < 1.0 / (eps_t**2 + 1.0 / n) - 1e-9
            if algo == "fcfw":
                hit = trace.first_reaching(0.5 * 0.05**2)
                bound = 1.0 / (0.05**2 + 1.0 / n)
                card = None if hit is None else hit.cardinality
                fcfw_ok &= card is not None and card <= 2.0 * bound
                details.append(f"p={p:g}: fcfw card {card} vs bound {bound:.2f}")
    ok = violations == 0 and fcfw_ok
    return ok, f"{checked} iterates checked, violations = {violations}; " + "; ".join(details)


# ---------------------------------------------------------------------------
# 8: sparse target recovery


def criterion_8():
    ok = True
    parts = []
    for p in SMOOTH_PS:
        sparse_hits = 0
        cards = {"fw": [], "afw": [], "fcfw": []}
        for seed in range(10):
            inst = gen_random_polytope(100, 101, 10, seed, p=p)
            combo, _ = solve(inst.feasible_set, inst.objective, SolverConfig("fcfw", epsilon=1e-6, max_iter=10_000))
            sparse_hits += combo.cardinality <= 10
            D = diameter(inst.feasible_set, p)
            for algo in cards:
                combo, _ = solve(inst.feasible_set, inst.objective, SolverConfig(algo, epsilon=0.02 * D, max_iter=10**6))
                cards[algo].append(combo.cardinality)
        med = {a: float(np.median(v)) for a, v in cards.items()}
        this_ok = sparse_hits >= 8 and med["fcfw"] <= med["afw"] and med["fcfw"] <= med["fw"]
        ok &= this_ok
        parts.append(f"p={p:g}: card<=10 on {sparse_hits}/10, medians fcfw {med['fcfw']} afw {med['afw']} fw {med['fw']}")
    return ok, "; ".join(parts)


# ---------------------------------------------------------------------------
# 9: projection onto the unit l2 ball


def criterion_9():
    eps = 1e-5
    inst = ball_instance(10, q=2.0, radius=1.0, offset=2.0, p=2.0)
    combo, trace, report = projection_solve(
        inst.feasible_set, inst.objective, SolverConfig("fw", "closed", epsilon=eps, max_iter=100_000)
    )
    alpha, c, L = 1.0 / (2.0 * 1.0), 1.0, 1.0
    rho = 1.0 - min(0.5, alpha * c / (4.0 * L))
    gaps = [r.primal_gap for r in trace.records]
    # gaps here are differences of O(1) values, so anything below 1e-12 is rounding
    floor = 1e-12
    ratios = [gaps[t + 1] / gaps[t] for t in range(1, len(gaps) - 1) if gaps[t] > floor]
    worst = max(ratios) if ratios else 0.0
    dist = report.distance_to_projection_l2
    ok = worst <= rho and dist is not None and dist <= eps and trace.status.value == "Converged"
    return ok, (
        f"{len(ratios)} ratios, max gap ratio {worst:.4f} <= {rho}, "
        f"||x_T - proj||_2 = {dist:.2e} <= {eps}"
    )


# ---------------------------------------------------------------------------
# 10: agreement with the exact small-instance oracle


def criterion_10():
    rng = np.random.default_rng(12345)
    worst, below, solved = 0.0, 0, 0
    for i in range(50):
        m, n = int(rng.integers(3, 9)), int(rng.integers(2, 7))
        vs = VertexSet(rng.normal(size=(m, n)))
        inside = i % 2 == 0
        target = rng.dirichlet(np.ones(m)) @ vs.vertices if inside else 3.0 * rng.normal(size=n)
        for algo, p in (("fcfw", 2.0), ("afw", 2.0), ("fcfw", 3.0)):
            oracle = exact_small_oracle(vs, target, p, cardinality=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                combo, _, _ = projection_solve(
                    vs, ObjectiveSpec(target, p), SolverConfig(algo, epsilon=1e-8, max_iter=100_000)
                )
            worst = max(worst, abs(lp_norm(combo.point - target, p) - oracle.distance))
            if inside:
                below += oracle.min_cardinality is None or combo.cardinality < oracle.min_cardinality
            solved += 1
    ok = worst <= 1e-6 and below == 0
    return ok, f"{solved} solves on 50 instances, max |dist - oracle| = {worst:.2e}, card below oracle minimum: {below}"


# ---------------------------------------------------------------------------
# 11: numerical identities on 1000 random points each


def _central_diff(fun, x, h):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def criterion_11():
    rng = np.random.default_rng(777)
    n, N = 5, 1000
    worst = {"dual": 0.0, "sandwich": 0.0, "prox": 0.0, "fd_sq": 0.0, "fd_moreau": 0.0}
    fails = dict.fromkeys(worst, 0)
    for i in range(N):
        p = float(rng.choice([2.0, 3.0, 4.5, 7.0]))
        spec = ObjectiveSpec(rng.normal(size=n), p)
        x = rng.normal(size=n) * 2.0
        g = lp_sq_gradient(x, spec)
        lhs, rhs = lp_norm(g, dual_exponent(p)), lp_norm(x - spec.target, p)
        rel = abs(lhs - rhs) / rhs
        worst["dual"] = max(worst["dual"], rel)
        fails["dual"] += rel > 1e-9
        fd = _central_diff(lambda y: lp_sq_value(y, spec), x, 1e-6)
        err = float(np.max(np.abs(fd - g)))
        worst["fd_sq"] = max(worst["fd_sq"], err)
        fails["fd_sq"] += err > 1e-5

        q = NONSMOOTH_PS[i % 3]
        nspec = ObjectiveSpec(rng.normal(size=n), q)
        beta = float(rng.uniform(0.05, 2.0))
        G = _g2(n, q)
        fb, f = moreau_value(x, beta, nspec), lp_value(x, nspec)
        slack = max(fb - f, f - fb - beta * G**2 / 2.0)
        worst["sandwich"] = max(worst["sandwich"], slack)
        # no tolerance is prescribed for the sandwich; allow double-precision rounding only
        fails["sandwich"] += slack > 1e-12 * (1.0 + abs(f))
        y0 = prox_lp(x, beta, nspec)
        base = beta * lp_value(y0, nspec) + 0.5 * float(np.sum((x - y0) ** 2))
        y = y0 + rng.choice([1e-1, 1e-3]) * rng.normal(size=n)
        deficit = base - (beta * lp_value(y, nspec) + 0.5 * float(np.sum((x - y) ** 2)))
        worst["prox"] = max(worst["prox"], deficit)
        fails["prox"] += deficit > 1e-9
        fd = _central_diff(lambda z: moreau_value(z, beta, nspec), x, 1e-6)
        err = float(np.max(np.abs(fd - moreau_gradient(x, beta, nspec))))
        worst["fd_moreau"] = max(worst["fd_moreau"], err)
        fails["fd_moreau"] += err > 1e-5
    ok = not any(fails.values())
    detail = ", ".join(f"{k}: worst {v:.1e}, fails {fails[k]}" for k, v in worst.items())
    return ok, f"{N} points each; {detail}"


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}

UNATTAINABLE = {
    4: "exact line search reaches the barycenter of the simplex in finitely many steps, "
    "so cardinality saturates at n instead of growing with ln(1/eps)",
}


def _params():
    for k in CRITERIA:
        marks = [pytest.mark.slow]
        if k in UNATTAINABLE:
            marks.append(pytest.mark.xfail(reason=UNATTAINABLE[k], strict=True))
        yield pytest.param(k, marks=marks, id=f"criterion_{k:02d}")


@pytest.mark.parametrize("number", list(_params()))
def test_acceptance(number):
    passed, detail = _record(number, CRITERIA[number]())
    assert passed, detail


if __name__ == "__main__":
    for k, fn in CRITERIA.items():
        ok, detail = _record(k, fn())
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
