"""Command-line front end.

Exit codes: 0 converged (or Degenerate: the iterate is already optimal),
2 iteration cap, 1 input or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from caradory import kernels
from caradory.bounds import TheoryBounds, evaluate_bound
from caradory.errors import CaradoryError
from caradory.geometry import LqBall, VertexSet, diameter, l2_lipschitz_constant, lp_norm
from caradory.instances import (
    LowerBoundCurve,
    ball_instance,
    exact_small_oracle,
    gen_random_polytope,
    hadamard,
    hadamard_instance,
    load_instance,
    lower_bound_cardinality,
    save_instance,
)
from caradory.objectives import Mode, ObjectiveSpec, parse_exponent
from caradory.solvers import (
    Algorithm,
    SolverConfig,
    Status,
    Step,
    projection_solve,
    smoothed_fw_budget,
    solve,
)
from caradory.traceio import write_trace

EXIT_OK, EXIT_INPUT, EXIT_ITER_CAP = 0, 1, 2
MAX_ITER_CEILING = 10_000_000

ALGOS = {
    "fw": (Algorithm.FW, Step.CLOSED_LOOP),
    "fw-open": (Algorithm.FW, Step.OPEN_LOOP),
    "nep-fw": (Algorithm.NEP_FW, Step.OPEN_LOOP),
    "fcfw": (Algorithm.FCFW, Step.CLOSED_LOOP),
    "afw": (Algorithm.AFW, Step.CLOSED_LOOP),
    "hcgs": (Algorithm.HCGS, Step.OPEN_LOOP),
    "smoothed-fw": (Algorithm.SMOOTHED_FW, Step.OPEN_LOOP),
}
BOUND_IDS = ("thm1", "thm2", "thm3", "thm4", "thm7", "thm8", "lemma2")


class UsageError(CaradoryError):
    pass


class _DefaultsFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except for unset options and flags."""

    def _get_help_string(self, action):
        if action.default in (None, False) or action.default is argparse.SUPPRESS:
            return action.help
        return super()._get_help_string(action)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _exponent(text):
    try:
        return parse_exponent(text)
    except CaradoryError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _instance_flags(p):
    g = p.add_argument_group("instance")
    g.add_argument("--instance", type=Path, help="instance JSON file")
    g.add_argument("--gen", choices=["random", "hadamard", "ball"], help="generate an instance; random when neither --instance nor --gen is given")
    g.add_argument("--n", type=int, default=100, help="dimension")
    g.add_argument("--m", type=int, default=101, help="number of vertices (random)")
    g.add_argument("--k", type=int, default=10, help="target support size (random)")
    g.add_argument("--large-scale", action="store_true", help="random: use n=500, m=501, k=25")
    g.add_argument("--q", type=float, default=2.0, help="ball exponent q in [2, inf)")
    g.add_argument("--radius", type=float, default=1.0, help="ball radius")
    g.add_argument("--offset", type=float, default=None,
                   help="ball target offset*e_1; unset means 0.5*radius, or 2*radius with --project")
    g.add_argument("--seed", type=int, default=0, help="PRNG seed")


def build_parser():
    parser = _Parser(prog="caradory", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run one solver and write its trace",
                       formatter_class=_DefaultsFormatter)
    s.add_argument("--algo", choices=sorted(ALGOS), default="fw", help="solver")
    s.add_argument("--p", type=_exponent, default=2.0, help="norm exponent, float or 'inf'")
    s.add_argument("--epsilon", type=float, default=0.02, help="target accuracy ||x_t - x*||_p")
    s.add_argument("--max-iter", type=int, default=None,
                   help="iteration cap (default: 10 x the bound-implied iteration count)")
    s.add_argument("--out", type=Path, default=None, help="trace path (default: caradory_trace.<format>)")
    s.add_argument("--format", choices=["csv", "json"], default="csv", help="trace format")
    s.add_argument("--project", action="store_true", help="target may lie outside the set")
    s.add_argument("--bound", choices=BOUND_IDS, help="also write an envelope report for this guarantee")
    _instance_flags(s)

    b = sub.add_parser("bench", help="cardinality at an accuracy threshold across solvers and seeds",
                       formatter_class=_DefaultsFormatter)
    b.add_argument("--algos", default="fw,nep-fw,afw,fcfw", help="comma-separated solver names")
    b.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed")
    b.add_argument("--ps", default="2", help="comma-separated exponents in [2, inf)")
    b.add_argument("--epsilon", type=float, default=0.02, help="accuracy threshold ||x_t - x*||_p")
    b.add_argument("--relative", action="store_true", help="scale epsilon by the lp diameter")
    b.add_argument("--max-iter", type=int, default=20_000, help="iteration cap per run")
    b.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: CARADORY_THREADS or CPU count)")
    b.add_argument("--out", type=Path, default=Path("bench.csv"), help="table path; curves go next to it")
    _instance_flags(b)

    h = sub.add_parser("hadamard", help="write the Hadamard lower-bound instance",
                       formatter_class=_DefaultsFormatter)
    h.add_argument("--n", type=int, default=64, help="dimension, a power of two")
    h.add_argument("--p", type=_exponent, default=4.0, help="column normalization exponent in [2, inf)")
    h.add_argument("--out", type=Path, default=None, help="instance JSON path (default: stdout)")

    lb = sub.add_parser("lower-bound", help="cardinality lower bound on Hadamard instances",
                        formatter_class=_DefaultsFormatter)
    lb.add_argument("--n", type=int, default=64, help="dimension, a power of two")
    lb.add_argument("--epsilon", type=float, default=None, help="print the bound at this accuracy")
    lb.add_argument("--out", type=Path, default=None, help="curve CSV path (default: stdout)")

    o = sub.add_parser("oracle", help="exact distance and minimal cardinality (m <= 12)",
                       formatter_class=_DefaultsFormatter)
    o.add_argument("--p", type=_exponent, default=2.0, help="norm exponent, float or 'inf'")
    _instance_flags(o)
    return parser


# ---------------------------------------------------------------------------


def _make_instance(args, p):
    if args.instance is not None and args.gen is not None:
        raise UsageError("use either --instance or --gen, not both")
    if args.instance is not None:
        inst = load_instance(args.instance)
        if inst.objective.p != p:
            inst.objective = ObjectiveSpec(inst.objective.target, p)
        return inst
    gen = args.gen or "random"
    if gen == "random":
        n, m, k = (500, 501, 25) if args.large_scale else (args.n, args.m, args.k)
        return gen_random_polytope(n, m, k, args.seed, p=p)
    if gen == "hadamard":
        return hadamard_instance(args.n, p)
    offset = args.offset
    if offset is None:
        offset = (2.0 if getattr(args, "project", False) else 0.5) * args.radius
    return ball_instance(args.n, q=args.q, radius=args.radius, offset=offset, p=p)


def default_max_iter(cset, spec, algorithm, step, epsilon):
    """Ten times the iteration count at which the matching guarantee reaches ``epsilon``."""
    p = spec.p
    if spec.mode is Mode.SMOOTH_SQUARED:
        D = diameter(cset, p)
        c = 4.0 if step is Step.OPEN_LOOP else 8.0
        n_bound = c * (p - 1.0) * D ** 2 / epsilon ** 2
    else:
        D2 = diameter(cset, 2.0)
        G2 = l2_lipschitz_constant(cset.n, p)
        if algorithm is Algorithm.SMOOTHED_FW:
            n_bound = smoothed_fw_budget(G2, D2, epsilon)
        else:
            n_bound = (4.0 * G2 * D2 / epsilon) ** 2
    return int(min(max(10 * math.ceil(n_bound), 1), MAX_ITER_CEILING))


def _bound_constants(which, inst, cfg):
    cset, spec = inst.feasible_set, inst.objective
    p = spec.p
    if which in ("thm7", "thm8"):
        if spec.mode is not Mode.NONSMOOTH_NORM:
            raise UsageError(f"{which} applies to p in [1,2) or inf")
        G2 = l2_lipschitz_constant(cset.n, p)
        beta = cfg.epsilon / G2 ** 2 if which == "thm8" else None
        return TheoryBounds(G_2=G2, D_2=diameter(cset, 2.0), beta=beta)
    if spec.mode is not Mode.SMOOTH_SQUARED:
        raise UsageError(f"{which} applies to p in [2,inf)")
    consts = TheoryBounds(L=p - 1.0, D=diameter(cset, p))
    if isinstance(cset, LqBall) and cset.q == 2.0 and p == 2.0:
        consts.alpha = 1.0 / (2.0 * cset.radius)
        if inst.known_distance:
            consts.c = inst.known_distance
    if inst.kind == "simplex" and p == 2.0:
        n = cset.n
        consts.r = 1.0 / math.sqrt(n * (n - 1.0))
    return consts


def _provenance(args, cfg, inst):
    return {
        "command": "solve",
        "algo": args.algo,
        "p": "inf" if math.isinf(inst.objective.p) else inst.objective.p,
        "epsilon": cfg.epsilon,
        "max_iter": cfg.max_iter,
        "seed": cfg.seed,
        "instance": str(args.instance) if args.instance else (args.gen or "random"),
        "params": json.dumps(inst.params, sort_keys=True),
        "backend": kernels.BACKEND,
    }


def run_solve(args):
    algorithm, step = ALGOS[args.algo]
    inst = _make_instance(args, args.p)
    cset, spec = inst.feasible_set, inst.objective
    if cset.n != spec.n:
        raise UsageError("target and feasible set dimensions differ")
    cfg = SolverConfig(algorithm=algorithm, step=step, epsilon=args.epsilon, max_iter=1, seed=args.seed)
    cfg.validate(spec)
    cfg.max_iter = args.max_iter if args.max_iter is not None else default_max_iter(
        cset, spec, algorithm, step, args.epsilon)
    bound_consts = _bound_constants(args.bound, inst, cfg) if args.bound else None

    report = None
    if args.project:
        combo, trace, report = projection_solve(cset, spec, cfg)
    else:
        combo, trace = solve(cset, spec, cfg)

    out = args.out or Path(f"caradory_trace.{args.format}")
    header = _provenance(args, cfg, inst)
    write_trace(trace, out, args.format, combination=combo, header=header)

    accuracy = lp_norm(combo.point - spec.target, spec.p)
    print(f"status: {trace.status.value}")
    print(f"iterations: {trace.final.t}")
    print(f"cardinality: {combo.cardinality}")
    print(f"accuracy: {accuracy:.6g}")
    if report is not None:
        print(f"distance: {report.distance if report.distance is not None else 'unknown'} ({report.source})")
        print(f"primal_gap: {report.final_gap:.6g}")
        if report.distance_to_projection_l2 is not None:
            print(f"distance_to_l2_projection: {report.distance_to_projection_l2:.6g}")
    print(f"trace: {out}")

    if bound_consts is not None:
        values = evaluate_bound(trace, bound_consts, args.bound)
        gaps = trace.column("primal_gap")
        ts = trace.column("t")
        mask = ts >= 1
        if args.bound == "lemma2":
            mask = ts == 1
        holds = bool(np.all(gaps[mask] <= values[mask]))
        bound_path = out.with_name(out.stem + f".{args.bound}.csv")
        with open(bound_path, "w") as fh:
            fh.write("t,primal_gap,bound,checked\n")
            for t, g, v, m in zip(ts, gaps, values, mask):
                fh.write(f"{int(t)},{float(g)!r},{float(v)!r},{int(m)}\n")
        print(f"bound {args.bound}: {'holds' if holds else 'VIOLATED'} ({bound_path})")

    if trace.status is Status.ITER_CAP:
        return EXIT_ITER_CAP
    return EXIT_OK


def _bench_job(job):
    algo, seed, p, params, eps, relative, max_iter = job
    algorithm, step = ALGOS[algo]
    if params["gen"] == "hadamard":
        inst = hadamard_instance(params["n"], p)
    else:
        inst = gen_random_polytope(params["n"], params["m"], params["k"], seed, p=p)
    cset, spec = inst.feasible_set, inst.objective
    threshold = eps * diameter(cset, p) if relative else eps
    cfg = SolverConfig(algorithm=algorithm, step=step, epsilon=threshold, max_iter=max_iter, seed=seed)
    _, trace = solve(cset, spec, cfg)
    accuracy = np.sqrt(2.0 * np.maximum(trace.f_values, 0.0))
    hit = np.flatnonzero(accuracy <= threshold)
    card = int(trace.records[hit[0]].cardinality) if hit.size else None
    curve = [(int(r.t), float(a), int(r.cardinality)) for r, a in zip(trace.records, accuracy)]
    return {
        "algorithm": algo, "seed": seed, "p": p, "epsilon": threshold,
        "cardinality": card, "iterations": trace.final.t, "status": trace.status.value,
        "curve": curve,
    }


def _workers(flag):
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("CARADORY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CARADORY_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_bench(args):
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGOS:
            raise UsageError(f"unknown algorithm {a!r} in --algos")
        if ALGOS[a][0] in (Algorithm.HCGS, Algorithm.SMOOTHED_FW):
            raise UsageError(f"bench covers p in [2, inf) solvers; {a} is not one")
    ps = [parse_exponent(v) for v in args.ps.split(",") if v.strip()]
    for p in ps:
        if not 2.0 <= p < math.inf:
            raise UsageError(f"bench exponents must lie in [2, inf), got {p}")
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    if args.instance is not None:
        raise UsageError("bench generates its instances; use --gen random or hadamard")
    gen = args.gen or "random"
    if gen == "ball":
        raise UsageError("bench supports --gen random or hadamard")
    n, m, k = (500, 501, 25) if args.large_scale else (args.n, args.m, args.k)
    params = {"gen": gen, "n": n, "m": m, "k": k}
    seeds = range(args.seed, args.seed + args.seeds) if gen == "random" else range(args.seed, args.seed + 1)
    jobs = [(a, s, p, params, args.epsilon, args.relative, args.max_iter) for a in algos for s in seeds for p in ps]
    workers = _workers(args.workers)
    if workers == 1:
        results = [_bench_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_job, jobs))
    results.sort(key=lambda r: (algos.index(r["algorithm"]), r["seed"], r["p"]))

    out = args.out
    with open(out, "w") as fh:
        fh.write("algorithm,seed,p,epsilon,cardinality,iterations,status\n")
        for r in results:
            card = "" if r["cardinality"] is None else r["cardinality"]
            fh.write(f"{r['algorithm']},{r['seed']},{r['p']},{float(r['epsilon'])!r},{card},{r['iterations']},{r['status']}\n")
    curves = out.with_name(out.stem + "_curves.csv")
    with open(curves, "w") as fh:
        fh.write("algorithm,seed,p,t,accuracy,cardinality\n")
        for r in results:
            for t, acc, card in r["curve"]:
                fh.write(f"{r['algorithm']},{r['seed']},{r['p']},{t},{acc!r},{card}\n")
    print("algorithm  seed  p  cardinality  iterations  status")
    for r in results:
        card = "-" if r["cardinality"] is None else r["cardinality"]
        print(f"{r['algorithm']:<10} {r['seed']:>4} {r['p']:>4g} {card!s:>11} {r['iterations']:>11}  {r['status']}")
    print(f"table: {out}")
    print(f"curves: {curves}")
    if gen == "hadamard":
        lb_path = out.with_name(out.stem + "_lower_bound.csv")
        s, eps = LowerBoundCurve(n).points()
        with open(lb_path, "w") as fh:
            fh.write("cardinality,epsilon\n")
            for si, ei in zip(s, eps):
                fh.write(f"{int(si)},{float(ei)!r}\n")
        print(f"lower bound: {lb_path}")
    return EXIT_OK


def run_hadamard(args):
    inst = hadamard_instance(args.n, args.p)
    H = hadamard(args.n)
    if not np.array_equal(H @ H.T, args.n * np.eye(args.n, dtype=np.int64)):
        raise CaradoryError("Hadamard orthogonality check failed")
    if args.out is None:
        print(json.dumps(inst.to_json()))
    else:
        save_instance(inst, args.out)
        print(f"instance: {args.out}")
    return EXIT_OK


def run_lower_bound(args):
    if args.epsilon is not None:
        print(f"{float(lower_bound_cardinality(args.n, args.epsilon))!r}")
        return EXIT_OK
    lower_bound_cardinality(args.n, 1.0)  # validates n
    s, eps = LowerBoundCurve(args.n).points()
    lines = ["cardinality,epsilon"] + [f"{int(a)},{float(b)!r}" for a, b in zip(s, eps)]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return EXIT_OK


def run_oracle(args):
    inst = _make_instance(args, args.p)
    cset = inst.feasible_set
    if not isinstance(cset, VertexSet):
        raise UsageError("oracle needs a vertex set instance")
    res = exact_small_oracle(cset, inst.objective.target, args.p, cardinality=True)
    print(json.dumps({
        "distance": res.distance,
        "min_cardinality": res.min_cardinality,
        "min_support": list(res.min_support) if res.min_support else None,
        "certificate_gap": res.certificate_gap,
    }))
    return EXIT_OK


COMMANDS = {
    "solve": run_solve,
    "bench": run_bench,
    "hadamard": run_hadamard,
    "lower-bound": run_lower_bound,
    "oracle": run_oracle,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CaradoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
