"""Command-line interface.

Exit codes: 0 success (or the check holds), 1 check failed, 2 usage error,
3 resource limit (vertex budget, solver iterations).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import graphs, harmonic, invariants, percolation, randomcluster
from .errors import BudgetExceeded, ConsistencyError, InvalidInput, SolverError

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

SWEEP_FIELDS = ["seed", "p", "largest", "second", "origin_size", "spanning_count", "mean_size"]
BETA1_FIELDS = ["radius", "orbit", "edge_index", "free_current", "wired_current", "coefficient",
                "beta1_upper_bound"]
CURVE_FIELDS = ["q", "boundary", "p", "mean_degree", "stderr", "samples"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# helpers


def _floats(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _q(text):
    q = float(text)
    if not q >= 1 or math.isinf(q):
        raise argparse.ArgumentTypeError("q must be finite and >= 1")
    return q


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def to_json(obj):
    return json.dumps(_clean(obj), indent=2) + "\n"


def to_csv(rows, fields):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in _clean(r).items()})
    return buf.getvalue()


def emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def family_from_args(args):
    f = args.family
    if f is None:
        raise UsageError("--family is required")
    try:
        if f == "tree":
            return graphs.GraphFamily.regular_tree(_need(args, "degree"))
        if f == "lattice":
            return graphs.GraphFamily.lattice(_need(args, "dim"))
        if f == "biregular":
            return graphs.GraphFamily.biregular_tree(_need(args, "r"), _need(args, "s"))
        if f == "free":
            words = tuple(w for w in (args.words or "").split(",") if w)
            return graphs.GraphFamily.free_group(_need(args, "rank"), words)
        if f == "surface":
            return graphs.GraphFamily.surface_group(_need(args, "genus"))
        return graphs.GraphFamily.line()
    except InvalidInput as exc:
        raise UsageError(str(exc))


def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise UsageError(f"--{name} is required for --family {args.family}")
    return v


def default_radii(family, budget, count=3, step=2):
    """A few radii ending at the largest ball within ``budget`` vertices."""
    top = max(graphs.max_radius_within_budget(family, budget, cap=60), 2 + family.n_vertex_orbits)
    return sorted({max(2 + family.n_vertex_orbits - 1, top - step * k) for k in range(count)})


def default_radius(family, budget):
    return max(graphs.max_radius_within_budget(family, budget, cap=200), 2)


# ---------------------------------------------------------------------------
# commands


def cmd_graph(args):
    fam = family_from_args(args)
    if args.radius is None:
        raise UsageError("--radius is required")
    slc = graphs.build_slice(fam, args.radius, args.budget)
    text = graphs.export_slice(slc)
    msg = f"vertices {slc.vertex_count} edges {slc.edge_count}\n"
    if args.out:
        emit(args, text)
        sys.stdout.write(msg)
    else:
        sys.stdout.write(text)
        sys.stderr.write(msg)
    return EXIT_OK


def _beta1(fam, args):
    radii = args.radii or default_radii(fam, args.beta1_budget)
    return harmonic.beta1_estimate(fam, radii=radii, tolerance=args.tolerance, budget=args.budget)


def _beta1_summary(est):
    flag, margin = harmonic.is_ohd(est)
    return {"family": est.family, "beta1": est.final_value, "per_radius": [list(x) for x in est.per_radius],
            "converged": est.converged, "is_ohd": flag, "ohd_margin": margin}


def cmd_beta1(args):
    fam = family_from_args(args)
    est = _beta1(fam, args)
    if args.format == "csv":
        emit(args, to_csv(est.rows, BETA1_FIELDS))
    else:
        emit(args, to_json(_beta1_summary(est)))
    return EXIT_OK


def _perc_radius(fam, args):
    return args.radius if args.radius is not None else default_radius(fam, args.perc_budget)


def cmd_perc(args):
    fam = family_from_args(args)
    radius = _perc_radius(fam, args)
    if args.action == "sweep":
        slc = graphs.build_slice(fam, radius, args.budget)
        grid = args.p if args.p is not None else percolation.default_grid(args.resolution)
        rows = []
        for k in range(args.samples or 1):
            res = percolation.sweep(percolation.sample_labels(slc, args.seed + k), grid, args.center_radius)
            rows += list(res.rows())
        if args.format == "json":
            emit(args, to_json(rows))
        else:
            emit(args, to_csv(rows, SWEEP_FIELDS))
        return EXIT_OK
    fn = percolation.estimate_pc if args.action == "pc" else percolation.estimate_pu
    est = fn(fam, radius, args.samples or 100, args.resolution, args.seed, args.center_radius, args.budget,
             args.jobs)
    d = est.to_dict()
    if args.format == "csv":
        emit(args, to_csv([d], list(d)))
    else:
        emit(args, to_json(d))
    return EXIT_OK


def _rc_radius(fam, args):
    return args.radius if args.radius is not None else default_radius(fam, args.rc_budget)


def cmd_rc(args):
    fam = family_from_args(args)
    radius = _rc_radius(fam, args)
    if args.action == "curve":
        grid = args.p if args.p is not None else np.round(np.linspace(0, 1, 11), 10)
        curve = randomcluster.degree_curve(fam, radius, args.q, args.boundary, grid, args.samples or 400,
                                           args.seed, args.burn_in, args.thinning, jobs=args.jobs,
                                           budget=args.budget)
        rows = list(curve.rows())
        emit(args, to_json(rows) if args.format == "json" else to_csv(rows, CURVE_FIELDS))
        return EXIT_OK
    if args.pc is None or args.pu is None:
        raise UsageError("rc gap needs --pc and --pu")
    try:
        gap = randomcluster.rc_gap(fam, radius, args.q, (args.pc, args.pu), args.window, args.samples or 400,
                                   args.seed, args.boundary, args.burn_in, args.thinning, jobs=args.jobs,
                                   budget=args.budget)
    except InvalidInput as exc:
        raise UsageError(str(exc))
    d = gap.to_dict()
    emit(args, to_json(d) if args.format == "json" else to_csv([d], list(d)))
    return EXIT_OK


def _fixed(value, fam, method):
    return percolation.ThresholdEstimate(value, value, value, method, 0, method == "given-pu", None,
                                         fam.describe(), 0)


def _thresholds(fam, args):
    radius = _perc_radius(fam, args)
    n = args.samples or 100
    pc = (_fixed(args.pc, fam, "given-pc") if args.pc is not None else
          percolation.estimate_pc(fam, radius, n, args.resolution, args.seed, None, args.budget, args.jobs))
    pu = (_fixed(args.pu, fam, "given-pu") if args.pu is not None else
          percolation.estimate_pu(fam, radius, n, args.resolution, args.seed, None, args.budget, args.jobs))
    return pc, pu


def _given_beta1(fam, args):
    if args.beta1 is None:
        return _beta1(fam, args)
    return harmonic.Beta1Estimate([(0, args.beta1)], args.beta1, True, fam.describe(),
                                  graphs.default_orbit_weights(fam).stabilizer_weight)


def cmd_check(args):
    if args.action == "mtp":
        shape = (args.torus,) * (args.dim or 2)
        results = {}
        for name, f in (("adjacency", invariants.adjacency_transport(shape)),
                        ("equality", invariants.equality_transport(shape)),
                        ("averaged", invariants.averaged_transport(shape, args.seed))):
            results[name] = invariants.verify_mass_transport(shape, f, seed=args.seed).to_dict()
        worst = max(r["difference"] for r in results.values())
        holds = worst <= 1e-12
        emit(args, to_json({"name": "mass_transport", "torus": list(shape), "transports": results,
                            "max_difference": worst, "holds": holds}))
        return EXIT_OK if holds else EXIT_FAILED
    fam = family_from_args(args)
    if args.action == "cost":
        p = 1.0 if args.p is None else args.p[0]
        beta1 = _given_beta1(fam, args) if p == 1 else None
        rep = invariants.cost_report(fam, p, beta1)
        emit(args, to_json(rep.to_dict()))
        return EXIT_FAILED if rep.holds is False else EXIT_OK
    beta1 = _given_beta1(fam, args)
    if args.action == "cor43":
        pc, pu = _thresholds(fam, args)
        rep = invariants.check_cor43(fam, beta1, pc, pu)
    else:
        if args.pc is None or args.pu is None:
            pc, pu = _thresholds(fam, args)
            args.pc, args.pu = pc.value, max(pu.value, pc.value)
        gap = randomcluster.rc_gap(fam, _rc_radius(fam, args), args.q, (args.pc, args.pu), args.window,
                                   args.samples_rc, args.seed, args.boundary, args.burn_in, args.thinning,
                                   jobs=args.jobs, budget=args.budget)
        rep = invariants.check_cor46(fam, beta1, gap)
    emit(args, to_json(rep.to_dict()))
    return EXIT_OK if rep.holds else EXIT_FAILED


def build_report(fam, args, full):
    """Aggregate document plus curve rows and the objects needed for figures."""
    beta1 = _beta1(fam, args)
    pc, pu = _thresholds(fam, args)
    doc = {"family": fam.describe(), "seed": args.seed, "beta1": _beta1_summary(beta1),
           "thresholds": {"pc": pc.to_dict(), "pu": pu.to_dict()}, "checks": {}}
    doc["checks"]["cor43"] = invariants.check_cor43(fam, beta1, pc, pu).to_dict()
    doc["checks"]["cost"] = invariants.cost_report(fam, 1.0, beta1).to_dict()
    extras = {"beta1": beta1, "pc": pc, "pu": pu, "curves": []}
    if not full:
        return doc, [], extras
    radius = _rc_radius(fam, args)
    grid = np.round(np.linspace(0, 1, 11), 10)
    curves = []
    for q in (1.0, 2.0):
        for bc in (randomcluster.FREE, randomcluster.WIRED):
            curves.append(randomcluster.degree_curve(fam, radius, q, bc, grid, args.samples_rc, args.seed,
                                                     args.burn_in, args.thinning, jobs=args.jobs,
                                                     budget=args.budget))
    rows = [r for c in curves for r in c.rows()]
    gap = randomcluster.rc_gap(fam, radius, 1.0, (pc.value, max(pu.value, pc.value)), args.window,
                               args.samples_rc, args.seed, randomcluster.WIRED, args.burn_in, args.thinning,
                               jobs=args.jobs, budget=args.budget)
    doc["rc"] = {"radius": radius, "curves": rows, "gap": gap.to_dict()}
    doc["checks"]["cor46"] = invariants.check_cor46(fam, beta1, gap).to_dict()
    pr = _perc_radius(fam, args)
    doc["cluster_beta1"] = {}
    for p in sorted({0.5 * (pc.value + min(pu.value, 1.0)), min(1.0, pu.value + 0.05)}):
        cb = invariants.cluster_beta1(fam, round(p, 6), min(pr, args.cluster_radius), range(args.seed, args.seed + 30),
                                      budget=args.budget)
        doc["cluster_beta1"][repr(round(p, 6))] = cb.to_dict()
    extras["curves"] = curves
    return doc, rows, extras


def cmd_report(args):
    from . import plotting

    fam = family_from_args(args)
    doc, rows, extras = build_report(fam, args, args.full)
    holds = all(c.get("holds") is not False for c in doc["checks"].values())
    doc["all_checks_hold"] = holds
    if args.out and not args.out.endswith(".json"):
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w") as fh:
            fh.write(to_json(doc))
        with open(os.path.join(args.out, "beta1.csv"), "w") as fh:
            fh.write(to_csv(extras["beta1"].rows, BETA1_FIELDS))
        if rows:
            with open(os.path.join(args.out, "curves.csv"), "w") as fh:
                fh.write(to_csv(rows, CURVE_FIELDS))
        figs = os.path.join(args.out, "figures")
        os.makedirs(figs, exist_ok=True)
        plotting.beta1_convergence(extras["beta1"], os.path.join(figs, "beta1.png"))
        plotting.onset_histograms(extras["pc"], extras["pu"], os.path.join(figs, "onsets.png"))
        if extras["curves"]:
            plotting.degree_curves(extras["curves"], os.path.join(figs, "degree_curves.png"),
                                   graphs.effective_degree(fam))
    else:
        emit(args, to_json(doc))
    return EXIT_OK if holds else EXIT_FAILED


# ---------------------------------------------------------------------------
# parser


def _common(p):
    g = p.add_argument_group("family")
    g.add_argument("--family", choices=["tree", "lattice", "biregular", "free", "surface", "line"])
    g.add_argument("--degree", type=int)
    g.add_argument("--dim", type=int)
    g.add_argument("--r", type=int)
    g.add_argument("--s", type=int)
    g.add_argument("--rank", type=int)
    g.add_argument("--words", help="comma-separated generator words, e.g. a,b,ab (uppercase = inverse)")
    g.add_argument("--genus", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--budget", type=int, default=graphs.DEFAULT_BUDGET, help="vertex budget per slice")
    p.add_argument("--config", help="key=value file; flags given on the command line win")


def _estimation(p):
    p.add_argument("--radius", type=int)
    p.add_argument("--radii", type=_ints)
    p.add_argument("--samples", type=int)
    p.add_argument("--resolution", type=int, default=percolation.DEFAULT_RESOLUTION)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--beta1", type=float, help="use this beta_1 value instead of estimating it")
    p.add_argument("--pc", type=float)
    p.add_argument("--pu", type=float)
    p.add_argument("--p", type=_floats)
    p.add_argument("--q", type=_q, default=1.0)
    p.add_argument("--boundary", choices=["free", "wired"], default="wired")
    p.add_argument("--window", type=float, default=0.02)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--thinning", type=int, default=5)
    p.add_argument("--samples-rc", type=int, default=400)
    p.add_argument("--torus", type=int, default=16)
    p.add_argument("--beta1-budget", type=int, default=100_000)
    p.add_argument("--perc-budget", type=int, default=200_000)
    p.add_argument("--rc-budget", type=int, default=2_000)
    p.add_argument("--cluster-radius", type=int, default=8)
    p.add_argument("--center-radius", type=int)


def build_parser():
    parser = _Parser(prog="hdperc", description="Betti numbers, currents and percolation on infinite graphs.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = []

    p = sub.add_parser("graph", help="export a ball as an edge list")
    _common(p)
    p.add_argument("--radius", type=int)
    p.set_defaults(func=cmd_graph, format="txt")
    subs.append(p)

    p = sub.add_parser("beta1", help="estimate the first l2 Betti number")
    _common(p)
    _estimation(p)
    p.set_defaults(func=cmd_beta1)
    subs.append(p)

    for name, func, actions, help_ in (
            ("perc", cmd_perc, ["sweep", "pc", "pu"], "Bernoulli percolation"),
            ("rc", cmd_rc, ["curve", "gap"], "random-cluster model"),
            ("check", cmd_check, ["cor43", "cor46", "mtp", "cost"], "inequality checks")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("action", choices=actions)
        _common(p)
        _estimation(p)
        p.set_defaults(func=func)
        subs.append(p)

    p = sub.add_parser("report", help="aggregate report with figures")
    _common(p)
    _estimation(p)
    p.add_argument("--full", action="store_true")
    p.set_defaults(func=cmd_report)
    subs.append(p)
    return parser, subs


def read_config(path):
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(subs, path):
    conf = read_config(path)
    for p in subs:
        dests = {a.dest: a for a in p._actions}
        for k, v in conf.items():
            if k not in dests:
                raise UsageError(f"unknown config key {k!r}")
            a = dests[k]
            if isinstance(a, argparse._StoreTrueAction):
                val = v.lower() in ("1", "true", "yes")
            elif a.type is not None:
                try:
                    val = a.type(v)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config key {k}: {exc}")
            else:
                val = v
            if a.choices is not None and val not in a.choices:
                raise UsageError(f"config key {k}: invalid choice {val!r}")
            p.set_defaults(**{k: val})


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            _apply_config(subs, args.config)
            args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return args.func(args)
    except UsageError as exc:
        if args is not None and args.command:
            next(p for p in subs if p.prog.endswith(" " + args.command)).print_usage(sys.stderr)
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except InvalidInput as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE
    except SolverError as exc:
        sys.stderr.write(f"resource limit: {exc}\n")
        return EXIT_RESOURCE
    except ConsistencyError as exc:
        sys.stderr.write(f"consistency check failed: {exc}\n")
        return EXIT_FAILED
    except OSError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
