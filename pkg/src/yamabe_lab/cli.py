"""Command-line front end: ``yamabe-lab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import checkers as ck
from . import worked_examples as wx
from .discretization import problem_grids
from .domains import Domain, MetricData, conformal_change
from .energy import boundary_quotient, cr_energy, cr_quotient, read_cr_csv, yamabe_energy
from .errors import YamabeLabError
from .harmonic import BoundaryTrace, nondegeneracy_check, steklov_spectrum
from .minimizer import MinimizerConfig, euler_lagrange_residual, minimize_Q, random_trace

SCHEMA = "yamabe-lab/1"


class _UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _clean(obj):
    """Convert numpy scalars and arrays to plain Python for serialization."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _domain(args) -> Domain:
    if args.domain == "ball":
        return Domain.ball(args.n, args.radius)
    return Domain.annulus(args.n, args.r_in, args.radius)


def _add_domain(p, default="ball"):
    p.add_argument("--domain", choices=("ball", "annulus"), default=default)
    p.add_argument("--n", type=int, default=3, help="dimension (default 3)")
    p.add_argument("--radius", type=float, default=1.0, help="outer radius")
    p.add_argument("--r-in", type=float, default=0.5, help="inner radius of the annulus")


# ---------------------------------------------------------------------------
# subcommands: each returns (payload, csv_header, csv_rows)


def cmd_energy(args):
    domain = _domain(args)
    metric = MetricData.euclidean(domain)
    if args.metric == "schwarzschild":
        metric = conformal_change(metric, wx.schwarzschild_factor(args.n, args.m))
    elif args.metric == "escobar":
        if domain.kind != "ball" or args.radius != 1.0:
            raise _UsageError("the escobar metric lives on the unit ball")
        a = args.a or [0.0] * args.n
        metric = conformal_change(metric, wx.escobar_factor(wx.EscobarParams(args.n, tuple(a))))
    rep = yamabe_energy(domain, metric, problem_grids(domain, args.order))
    payload = {"metric": args.metric, "domain": domain.kind, **rep.as_dict()}
    return payload, ["energy"], [[rep.energy]]


def cmd_quotient(args):
    domain = _domain(args)
    coeffs = args.coeffs if args.coeffs else None
    if coeffs is None:
        trace = BoundaryTrace.constant(domain, 1.0, args.L_max)
    else:
        trace = BoundaryTrace.from_vector(domain, coeffs, args.L_max)
    metric = MetricData.euclidean(domain)
    q = boundary_quotient(domain, metric, trace, problem_grids(domain, max(args.order, args.L_max + 2)))
    return {"domain": domain.kind, "n": args.n, "L_max": args.L_max, "quotient": q}, ["quotient"], [[q]]


def cmd_minimize(args):
    domain = _domain(args)
    metric = MetricData.euclidean(domain)
    overrides = {}
    if args.H_outer is not None:
        overrides["outer"] = args.H_outer
    if args.H_inner is not None:
        if domain.kind != "annulus":
            raise _UsageError("--H-inner needs --domain annulus")
        overrides["inner"] = args.H_inner
    if overrides:
        metric = metric.with_mean_curvature(overrides)
    L = args.L_max if args.n == 3 else 0
    rng = np.random.default_rng(args.seed)
    if args.init == "constant":
        init = BoundaryTrace.constant(domain, 1.0, L)
    elif args.init == "y10":
        if args.n != 3 or L < 1:
            raise _UsageError("--init y10 needs n = 3 and L_max >= 1")
        base = BoundaryTrace.constant(domain, 1.0, L)
        init = BoundaryTrace(domain, {c: v + 0.3 * (np.arange(v.size) == 2) for c, v in base.coeffs.items()}, L)
    else:
        init = random_trace(domain, L, rng, args.amplitude)
    cfg = MinimizerConfig(L_max=L, step=args.step, step_size=args.step_size,
                          grad_tol=args.grad_tol, max_iters=args.max_iters, seed=args.seed)
    res = minimize_Q(domain, metric, init, cfg)
    payload = {
        "domain": domain.kind, "n": args.n, "L_max": L, "energy": res.energy,
        "iterations": res.iterations, "converged": res.converged, "positive": res.positive,
        "grad_norm": res.grad_norm_history[-1],
        "trace": {c: v for c, v in res.trace.coeffs.items()},
    }
    if res.positive and metric.is_flat:
        el = euler_lagrange_residual(domain, metric, res.trace, order=max(24, L + 2))
        payload["el_boundary_residual"] = el.boundary_residual
        payload["H_bar_mean"] = el.H_bar_mean
    rows = [[i, e, g] for i, (e, g) in enumerate(zip(res.energy_history, res.grad_norm_history))]
    return payload, ["iter", "energy", "grad_norm"], rows


def cmd_steklov(args):
    domain = _domain(args)
    spec = steklov_spectrum(domain, args.L_max)
    H = args.H if args.H is not None else float(args.n - 1) / args.radius
    verdict = nondegeneracy_check(H, spec, args.n, args.tol)
    payload = {
        "domain": domain.kind, "n": args.n, "L_max": args.L_max,
        "eigenvalues": spec.values, "multiplicities": spec.multiplicities, "degrees": spec.degrees,
        "certified_below": spec.certified_below, "H": H, "status": verdict.status,
        "degenerate": verdict.degenerate, "nearest": verdict.nearest, "distance": verdict.distance,
    }
    rows = [[int(d), v, int(m)] for d, v, m in zip(spec.degrees, spec.values, spec.multiplicities)]
    return payload, ["degree", "eigenvalue", "multiplicity"], rows


def _report_rows(report):
    d = report.as_dict()
    return ["name", "value", "bound", "satisfied"], [[h["name"], h["value"], h["bound"], h["satisfied"]]
                                                      for h in d["hypotheses"]]


def cmd_check_thm1(args):
    rep = ck.check_theorem1(ck.Theorem1Input(args.n, args.gamma, args.C, args.H_g, args.H_h,
                                             args.ratio_sup, args.area_equality))
    return (rep.as_dict(), *_report_rows(rep))


def cmd_check_corollary(args):
    rep = ck.check_corollary_volume(args.n, args.vol_equal, args.H_g, args.H_h, args.density, args.ratio_sup)
    return (rep.as_dict(), *_report_rows(rep))


def cmd_check_nonpositive(args):
    v = ck.check_nonpositive_uniqueness(args.R_max_abs, args.H_h, args.H_hbar, args.tol)
    return v.as_dict(), ["applicable", "verdict"], [[v.applicable, v.verdict]]


def cmd_cherrier(args):
    if args.sup_v_prime is not None or args.C_bound is not None or args.mu is not None:
        if None in (args.sup_v_prime, args.C_bound, args.mu):
            raise _UsageError("--sup-v-prime, --C-bound and --mu must be given together")
        data = (args.sup_v_prime, args.C_bound, args.mu)
        source = "supplied"
    else:
        data = ck.cherrier_ball_data(args.n, args.c)
        source = "unit_ball"
    v = ck.cherrier_condition(args.n, *data)
    reference = ck.REFERENCE_CHERRIER_BOUNDS.get(args.n)
    payload = {
        "n": args.n, "data": source, "sup_v_prime": data[0], "C_bound": data[1], "mu": data[2],
        "lhs": v.lhs, "bound": ck.cherrier_ball_bound(args.n), "reference_bound": reference,
        "within_reference_bound": None if reference is None else bool(ck.cherrier_ball_bound(args.n) <= reference),
        "satisfied": v.satisfied, "margin": v.margin,
    }
    return payload, ["n", "lhs", "bound", "reference_bound", "satisfied"], [
        [args.n, v.lhs, payload["bound"], reference, v.satisfied]]


def cmd_annulus(args):
    n, r = args.n, args.r
    ms = args.m if args.m else [0.0]
    rows = []
    for m in ms:
        p = wx.SchwarzschildParams(n, r, m)
        rows.append([m, wx.schwarzschild_energy(p), wx.euclidean_annulus_energy(n, r),
                     wx.schwarzschild_energy_limit(n, r)])
    p = wx.SchwarzschildParams(n, r, ms[0])
    h_in, h_out = wx.schwarzschild_mean_curvatures(p)
    payload = {
        "n": n, "r": r, "m": ms[0],
        "energy": rows[0][1],
        "energy_quadrature": wx.schwarzschild_energy_pipeline(p).energy,
        "euclid_energy": rows[0][2],
        "limit": rows[0][3],
        "H_inner": h_in, "H_outer": h_out,
        "quoted": {
            "energy": wx.schwarzschild_energy_quoted(p),
            "limit": wx.schwarzschild_energy_limit_quoted(n, r),
            "H_inner": wx.schwarzschild_mean_curvatures_quoted(p)[0],
        },
        "sweep": [{"m": a, "energy": b} for a, b, _, _ in rows],
    }
    if args.find_m0:
        try:
            rep = wx.find_m0(n, r, args.tol, formula=args.formula)
            payload["m0"] = {"m0": rep.m0, "probe_max": rep.probe_max,
                             "exceeds_for_all_probed": rep.exceeds_for_all_probed, "formula": rep.formula}
        except YamabeLabError as exc:
            payload["m0"] = {"m0": None, "formula": args.formula, "error": str(exc)}
    return payload, ["m", "E_schwarzschild", "E_euclid", "limit"], rows


def cmd_escobar(args):
    rows = []
    for t in args.a:
        a = [t] + [0.0] * (args.n - 1)
        p = wx.EscobarParams(args.n, tuple(a))
        lap, bres = wx.escobar_residual(p)
        q = wx.escobar_quotient(p) if args.n == 3 else None
        rows.append([t, lap, bres, q])
    qs = [row[3] for row in rows if row[3] is not None]
    payload = {
        "n": args.n,
        "family": [{"a1": a, "interior_residual": l, "boundary_residual": b, "quotient": q}
                   for a, l, b, q in rows],
        "quotient_spread": (max(qs) - min(qs)) if qs else None,
    }
    return payload, ["a1", "interior_residual", "boundary_residual", "quotient"], rows


def cmd_bump(args):
    mx, th, d = wx.bump_ball_demo(args.amplitude, args.width, args.center, args.samples)
    payload = {"amplitude": args.amplitude, "width": args.width, "center": args.center, "max_defect": mx,
               "argmax_theta": float(th[int(np.argmax(d))])}
    return payload, ["theta", "defect"], [[t, v] for t, v in zip(th, d)]


def cmd_cr_energy(args):
    data = read_cr_csv(args.csv, args.n)
    payload = {"n": args.n, "nodes": int(data.weights.size), "energy": cr_energy(data)}
    header, row = ["energy"], [payload["energy"]]
    if data.u is not None and data.grad_norm is not None:
        payload["quotient"] = cr_quotient(data)
        header.append("quotient")
        row.append(payload["quotient"])
    return payload, header, [row]


def cmd_check_cr(args):
    rep = ck.check_cr_theorem(args.gamma, args.R_theta, args.R_Theta, args.ratio_sup)
    return (rep.as_dict(), *_report_rows(rep))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yamabe-lab",
        description="Numerical experiments for the type II Yamabe problem on model domains.")
    parser.add_argument("--format", choices=("json", "csv", "human"), default="json")
    parser.add_argument("--output", help="write to this path instead of stdout")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    def add(name, func, help_, description):
        p = sub.add_parser(name, help=help_, description=description,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=func)
        # also accept the global options after the subcommand
        p.add_argument("--format", choices=("json", "csv", "human"), default=argparse.SUPPRESS)
        p.add_argument("--output", default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        return p

    p = add("energy", cmd_energy, "Yamabe energy E(g) by quadrature",
            "Type II Yamabe energy E(g) = (int R dV + 2 int H dA) / Vol(dM)^{(n-2)/(n-1)}\n"
            "of the Euclidean, Schwarzschild or Escobar metric on a ball or annulus.\n"
            "CSV columns: energy.")
    _add_domain(p)
    p.add_argument("--metric", choices=("euclidean", "schwarzschild", "escobar"), default="euclidean")
    p.add_argument("--m", type=float, default=1.0, help="Schwarzschild mass parameter")
    p.add_argument("--a", type=_floats, default=None, help="Escobar center a, comma separated")
    p.add_argument("--order", type=int, default=24, help="quadrature order")

    p = add("quotient", cmd_quotient, "boundary quotient Q_g of a trace",
            "Boundary quotient Q_g(phi) of the harmonic extension of a boundary trace\n"
            "on the Euclidean ball or annulus.  --coeffs lists spherical-harmonic\n"
            "coefficients (n = 3) or boundary values (n > 3), component by component\n"
            "(inner first).  CSV columns: quotient.")
    _add_domain(p)
    p.add_argument("--L-max", type=int, default=0)
    p.add_argument("--coeffs", type=_floats, default=None)
    p.add_argument("--order", type=int, default=16)

    p = add("minimize", cmd_minimize, "minimize Q over harmonic traces",
            "Projected gradient descent for the type II Yamabe quotient over\n"
            "band-limited boundary traces on a scalar-flat Euclidean domain.\n"
            "CSV columns: iter, energy, grad_norm.")
    _add_domain(p)
    p.add_argument("--L-max", type=int, default=8)
    p.add_argument("--init", choices=("constant", "y10", "random"), default="y10")
    p.add_argument("--amplitude", type=float, default=0.2)
    p.add_argument("--step", choices=("backtracking", "fixed"), default="backtracking")
    p.add_argument("--step-size", type=float, default=1.0)
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--H-inner", type=float, default=None, help="override inner mean curvature")
    p.add_argument("--H-outer", type=float, default=None, help="override outer mean curvature")

    p = add("steklov", cmd_steklov, "Steklov spectrum and non-degeneracy",
            "Steklov (Dirichlet-to-Neumann) eigenvalues of a ball or annulus and the\n"
            "non-degeneracy test: H/(n-1) must not be an eigenvalue.\n"
            "CSV columns: degree, eigenvalue, multiplicity.")
    _add_domain(p)
    p.add_argument("--L-max", type=int, default=8)
    p.add_argument("--H", type=float, default=None, help="constant mean curvature (default (n-1)/radius)")
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("check-thm1", cmd_check_thm1, "comparison criterion for type II Yamabe metrics",
            "Comparison criterion: h is a type II Yamabe metric when g is one,\n"
            "H_h h <= H_g g and C <= min{gamma^{-2/(n-1)}, (H_h/H_g)^{(2n-3)/(n-2)} gamma^{2/(n-2)}}.\n"
            "CSV columns: name, value, bound, satisfied.")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--H-g", type=float, required=True)
    p.add_argument("--H-h", type=float, required=True)
    p.add_argument("--ratio-sup", type=float, required=True)
    p.add_argument("--area-equality", action="store_true")

    p = add("check-corollary", cmd_check_corollary, "equal-volume corollary of the comparison criterion",
            "Equal-volume corollary: H_g >= H_h and the boundary area-density\n"
            "inequality.  CSV columns: name, value, bound, satisfied.")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--vol-equal", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--H-g", type=float, required=True)
    p.add_argument("--H-h", type=float, required=True)
    p.add_argument("--density", type=float, required=True, help="sup of the density difference")
    p.add_argument("--ratio-sup", type=float, default=1.0)

    p = add("check-nonpositive", cmd_check_nonpositive, "uniqueness for nonpositive mean curvature",
            "Applicability of uniqueness for scalar-flat metrics whose boundary mean\n"
            "curvatures are equal-sign nonpositive constants.  CSV columns: applicable, verdict.")
    p.add_argument("--R-max-abs", type=float, default=0.0)
    p.add_argument("--H-h", type=_floats, required=True, help="mean-curvature samples of h")
    p.add_argument("--H-hbar", type=_floats, required=True, help="mean-curvature samples of hbar")
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("cherrier", cmd_cherrier, "Cherrier smallness condition on the unit ball",
            "Cherrier's sufficient condition (sigma/tau) sup v' (C^2 mu)^{tau/2} < 1 with\n"
            "the Beckner bound and the constant test function on the unit ball, or\n"
            "with supplied data.  CSV columns: n, lhs, bound, reference_bound, satisfied.")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--c", type=float, default=1.0, help="constant v' on the unit ball")
    p.add_argument("--sup-v-prime", type=float, default=None)
    p.add_argument("--C-bound", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)

    p = add("annulus", cmd_annulus, "Schwarzschild annulus energies",
            "Energies of the Schwarzschild annulus g_{r,m} against the Euclidean annulus,\n"
            "the m -> infinity limit and the threshold m0.  Repeat --m for a sweep.\n"
            "CSV columns: m, E_schwarzschild, E_euclid, limit.")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--m", type=float, action="append", default=None)
    p.add_argument("--find-m0", action="store_true")
    p.add_argument("--formula", choices=("geometric", "quoted"), default="geometric")
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("escobar", cmd_escobar, "Escobar solution family on the unit ball",
            "Residuals of the Escobar solutions u_a (a = a1 e_1) of the constant\n"
            "boundary mean curvature equation, and Q_delta(u_a) across the family.\n"
            "CSV columns: a1, interior_residual, boundary_residual, quotient.")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--a", type=_floats, default=[0.0, 0.3, 0.6], help="values of a1")

    p = add("bump", cmd_bump, "umbilicity defect of the bump ball",
            "Umbilicity defect along a meridian of the unit sphere with a smooth\n"
            "radial bump.  CSV columns: theta, defect.")
    p.add_argument("--amplitude", type=float, default=0.2)
    p.add_argument("--width", type=float, default=0.3)
    p.add_argument("--center", type=float, default=float(np.pi / 2))
    p.add_argument("--samples", type=int, default=721)

    p = add("cr-energy", cmd_cr_energy, "CR Yamabe energy of tabulated data",
            "CR energy E(theta) and, with u and grad_norm columns, the conformal\n"
            "quotient, from a CSV with columns weight, R[, u, grad_norm].\n"
            "CSV columns: energy[, quotient].")
    p.add_argument("--csv", required=True)
    p.add_argument("--n", type=int, required=True)

    p = add("check-cr", cmd_check_cr, "comparison criterion for CR Yamabe contact forms",
            "Comparison criterion for CR Yamabe contact forms: R_theta dtheta <= R_Theta dTheta.\n"
            "CSV columns: name, value, bound, satisfied.")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--R-theta", type=float, required=True)
    p.add_argument("--R-Theta", type=float, required=True)
    p.add_argument("--ratio-sup", type=float, required=True)
    return parser


def _render(fmt, command, payload, header, rows) -> str:
    if fmt == "json":
        return json.dumps(_clean({"schema": SCHEMA, "command": command, **payload}), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in _clean(rows):
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    lines = [f"{command}:"]
    for k, v in _clean(payload).items():
        lines.append(f"  {k}: {v}")
    return "\n".join(lines) + "\n"


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        payload, header, rows = args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"yamabe-lab: error: {exc}", file=sys.stderr)
        return 2
    except YamabeLabError as exc:
        print(f"yamabe-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = _render(args.format, args.command, payload, header, rows)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
