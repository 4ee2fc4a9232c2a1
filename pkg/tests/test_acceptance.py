"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import io
import itertools
import json
import time
from contextlib import redirect_stdout

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from yamabe_lab.checkers import (
    REFERENCE_CHERRIER_BOUNDS,
    Theorem1Input,
    check_cr_theorem,
    check_nonpositive_uniqueness,
    check_theorem1,
    cherrier_ball_bound,
)
from yamabe_lab.cli import run
from yamabe_lab.discretization import problem_grids
from yamabe_lab.domains import ClosedFormFactor, Domain, MetricData, conformal_change
from yamabe_lab.energy import boundary_quotient, yamabe_energy
from yamabe_lab.harmonic import (
    BoundaryTrace,
    dtn_matrix_bruteforce,
    harmonic_extension,
    nondegeneracy_check,
    steklov_spectrum,
)
from yamabe_lab.minimizer import MinimizerConfig, TraceProblem, minimize_Q, multi_start, uniqueness_experiment
from yamabe_lab.worked_examples import (
    EscobarParams,
    SchwarzschildParams,
    escobar_quotient,
    escobar_residual,
    euclidean_annulus_energy,
    schwarzschild_energy,
    schwarzschild_energy_limit_quoted,
    schwarzschild_energy_pipeline,
    schwarzschild_energy_quoted,
    schwarzschild_factor,
    schwarzschild_mean_curvatures,
    schwarzschild_mean_curvatures_quoted,
    schwarzschild_metric,
)

EIGHT_ROOT_PI = 8 * np.sqrt(np.pi)
B3 = Domain.ball(3)
A3 = Domain.annulus(3, 0.5)


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_01_euclidean_annulus_energy(criterion):
    t0 = time.perf_counter()
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = run(["annulus", "--n", "3", "--r", "0.5", "--m", "0", "--format", "json"])
    elapsed = time.perf_counter() - t0
    d = json.loads(buf.getvalue())
    exact = 8 * np.pi / np.sqrt(5 * np.pi)
    err_closed = _rel(d["energy"], exact)
    err_quad = _rel(d["energy_quadrature"], d["energy"])
    ok = code == 0 and err_closed < 1e-10 and err_quad < 1e-10 and elapsed < 1.0
    criterion(1, ok, f"closed form {d['energy']:.10f} (rel err {err_closed:.1e} vs 8pi/sqrt(5pi)), "
                     f"quadrature rel diff {err_quad:.1e}, {elapsed:.2f} s",
              info=f"8pi/sqrt(5pi) = {exact:.6f}; the quoted 6.33969 is off in the third decimal")


def test_02_schwarzschild_pipeline(criterion):
    t0 = time.perf_counter()
    worst_e = worst_h = worst_quoted = 0.0
    for n, r, m in itertools.product([3, 4, 5], [0.3, 0.5, 0.7], [0.5, 1.0, 2.0]):
        p = SchwarzschildParams(n, r, m)
        pipe = schwarzschild_energy_pipeline(p).energy
        worst_e = max(worst_e, _rel(schwarzschild_energy(p), pipe))
        worst_quoted = max(worst_quoted, _rel(schwarzschild_energy_quoted(p), pipe))
        metric = schwarzschild_metric(p)
        for comp, H in zip(("inner", "outer"), schwarzschild_mean_curvatures(p)):
            x = np.zeros((1, n))
            x[0, 0] = metric.domain.boundary_radius(comp)
            worst_h = max(worst_h, abs(float(metric.H[comp](x)[0]) - H))
    elapsed = time.perf_counter() - t0
    ok = worst_e < 1e-10 and worst_h < 1e-12 and elapsed < 5.0
    h_p = schwarzschild_mean_curvatures_quoted(SchwarzschildParams(3, 0.5, 1.0))[0]
    criterion(2, ok, f"27 points: energy rel err {worst_e:.1e}, mean curvature err {worst_h:.1e}, {elapsed:.2f} s",
              info=f"the quoted inner-curvature variant misses the pipeline by up to {worst_quoted:.2f} "
                   f"(rel); H_inner(3, 0.5, 1) = 0 vs quoted {h_p}")


def test_03_limit(criterion):
    limit = schwarzschild_energy_limit_quoted(3, 0.5)
    e = schwarzschild_energy(SchwarzschildParams(3, 0.5, 1e6))
    err = _rel(e, limit)
    e_p = schwarzschild_energy_quoted(SchwarzschildParams(3, 0.5, 1e6))
    criterion(3, err < 1e-4, f"E(g_(0.5,1e6)) = {e:.6f} vs displayed limit {limit:.6f}: rel err {err:.2e}",
              info=f"E tends to E(delta) = {euclidean_annulus_energy(3, 0.5):.6f}; "
                   f"the quoted variant gives {e_p:.6f} (rel err {_rel(e_p, limit):.1e})")


def test_04_energy_comparison(criterion):
    e0 = euclidean_annulus_energy(3, 0.5)
    ms = np.logspace(0, 8, 801)
    gaps = np.array([schwarzschild_energy(SchwarzschildParams(3, 0.5, m)) - e0 for m in ms])
    gaps_p = np.array([schwarzschild_energy_quoted(SchwarzschildParams(3, 0.5, m)) - e0 for m in ms])
    ok = bool(np.all(gaps > 0))
    criterion(4, ok, f"E(g_(0.5,m)) - E(delta) over {ms.size} masses in [1, 1e8]: "
                     f"min {gaps.min():.3e}, max {gaps.max():.3e}",
              info=f"quoted variant: min gap {gaps_p.min():.3e} (all positive: {bool(np.all(gaps_p > 0))})")


def test_05_cherrier_constants(criterion):
    vals = {n: cherrier_ball_bound(n) for n in (4, 5, 6)}
    below = all(vals[n] < 1 and vals[n] <= REFERENCE_CHERRIER_BOUNDS[n] for n in vals)
    n5 = abs(vals[5] - REFERENCE_CHERRIER_BOUNDS[5])
    criterion(5, below and n5 < 1e-4,
              "bounds " + ", ".join(f"n={n}: {v:.5f} <= {REFERENCE_CHERRIER_BOUNDS[n]:.5f}" for n, v in vals.items())
              + f"; n=5 difference {n5:.1e}")


def test_06_minimizer(criterion):
    t0 = time.perf_counter()
    g = MetricData.euclidean(B3)
    base = BoundaryTrace.constant(B3, 1.0, 8)
    init = BoundaryTrace(B3, {"outer": base.coeffs["outer"] + 0.3 * (np.arange(base.size) == 2)}, 8)
    res = minimize_Q(B3, g, init, MinimizerConfig(L_max=8))
    gap = abs(res.energy - EIGHT_ROOT_PI)
    prob = TraceProblem(B3, g, 8)
    rng = np.random.default_rng(2024)
    worst = 0.0
    h = 1e-6
    for _ in range(20):
        c = base.vector + 0.3 * rng.standard_normal(prob.dim)
        fd = np.array([(prob.value(c + h * e) - prob.value(c - h * e)) / (2 * h) for e in np.eye(prob.dim)])
        worst = max(worst, np.linalg.norm(prob.gradient(c) - fd) / np.linalg.norm(fd))
    elapsed = time.perf_counter() - t0
    ok = gap < 1e-3 and worst < 1e-6 and elapsed < 30.0
    criterion(6, ok, f"energy {res.energy:.8f} (|E - 8 sqrt(pi)| = {gap:.1e}), gradient FD rel err {worst:.1e} "
                     f"over 20 traces, {elapsed:.1f} s")


def test_07_escobar(criterion):
    residuals = [escobar_residual(EscobarParams(3, (a, 0.0, 0.0)))[1] for a in (0.0, 0.3, 0.6)]
    qs = [escobar_quotient(EscobarParams(3, (a, 0.0, 0.0))) for a in (0.0, 0.3, 0.6)]
    spread = max(qs) - min(qs)
    ok = max(residuals) < 1e-9 and spread < 1e-6
    criterion(7, ok, f"max boundary residual {max(residuals):.1e}, quotient spread {spread:.1e}")


def test_08_steklov(criterion):
    L = 8
    spec = steklov_spectrum(B3, L)
    exact = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1).astype(float)
    closed_ok = np.array_equal(spec.eigenvalues, exact)
    brute = np.sort(dtn_matrix_bruteforce(B3, L))
    brute_err = float(np.max(np.abs(brute - exact)))
    verdict = nondegeneracy_check(2.0, spec, 3)
    ok = closed_ok and brute_err < 1e-10 and verdict.degenerate
    criterion(8, ok, f"closed form exact: {closed_ok}, brute-force err {brute_err:.1e}, "
                     f"delta on the ball: {verdict.status}")


def test_09_uniqueness(criterion):
    g = MetricData.euclidean(A3).with_mean_curvature({"inner": 0.0, "outer": 0.0})
    a, b = multi_start(A3, g, MinimizerConfig(L_max=4), [11, 12])
    rep = uniqueness_experiment(A3, g, a, b)
    criterion(9, rep.ratio_spread < 1e-6, f"ratio spread {rep.ratio_spread:.1e} "
                                          f"(energies {a.energy:.10f}, {b.energy:.10f})")


_INVARIANCE = {}


@settings(max_examples=50, deadline=None, derandomize=True)
@given(n=st.sampled_from([3, 4, 5]), r=st.floats(0.2, 0.8), m=st.floats(0.0, 5.0), c=st.floats(0.01, 100.0))
def _scale_invariance(n, r, m, c):
    A = Domain.annulus(n, r)
    g = conformal_change(MetricData.euclidean(A), schwarzschild_factor(n, m))
    grids = problem_grids(A, 4)
    err = _rel(yamabe_energy(A, g.rescaled(c), grids).energy, yamabe_energy(A, g, grids).energy)
    _INVARIANCE.setdefault("E(cg)", []).append(err)


def _random_trace(domain, rng, L=3, amplitude=0.3):
    base = BoundaryTrace.constant(domain, 1.0, L).vector
    return BoundaryTrace.from_vector(domain, base + amplitude * rng.standard_normal(base.size) / np.sqrt(base.size),
                                     L)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2**31), t=st.floats(0.05, 20.0), sign=st.sampled_from([-1.0, 1.0]),
       annulus=st.booleans())
def _homogeneity(seed, t, sign, annulus):
    domain = A3 if annulus else B3
    g = MetricData.euclidean(domain)
    grids = problem_grids(domain, 10)
    tr = _random_trace(domain, np.random.default_rng(seed))
    err = _rel(boundary_quotient(domain, g, tr.scaled(sign * t), grids), boundary_quotient(domain, g, tr, grids))
    _INVARIANCE.setdefault("Q(t phi)", []).append(err)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2**31), eps=st.floats(-1.0, 1.0), annulus=st.booleans())
def _harmonic_replacement(seed, eps, annulus):
    domain = A3 if annulus else B3
    g = MetricData.euclidean(domain)
    grids = problem_grids(domain, 12)
    rng = np.random.default_rng(seed)
    tr = _random_trace(domain, rng)
    u = harmonic_extension(domain, tr)
    w = rng.standard_normal(3)
    a = domain.r_in if annulus else 0.0

    # b vanishes on every boundary sphere
    def b(p):
        s = np.sqrt(np.sum(p**2, axis=1))
        return (1 - s**2) * (s**2 - a**2) * (1 + 0.5 * p @ w) if annulus else (1 - s**2) * (1 + 0.5 * p @ w)

    def db(p):
        s2 = np.sum(p**2, axis=1)
        lin = 1 + 0.5 * p @ w
        if annulus:
            f = (1 - s2) * (s2 - a**2)
            df = (2 * (a**2 + 1) - 4 * s2)[:, None] * p
        else:
            f = 1 - s2
            df = -2 * p
        return df * lin[:, None] + 0.5 * f[:, None] * w

    other = ClosedFormFactor("u+b", {}, 3, lambda p: u.value(p) + eps * b(p),
                             lambda p: u.gradient(p) + eps * db(p), lambda p: np.full(len(p), np.nan))
    gap = boundary_quotient(domain, g, tr, grids) - boundary_quotient(domain, g, other, grids)
    _INVARIANCE.setdefault("Q(harm) <= Q(phi)", []).append(gap)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2**31), annulus=st.booleans())
def _conformal_covariance(seed, annulus):
    domain = A3 if annulus else B3
    g = MetricData.euclidean(domain)
    grids = problem_grids(domain, 16)
    tr = _random_trace(domain, np.random.default_rng(seed), L=2)
    q = boundary_quotient(domain, g, tr, grids)
    e = yamabe_energy(domain, conformal_change(g, harmonic_extension(domain, tr)), grids).energy
    _INVARIANCE.setdefault("Q_g(phi) = E(phi^(4/(n-2)) g)", []).append(_rel(q, e))


def test_10_invariance_suite(criterion):
    _INVARIANCE.clear()
    for prop in (_scale_invariance, _homogeneity, _harmonic_replacement, _conformal_covariance):
        prop()
    tol = 1e-8
    parts, ok = [], True
    for name, vals in _INVARIANCE.items():
        vals = np.asarray(vals)
        good = bool(np.all(vals <= tol)) and vals.size >= 50
        ok &= good
        parts.append(f"{name}: {vals.size} cases, worst {vals.max():.1e}")
    criterion(10, ok and len(_INVARIANCE) == 4, "; ".join(parts))


_RANK = {"inconclusive": 0, "type_II_yamabe": 1, "unique_type_II_yamabe": 2}


def test_11_checkers(criterion):
    golden = [
        check_theorem1(Theorem1Input(3, 1.0, 1.0, 2.0, 2.0, 1.0)).conclusion == "type_II_yamabe",
        check_theorem1(Theorem1Input(3, 1.0, 0.1, 2.0, 1.0, 0.4)).conclusion == "unique_type_II_yamabe",
        check_theorem1(Theorem1Input(3, 1.0, 0.2, 2.0, 1.0, 0.4)).conclusion == "inconclusive",
        check_nonpositive_uniqueness(0.0, 0.0, 0.0).applicable,
        check_nonpositive_uniqueness(0.0, -1.0, -3.0).applicable,
        not check_nonpositive_uniqueness(0.0, -1.0, 0.0).applicable,
        check_cr_theorem(1.0, 2.0, 2.0, 1.0).conclusion == "cr_yamabe",
        check_cr_theorem(1.0, 1.0, 2.0, 0.9).conclusion == "unique_cr_yamabe",
        check_cr_theorem(1.0, 1.0, 2.0, 1.1).conclusion == "inconclusive",
    ]
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        gamma_, C, Hg, Hh = rng.uniform(0.2, 5), rng.uniform(0.01, 3), rng.uniform(0.1, 5), rng.uniform(0.1, 5)
        ratio = rng.uniform(0.1, 1.5)
        base = check_theorem1(Theorem1Input(n, gamma_, C, Hg, Hh, ratio))
        pert = check_theorem1(Theorem1Input(n, gamma_, C * rng.uniform(0, 1), Hg, Hh, ratio * rng.uniform(0, 1)))
        violations += _RANK[pert.conclusion] < _RANK[base.conclusion]
    ok = all(golden) and violations == 0
    criterion(11, ok, f"golden {sum(golden)}/{len(golden)}, monotonicity violations {violations}/100")
