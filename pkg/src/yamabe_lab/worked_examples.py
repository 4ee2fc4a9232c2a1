"""
Closed-form model examples: the Schwarzschild annulus, Escobar's family of
solutions on the unit ball, and the ball with a bump.

Schwarzschild annulus
---------------------
g_{r,m} = (1 + m/(2|x|^{n-2}))^{4/(n-2)} delta on A_{r,1} = {r <= |x| <= 1}.
Applying the conformal mean-curvature law to the inner sphere (outward
normal towards the origin, Euclidean H = -(n-1)/r) gives

    H_inner = (n-1) (m/r^{n-1} - (1/r)(1 + m/(2 r^{n-2}))) (1 + m/(2r^{n-2}))^{-n/(n-2)},

which vanishes on the horizon r^{n-2} = m/2.  The often-quoted form without
the 1/r on the second term agrees only at r = 1; it is kept as
``*_quoted`` variants for comparison, but all defaults use the form above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import problem_grids, sphere_quadrature, sphere_volume
from .domains import (
    BumpProfile,
    ClosedFormFactor,
    Domain,
    MetricData,
    conformal_change,
    second_fundamental_form_revolution,
    umbilicity_defect,
)
from .energy import boundary_quotient, yamabe_energy
from .errors import DomainError, PreconditionError

__all__ = [
    "EscobarParams",
    "M0Report",
    "SchwarzschildParams",
    "bump_ball_demo",
    "escobar_factor",
    "escobar_quotient",
    "escobar_residual",
    "escobar_solution",
    "euclidean_annulus_energy",
    "find_m0",
    "schwarzschild_energy",
    "schwarzschild_energy_limit",
    "schwarzschild_energy_limit_quoted",
    "schwarzschild_energy_pipeline",
    "schwarzschild_energy_quoted",
    "schwarzschild_factor",
    "schwarzschild_mean_curvatures",
    "schwarzschild_mean_curvatures_quoted",
    "schwarzschild_metric",
]


@dataclass(frozen=True)
class SchwarzschildParams:
    n: int
    r: float
    m: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError("n must be an integer >= 3")
        if not 0 < self.r < 1:
            raise DomainError("r must lie in (0, 1)")
        if self.m < 0:
            raise DomainError("mass parameter must be >= 0")


def schwarzschild_factor(n: int, m: float) -> ClosedFormFactor:
    """u(x) = 1 + m / (2 |x|^{n-2}), harmonic away from the origin."""
    p = n - 2
    return ClosedFormFactor.radial(
        lambda r: 1.0 + m / (2.0 * r**p),
        lambda r: -p * m / (2.0 * r ** (p + 1)),
        lambda r: p * (p + 1) * m / (2.0 * r ** (p + 2)),
        n, "schwarzschild", {"m": m},
    )


def schwarzschild_metric(p: SchwarzschildParams) -> MetricData:
    """MetricData of g_{r,m} built through the conformal-change laws."""
    domain = Domain.annulus(p.n, p.r, 1.0)
    return conformal_change(MetricData.euclidean(domain), schwarzschild_factor(p.n, p.m))


def _u(n, r, m):
    return 1.0 + m / (2.0 * r ** (n - 2))


def schwarzschild_mean_curvatures(p: SchwarzschildParams) -> tuple:
    """(H_inner, H_outer) of g_{r,m}."""
    n, r, m = p.n, p.r, p.m
    ur, uo = _u(n, r, m), _u(n, 1.0, m)
    h_in = (n - 1) * (m / r ** (n - 1) - ur / r) * ur ** (-n / (n - 2))
    h_out = (n - 1) * (1.0 - m / 2.0) * uo ** (-n / (n - 2))
    return h_in, h_out


def schwarzschild_mean_curvatures_quoted(p: SchwarzschildParams) -> tuple:
    """Variant with H_inner = (n-1)(m/r^{n-1} - (1 + m/(2r^{n-2})))(...)^{-n/(n-2)};
    not the mean curvature of g_{r,m} unless r = 1."""
    n, r, m = p.n, p.r, p.m
    ur, uo = _u(n, r, m), _u(n, 1.0, m)
    h_in = (n - 1) * (m / r ** (n - 1) - ur) * ur ** (-n / (n - 2))
    h_out = (n - 1) * (1.0 - m / 2.0) * uo ** (-n / (n - 2))
    return h_in, h_out


def _denominator(n, r, m):
    t = 2.0 * (n - 1) / (n - 2)
    vol = sphere_volume(n)
    return ((_u(n, 1.0, m) ** t + _u(n, r, m) ** t * r ** (n - 1)) * vol) ** ((n - 2) / (n - 1))


def schwarzschild_energy(p: SchwarzschildParams) -> float:
    """E(g_{r,m}) in closed form:

    2(n-1) Vol(S^{n-1}) {(m - r^{n-2} - m/2) u(r) + 1 - m^2/4} / [Vol(S^{n-1}) (u(1)^t + u(r)^t r^{n-1})]^{(n-2)/(n-1)}

    with t = 2(n-1)/(n-2).
    """
    n, r, m = p.n, p.r, p.m
    num = 2.0 * (n - 1) * sphere_volume(n) * ((m - r ** (n - 2) - m / 2.0) * _u(n, r, m) + 1.0 - m * m / 4.0)
    return num / _denominator(n, r, m)


def schwarzschild_energy_quoted(p: SchwarzschildParams) -> float:
    """Energy computed from :func:`schwarzschild_mean_curvatures_quoted`,
    i.e. with inner term (m - r^{n-1} - (m/2) r) u(r)."""
    n, r, m = p.n, p.r, p.m
    num = 2.0 * (n - 1) * sphere_volume(n) * ((m - r ** (n - 1) - m * r / 2.0) * _u(n, r, m) + 1.0 - m * m / 4.0)
    return num / _denominator(n, r, m)


def euclidean_annulus_energy(n: int, r: float) -> float:
    """E(delta|A_{r,1}) = 2(n-1)(1 - r^{n-2}) Vol / ((1 + r^{n-1}) Vol)^{(n-2)/(n-1)}."""
    vol = sphere_volume(n)
    return 2.0 * (n - 1) * (1.0 - r ** (n - 2)) * vol / ((1.0 + r ** (n - 1)) * vol) ** ((n - 2) / (n - 1))


def schwarzschild_energy_limit(n: int, r: float) -> float:
    """lim_{m -> inf} E(g_{r,m}).  By the inversion symmetry of the
    Schwarzschild metric this equals the Euclidean annulus energy."""
    return euclidean_annulus_energy(n, r)


def schwarzschild_energy_limit_quoted(n: int, r: float) -> float:
    """m -> inf limit of :func:`schwarzschild_energy_quoted`:
    2(n-1)(2 - r - r^{n-2}) Vol / ((1 + r^{n-1}) Vol)^{(n-2)/(n-1)}."""
    vol = sphere_volume(n)
    return 2.0 * (n - 1) * (2.0 - r - r ** (n - 2)) * vol / ((1.0 + r ** (n - 1)) * vol) ** ((n - 2) / (n - 1))


def schwarzschild_energy_pipeline(p: SchwarzschildParams, order: int = 4):
    """E(g_{r,m}) from the definition: conformal change of the Euclidean
    MetricData followed by quadrature.  Returns the EnergyReport."""
    metric = schwarzschild_metric(p)
    return yamabe_energy(metric.domain, metric, problem_grids(metric.domain, order))


@dataclass(frozen=True)
class M0Report:
    n: int
    r: float
    m0: float
    euclid_energy: float
    probe_max: float
    probes: int
    exceeds_for_all_probed: bool
    formula: str


_ENERGY = {"geometric": schwarzschild_energy, "quoted": schwarzschild_energy_quoted}


def find_m0(n: int, r: float, tol: float = 1e-8, probe_max: float = 1e8, probes: int = 4001,
            formula: str = "geometric") -> M0Report:
    """Smallest m such that E(g_{r,m'}) > E(delta) for every probed m' in [m, probe_max].

    Probes a log grid on [tol, probe_max]; the threshold is refined by
    bisection between the last failing probe and the first probe of the
    final all-passing run.  Raises if E(g_{r,m}) never exceeds E(delta).
    ``formula`` selects the geometric energy or the ``quoted`` variant.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    energy = _ENERGY[formula]
    e0 = euclidean_annulus_energy(n, r)
    ms = np.concatenate([[0.0], np.logspace(np.log10(tol), np.log10(probe_max), probes)])
    gaps = np.array([energy(SchwarzschildParams(n, r, m)) - e0 for m in ms])
    above = gaps > 0
    if not above[-1]:
        raise PreconditionError(
            f"E(g_{{r,m}}) does not exceed E(delta) = {e0} at m = {probe_max} (n={n}, r={r});"
            f" largest gap over probes {gaps[1:].max():.3e}")
    # start of the final run of passing probes
    failing = np.flatnonzero(~above[1:]) + 1
    if failing.size == 0:
        m0 = 0.0
    else:
        lo, hi = ms[failing[-1]], ms[failing[-1] + 1]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if energy(SchwarzschildParams(n, r, mid)) > e0:
                hi = mid
            else:
                lo = mid
        m0 = hi
    return M0Report(n, r, float(m0), e0, probe_max, probes, bool(np.all(above[1:])), formula)


# ---------------------------------------------------------------------------
# Escobar's family on the unit ball


@dataclass(frozen=True)
class EscobarParams:
    n: int
    a: tuple

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (self.n,):
            raise DomainError(f"a must have {self.n} components")
        if np.dot(a, a) >= 1:
            raise DomainError("|a| must be < 1")
        object.__setattr__(self, "a", tuple(a.tolist()))


def escobar_factor(p: EscobarParams) -> ClosedFormFactor:
    """u_a(x) = [2/(n-2) (1-|a|^2)/(1 + |a|^2|x|^2 - 2 x.a)]^{(n-2)/2} with exact derivatives."""
    n = p.n
    a = np.asarray(p.a)
    a2 = float(a @ a)
    e = (n - 2) / 2.0
    K = (2.0 / (n - 2) * (1.0 - a2)) ** e

    def D(x):
        return 1.0 + a2 * np.einsum("ij,ij->i", x, x) - 2.0 * x @ a

    def value(x):
        return K * D(x) ** -e

    def gradient(x):
        gD = 2.0 * a2 * x - 2.0 * a
        return (-e * K * D(x) ** (-e - 1.0))[:, None] * gD

    def laplacian(x):
        d = D(x)
        gD = 2.0 * a2 * x - 2.0 * a
        g2 = np.einsum("ij,ij->i", gD, gD)
        return e * K * d ** (-e - 2.0) * ((e + 1.0) * g2 - d * 2.0 * n * a2)

    return ClosedFormFactor("escobar", {"a": list(p.a)}, n, value, gradient, laplacian)


def escobar_solution(p: EscobarParams, x) -> np.ndarray:
    """u_a at the point(s) x of the closed unit ball."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(np.einsum("ij,ij->i", x, x) > 1.0 + 1e-12):
        raise DomainError("x must lie in the closed unit ball")
    return escobar_factor(p).value(x)


def escobar_residual(p: EscobarParams, grid=None, interior=None) -> tuple:
    """(max |Delta u_a| on interior nodes,
        max |du/dnu + (n-2)/2 u - ((n-2)/2)^2 u^{n/(n-2)}| on the unit sphere).

    Defaults: n = 3 uses a sphere grid of order 24 and a shell of interior
    points; other n use random points.
    """
    n = p.n
    u = escobar_factor(p)
    rng = np.random.default_rng(0)
    if grid is None:
        if n == 3:
            grid = sphere_quadrature(24).nodes
        else:
            g = rng.standard_normal((400, n))
            grid = g / np.linalg.norm(g, axis=1, keepdims=True)
    if interior is None:
        d = rng.standard_normal((400, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        interior = d * rng.uniform(0.05, 0.99, size=(400, 1))
    lap = float(np.max(np.abs(u.laplacian(interior))))
    x = np.atleast_2d(grid)
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    val = u.value(x)
    dn = np.einsum("ij,ij->i", u.gradient(x), x)
    h = (n - 2) / 2.0
    bres = float(np.max(np.abs(dn + h * val - h * h * val ** (n / (n - 2)))))
    return lap, bres


def escobar_quotient(p: EscobarParams, order: int = 96, radial_order: int = 64) -> float:
    """Q_delta(u_a) on the unit ball by quadrature (n = 3)."""
    if p.n != 3:
        raise PreconditionError("quadrature of non-radial factors is only available for n = 3")
    domain = Domain.ball(3)
    grids = problem_grids(domain, order, radial_order)
    return boundary_quotient(domain, MetricData.euclidean(domain), escobar_factor(p), grids)


# ---------------------------------------------------------------------------
# Bump ball


def bump_ball_demo(amplitude: float, width: float, center: float = np.pi / 2, samples: int = 721):
    """Umbilicity defect along the meridian of the bump-ball boundary.

    Returns (max_defect, thetas, defects).  The defect vanishes wherever the
    surface is the round unit sphere.
    """
    if amplitude < 0:
        raise DomainError("amplitude must be >= 0")
    profile = BumpProfile(amplitude, width, center)
    thetas = np.linspace(1e-3, np.pi - 1e-3, samples)
    defects = np.array([umbilicity_defect(second_fundamental_form_revolution(profile, t)) for t in thetas])
    return float(defects.max()), thetas, defects
