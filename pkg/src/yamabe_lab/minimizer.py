"""
Minimization of Q_g over boundary traces.

For a scalar-flat metric, Y_II is the infimum of Q_g over harmonic
functions, so the search space is the vector of trace coefficients and
every candidate is its harmonic extension.  The Dirichlet term is an exact
quadratic form; the boundary terms are evaluated on a sphere grid fine enough
to integrate |phi|^{2(n-1)/(n-2)} exactly for band-limited traces (n = 3).
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .discretization import SphericalHarmonicBasis, boundary_quadrature, radial_volume_quadrature
from .domains import ConformalFactor, Domain, MetricData, conformal_mean_curvature
from .errors import DivergenceError, DomainError, PreconditionError
from .harmonic import BoundaryTrace, HarmonicFactor, dirichlet_form, harmonic_extension, laplacian_residual

logger = logging.getLogger("yamabe_lab")

__all__ = [
    "ELResidual",
    "MinimizerConfig",
    "MinimizerResult",
    "RatioReport",
    "TraceProblem",
    "euler_lagrange_residual",
    "minimize_Q",
    "multi_start",
    "random_trace",
    "uniqueness_experiment",
]


@dataclass(frozen=True)
class MinimizerConfig:
    L_max: int = 8
    step: str = "backtracking"  # or "fixed"
    step_size: float = 1.0
    armijo: float = 1e-4
    shrink: float = 0.5
    grow: float = 2.0
    grad_tol: float = 1e-8
    max_iters: int = 5000
    seed: int = 0
    quad_order: Optional[int] = None

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise DomainError("grad_tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.L_max < 0:
            raise DomainError("L_max must be >= 0")
        if self.step not in ("backtracking", "fixed"):
            raise DomainError(f"unknown step rule {self.step!r}")


class TraceProblem:
    """Q_g as a smooth function of the stacked trace coefficients."""

    def __init__(self, domain: Domain, metric: MetricData, L_max: int, quad_order: Optional[int] = None):
        if domain.kind not in ("ball", "annulus"):
            raise PreconditionError("trace minimization needs a ball or an annulus")
        if domain.n != 3 and L_max != 0:
            raise PreconditionError("only radial traces (L_max = 0) are supported for n != 3")
        if not metric.is_flat:
            raise PreconditionError("trace minimization needs the Euclidean background measure")
        self.domain, self.metric, self.L_max = domain, metric, L_max
        n = self.n = domain.n
        self.tau = 2.0 * (n - 1) / (n - 2)
        self.kappa = 4.0 * (n - 1) / (n - 2)
        vol = radial_volume_quadrature(domain, max(4, L_max + 2), max(2, L_max + 1))
        if np.max(np.abs(metric.R(vol.nodes))) > 1e-12:
            raise PreconditionError("metric is not scalar-flat; the harmonic reduction does not apply")
        self.volume_grid = vol
        order = quad_order or (2 * L_max + 2)
        self.grids = boundary_quadrature(domain, order)
        comps = self.comps = domain.components
        if n == 3:
            basis = SphericalHarmonicBasis(L_max)
            degrees = basis.degrees
            self.E = {c: basis.evaluate(self.grids[c].theta, self.grids[c].phi) for c in comps}
        else:
            degrees = np.zeros(1, dtype=int)
            self.E = {c: np.ones((1, 1)) for c in comps}
        self.size = len(degrees)
        self.dim = self.size * len(comps)
        self.w = {c: self.grids[c].weights for c in comps}
        self.H = {c: metric.H[c](self.grids[c].nodes) for c in comps}
        K = np.zeros((self.dim, self.dim))
        forms = {}
        for j, l in enumerate(degrees):
            if l not in forms:
                forms[l] = dirichlet_form(domain, int(l))
            for a in range(len(comps)):
                for b in range(len(comps)):
                    K[a * self.size + j, b * self.size + j] = forms[l][a, b]
        self.K = K
        self.boundary_volume = sum(self.w[c].sum() for c in comps)

    def _split(self, c):
        return [c[i * self.size:(i + 1) * self.size] for i in range(len(self.comps))]

    def parts(self, c):
        c = np.asarray(c, dtype=float)
        num = self.kappa * c @ self.K @ c
        G = 0.0
        for comp, ci in zip(self.comps, self._split(c)):
            v = self.E[comp] @ ci
            num += 2.0 * np.dot(self.w[comp], self.H[comp] * v * v)
            G += np.dot(self.w[comp], np.abs(v) ** self.tau)
        return num, G

    def value(self, c) -> float:
        num, G = self.parts(c)
        if not G > 0:
            raise DomainError("trace vanishes on the boundary")
        return float(num / G ** (2.0 / self.tau))

    def gradient(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        num, G = self.parts(c)
        dnum = 2.0 * self.kappa * (self.K @ c)
        dG = np.zeros_like(c)
        for i, (comp, ci) in enumerate(zip(self.comps, self._split(c))):
            v = self.E[comp] @ ci
            sl = slice(i * self.size, (i + 1) * self.size)
            dnum[sl] += 4.0 * self.E[comp].T @ (self.w[comp] * self.H[comp] * v)
            dG[sl] = self.tau * self.E[comp].T @ (self.w[comp] * np.abs(v) ** (self.tau - 2.0) * v)
        den = G ** (2.0 / self.tau)
        dden = (2.0 / self.tau) * G ** (2.0 / self.tau - 1.0) * dG
        return dnum / den - num * dden / den**2

    def constraint_gradient(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        dG = np.zeros_like(c)
        for i, (comp, ci) in enumerate(zip(self.comps, self._split(c))):
            v = self.E[comp] @ ci
            sl = slice(i * self.size, (i + 1) * self.size)
            dG[sl] = self.tau * self.E[comp].T @ (self.w[comp] * np.abs(v) ** (self.tau - 2.0) * v)
        return dG

    def normalize(self, c) -> np.ndarray:
        """Rescale so that int |phi|^tau dA = Vol(dM); exact by homogeneity."""
        _, G = self.parts(c)
        if not G > 0:
            raise DomainError("trace vanishes on the boundary")
        return np.asarray(c) * (self.boundary_volume / G) ** (1.0 / self.tau)

    def projected_gradient(self, c) -> np.ndarray:
        g = self.gradient(c)
        dG = self.constraint_gradient(c)
        return g - (g @ dG) / (dG @ dG) * dG

    def trace(self, c) -> BoundaryTrace:
        return BoundaryTrace.from_vector(self.domain, c, self.L_max)

    def is_positive(self, c) -> bool:
        u = harmonic_extension(self.domain, self.trace(c))
        for comp in self.comps:
            if np.any(u.value(self.grids[comp].nodes) <= 0):
                return False
        return bool(np.all(u.value(self.volume_grid.nodes) > 0))


@dataclass
class MinimizerResult:
    trace: BoundaryTrace
    energy: float
    iterations: int
    grad_norm_history: list
    energy_history: list
    converged: bool
    positive: bool
    config: MinimizerConfig = field(repr=False, default=None)

    def history_csv(self) -> str:
        """Iteration history as CSV text with columns iter, energy, grad_norm."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "energy", "grad_norm"])
        for i, (e, g) in enumerate(zip(self.energy_history, self.grad_norm_history)):
            writer.writerow([i, repr(float(e)), repr(float(g))])
        return buf.getvalue()

    def extension(self) -> HarmonicFactor:
        return harmonic_extension(self.trace.domain, self.trace)


def _pad_trace(trace: BoundaryTrace, L_max: int) -> np.ndarray:
    if trace.domain.n != 3:
        return trace.vector
    size = (L_max + 1) ** 2
    out = []
    for comp in trace.domain.components:
        c = np.zeros(size)
        m = min(size, trace.coeffs[comp].size)
        c[:m] = trace.coeffs[comp][:m]
        out.append(c)
    return np.concatenate(out)


def minimize_Q(domain: Domain, metric: MetricData, init: BoundaryTrace,
               config: MinimizerConfig = MinimizerConfig()) -> MinimizerResult:
    """Projected gradient descent for Q_g on {int |phi|^tau dA = Vol(dM)}.

    Each step moves along the gradient projected onto the tangent space of
    the constraint and then rescales back onto it.  With the backtracking
    rule every accepted step satisfies the Armijo condition, so the energy
    history is nonincreasing.  Once the Armijo decrease drops below the
    rounding level of Q, a step is accepted if it leaves Q unchanged to
    rounding and lowers the projected gradient norm; function values alone
    cannot resolve the last digits of a minimizer.
    """
    problem = TraceProblem(domain, metric, config.L_max, config.quad_order)
    c = problem.normalize(_pad_trace(init, config.L_max))
    q = problem.value(c)
    g = problem.projected_gradient(c)
    gnorm = float(np.linalg.norm(g))
    energies, gnorms = [q], [gnorm]
    alpha = config.step_size
    it = 0
    converged = gnorm <= config.grad_tol
    while not converged and it < config.max_iters:
        g_new = None
        if config.step == "fixed":
            c_new = problem.normalize(c - alpha * g)
            q_new = problem.value(c_new)
        else:
            noise = 16.0 * np.finfo(float).eps * max(1.0, abs(q))
            while True:
                c_new = problem.normalize(c - alpha * g)
                q_new = problem.value(c_new)
                if abs(q_new - q) <= noise:
                    g_new = problem.projected_gradient(c_new)
                    if np.linalg.norm(g_new) < gnorm:
                        break
                    g_new = None
                elif q_new <= q - config.armijo * alpha * gnorm**2:
                    break
                alpha *= config.shrink
                if alpha < 1e-16:
                    break
            if alpha < 1e-16:
                logger.info("line search stalled at iteration %d", it)
                break
        if q_new < -1e6:
            raise DivergenceError(f"Q fell to {q_new} at iteration {it}; Y_II is probably -inf")
        it += 1
        c, q = c_new, q_new
        g = problem.projected_gradient(c) if g_new is None else g_new
        gnorm = float(np.linalg.norm(g))
        energies.append(q)
        gnorms.append(gnorm)
        converged = gnorm <= config.grad_tol
        if config.step == "backtracking":
            alpha *= config.grow
    return MinimizerResult(problem.trace(c), q, it, gnorms, energies, converged,
                           problem.is_positive(c), config)


def random_trace(domain: Domain, L_max: int, rng: np.random.Generator, amplitude: float = 0.2) -> BoundaryTrace:
    """Constant trace 1 plus random coefficients of relative size ``amplitude``."""
    base = BoundaryTrace.constant(domain, 1.0, L_max)
    vec = base.vector + amplitude * rng.standard_normal(base.vector.size) * (
        np.sqrt(4 * np.pi) / max(1, base.size) if domain.n == 3 else 1.0)
    return BoundaryTrace.from_vector(domain, vec, L_max)


def _threads() -> int:
    env = os.environ.get("YAMABE_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def multi_start(domain: Domain, metric: MetricData, config: MinimizerConfig, seeds: Sequence[int],
                amplitude: float = 0.2) -> list:
    """Independent minimizations from random initial traces, one per seed.

    Runs concurrently (capped by YAMABE_LAB_THREADS); results are returned
    in seed order and do not depend on scheduling.
    """

    def run(seed):
        rng = np.random.default_rng(seed)
        init = random_trace(domain, config.L_max, rng, amplitude)
        return minimize_Q(domain, metric, init, config)

    with ThreadPoolExecutor(max_workers=min(_threads(), len(seeds))) as pool:
        return list(pool.map(run, seeds))


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class ELResidual:
    interior_residual: float
    boundary_residual: float
    boundary_residual_field: dict
    c: float
    H_bar_mean: float
    H_bar_constancy: float


def euler_lagrange_residual(domain: Domain, metric: MetricData, trace, order: int = 40) -> ELResidual:
    """Residuals of the critical-point equations of Q_g at a positive u.

    Interior: max |Delta u| (spectral for harmonic extensions, analytic for
    closed forms).  Boundary: the residual of
    (2(n-1)/(n-2)) du/dnu + H u = c u^{n/(n-2)} with the least-squares c.
    ``trace`` is a BoundaryTrace (harmonically extended) or a ConformalFactor.
    """
    n = domain.n
    if not metric.is_flat:
        raise PreconditionError("residuals are evaluated against the Euclidean background")
    u = harmonic_extension(domain, trace) if isinstance(trace, BoundaryTrace) else trace
    grids = boundary_quadrature(domain, order)
    vol = radial_volume_quadrature(domain, 4, 4)
    if isinstance(u, HarmonicFactor):
        interior = float(np.max(np.abs(laplacian_residual(u, vol.nodes))))
    else:
        interior = float(np.max(np.abs(u.laplacian(vol.nodes))))
    k = 2.0 * (n - 1) / (n - 2)
    p = n / (n - 2)
    lhs, rhs_base, weights, hbar, area = {}, {}, {}, {}, {}
    for comp in domain.components:
        g = grids[comp]
        val = u.value(g.nodes)
        if np.any(val <= 0):
            i = int(np.argmin(val))
            raise DomainError(f"u is not positive on {comp} boundary at {g.nodes[i]}")
        dn = u.normal_derivative(domain, comp, g.nodes)
        H = metric.H[comp](g.nodes)
        lhs[comp] = k * dn + H * val
        rhs_base[comp] = val**p
        weights[comp] = g.weights
        hbar[comp] = conformal_mean_curvature(H, val, dn, n)
        area[comp] = g.weights * val ** (2.0 * (n - 1) / (n - 2))
    num = sum(np.dot(weights[c], lhs[c] * rhs_base[c]) for c in lhs)
    den = sum(np.dot(weights[c], rhs_base[c] ** 2) for c in lhs)
    cfit = num / den
    field = {c: lhs[c] - cfit * rhs_base[c] for c in lhs}
    bres = max(float(np.max(np.abs(f))) for f in field.values())
    allh = np.concatenate([hbar[c] for c in hbar])
    allw = np.concatenate([area[c] for c in hbar])
    mean = float(np.dot(allw, allh) / allw.sum())
    return ELResidual(interior, bres, field, float(cfit), mean, float(np.max(np.abs(allh - mean))))


@dataclass(frozen=True)
class RatioReport:
    max_ratio: float
    min_ratio: float
    ratio_spread: float
    nonpositive_uniqueness_applicable: bool


def uniqueness_experiment(domain: Domain, metric: MetricData, result_a: MinimizerResult,
                          result_b: MinimizerResult, order: int = 12) -> RatioReport:
    """Compare two minimizers: spread of u_a/u_b over interior and boundary nodes.

    A spread of 0 means the two metrics agree up to a constant rescaling.
    """
    ua, ub = result_a.extension(), result_b.extension()
    pts = [radial_volume_quadrature(domain, order, order).nodes]
    pts += [g.nodes for g in boundary_quadrature(domain, order).values()]
    pts = np.vstack(pts)
    va, vb = ua.value(pts), ub.value(pts)
    if np.any(va <= 0) or np.any(vb <= 0):
        raise DomainError("uniqueness comparison needs positive extensions")
    ratio = va / vb
    hs = np.concatenate([metric.H[c](g.nodes) for c, g in boundary_quadrature(domain, 4).items()])
    applicable = bool(np.ptp(hs) <= 1e-9 and hs.max() <= 0)
    return RatioReport(float(ratio.max()), float(ratio.min()), float(ratio.max() / ratio.min() - 1.0), applicable)
