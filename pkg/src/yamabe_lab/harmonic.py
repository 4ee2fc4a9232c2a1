"""
Harmonic extension of boundary traces on balls and annuli, their Dirichlet
energies, and Steklov (Dirichlet-to-Neumann) spectra.

On S^2 a trace is a vector of real spherical-harmonic coefficients per
boundary component; each mode (l, m) extends as a r^l + b r^{-(l+n-2)}.
For n > 3 only radial traces are supported and the single "coefficient" of
a component is simply the constant boundary value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.linalg import eigh

from .discretization import (
    SphericalHarmonicBasis,
    boundary_quadrature,
    cartesian_to_angles,
    sphere_quadrature,
    sphere_volume,
)
from .domains import ConformalFactor, Domain
from .errors import DomainError, PreconditionError

__all__ = [
    "BoundaryTrace",
    "HarmonicFactor",
    "NondegeneracyVerdict",
    "SteklovSpectrum",
    "dirichlet_energy",
    "dirichlet_form",
    "dtn_matrix_bruteforce",
    "harmonic_dimension",
    "harmonic_extension",
    "laplacian_residual",
    "mode_dtn",
    "nondegeneracy_check",
    "steklov_spectrum",
]


def harmonic_dimension(l: int, n: int) -> int:
    """Dimension of the degree-l spherical harmonics on S^{n-1}."""
    if l == 0:
        return 1
    if l == 1:
        return n
    return comb(l + n - 1, n - 1) - comb(l + n - 3, n - 1)


def _check_supported(domain: Domain):
    if domain.kind not in ("ball", "annulus"):
        raise PreconditionError(f"harmonic analysis is implemented for balls and annuli, not {domain.kind}")


@dataclass(frozen=True)
class BoundaryTrace:
    """Boundary values per component.

    n = 3: ``coeffs[comp]`` holds (L_max+1)^2 real spherical-harmonic
    coefficients on the unit-sphere basis.  n > 3: a length-1 array with the
    constant value on that component.
    """

    domain: Domain
    coeffs: dict
    L_max: int = 0

    def __post_init__(self):
        _check_supported(self.domain)
        if set(self.coeffs) != set(self.domain.components):
            raise DomainError(f"trace components {sorted(self.coeffs)} != {sorted(self.domain.components)}")
        size = self.size
        if self.domain.n != 3 and self.L_max != 0:
            raise DomainError("only radial traces (L_max = 0) are supported for n != 3")
        fixed = {}
        for comp, c in self.coeffs.items():
            c = np.asarray(c, dtype=float).ravel()
            if c.size != size:
                raise DomainError(f"component {comp!r} has {c.size} coefficients, expected {size}")
            fixed[comp] = c
        object.__setattr__(self, "coeffs", fixed)
        if not any(np.any(c != 0) for c in fixed.values()):
            raise DomainError("trace is identically zero")

    @property
    def size(self) -> int:
        return (self.L_max + 1) ** 2 if self.domain.n == 3 else 1

    @property
    def vector(self) -> np.ndarray:
        """All coefficients stacked in ``domain.components`` order."""
        return np.concatenate([self.coeffs[c] for c in self.domain.components])

    @classmethod
    def from_vector(cls, domain: Domain, vector, L_max: int) -> "BoundaryTrace":
        vector = np.asarray(vector, dtype=float)
        size = (L_max + 1) ** 2 if domain.n == 3 else 1
        comps = domain.components
        if vector.size != size * len(comps):
            raise DomainError("coefficient vector has the wrong length")
        return cls(domain, {c: vector[i * size:(i + 1) * size] for i, c in enumerate(comps)}, L_max)

    @classmethod
    def constant(cls, domain: Domain, value: float = 1.0, L_max: int = 0) -> "BoundaryTrace":
        return cls.radial(domain, {c: value for c in domain.components}, L_max)

    @classmethod
    def radial(cls, domain: Domain, values: dict, L_max: int = 0) -> "BoundaryTrace":
        """Trace that is constant on each component."""
        size = (L_max + 1) ** 2 if domain.n == 3 else 1
        scale = np.sqrt(4.0 * np.pi) if domain.n == 3 else 1.0
        coeffs = {}
        for comp in domain.components:
            c = np.zeros(size)
            c[0] = values[comp] * scale
            coeffs[comp] = c
        return cls(domain, coeffs, L_max)

    def scaled(self, t: float) -> "BoundaryTrace":
        return BoundaryTrace(self.domain, {k: t * v for k, v in self.coeffs.items()}, self.L_max)


def mode_dtn(domain: Domain, l: int) -> np.ndarray:
    """Dirichlet-to-Neumann matrix of mode l.

    Ball: the 1x1 matrix [[l/R]].  Annulus: the 2x2 map from (inner, outer)
    boundary values of a r^l + b r^{-(l+n-2)} to its outward normal
    derivatives (the inner normal points to the origin).
    """
    _check_supported(domain)
    n = domain.n
    if domain.kind == "ball":
        return np.array([[l / domain.r_out]])
    k = l + n - 2
    ri, ro = domain.r_in, domain.r_out
    det = ri**l * ro**-k - ri**-k * ro**l
    # rows: normal derivative on (inner, outer); columns: trace on (inner, outer)
    return np.array([
        [(-l * ri ** (l - 1) * ro**-k - k * ri ** (-k - 1) * ro**l) / det,
         (l * ri ** (l - 1) * ri**-k + k * ri ** (-k - 1) * ri**l) / det],
        [(l * ro ** (l - 1) * ro**-k + k * ro ** (-k - 1) * ro**l) / det,
         (-l * ro ** (l - 1) * ri**-k - k * ro ** (-k - 1) * ri**l) / det],
    ])


def _mode_weights(domain: Domain) -> np.ndarray:
    return np.array([domain.boundary_radius(c) ** (domain.n - 1) for c in domain.components])


def dirichlet_form(domain: Domain, l: int) -> np.ndarray:
    """Symmetric matrix K_l with  int |grad u|^2 = sum_l c_l^T K_l c_l.

    Includes the factor Vol(S^{n-1}) for radial traces in n != 3 (where the
    coefficients are boundary values rather than orthonormal coefficients).
    """
    K = _mode_weights(domain)[:, None] * mode_dtn(domain, l)
    K = 0.5 * (K + K.T)
    if domain.n != 3:
        K = K * sphere_volume(domain.n)
    return K


class HarmonicFactor(ConformalFactor):
    """Harmonic extension of a :class:`BoundaryTrace`, evaluated in closed form."""

    representation = "harmonic_coeffs"

    def __init__(self, trace: BoundaryTrace):
        self.trace = trace
        self.domain = domain = trace.domain
        self.n = n = domain.n
        self.L_max = trace.L_max
        if n == 3:
            self.basis = SphericalHarmonicBasis(trace.L_max)
            degrees = self.basis.degrees
        else:
            self.basis = None
            degrees = np.zeros(1, dtype=int)
        self.degrees = degrees
        self.k = degrees + n - 2
        comps = domain.components
        if domain.kind == "ball":
            R = domain.r_out
            self.A = trace.coeffs["outer"] / R**degrees
            self.B = np.zeros_like(self.A)
        else:
            ri, ro = domain.r_in, domain.r_out
            ci, co = trace.coeffs["inner"], trace.coeffs["outer"]
            l, k = degrees, self.k
            det = ri**l * ro**-k - ri**-k * ro**l
            if np.any(det == 0):
                raise RuntimeError("singular radial system in harmonic extension")
            self.A = (ci * ro**-k - co * ri**-k) / det
            self.B = (co * ri**l - ci * ro**l) / det
        del comps

    # radial profiles f(r) = A r^l + B r^{-k} and derivatives, shape (N, K)
    def _profiles(self, r):
        r = np.asarray(r, dtype=float)[:, None]
        l, k, A, B = self.degrees, self.k, self.A, self.B
        with np.errstate(divide="ignore", invalid="ignore"):
            rl = np.where(l == 0, 1.0, r ** l)
            rl1 = np.where(l == 0, 0.0, np.where(l == 1, 1.0, r ** (l - 1)))
            rl2 = np.where(l <= 1, 0.0, np.where(l == 2, 1.0, r ** (l - 2)))
            f = A * rl
            df = A * l * rl1
            ddf = A * l * (l - 1) * rl2
            if self.domain.kind == "annulus":
                f = f + B * r ** -k
                df = df - B * k * r ** (-k - 1)
                ddf = ddf + B * k * (k + 1) * r ** (-k - 2)
        return f, df, ddf

    def _angular(self, points, derivatives=False):
        if self.n == 3:
            theta, phi = cartesian_to_angles(points)
            if derivatives:
                return self.basis.evaluate_with_derivatives(theta, phi), theta, phi
            return (self.basis.evaluate(theta, phi), None, None), theta, phi
        N = len(points)
        one = np.ones((N, 1))
        return (one, 0 * one, 0 * one), None, None

    def value(self, points):
        points = np.atleast_2d(points)
        r = np.linalg.norm(points, axis=1)
        (Y, _, _), _, _ = self._angular(points)
        f, _, _ = self._profiles(r)
        return np.sum(f * Y, axis=1)

    def radial_derivative(self, points):
        points = np.atleast_2d(points)
        r = np.linalg.norm(points, axis=1)
        (Y, _, _), _, _ = self._angular(points)
        _, df, _ = self._profiles(r)
        return np.sum(df * Y, axis=1)

    def gradient(self, points):
        points = np.atleast_2d(points)
        r = np.linalg.norm(points, axis=1)
        if np.any(r == 0):
            raise DomainError("gradient of a harmonic factor is not evaluated at the origin")
        (Y, Yt, Yp), theta, phi = self._angular(points, derivatives=True)
        f, df, _ = self._profiles(r)
        e_r = points / r[:, None]
        grad = np.sum(df * Y, axis=1)[:, None] * e_r
        if self.n == 3:
            st, ct = np.sin(theta), np.cos(theta)
            sp, cp = np.sin(phi), np.cos(phi)
            e_t = np.column_stack([ct * cp, ct * sp, -st])
            e_p = np.column_stack([-sp, cp, np.zeros_like(sp)])
            ut = np.sum(f * Yt, axis=1) / r
            up = np.sum(f * Yp, axis=1) / (r * st)
            grad = grad + ut[:, None] * e_t + up[:, None] * e_p
        return grad

    def laplacian(self, points):
        points = np.atleast_2d(points)
        r = np.linalg.norm(points, axis=1)
        (Y, _, _), _, _ = self._angular(points)
        f, df, ddf = self._profiles(r)
        l = self.degrees
        lap = ddf + (self.n - 1) * df / r[:, None] - l * (l + self.n - 2) * f / r[:, None] ** 2
        return np.sum(lap * Y, axis=1)

    def boundary_values(self, component: str, grid) -> np.ndarray:
        return self.value(grid.nodes)


def harmonic_extension(domain: Domain, trace: BoundaryTrace) -> HarmonicFactor:
    """The harmonic function on ``domain`` with boundary values ``trace``."""
    if trace.domain != domain:
        raise DomainError("trace belongs to a different domain")
    if domain.kind == "ball" and set(trace.coeffs) != {"outer"}:
        raise DomainError("a ball has a single boundary component")
    return HarmonicFactor(trace)


def dirichlet_energy(domain: Domain, trace: BoundaryTrace) -> float:
    """int_M |grad u|^2 dx for the harmonic extension u of ``trace``."""
    _check_supported(domain)
    comps = domain.components
    total = 0.0
    degrees = SphericalHarmonicBasis(trace.L_max).degrees if domain.n == 3 else np.zeros(1, dtype=int)
    forms = {}
    for j, l in enumerate(degrees):
        if l not in forms:
            forms[l] = dirichlet_form(domain, int(l))
        c = np.array([trace.coeffs[comp][j] for comp in comps])
        total += c @ forms[l] @ c
    return float(total)


def laplacian_residual(u: HarmonicFactor, points, samples: int | None = None) -> np.ndarray:
    """Delta u at ``points`` with spectrally differentiated angular part.

    The radial part uses the exact radial profiles; the angular Laplacian
    u_tt + cot(t) u_t + u_pp / sin^2 t is obtained by exact trigonometric
    interpolation of u along the meridian great circle and the latitude
    circle through each point.  Nothing here uses the eigenvalue relation of
    spherical harmonics, so a nonzero result exposes a non-harmonic u.
    """
    points = np.atleast_2d(points)
    r = np.linalg.norm(points, axis=1)
    f, df, ddf = u._profiles(r)
    (Y, _, _), theta, phi = u._angular(points)
    radial = np.sum((ddf + (u.n - 1) * df / r[:, None]) * Y, axis=1)
    if u.n != 3:
        return radial
    M = samples or (2 * u.L_max + 4)
    t = 2.0 * np.pi * np.arange(M) / M
    st = np.sin(t)[None, :]
    ct = np.cos(t)[None, :]
    R = r[:, None]
    cp, sp = np.cos(phi)[:, None], np.sin(phi)[:, None]
    meridian = np.stack([R * st * cp, R * st * sp, R * ct * np.ones_like(cp)], axis=-1)
    s_theta, c_theta = np.sin(theta)[:, None], np.cos(theta)[:, None]
    latitude = np.stack([R * s_theta * ct, R * s_theta * st, R * c_theta * np.ones_like(st)], axis=-1)
    g = u.value(meridian.reshape(-1, 3)).reshape(len(r), M)
    h = u.value(latitude.reshape(-1, 3)).reshape(len(r), M)
    _, g1, g2 = _fourier_derivatives(g, theta)
    _, _, h2 = _fourier_derivatives(h, phi)
    st0 = np.sin(theta)
    angular = g2 + np.cos(theta) / st0 * g1 + h2 / st0**2
    return radial + angular / r**2


def _fourier_derivatives(samples, at):
    """Value, first and second derivative at ``at`` of the trigonometric
    interpolant of each row of ``samples`` (uniform on [0, 2 pi))."""
    M = samples.shape[1]
    c = np.fft.rfft(samples, axis=1) / M
    kk = np.arange(c.shape[1])
    wgt = np.where((kk == 0) | ((M % 2 == 0) & (kk == M // 2)), 1.0, 2.0)
    E = np.exp(1j * kk[None, :] * np.asarray(at)[:, None])
    v = np.real(np.sum(wgt * c * E, axis=1))
    d1 = np.real(np.sum(wgt * c * (1j * kk) * E, axis=1))
    d2 = np.real(np.sum(wgt * c * (-(kk**2)) * E, axis=1))
    return v, d1, d2


# ---------------------------------------------------------------------------
# Steklov spectra


@dataclass(frozen=True)
class SteklovSpectrum:
    """Steklov eigenvalues up to angular degree ``L_max`` with multiplicities.

    ``certified_below`` is the smallest eigenvalue of degree L_max + 1; no
    uncomputed eigenvalue lies below it.
    """

    domain: Domain
    L_max: int
    values: np.ndarray
    multiplicities: np.ndarray
    degrees: np.ndarray
    certified_below: float

    @property
    def eigenvalues(self) -> np.ndarray:
        """Sorted eigenvalues repeated by multiplicity."""
        return np.repeat(self.values, self.multiplicities)

    def distance_to(self, x: float) -> tuple:
        i = int(np.argmin(np.abs(self.values - x)))
        return float(abs(self.values[i] - x)), float(self.values[i])


def _mode_eigenvalues(domain, l):
    lam = np.linalg.eigvals(mode_dtn(domain, l))
    return np.sort(np.real(lam))


def steklov_spectrum(domain: Domain, L_max: int) -> SteklovSpectrum:
    """Steklov spectrum by separation of variables.

    Ball of radius R: l/R with multiplicity dim H_l.  Annulus: the two
    eigenvalues of each mode's 2x2 DtN matrix, multiplicity dim H_l.
    """
    _check_supported(domain)
    if L_max < 0:
        raise DomainError("L_max must be >= 0")
    vals, mults, degs = [], [], []
    for l in range(L_max + 1):
        for lam in _mode_eigenvalues(domain, l):
            vals.append(0.0 if abs(lam) < 1e-14 else lam)
            mults.append(harmonic_dimension(l, domain.n))
            degs.append(l)
    order = np.argsort(vals, kind="stable")
    cert = float(_mode_eigenvalues(domain, L_max + 1)[0])
    return SteklovSpectrum(domain, L_max, np.asarray(vals)[order], np.asarray(mults)[order],
                           np.asarray(degs)[order], cert)


def dtn_matrix_bruteforce(domain: Domain, L_max: int, order: int | None = None):
    """Galerkin DtN eigenvalues on the full trace space, by quadrature.

    Every unit trace is extended with :class:`HarmonicFactor`, its outward
    normal derivative is sampled at boundary nodes, and the generalized
    eigenproblem  K v = sigma M v  with K_ij = <e_i, d_nu u_j>, M_ij = <e_i, e_j>
    is solved.  Returns all eigenvalues, sorted.
    """
    _check_supported(domain)
    grids = boundary_quadrature(domain, order or (L_max + 2))
    comps = domain.components
    size = (L_max + 1) ** 2 if domain.n == 3 else 1
    dim = size * len(comps)
    basis = SphericalHarmonicBasis(L_max) if domain.n == 3 else None
    E = {}
    for comp in comps:
        g = grids[comp]
        if basis is None:
            E[comp] = np.ones((len(g), 1))
        else:
            E[comp] = basis.evaluate(g.theta, g.phi)
    K = np.zeros((dim, dim))
    M = np.zeros((dim, dim))
    for j in range(dim):
        vec = np.zeros(dim)
        vec[j] = 1.0
        u = HarmonicFactor(BoundaryTrace.from_vector(domain, vec, L_max))
        for ic, comp in enumerate(comps):
            g = grids[comp]
            dn = u.normal_derivative(domain, comp, g.nodes)
            K[ic * size:(ic + 1) * size, j] = E[comp].T @ (g.weights * dn)
            M[ic * size:(ic + 1) * size, ic * size:(ic + 1) * size] = E[comp].T @ (g.weights[:, None] * E[comp])
    K = 0.5 * (K + K.T)
    return np.sort(eigh(K, M, eigvals_only=True))


@dataclass(frozen=True)
class NondegeneracyVerdict:
    status: str  # "non_degenerate" | "degenerate" | "inconclusive"
    target: float
    distance: float
    nearest: float
    tol: float
    note: str = field(default="")

    @property
    def degenerate(self):
        return self.status == "degenerate"


def nondegeneracy_check(H_const: float, spectrum: SteklovSpectrum, n: int, tol: float = 1e-9) -> NondegeneracyVerdict:
    """Is a constant-mean-curvature scalar-flat metric non-degenerate?

    Non-degenerate iff H = 0 or H/(n-1) is not a Steklov eigenvalue.  If
    H/(n-1) lies beyond the certified part of the spectrum and matches no
    computed eigenvalue the verdict is inconclusive.
    """
    if H_const == 0:
        return NondegeneracyVerdict("non_degenerate", 0.0, float("nan"), float("nan"), tol, "H = 0")
    target = H_const / (n - 1)
    dist, nearest = spectrum.distance_to(target)
    if dist <= tol:
        return NondegeneracyVerdict("degenerate", target, dist, nearest, tol)
    if target >= spectrum.certified_below - tol:
        return NondegeneracyVerdict(
            "inconclusive", target, dist, nearest, tol,
            f"H/(n-1) = {target} exceeds the certified range (< {spectrum.certified_below});"
            " increase L_max")
    return NondegeneracyVerdict("non_degenerate", target, dist, nearest, tol)
