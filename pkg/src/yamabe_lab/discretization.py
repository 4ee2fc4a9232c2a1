"""
Quadrature grids and a real spherical-harmonic basis.

Angular discretization exists only for S^2 (n = 3).  In other dimensions the
grids are radial: one representative direction per radius, with the weight
carrying the area of the sphere, so they integrate radial functions only.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi

import numpy as np
from scipy.special import sph_legendre_p_all

from .domains import Domain
from .errors import DomainError, PreconditionError

__all__ = [
    "ProblemGrids",
    "QuadratureGrid",
    "SphericalHarmonicBasis",
    "analyze",
    "boundary_quadrature",
    "problem_grids",
    "radial_volume_quadrature",
    "sphere_quadrature",
    "sphere_volume",
    "synthesize",
]


def sphere_volume(n: int, radius: float = 1.0) -> float:
    """Area of the round sphere S^{n-1}(radius) in R^n, 2 pi^{n/2} / Gamma(n/2) r^{n-1}."""
    return 2.0 * pi ** (n / 2.0) / gamma(n / 2.0) * radius ** (n - 1)


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes (Cartesian, shape (N, n)) and positive weights.

    For sphere grids in n = 3, ``theta`` and ``phi`` hold the angular
    coordinates of each node and ``radius`` the sphere radius.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain_tag: str
    exactness_order: int
    radius: float = 1.0
    theta: np.ndarray | None = None
    phi: np.ndarray | None = None
    radii: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise DomainError("quadrature weights must be positive")

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    @property
    def measure(self) -> float:
        return float(self.weights.sum())


def _gauss_legendre(order, a, b):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def sphere_quadrature(order: int, radius: float = 1.0) -> QuadratureGrid:
    """Gauss-Legendre in cos(theta) times a uniform azimuth grid on S^2(radius).

    ``order`` Legendre nodes and 2*order azimuths; exact for spherical
    harmonics up to degree 2*order - 1.
    """
    if order < 1:
        raise DomainError("quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2.0 * pi * np.arange(nphi) / nphi
    theta = np.arccos(x)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w, np.full(nphi, 2.0 * pi / nphi)) * radius**2
    T, P, W = T.ravel(), P.ravel(), W.ravel()
    nodes = radius * np.column_stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)])
    return QuadratureGrid(nodes, W, "sphere", 2 * order - 1, radius, T, P)


def _radial_sphere(n, radius):
    node = np.zeros((1, n))
    node[0, 0] = radius
    return QuadratureGrid(node, np.array([sphere_volume(n, radius)]), "sphere", 0, radius)


def radial_volume_quadrature(domain: Domain, order: int, angular_order: int | None = None) -> QuadratureGrid:
    """Volume grid on a ball or annulus.

    n = 3: Gauss-Legendre in r (weight r^2) times :func:`sphere_quadrature`.
    n > 3: Gauss-Legendre in r with weight r^{n-1} Vol(S^{n-1}) along e_1.
    """
    if domain.kind not in ("ball", "annulus"):
        raise PreconditionError("volume grids exist only for balls and annuli")
    if order < 1:
        raise DomainError("quadrature order must be >= 1")
    n = domain.n
    r, wr = _gauss_legendre(order, domain.r_in, domain.r_out)
    if n != 3:
        nodes = np.zeros((order, n))
        nodes[:, 0] = r
        w = wr * r ** (n - 1) * sphere_volume(n)
        return QuadratureGrid(nodes, w, domain.kind, 2 * order - 1, domain.r_out, radii=r)
    sph = sphere_quadrature(angular_order or order)
    nodes = (r[:, None, None] * sph.nodes[None, :, :]).reshape(-1, 3)
    w = (wr[:, None] * r[:, None] ** 2 * sph.weights[None, :]).ravel()
    theta = np.tile(sph.theta, order)
    phi = np.tile(sph.phi, order)
    radii = np.repeat(r, len(sph))
    return QuadratureGrid(nodes, w, domain.kind, min(2 * order - 1, sph.exactness_order),
                          domain.r_out, theta, phi, radii)


def boundary_quadrature(domain: Domain, order: int) -> dict:
    """One sphere grid per boundary component of a ball or annulus."""
    grids = {}
    for comp in domain.components:
        R = domain.boundary_radius(comp)
        grids[comp] = sphere_quadrature(order, R) if domain.n == 3 else _radial_sphere(domain.n, R)
    return grids


@dataclass(frozen=True)
class ProblemGrids:
    volume: QuadratureGrid
    boundary: dict


def problem_grids(domain: Domain, order: int = 16, radial_order: int | None = None) -> ProblemGrids:
    """Volume and boundary grids for a ball or annulus at a common angular order."""
    return ProblemGrids(
        radial_volume_quadrature(domain, radial_order or order, order),
        boundary_quadrature(domain, order),
    )


# ---------------------------------------------------------------------------
# Real spherical harmonics


class SphericalHarmonicBasis:
    """Real, L2(S^2)-orthonormal spherical harmonics up to degree ``L_max``.

    Flat index of (l, m) is l*l + l + m, so ``size == (L_max + 1)**2``.
    For m > 0 the function is sqrt(2) Pbar_l^m(cos t) cos(m p), for m < 0
    sqrt(2) Pbar_l^|m|(cos t) sin(|m| p), where Pbar carries the full
    normalization.
    """

    def __init__(self, L_max: int):
        if L_max < 0:
            raise DomainError("L_max must be >= 0")
        self.L_max = int(L_max)
        self.size = (self.L_max + 1) ** 2
        self.degrees = np.array([l for l in range(self.L_max + 1) for _ in range(2 * l + 1)])
        self.orders = np.array([m for l in range(self.L_max + 1) for m in range(-l, l + 1)])

    @staticmethod
    def index(l: int, m: int) -> int:
        if abs(m) > l:
            raise DomainError(f"invalid harmonic index ({l}, {m})")
        return l * l + l + m

    def lm(self, k: int) -> tuple:
        return int(self.degrees[k]), int(self.orders[k])

    def _legendre(self, theta, diff_n=0):
        theta = np.asarray(theta, dtype=float).ravel()
        L = self.L_max
        P = sph_legendre_p_all(L, L, theta, diff_n=diff_n)  # (diff_n+1, L+1, 2L+1, N)
        am = np.abs(self.orders)
        out = P[:, self.degrees, am, :] * np.where(self.orders != 0, np.sqrt(2.0), 1.0)[None, :, None]
        return np.moveaxis(out, -1, 1)

    def _trig(self, phi, derivative=False):
        phi = np.asarray(phi, dtype=float).ravel()
        m = self.orders
        arg = np.abs(m) * phi[:, None]
        cos, sin = np.cos(arg), np.sin(arg)
        c = np.where(m >= 0, cos, sin)
        if not derivative:
            return c, None
        dc = np.abs(m) * np.where(m >= 0, -sin, cos)
        return c, dc

    def evaluate(self, theta, phi) -> np.ndarray:
        """Matrix of basis values, shape (N, size)."""
        P = self._legendre(theta)[0]
        c, _ = self._trig(phi)
        return P * c

    def evaluate_with_derivatives(self, theta, phi):
        """Values and d/dtheta, d/dphi of every basis function at the points."""
        P = self._legendre(theta, diff_n=1)
        c, dc = self._trig(phi, derivative=True)
        return P[0] * c, P[1] * c, P[0] * dc

    def evaluate_cartesian(self, points) -> np.ndarray:
        theta, phi = cartesian_to_angles(points)
        return self.evaluate(theta, phi)


def cartesian_to_angles(points):
    points = np.atleast_2d(points)
    r = np.linalg.norm(points, axis=1)
    # the origin gets theta = 0; only degree-0 terms survive there
    safe = np.where(r > 0, r, 1.0)
    theta = np.arccos(np.clip(points[:, 2] / safe, -1.0, 1.0))
    phi = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * pi)
    return theta, phi


def _check_grid(grid: QuadratureGrid, basis: SphericalHarmonicBasis):
    if grid.theta is None or grid.domain_tag != "sphere":
        raise PreconditionError("analysis needs an angular sphere grid (n = 3)")
    need = basis.L_max + 1
    if grid.exactness_order < 2 * basis.L_max:
        raise PreconditionError(
            f"grid exact to degree {grid.exactness_order} cannot resolve L_max={basis.L_max};"
            f" use sphere_quadrature(order >= {need})")


def analyze(values, grid: QuadratureGrid, basis: SphericalHarmonicBasis) -> np.ndarray:
    """Spherical-harmonic coefficients of node values by quadrature projection.

    Coefficients refer to the unit-sphere basis; the grid's radius only
    rescales the weights and is divided out.
    """
    _check_grid(grid, basis)
    Y = basis.evaluate(grid.theta, grid.phi)
    w = grid.weights / grid.radius**2
    return Y.T @ (w * np.asarray(values, dtype=float))


def synthesize(coeffs, grid: QuadratureGrid, basis: SphericalHarmonicBasis) -> np.ndarray:
    """Node values of a band-limited function from its coefficients."""
    if grid.theta is None:
        raise PreconditionError("synthesis needs an angular sphere grid (n = 3)")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.size:
        raise DomainError(f"expected {basis.size} coefficients, got {coeffs.shape[-1]}")
    return basis.evaluate(grid.theta, grid.phi) @ coeffs
