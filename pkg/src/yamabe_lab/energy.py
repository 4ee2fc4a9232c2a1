"""
Type II Yamabe energy E(g), the boundary quotient Q_g(phi), and the CR
energy functionals on tabulated data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .discretization import ProblemGrids
from .domains import ConformalFactor, Domain, MetricData
from .errors import DomainError, PreconditionError
from .harmonic import BoundaryTrace, HarmonicFactor, dirichlet_energy, harmonic_extension

__all__ = [
    "CRData",
    "EnergyReport",
    "boundary_quotient",
    "cr_energy",
    "cr_quotient",
    "finiteness_bound",
    "read_cr_csv",
    "yamabe_energy",
]


@dataclass(frozen=True)
class EnergyReport:
    numerator_interior: float
    numerator_boundary: float
    boundary_volume: float
    energy: float
    n: int

    def as_dict(self) -> dict:
        return {
            "numerator_interior": self.numerator_interior,
            "numerator_boundary": self.numerator_boundary,
            "boundary_volume": self.boundary_volume,
            "energy": self.energy,
            "n": self.n,
        }


def yamabe_energy(domain: Domain, metric: MetricData, grids: ProblemGrids) -> EnergyReport:
    """E(g) = (int R dV + 2 int H dA) / Vol(dM)^{(n-2)/(n-1)} by quadrature."""
    n = domain.n
    vol = grids.volume
    interior = vol.integrate(metric.R(vol.nodes) * metric.dV_scale(vol.nodes))
    boundary = 0.0
    area = 0.0
    for comp in domain.components:
        g = grids.boundary[comp]
        dA = metric.dA_scale(g.nodes)
        boundary += 2.0 * g.integrate(metric.H[comp](g.nodes) * dA)
        area += g.integrate(dA)
    if not area > 0:
        raise DomainError("boundary volume is zero")
    energy = (interior + boundary) / area ** ((n - 2) / (n - 1))
    return EnergyReport(interior, boundary, area, energy, n)


def boundary_quotient(domain: Domain, metric: MetricData, phi, grids: ProblemGrids) -> float:
    """Q_g(phi) for a test function phi.

    ``phi`` may be a :class:`BoundaryTrace` (replaced by its harmonic
    extension), a :class:`HarmonicFactor`, or any :class:`ConformalFactor`
    with a gradient.  On the Euclidean background the Dirichlet term of a
    harmonic phi is taken in closed form; otherwise it is integrated on the
    volume grid.  phi may change sign.
    """
    n = domain.n
    if isinstance(phi, BoundaryTrace):
        phi = harmonic_extension(domain, phi)
    vol = grids.volume
    if isinstance(phi, HarmonicFactor) and metric.is_flat:
        dirichlet = dirichlet_energy(domain, phi.trace)
    else:
        dirichlet = vol.integrate(metric.gradient_norm_sq_density(phi, vol.nodes))
    v = phi.value(vol.nodes)
    interior = vol.integrate(metric.R(vol.nodes) * v * v * metric.dV_scale(vol.nodes))
    boundary, denom = _boundary_terms(domain, metric, phi, grids)
    scale = max(np.max(np.abs(v)), 1.0)
    edge = max(np.max(np.abs(phi.value(grids.boundary[c].nodes))) for c in domain.components)
    if not (denom > 0 and edge > 1e-12 * scale):
        raise DomainError("phi vanishes on the boundary")
    k = 4.0 * (n - 1) / (n - 2)
    return (k * dirichlet + interior + boundary) / denom ** ((n - 2) / (n - 1))


def _boundary_terms(domain, metric, phi, grids):
    n = domain.n
    tau = 2.0 * (n - 1) / (n - 2)
    boundary = 0.0
    denom = 0.0
    for comp in domain.components:
        g = grids.boundary[comp]
        v = phi.value(g.nodes)
        dA = metric.dA_scale(g.nodes)
        boundary += 2.0 * g.integrate(metric.H[comp](g.nodes) * v * v * dA)
        denom += g.integrate(np.abs(v) ** tau * dA)
    return boundary, denom


def finiteness_bound(domain: Domain, metric: MetricData, grids: ProblemGrids) -> float:
    """-2 ||H^-||_{L^{n-1}(dM)}, a lower bound for Q_g when R >= 0."""
    n = domain.n
    total = 0.0
    for comp in domain.components:
        g = grids.boundary[comp]
        hneg = np.maximum(-metric.H[comp](g.nodes), 0.0)
        total += g.integrate(hneg ** (n - 1) * metric.dA_scale(g.nodes))
    return -2.0 * total ** (1.0 / (n - 1))


# ---------------------------------------------------------------------------
# CR energies


@dataclass(frozen=True)
class CRData:
    """Quadrature data on a (2n+1)-dimensional CR manifold.

    ``weights`` are the nodes' shares of dV_theta, ``R`` the Webster scalar
    curvature; ``u`` and ``grad_norm`` (|grad_theta u|) are optional.
    """

    weights: np.ndarray
    R: np.ndarray
    n: int
    u: Optional[np.ndarray] = None
    grad_norm: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float).ravel())
        if w.size == 0:
            raise DomainError("CR data is empty")
        if self.R.shape != w.shape:
            raise DomainError("R and weights differ in length")
        if np.any(w <= 0):
            raise DomainError("CR weights must be positive")
        if self.n < 1:
            raise DomainError("CR dimension parameter n must be >= 1")
        for name in ("u", "grad_norm"):
            val = getattr(self, name)
            if val is not None:
                val = np.asarray(val, dtype=float).ravel()
                if val.shape != w.shape:
                    raise DomainError(f"{name} and weights differ in length")
                object.__setattr__(self, name, val)
        if self.u is not None and np.any(self.u <= 0):
            i = int(np.argmin(self.u))
            raise DomainError(f"u is not positive at node {i} ({self.u[i]})")


def cr_energy(data: CRData) -> float:
    """E(theta) = int R dV / Vol^{n/(n+1)}."""
    n = data.n
    return float(np.dot(data.weights, data.R) / data.weights.sum() ** (n / (n + 1)))


def cr_quotient(data: CRData) -> float:
    """E(u^{2/n} theta) in integrated-by-parts form:
    int ((2 + 2/n)|grad u|^2 + R u^2) dV / (int u^{2+2/n} dV)^{n/(n+1)}."""
    if data.u is None or data.grad_norm is None:
        raise PreconditionError("cr_quotient needs u and grad_norm columns")
    n = data.n
    w, u, g = data.weights, data.u, data.grad_norm
    num = np.dot(w, (2.0 + 2.0 / n) * g * g + data.R * u * u)
    den = np.dot(w, u ** (2.0 + 2.0 / n))
    return float(num / den ** (n / (n + 1)))


def read_cr_csv(path, n: int) -> CRData:
    """Read CR data from CSV with columns weight, R and optionally u, grad_norm."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DomainError(f"{path}: no data rows")
    cols = rows[0].keys()
    for required in ("weight", "R"):
        if required not in cols:
            raise DomainError(f"{path}: missing column {required!r}")

    def column(name):
        if name not in cols:
            return None
        return np.array([float(r[name]) for r in rows])

    return CRData(column("weight"), column("R"), n, column("u"), column("grad_norm"))
