"""
Model domains and the conformal calculus on them.

A model domain is a Euclidean ball, a round annulus, or (n = 3 only) the
unit ball with a rotationally symmetric bump.  Every metric handled here is
conformally flat, g = U^{4/(n-2)} delta, and is described by a
:class:`MetricData` bundle of fields evaluated at Cartesian points.

Mean curvature is always the *trace* of the second fundamental form with
respect to the outward normal, so the unit sphere has H = n - 1 and the inner
sphere of an annulus has H = -(n - 1)/r.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import DomainError, PreconditionError

Field = Callable[[np.ndarray], np.ndarray]

__all__ = [
    "BumpProfile",
    "ClosedFormFactor",
    "ConformalFactor",
    "Domain",
    "MetricData",
    "ProductFactor",
    "RadialTableFactor",
    "SecondFundamentalForm",
    "conformal_change",
    "conformal_mean_curvature",
    "conformal_measures",
    "conformal_scalar_curvature",
    "second_fundamental_form_revolution",
    "umbilicity_defect",
]


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class BumpProfile:
    """Smooth compactly supported bump phi(theta) = A exp(1 - 1/(1 - s^2)),
    s = (theta - center)/width, used as r = 1 + phi(theta) in polar angle."""

    amplitude: float
    width: float
    center: float = np.pi / 2

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError("bump amplitude must be >= 0")
        if self.width <= 0:
            raise DomainError("bump width must be > 0")

    def _parts(self, theta):
        theta = np.asarray(theta, dtype=float)
        s = (theta - self.center) / self.width
        inside = np.abs(s) < 1.0
        q = np.where(inside, 1.0 - s * s, 1.0)
        val = np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / q), 0.0)
        return s, q, inside, val

    def value(self, theta):
        return self._parts(theta)[3]

    def d1(self, theta):
        s, q, inside, val = self._parts(theta)
        dq = -2.0 * s / self.width
        return np.where(inside, val * dq / q**2, 0.0)

    def d2(self, theta):
        s, q, inside, val = self._parts(theta)
        dq = -2.0 * s / self.width
        ddq = -2.0 / self.width**2
        g = dq / q**2
        dg = (ddq * q - 2.0 * dq * dq) / q**3
        return np.where(inside, val * (g * g + dg), 0.0)

    def in_support(self, theta):
        return np.abs((np.asarray(theta) - self.center) / self.width) < 1.0


@dataclass(frozen=True)
class Domain:
    """A model manifold with boundary in R^n.

    Use the constructors :meth:`ball`, :meth:`annulus` and :meth:`bump_ball`.
    Boundary components are tagged ``"outer"`` and, for annuli, ``"inner"``.
    """

    kind: str
    n: int
    r_in: float = 0.0
    r_out: float = 1.0
    profile: Optional[BumpProfile] = None

    def __post_init__(self):
        if self.kind not in ("ball", "annulus", "bump_ball"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.n}")
        if self.r_out <= 0:
            raise DomainError("outer radius must be positive")
        if self.kind == "annulus" and not (0 < self.r_in < self.r_out):
            raise DomainError(f"annulus needs 0 < r_in < r_out, got {self.r_in}, {self.r_out}")
        if self.kind == "bump_ball":
            if self.n != 3:
                raise DomainError("bump_ball is only available for n = 3")
            if self.profile is None:
                raise DomainError("bump_ball needs a profile")

    @classmethod
    def ball(cls, n: int = 3, radius: float = 1.0) -> "Domain":
        return cls("ball", n, 0.0, radius)

    @classmethod
    def annulus(cls, n: int, r_in: float, r_out: float = 1.0) -> "Domain":
        return cls("annulus", n, r_in, r_out)

    @classmethod
    def bump_ball(cls, profile: BumpProfile) -> "Domain":
        return cls("bump_ball", 3, 0.0, 1.0, profile)

    @property
    def components(self) -> tuple:
        return ("inner", "outer") if self.kind == "annulus" else ("outer",)

    def boundary_radius(self, component: str) -> float:
        if component == "outer":
            return self.r_out
        if component == "inner" and self.kind == "annulus":
            return self.r_in
        raise DomainError(f"{self.kind} has no boundary component {component!r}")

    def outward_normal(self, component: str, points: np.ndarray) -> np.ndarray:
        """Outward unit normal of a spherical boundary component at ``points``.

        The inner sphere of an annulus is oriented towards the origin.
        """
        if self.kind == "bump_ball":
            raise PreconditionError("use second_fundamental_form_revolution for the bump ball")
        self.boundary_radius(component)
        points = np.atleast_2d(points)
        radial = points / np.linalg.norm(points, axis=1, keepdims=True)
        return -radial if component == "inner" else radial


# ---------------------------------------------------------------------------
# Conformal factors


class ConformalFactor:
    """A positive function u on a domain, with first and second derivatives.

    Subclasses provide ``value``, ``gradient`` and ``laplacian`` at arrays of
    Cartesian points of shape (N, n).
    """

    representation = "abstract"
    n: int

    def value(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def normal_derivative(self, domain: Domain, component: str, points: np.ndarray) -> np.ndarray:
        """Outward normal derivative on a spherical boundary component."""
        nu = domain.outward_normal(component, points)
        return np.einsum("ij,ij->i", self.gradient(points), nu)

    def check_positive(self, points: np.ndarray) -> np.ndarray:
        """Return the values at ``points``, raising if any is nonpositive."""
        values = self.value(points)
        _require_positive(values, points, "conformal factor")
        return values

    def __mul__(self, other: "ConformalFactor") -> "ProductFactor":
        return ProductFactor(self, other)


class ClosedFormFactor(ConformalFactor):
    """Conformal factor given by explicit formulas for u, grad u and Laplacian u."""

    representation = "closed_form"

    def __init__(self, expression: str, params: Mapping, n: int,
                 value: Field, gradient: Field, laplacian: Field):
        self.expression = expression
        self.params = dict(params)
        self.n = n
        self._value = value
        self._gradient = gradient
        self._laplacian = laplacian

    def value(self, points):
        return np.asarray(self._value(np.atleast_2d(points)), dtype=float)

    def gradient(self, points):
        return np.asarray(self._gradient(np.atleast_2d(points)), dtype=float)

    def laplacian(self, points):
        return np.asarray(self._laplacian(np.atleast_2d(points)), dtype=float)

    def __repr__(self):
        return f"ClosedFormFactor({self.expression!r}, {self.params!r}, n={self.n})"

    @classmethod
    def constant(cls, c: float, n: int) -> "ClosedFormFactor":
        return cls(
            "constant", {"c": c}, n,
            lambda p: np.full(len(p), float(c)),
            lambda p: np.zeros_like(p, dtype=float),
            lambda p: np.zeros(len(p)),
        )

    @classmethod
    def affine(cls, c: float, b, n: int) -> "ClosedFormFactor":
        """u(x) = c + b . x (harmonic)."""
        b = np.asarray(b, dtype=float)
        return cls(
            "affine", {"c": c, "b": b.tolist()}, n,
            lambda p: c + p @ b,
            lambda p: np.broadcast_to(b, p.shape).copy(),
            lambda p: np.zeros(len(p)),
        )

    @classmethod
    def radial(cls, f, df, ddf, n: int, expression="radial", params=None) -> "ClosedFormFactor":
        """Radial factor u(x) = f(|x|) from f and its first two derivatives."""

        def grad(p):
            r = np.linalg.norm(p, axis=1)
            return (df(r) / r)[:, None] * p

        def lap(p):
            r = np.linalg.norm(p, axis=1)
            return ddf(r) + (n - 1) * df(r) / r

        return cls(expression, params or {}, n,
                   lambda p: f(np.linalg.norm(p, axis=1)), grad, lap)


class ProductFactor(ConformalFactor):
    """Pointwise product u*v of two conformal factors."""

    representation = "closed_form"

    def __init__(self, u: ConformalFactor, v: ConformalFactor):
        if u.n != v.n:
            raise DomainError("factors live in different dimensions")
        self.u, self.v, self.n = u, v, u.n

    def value(self, points):
        return self.u.value(points) * self.v.value(points)

    def gradient(self, points):
        return (self.u.value(points)[:, None] * self.v.gradient(points)
                + self.v.value(points)[:, None] * self.u.gradient(points))

    def laplacian(self, points):
        cross = np.einsum("ij,ij->i", self.u.gradient(points), self.v.gradient(points))
        return (self.u.value(points) * self.v.laplacian(points)
                + self.v.value(points) * self.u.laplacian(points) + 2.0 * cross)


class RadialTableFactor(ConformalFactor):
    """Radial factor tabulated on a uniform radius grid.

    Derivatives use 4th-order central differences in the interior and
    4th-order one-sided stencils at the two ends; values between nodes are
    interpolated with a cubic spline.
    """

    representation = "radial_table"

    def __init__(self, radii, values, n: int):
        from scipy.interpolate import CubicSpline

        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or len(radii) < 5:
            raise DomainError("radial table needs matching 1-D arrays of length >= 5")
        h = np.diff(radii)
        if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-10, atol=0):
            raise DomainError("radial table needs a uniform increasing grid")
        if np.any(values <= 0):
            i = int(np.argmin(values))
            raise DomainError(f"radial table value {values[i]} at r={radii[i]} is not positive")
        self.radii, self.values, self.n = radii, values, n
        d1, d2 = _fd4(values, h[0])
        self._f = CubicSpline(radii, values)
        self._d1 = CubicSpline(radii, d1)
        self._d2 = CubicSpline(radii, d2)

    def value(self, points):
        return self._f(np.linalg.norm(np.atleast_2d(points), axis=1))

    def gradient(self, points):
        points = np.atleast_2d(points)
        r = np.linalg.norm(points, axis=1)
        return (self._d1(r) / r)[:, None] * points

    def laplacian(self, points):
        r = np.linalg.norm(np.atleast_2d(points), axis=1)
        return self._d2(r) + (self.n - 1) * self._d1(r) / r


def _fd4(f, h):
    """First and second derivatives of uniformly sampled ``f`` to O(h^4)."""
    n = len(f)
    d1 = np.empty(n)
    d2 = np.empty(n)
    d1[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d2[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    # one-sided 5/6-point stencils
    c1 = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    c1b = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    c2 = np.array([45, -154, 214, -156, 61, -10]) / (12 * h * h)
    c2b = np.array([10, -15, -4, 14, -6, 1]) / (12 * h * h)
    if n >= 6:
        d1[0], d1[1] = c1 @ f[:5], c1b @ f[:5]
        d1[-1], d1[-2] = -(c1 @ f[::-1][:5]), -(c1b @ f[::-1][:5])
        d2[0], d2[1] = c2 @ f[:6], c2b @ f[:6]
        d2[-1], d2[-2] = c2 @ f[::-1][:6], c2b @ f[::-1][:6]
    else:
        raise DomainError("radial table needs at least 6 nodes")
    return d1, d2


def _require_positive(values, points, what):
    values = np.asarray(values)
    bad = np.flatnonzero(~(values > 0))
    if bad.size:
        i = int(bad[0])
        where = np.atleast_2d(points)[i] if points is not None else i
        raise DomainError(f"{what} is not positive ({values.flat[i]!r}) at point {where}")


# ---------------------------------------------------------------------------
# Conformal change laws


def conformal_scalar_curvature(R_base, u, laplacian_u, n):
    """Scalar curvature of u^{4/(n-2)} g from the base curvature, u and Delta_g u.

    R_new = u^{-(n+2)/(n-2)} (-(4(n-1)/(n-2)) Delta u + R_base u), pointwise.
    """
    u = np.asarray(u, dtype=float)
    _require_positive(u, None, "conformal factor")
    k = 4.0 * (n - 1) / (n - 2)
    return u ** (-(n + 2) / (n - 2)) * (-k * np.asarray(laplacian_u) + np.asarray(R_base) * u)


def conformal_mean_curvature(H_base, u, normal_deriv_u, n):
    """Boundary mean curvature of u^{4/(n-2)} g.

    ``normal_deriv_u`` is the *outward* normal derivative with respect to g.
    H_new = u^{-n/(n-2)} ((2(n-1)/(n-2)) du/dnu + H_base u).
    """
    u = np.asarray(u, dtype=float)
    _require_positive(u, None, "conformal factor")
    k = 2.0 * (n - 1) / (n - 2)
    return u ** (-n / (n - 2)) * (k * np.asarray(normal_deriv_u) + np.asarray(H_base) * u)


def conformal_measures(u, n):
    """Volume and area density ratios (u^{2n/(n-2)}, u^{2(n-1)/(n-2)})."""
    u = np.asarray(u, dtype=float)
    _require_positive(u, None, "conformal factor")
    return u ** (2.0 * n / (n - 2)), u ** (2.0 * (n - 1) / (n - 2))


# ---------------------------------------------------------------------------
# Metric data


def _zero(p):
    return np.zeros(len(np.atleast_2d(p)))


def _one(p):
    return np.ones(len(np.atleast_2d(p)))


@dataclass(frozen=True)
class MetricData:
    """Curvature and measure fields of a conformally flat metric on a domain.

    Fields are callables on Cartesian points of shape (N, n).  ``H`` maps
    each boundary component to its mean curvature field.  ``background`` is
    the factor U with g = U^{4/(n-2)} delta (``None`` for delta itself); it
    is needed to compose further conformal changes and to take gradients
    with respect to g.
    """

    domain: Domain
    R: Field
    H: Mapping[str, Field]
    dV_scale: Field = _one
    dA_scale: Field = _one
    background: Optional[ConformalFactor] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        missing = set(self.domain.components) - set(self.H)
        if missing:
            raise DomainError(f"mean curvature missing for components {sorted(missing)}")

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def is_flat(self) -> bool:
        """True when the measures are Euclidean (background factor is 1)."""
        return self.background is None

    @classmethod
    def euclidean(cls, domain: Domain) -> "MetricData":
        """The Euclidean metric on a ball or annulus."""
        if domain.kind == "bump_ball":
            raise PreconditionError("Euclidean MetricData is only tabulated for balls and annuli")
        n = domain.n
        H = {"outer": _constant_field((n - 1) / domain.r_out)}
        if domain.kind == "annulus":
            H["inner"] = _constant_field(-(n - 1) / domain.r_in)
        return cls(domain, _zero, H, label="euclidean")

    def with_mean_curvature(self, H: Mapping[str, object]) -> "MetricData":
        """Copy with the boundary mean curvature replaced (constants or fields)."""
        H = {k: (v if callable(v) else _constant_field(float(v))) for k, v in H.items()}
        return MetricData(self.domain, self.R, H, self.dV_scale, self.dA_scale,
                          self.background, label=self.label + "+H")

    def rescaled(self, c: float) -> "MetricData":
        """The metric c*g, using R -> R/c, H -> H/sqrt(c) and the measure laws."""
        if c <= 0:
            raise DomainError("rescaling constant must be positive")
        n = self.n
        R, dV, dA = self.R, self.dV_scale, self.dA_scale
        H = {k: (lambda p, h=h: h(p) / np.sqrt(c)) for k, h in self.H.items()}
        const = ClosedFormFactor.constant(c ** ((n - 2) / 4.0), n)
        background = const if self.background is None else ProductFactor(self.background, const)
        return MetricData(
            self.domain,
            lambda p: R(p) / c,
            H,
            lambda p: dV(p) * c ** (n / 2.0),
            lambda p: dA(p) * c ** ((n - 1) / 2.0),
            background,
            label=f"{c}*{self.label}",
        )

    def laplacian_of(self, v: ConformalFactor, points) -> np.ndarray:
        """Laplace-Beltrami operator of g applied to v."""
        if self.background is None:
            return v.laplacian(points)
        n = self.n
        U = self.background.value(points)
        cross = np.einsum("ij,ij->i", self.background.gradient(points), v.gradient(points))
        return U ** (-4.0 / (n - 2)) * (v.laplacian(points) + 2.0 * cross / U)

    def normal_derivative_of(self, v: ConformalFactor, component: str, points) -> np.ndarray:
        """Outward g-unit normal derivative of v on a boundary component."""
        d = v.normal_derivative(self.domain, component, points)
        if self.background is None:
            return d
        return self.background.value(points) ** (-2.0 / (self.n - 2)) * d

    def gradient_norm_sq_density(self, v: ConformalFactor, points) -> np.ndarray:
        """|grad_g v|_g^2 times the volume density, i.e. the Dirichlet integrand
        relative to Lebesgue measure."""
        g2 = np.einsum("ij,ij->i", v.gradient(points), v.gradient(points))
        if self.background is None:
            return g2
        return g2 * self.background.value(points) ** 2


def _constant_field(c):
    def f(p):
        return np.full(len(np.atleast_2d(p)), c)

    f.constant = c
    return f


def conformal_change(metric: MetricData, u: ConformalFactor) -> MetricData:
    """Fields of u^{4/(n-2)} g, computed pointwise through the transformation laws."""
    n = metric.n
    if u.n != n:
        raise DomainError("factor and metric dimensions differ")
    R0, dV0, dA0 = metric.R, metric.dV_scale, metric.dA_scale

    def R(p):
        return conformal_scalar_curvature(R0(p), u.check_positive(p), metric.laplacian_of(u, p), n)

    def H_of(comp, H0):
        def H(p):
            return conformal_mean_curvature(
                H0(p), u.check_positive(p), metric.normal_derivative_of(u, comp, p), n)
        return H

    def dV(p):
        return dV0(p) * conformal_measures(u.check_positive(p), n)[0]

    def dA(p):
        return dA0(p) * conformal_measures(u.check_positive(p), n)[1]

    background = u if metric.background is None else ProductFactor(metric.background, u)
    H = {comp: H_of(comp, h) for comp, h in metric.H.items()}
    return MetricData(metric.domain, R, H, dV, dA, background, label=f"u*{metric.label}")


# ---------------------------------------------------------------------------
# Second fundamental form


@dataclass(frozen=True)
class SecondFundamentalForm:
    """Second fundamental form and induced metric in a common tangent frame."""

    II: np.ndarray
    induced_metric: np.ndarray

    def __post_init__(self):
        II = np.asarray(self.II, dtype=float)
        g = np.asarray(self.induced_metric, dtype=float)
        if II.shape != g.shape or II.ndim != 2 or II.shape[0] != II.shape[1]:
            raise DomainError("II and induced metric must be square matrices of equal size")
        if not np.allclose(II, II.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(II).max())):
            raise DomainError("II must be symmetric")
        if np.any(np.linalg.eigvalsh(0.5 * (g + g.T)) <= 0):
            raise DomainError("induced metric must be positive definite")

    def shape_operator(self) -> np.ndarray:
        """II expressed in an orthonormal frame for the induced metric."""
        g = np.asarray(self.induced_metric, dtype=float)
        if np.count_nonzero(g - np.diag(np.diag(g))) == 0:
            d = np.sqrt(np.diag(g))
            S = np.asarray(self.II, dtype=float) / np.outer(d, d)
            return 0.5 * (S + S.T)
        L = np.linalg.cholesky(g)
        Linv = np.linalg.inv(L)
        S = Linv @ np.asarray(self.II, dtype=float) @ Linv.T
        return 0.5 * (S + S.T)

    def principal_curvatures(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.shape_operator())

    def mean_curvature(self) -> float:
        return float(np.trace(self.shape_operator()))


def second_fundamental_form_revolution(profile: Optional[BumpProfile], theta: float,
                                       radius: float = 1.0, psi: float = 0.0) -> SecondFundamentalForm:
    """II of the surface r = radius + phi(theta) in R^3 with the outward normal.

    The frame is {phi' d/dr + d/dtheta, d/dpsi}, with theta the polar angle
    measured from the symmetry axis.
    """
    if profile is None:
        rho, d1, d2 = radius, 0.0, 0.0
    else:
        rho = radius + float(profile.value(theta))
        d1, d2 = float(profile.d1(theta)), float(profile.d2(theta))
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(psi), np.cos(psi)
    if d1 == 0.0 and d2 == 0.0:
        # locally the round sphere of radius rho: II = g / rho
        g = np.diag([rho * rho, (rho * st) ** 2])
        return SecondFundamentalForm(np.diag([rho, rho * st * st]), g)
    e_r = np.array([st * cp, st * sp, ct])
    e_t = np.array([ct * cp, ct * sp, -st])
    e_p = np.array([-sp, cp, 0.0])

    X_t = d1 * e_r + rho * e_t
    X_p = rho * st * e_p
    X_tt = (d2 - rho) * e_r + 2.0 * d1 * e_t
    X_tp = (d1 * st + rho * ct) * e_p
    X_pp = -rho * st * (st * e_r + ct * e_t)

    N = np.cross(X_t, X_p)
    N /= np.linalg.norm(N)
    if N @ e_r < 0:
        N = -N
    II = -np.array([[X_tt @ N, X_tp @ N], [X_tp @ N, X_pp @ N]])
    g = np.array([[X_t @ X_t, X_t @ X_p], [X_p @ X_t, X_p @ X_p]])
    return SecondFundamentalForm(II, g)


def umbilicity_defect(sff: SecondFundamentalForm) -> float:
    """Frobenius norm of the trace-free part of II in an orthonormal frame.

    Zero exactly at umbilic points; |k1 - k2|/sqrt(2) for a surface point with
    principal curvatures k1, k2.
    """
    S = sff.shape_operator()
    k = S.shape[0]
    return float(np.linalg.norm(S - np.trace(S) / k * np.eye(k)))
