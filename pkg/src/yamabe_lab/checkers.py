"""
Predicate checkers for sufficient conditions on type II Yamabe and CR
Yamabe metrics, and the Cherrier smallness condition on the unit ball.

Checkers consume summarized data (constants, suprema, ratios).  A failed
hypothesis yields ``inconclusive``: the conditions are sufficient only.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from math import gamma, pi

import numpy as np

from .discretization import sphere_volume
from .errors import DomainError, PreconditionError

__all__ = [
    "CherrierVerdict",
    "Hypothesis",
    "NonpositiveVerdict",
    "REFERENCE_CHERRIER_BOUNDS",
    "Theorem1Input",
    "TheoremReport",
    "check_corollary_volume",
    "check_cr_theorem",
    "check_nonpositive_uniqueness",
    "check_theorem1",
    "cherrier_ball_bound",
    "cherrier_ball_data",
    "cherrier_ball_bound_gamma",
    "cherrier_condition",
]


@dataclass(frozen=True)
class Hypothesis:
    name: str
    value: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class TheoremReport:
    theorem: str
    hypotheses: tuple
    branch: str
    conclusion: str

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "hypotheses": [asdict(h) for h in self.hypotheses],
            "branch": self.branch,
            "conclusion": self.conclusion,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    @property
    def satisfied(self) -> bool:
        return self.conclusion != "inconclusive"


@dataclass(frozen=True)
class Theorem1Input:
    """Summarized data for the comparison criterion between g and h.

    ``gamma`` is Vol(M,h)/Vol(M,g) after volume normalization, ``C`` the
    constant in dA_g <= C^{(n-1)/2} dA_h, ``metric_ratio_sup`` the supremum
    of the largest eigenvalue of H_h h relative to H_g g.
    """

    n: int
    gamma: float
    C: float
    H_g: float
    H_h: float
    metric_ratio_sup: float
    area_equality_mode: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError("n must be an integer >= 3")
        for name in ("gamma", "C", "H_g", "H_h", "metric_ratio_sup"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v}")


def theorem1_bound(n: int, gamma_: float, H_g: float, H_h: float) -> float:
    """min{gamma^{-2/(n-1)}, (H_h/H_g)^{(2n-3)/(n-2)} gamma^{2/(n-2)}}."""
    return min(gamma_ ** (-2.0 / (n - 1)), (H_h / H_g) ** ((2 * n - 3) / (n - 2)) * gamma_ ** (2.0 / (n - 2)))


def _comparison(theorem, ratio_sup, area_ok, area_hyp, branch, names):
    weak = Hypothesis(names[0], ratio_sup, 1.0, bool(ratio_sup <= 1.0))
    strict = Hypothesis(names[1], ratio_sup, 1.0, bool(ratio_sup < 1.0))
    hyps = (area_hyp, weak, strict)
    if not (area_ok and weak.satisfied):
        conclusion = "inconclusive"
    elif strict.satisfied:
        conclusion = names[3]
    else:
        conclusion = names[2]
    return TheoremReport(theorem, hyps, branch, conclusion)


def check_theorem1(inp: Theorem1Input) -> TheoremReport:
    """h is type II Yamabe if g is, H_h h <= H_g g, and the area bound holds;
    unique up to scaling under the strict comparison."""
    bound = theorem1_bound(inp.n, inp.gamma, inp.H_g, inp.H_h)
    if inp.area_equality_mode:
        branch = "area-equality"
        area = Hypothesis("area_equality", 1.0, 1.0, True)
    else:
        branch = "C-bound"
        area = Hypothesis("C_bound", inp.C, bound, bool(inp.C <= bound))
    return _comparison("theorem1", inp.metric_ratio_sup, area.satisfied, area, branch,
                       ("H_h h <= H_g g", "H_h h < H_g g", "type_II_yamabe", "unique_type_II_yamabe"))


def check_corollary_volume(n: int, vol_equal: bool, H_g: float, H_h: float,
                           density_condition: float, ratio_sup: float = 1.0) -> TheoremReport:
    """Equal-volume corollary.

    ``density_condition`` is sup over dM of
    sqrt(det g|dM) H_g^{(n-1)(2n-3)/(2(n-2))} - sqrt(det h|dM) H_h^{(n-1)(2n-3)/(2(n-2))}
    and must be <= 0.  ``ratio_sup`` is passed through to the metric
    comparison; the default 1 is its non-strict limit.
    """
    if not vol_equal:
        raise PreconditionError("the volume corollary requires Vol(M,g) = Vol(M,h)")
    if not (H_g > 0 and H_h > 0):
        raise DomainError("H_g and H_h must be positive")
    order = Hypothesis("H_g >= H_h", H_h, H_g, bool(H_g >= H_h))
    density = Hypothesis("density_condition", density_condition, 0.0, bool(density_condition <= 0.0))
    if not (order.satisfied and density.satisfied):
        hyps = (order, density)
        return TheoremReport("corollary_volume", hyps, "C-bound", "inconclusive")
    # the density inequality is the area comparison with gamma = 1, C = (H_h/H_g)^{(2n-3)/(n-2)}
    C = (H_h / H_g) ** ((2 * n - 3) / (n - 2))
    inner = check_theorem1(Theorem1Input(n, 1.0, C, H_g, H_h, ratio_sup))
    return TheoremReport("corollary_volume", (order, density) + inner.hypotheses, inner.branch, inner.conclusion)


@dataclass(frozen=True)
class NonpositiveVerdict:
    applicable: bool
    verdict: str
    reasons: tuple = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {"applicable": self.applicable, "verdict": self.verdict, "reasons": list(self.reasons)}


def check_nonpositive_uniqueness(R_max_abs: float, H_h, H_hbar, tol: float = 1e-10) -> NonpositiveVerdict:
    """Applicability of uniqueness for scalar-flat metrics with nonpositive
    constant boundary mean curvature.

    ``H_h`` and ``H_hbar`` are per-component samples of each metric's mean
    curvature (scalars or arrays).  Applicable iff R = 0, each H is constant
    within ``tol``, and both constants are zero or both negative.
    """
    reasons = []
    if R_max_abs > tol:
        reasons.append(f"R is not zero (max |R| = {R_max_abs})")
    consts = []
    for label, H in (("h", H_h), ("hbar", H_hbar)):
        vals = np.atleast_1d(np.asarray(H, dtype=float)).ravel()
        if vals.size == 0:
            raise DomainError(f"no mean-curvature samples for {label}")
        if vals.max() - vals.min() > tol:
            reasons.append(f"H_{label} is not constant (spread {vals.max() - vals.min()})")
        consts.append(float(vals.mean()))
    a, b = consts
    if a > tol or b > tol:
        reasons.append("a mean-curvature constant is positive")
    elif (abs(a) <= tol) != (abs(b) <= tol):
        reasons.append("mean-curvature constants differ in sign")
    ok = not reasons
    return NonpositiveVerdict(ok, "unique up to rescaling" if ok else "not applicable", tuple(reasons))


@dataclass(frozen=True)
class CherrierVerdict:
    lhs: float
    satisfied: bool
    margin: float

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "satisfied": self.satisfied, "margin": self.margin}


def cherrier_condition(n: int, sup_v_prime: float, C_bound: float, mu: float) -> CherrierVerdict:
    """(sigma/tau) sup v' (C^2 mu)^{tau/2} < 1 with sigma = 2n/(n-2), tau = 2(n-1)/(n-2)."""
    if int(n) != n or n < 3:
        raise DomainError("n must be an integer >= 3")
    for name, v in (("sup_v_prime", sup_v_prime), ("C_bound", C_bound), ("mu", mu)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    sigma = 2.0 * n / (n - 2)
    tau = 2.0 * (n - 1) / (n - 2)
    lhs = sigma / tau * sup_v_prime * (C_bound**2 * mu) ** (tau / 2.0)
    return CherrierVerdict(lhs, bool(lhs < 1.0), 1.0 - lhs)


def cherrier_ball_data(n: int, c: float = 1.0) -> tuple:
    """(sup v', C, mu) on the unit ball with v = n-1, v' = c.

    C is the Beckner bound (2/(n-2)) Vol^{-1/(n-1)}; mu is the upper bound
    (n-2)/2 int phi_0^2 from the constant test function phi_0 with
    Gamma(phi_0) = 1.
    """
    if c <= 0:
        raise DomainError("c must be positive")
    sigma = 2.0 * n / (n - 2)
    tau = 2.0 * (n - 1) / (n - 2)
    vol = sphere_volume(n)
    phi0 = ((n - 2) / (2.0 * (n - 1)) * sigma / tau * c * vol) ** (-1.0 / tau)
    C = 2.0 / (n - 2) * vol ** (-1.0 / (n - 1))
    mu = (n - 2) / 2.0 * phi0**2 * vol
    return c, C, mu


def cherrier_ball_bound(n: int) -> float:
    """2(n-1)/(n-2) (2/(n-2))^{(n-1)/(n-2)} Vol(S^{n-1})^{-1/(n-2)}."""
    if int(n) != n or n < 3:
        raise DomainError("n must be an integer >= 3")
    return 2.0 * (n - 1) / (n - 2) * (2.0 / (n - 2)) ** ((n - 1) / (n - 2)) * sphere_volume(n) ** (-1.0 / (n - 2))


def cherrier_ball_bound_gamma(n: int) -> float:
    """Same bound written with the Gamma function."""
    return (2.0 * (n - 1) / (n - 2) * (2.0 / (n - 2)) ** ((n - 1) / (n - 2))
            * gamma(n / 2.0) ** (1.0 / (n - 2)) / (2.0 ** (1.0 / (n - 2)) * pi ** (n / (2.0 * (n - 2)))))


# Reference upper bounds for n = 4, 5, 6; the closed form must not exceed them.
REFERENCE_CHERRIER_BOUNDS = {
    4: 3.0 / pi,
    5: (2.0**10 / (3.0**6 * pi**2)) ** (1.0 / 3.0),
    6: (3.0 * 5.0**4 / (2.0**9 * pi**3)) ** 0.25,
}


def check_cr_theorem(gamma_: float, R_theta: float, R_Theta: float, ratio_sup: float) -> TheoremReport:
    """theta is CR Yamabe if Theta is and R_theta dtheta <= R_Theta dTheta;
    unique up to scaling under the strict comparison.

    ``ratio_sup`` is the supremum of (R_theta dtheta)/(R_Theta dTheta) on
    T^{1,0} x T^{0,1}.  ``gamma`` (the volume ratio after normalization) enters
    no hypothesis and is only validated.
    """
    if not R_Theta > 0:
        raise PreconditionError("R_Theta must be positive")
    if not gamma_ > 0:
        raise DomainError("gamma must be positive")
    if not np.isfinite(R_theta):
        raise DomainError("R_theta must be a finite constant")
    if not np.isfinite(ratio_sup):
        raise DomainError("ratio_sup must be finite")
    info = Hypothesis("R_Theta > 0", R_Theta, 0.0, True)
    return _comparison("cr_theorem", ratio_sup, True, info, "comparison",
                       ("R_theta dtheta <= R_Theta dTheta", "R_theta dtheta < R_Theta dTheta",
                        "cr_yamabe", "unique_cr_yamabe"))
