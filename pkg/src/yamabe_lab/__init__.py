"""Numerical lab for the type II Yamabe problem on model domains."""

from .checkers import (
    Theorem1Input,
    TheoremReport,
    check_corollary_volume,
    check_cr_theorem,
    check_nonpositive_uniqueness,
    check_theorem1,
    cherrier_ball_bound,
    cherrier_condition,
)
from .discretization import (
    QuadratureGrid,
    SphericalHarmonicBasis,
    analyze,
    boundary_quadrature,
    problem_grids,
    radial_volume_quadrature,
    sphere_quadrature,
    sphere_volume,
    synthesize,
)
from .domains import (
    BumpProfile,
    ClosedFormFactor,
    ConformalFactor,
    Domain,
    MetricData,
    conformal_change,
    conformal_mean_curvature,
    conformal_measures,
    conformal_scalar_curvature,
    second_fundamental_form_revolution,
    umbilicity_defect,
)
from .energy import CRData, EnergyReport, boundary_quotient, cr_energy, cr_quotient, finiteness_bound, yamabe_energy
from .errors import DivergenceError, DomainError, PreconditionError, YamabeLabError
from .harmonic import (
    BoundaryTrace,
    HarmonicFactor,
    dirichlet_energy,
    dtn_matrix_bruteforce,
    harmonic_extension,
    nondegeneracy_check,
    steklov_spectrum,
)
from .minimizer import MinimizerConfig, euler_lagrange_residual, minimize_Q, multi_start, uniqueness_experiment
from .worked_examples import (
    EscobarParams,
    SchwarzschildParams,
    bump_ball_demo,
    escobar_residual,
    escobar_solution,
    euclidean_annulus_energy,
    find_m0,
    schwarzschild_energy,
    schwarzschild_energy_limit,
    schwarzschild_mean_curvatures,
)

__version__ = "0.1.0"
