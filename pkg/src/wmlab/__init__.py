"""wmlab: numerical checks for isoperimetric and eigenvalue inequalities
on weighted manifolds (manifolds with density e^(-f)).
"""

from .density import (
    BakryEmeryParams,
    DensityField,
    bakry_emery_m,
    certify_nonneg_BE,
    weighted_element,
)
from .fields import ImmersionFields, computed_immersion_fields
from .generators import (
    gen_annulus,
    gen_circle,
    gen_disk,
    gen_icosphere,
    gen_wedge,
    scaled_sphere_with_analytic_fields,
)
from .heintze import (
    CenterOfMass,
    equality_diagnostic,
    divergence_chain_check,
    gradient_bound_check,
    shrinker_radius,
    shrinker_report,
    test_functions,
    eigenvalue_bound_max,
    eigenvalue_bound_mean,
    weighted_center_of_mass,
)
from .mesh import (
    SimplicialMesh,
    linear_transform,
    radial_perturbation,
    translate,
    weighted_measure,
)
from .meshfiles import load_mesh, save_mesh
from .ops import (
    OperatorPack,
    assemble,
    f_divergence,
    hf_minus_gradf_sq,
    mean_curvature_vector,
    tangential_gradient,
    vertex_normals,
    weighted_mean_curvature,
)
from .reilly_ros import (
    AnalyticFunction,
    PoissonSolution,
    ball_linear_isoperimetric,
    check_cone,
    check_linear_isoperimetric,
    check_ros,
    disk_torsion,
    cauchy_schwarz_gap,
    quadratic,
    reilly_residual,
    solve_dirichlet,
    solve_mixed,
)
from .report import CheckReport
from .scenarios import Scenario, build_geometry, parse_config, run_scenario
from .spaceform import AmbientSpace, c_delta, s_delta
from .spectrum import EigenResult, lambda1_drift, rayleigh_quotient

__version__ = "0.1.0"
