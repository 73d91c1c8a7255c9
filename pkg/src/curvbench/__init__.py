"""curvbench: a numerical workbench for curvature pinching inequalities.

Library layers, bottom up: forms_core (bilinear forms and Kulkarni-Nomizu
algebra), curvature_maps (curvature-type maps, pinching functionals,
structure recovery), sphere_index (shape-operator index regions and psi
quadrature), pinch_constants (constant estimation and theorem constants),
catalog (closed-form immersions and inequality reports), morse_harness
(height-function Morse data and total curvature), cli (jobs, envelopes,
CSV, figures).
"""

from .catalog import (
    CatalogImmersion,
    InequalityReport,
    evaluate_corollary_minimal,
    evaluate_theorem1,
    evaluate_theorem5,
    make_clifford_minimal,
    make_sphere_product,
    make_umbilic_sphere,
)
from .curvature_maps import (
    ConformalDecomposition,
    UmbilicDecomposition,
    decompose_conformally_flat,
    decompose_umbilic,
    l_of,
    phi_pinch,
    phi_weyl,
    pinch_deficit,
    r_of,
    ric_of,
    scal_of,
    w_of,
)
from .forms_core import (
    Dims,
    LorentzForm,
    LorentzSpace,
    QuadTensor,
    ScalarForm,
    Subspace,
    VectorForm,
    is_flat,
    kn_scalar,
    kn_vector,
    lift_lorentz,
    nullity_space,
    random_form,
)
from .morse_harness import (
    CriticalSet,
    TotalCurvature,
    critical_points,
    mu_counts,
    shiohama_xu_check,
    tau_index,
    tau_total,
    total_curvature,
)
from .pinch_constants import (
    AdmissibilityError,
    EstimateRecord,
    TheoremConstants,
    derive_constants,
    estimate_epsilon,
    objective,
    refine_with_candidates,
)
from .sphere_index import (
    IndexProfile,
    PsiResult,
    QuadratureSpec,
    RegionKind,
    classify,
    default_spec,
    index_of,
    psi_homogeneity_check,
    psi_integral,
    shape_operator,
    sphere_volume,
)

__version__ = "0.1.0"
