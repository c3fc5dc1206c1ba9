"""Matrix systems over free groups: normalization, twin equivalence,
spectral classification, and the growth of matrix coefficients."""

__version__ = "0.1.0"

from .freegroup import Alphabet, multiply, inverse, in_cone, in_halftree
from .systems import (
    MatrixSystem,
    NormalizedSystem,
    UndecidedError,
    validate,
    is_irreducible,
    transfer_apply,
    transfer_matrix,
    spectral_radius_T,
    normalize,
)
from .generate import (
    s0_system,
    doubled_system,
    random_system,
    random_scalar_system,
    rotated_scalar_system,
    ai_instance,
    aii_instance,
    bi_instance,
    bi_e0_system,
    self_twin_system,
)
from .twin import TwinPackage, twin_system, twin_package, e_maps, solve_equivalence
from .spectral import SpectralReport, QTuple, build_D, classify, solve_Q
from .functions import (
    MuSummand,
    MultiplicativeFunction,
    canonicalize,
    deepen,
    act,
    act_indicator,
    inner_product,
    norm,
    coefficient,
    first_shell,
    mu_eval,
)
from .series import (
    CoefficientSeries,
    ExponentFit,
    sphere_sums,
    exponent_fit,
    haagerup_violations,
    phi_eps_norm,
    good_vector_verdict,
    good_vector_probe,
)
from .intertwiner import (
    Intertwiner,
    build_J,
    apply_J,
    apply_J_inverse,
    verify_inverse_relations,
    verify_isometry_and_intertwining,
    fin_residual,
    general_intertwiner_family,
    split,
    finite_rank_check,
)
from .sysio import SystemDocument, load_system, parse_system, system_to_doc
