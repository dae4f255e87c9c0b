"""Quantum Fourier transforms on finite abelian groups, the control/target
inversion identity, and the hidden homomorphism problem."""

from .errors import (
    CapExceeded,
    IntegrityError,
    ParseError,
    PreconditionError,
    QftlabError,
    StructureError,
)
from .fields import (
    FieldSpec,
    LinearFunctional,
    MatrixRingSpec,
    ZmodRing,
    field_basis,
    field_character,
    is_irreducible,
    matrix_basis,
    matrix_character,
    matrix_left_hom,
    matrix_right_hom,
    mul_hom,
    verify_character_completeness,
)
from .groups import (
    CharacterBasis,
    Check,
    GroupSpec,
    Homomorphism,
    check_compatibility,
    check_pair_compatibility,
    cyclic,
    diagonal_hom,
    product_basis,
    table_hom,
    verify_homomorphism,
    verify_orthogonality,
)
from .hidden import (
    BlackBox,
    lower_bound_threshold,
    collision_bound,
    run_separation_experiment,
    solve_classical_collision,
    solve_quantum,
)
from .parsing import parse_target
from .sim import (
    StateVector,
    a_psi,
    b_psi,
    fourier_state,
    measure_register,
    permutation_op,
    qft,
    qft_apply,
    tensor_apply,
    translation_op,
    verify_inversion,
    verify_inversion_pair,
)

__version__ = "0.1.0"
