"""Exact construction and certification of epsilon-Hadamard matrices and
approximate real mutually unbiased bases for dimensions d = (4n - t) * s.

All certification arithmetic is exact (arbitrary-precision rationals and
real quadratic extensions); floating point appears only in rendered
reports.
"""

from .algebra import GfElem, GfField, QuadNum, exact_sqrt, gf_make, quad_sign, quad_to_float
from .bases import BasisSet, SparseBasis, assemble, vector_at
from .epsh import (
    BlockSplit,
    EpsHadamard,
    ExactEps,
    UClass,
    best_reduction,
    classify_u,
    closed_form,
    corner_split,
    epsilon_of,
    lemma_inverse,
    schur_reduce,
    series_inverse_check,
)
from .errors import (
    ArmubError,
    CertificationError,
    DomainError,
    ExactArithmeticError,
    NotConstructibleError,
    ParseError,
    ResourceLimitError,
    StructuralError,
)
from .hadamard import SignMatrix, find_hadamard, is_hadamard, kronecker, normalize_signs, paley, sylvester
from .rbd import Rbd, RbdCertificate, build_affine_rbd, verify_rbd
from .verify import (
    ExactBeta,
    UnbiasednessReport,
    check_theorem_bounds,
    classify,
    cross_stats,
    ledger_ok,
)

__version__ = "0.1.0"
