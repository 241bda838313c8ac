"""Reduction of Hadamard matrices to epsilon-Hadamard (orthogonal) matrices.

A Hadamard matrix H of order M = 4n, split as [[U, V], [W, D]] with U of
size t x t (t in {1, 2, 3}), reduces to orthogonal matrices of order M - t:

    Y1 = D^ - W^ (I + U^)^-1 V^        Y2 = D^ + W^ (I - U^)^-1 V^

where hatted blocks carry the 1/sqrt(M) normalization.  This labeling
(Y1 from I+U, Y2 from I-U) is used consistently for both the general
elimination path and the closed forms.

Representation: a result Y is stored as a sum of terms (c_r, A_r) with
exact scalar coefficients c_r and integer matrices A_r (D, W V, W U V,
W U^2 V, or rank-one W-column x V-row products).  Exact orthogonality
then reduces to integer Gram matrices combined with a handful of exact
scalar identities, which keeps certification fast at every order in the
supported range.

Epsilon is computed from the definition: the maximum over entries of
|sqrt(k)*|Y_ij| - 1|, held exactly as the pair (q, side) with
q = k*Y_ij^2; deviations below 1/sqrt(k) count.  The maximum upward
deviation alone is kept as a separate diagnostic (`epsilon_upper`)
because several reported per-case expressions track only that side.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .algebra import (
    QuadNum,
    Scalar,
    cmp_values,
    exact_sqrt,
    quad_to_float,
    sign_of,
    sqrt_minus_cmp,
)
from .errors import (
    CertificationError,
    DomainError,
    ExactArithmeticError,
    ResourceLimitError,
)
from .hadamard import SignMatrix

# ---------------------------------------------------------------------------
# U configurations with published closed forms
# ---------------------------------------------------------------------------

_T2_PREFER_Y2 = (
    ((1, -1), (1, 1)),
    ((1, 1), (-1, 1)),
)  # U^2 = 2U - 2I
_T2_PREFER_Y1 = (
    ((-1, -1), (1, -1)),
    ((-1, 1), (-1, -1)),
)  # U^2 = -2U - 2I
_T3_PREFER_Y1 = (  # U^3 = -U^2 + 4U + 4I
    ((1, 1, 1), (1, -1, 1), (1, 1, -1)),
    ((-1, 1, 1), (1, 1, 1), (1, 1, -1)),
    ((-1, 1, 1), (1, -1, 1), (1, 1, 1)),
    ((-1, -1, 1), (-1, 1, -1), (1, -1, -1)),
    ((1, -1, 1), (-1, -1, -1), (1, -1, -1)),
    ((-1, -1, 1), (-1, -1, -1), (1, -1, 1)),
    ((1, 1, -1), (1, -1, -1), (-1, -1, -1)),
    ((-1, 1, -1), (1, -1, -1), (-1, -1, 1)),
    ((-1, 1, -1), (1, 1, -1), (-1, -1, -1)),
    ((-1, -1, -1), (-1, -1, 1), (-1, 1, 1)),
    ((-1, -1, -1), (-1, 1, 1), (-1, 1, -1)),
    ((1, -1, -1), (-1, -1, 1), (-1, 1, -1)),
)
_T3_PREFER_Y2 = (  # U^3 = U^2 + 4U - 4I
    ((1, -1, 1), (-1, 1, 1), (1, 1, -1)),
    ((1, 1, 1), (1, 1, -1), (1, -1, -1)),
    ((1, 1, -1), (1, 1, 1), (-1, 1, -1)),
    ((1, -1, -1), (-1, 1, -1), (-1, -1, -1)),
    ((1, -1, 1), (-1, -1, 1), (1, 1, 1)),
    ((1, 1, 1), (1, -1, -1), (1, -1, 1)),
    ((1, 1, -1), (1, -1, 1), (-1, 1, 1)),
    ((1, -1, -1), (-1, -1, -1), (-1, -1, 1)),
)

_PAPER_PREFERRED: dict[tuple, str] = {((1,),): "Y1", ((-1,),): "Y2"}
for _u in _T2_PREFER_Y2:
    _PAPER_PREFERRED[_u] = "Y2"
for _u in _T2_PREFER_Y1:
    _PAPER_PREFERRED[_u] = "Y1"
for _u in _T3_PREFER_Y1:
    _PAPER_PREFERRED[_u] = "Y1"
for _u in _T3_PREFER_Y2:
    _PAPER_PREFERRED[_u] = "Y2"


def paper_listed_configs(t: int) -> tuple[tuple, ...]:
    """The published U configurations of size t, in paper order."""
    if t == 1:
        return (((1,),), ((-1,),))
    if t == 2:
        return _T2_PREFER_Y2 + _T2_PREFER_Y1
    if t == 3:
        return _T3_PREFER_Y1 + _T3_PREFER_Y2
    raise DomainError(f"t must be in {{1,2,3}}, got {t}")


@dataclass(frozen=True)
class UClass:
    """Polynomial relation satisfied by a sign matrix U.

    For t <= 2 the relation is U^2 = kappa*I + gamma*U; for t = 3 it is
    U^3 = kappa*I + gamma*U + vartheta*U^2.  ``preferred_variant`` is set
    for the published configurations (the variant reported closest to a
    Hadamard matrix); ``closed_form_available`` is False exactly for the
    t = 3 configurations outside the published lists, which are always
    routed through the general elimination path.
    """

    t: int
    kappa: int
    gamma: int
    vartheta: Optional[int]
    paper_listed: bool
    preferred_variant: Optional[str]
    closed_form_available: bool

    def relation_str(self) -> str:
        if self.t <= 2:
            return f"U^2 = {self.kappa}*I + {self.gamma}*U"
        return f"U^3 = {self.kappa}*I + {self.gamma}*U + {self.vartheta}*U^2"

    def relation_holds(self, u: np.ndarray) -> bool:
        u = np.asarray(u, dtype=np.int64)
        eye = np.eye(self.t, dtype=np.int64)
        if self.t == 1:
            return bool(np.array_equal(u @ u, self.kappa * eye + self.gamma * u))
        if self.t == 2:
            return bool(np.array_equal(u @ u, self.kappa * eye + self.gamma * u))
        u2 = u @ u
        return bool(
            np.array_equal(u2 @ u, self.kappa * eye + self.gamma * u + self.vartheta * u2)
        )


def _int_det(u: np.ndarray) -> int:
    t = u.shape[0]
    if t == 1:
        return int(u[0, 0])
    if t == 2:
        return int(u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0])
    return int(
        u[0, 0] * (u[1, 1] * u[2, 2] - u[1, 2] * u[2, 1])
        - u[0, 1] * (u[1, 0] * u[2, 2] - u[1, 2] * u[2, 0])
        + u[0, 2] * (u[1, 0] * u[2, 1] - u[1, 1] * u[2, 0])
    )


def classify_u(u) -> UClass:
    """Compute and verify the polynomial relation of a t x t sign matrix.

    t = 1 uses the linear identity U^2 = U[0,0] * U; t = 2 uses trace and
    determinant; t = 3 uses trace, the sum of the off-diagonal 2x2 minor
    complements, and the determinant.
    """
    u = np.asarray(u, dtype=np.int64)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DomainError(f"U must be square, got shape {u.shape}")
    t = u.shape[0]
    if t not in (1, 2, 3):
        raise DomainError(f"t must be in {{1,2,3}}, got {t}")
    if not np.all(np.abs(u) == 1):
        raise DomainError("U entries must be +1 or -1")
    if t == 1:
        kappa, gamma, vartheta = 0, int(u[0, 0]), None
    elif t == 2:
        kappa, gamma, vartheta = -_int_det(u), int(np.trace(u)), None
    else:
        vartheta = int(np.trace(u))
        gamma = int(
            sum(
                u[i, j] * u[j, i] - u[i, i] * u[j, j]
                for i in range(3)
                for j in range(i + 1, 3)
            )
        )
        kappa = _int_det(u)
    key = tuple(tuple(int(x) for x in row) for row in u)
    preferred = _PAPER_PREFERRED.get(key)
    listed = preferred is not None
    cls = UClass(
        t=t,
        kappa=kappa,
        gamma=gamma,
        vartheta=vartheta,
        paper_listed=listed,
        preferred_variant=preferred,
        closed_form_available=(t <= 2) or listed,
    )
    assert cls.relation_holds(u), "Cayley-Hamilton relation must hold"
    return cls


# ---------------------------------------------------------------------------
# Exact epsilon
# ---------------------------------------------------------------------------

class ExactEps:
    """epsilon = |sqrt(q) - 1| held exactly, q = k * Y_ij^2 at the extremum.

    ``side`` is the sign of sqrt(q) - 1 (equivalently of q - 1): +1 for an
    upward deviation, -1 downward, 0 for an exact Hadamard entry.  All
    comparisons are exact; at most one square root is nested, so mixed-side
    comparisons reduce to a single extra squaring.
    """

    __slots__ = ("q", "side", "location")

    def __init__(self, q: Scalar, location=None):
        if sign_of(q) < 0:
            raise DomainError("k*Y^2 cannot be negative")
        self.q = q if not isinstance(q, int) else Fraction(q)
        self.side = sign_of(self.q - 1)
        self.location = location

    @classmethod
    def zero(cls) -> "ExactEps":
        return cls(Fraction(1))

    def is_zero(self) -> bool:
        return self.side == 0

    def cmp(self, other: "ExactEps") -> int:
        s1, s2 = self.side, other.side
        if s1 == 0:
            return 0 if s2 == 0 else -1
        if s2 == 0:
            return 1
        if s1 > 0 and s2 > 0:
            return cmp_values(self.q, other.q)
        if s1 < 0 and s2 < 0:
            return cmp_values(other.q, self.q)
        # mixed sides: sign of sqrt(q1) + sqrt(q2) - 2
        mixed = sqrt_minus_cmp(4 * self.q * other.q, 4 - self.q - other.q)
        return mixed if s1 > 0 else -mixed

    def le_bound(self, bound: Scalar) -> bool:
        """Exact epsilon <= bound, for a scalar bound."""
        if sign_of(bound) < 0:
            return False
        if self.side == 0:
            return True
        if self.side > 0:
            return cmp_values(self.q, (1 + bound) * (1 + bound)) <= 0
        low = 1 - bound
        if sign_of(low) <= 0:
            return True
        return cmp_values(self.q, low * low) >= 0

    def lt_bound(self, bound: Scalar) -> bool:
        if sign_of(bound) <= 0:
            return False
        if self.side == 0:
            return True
        if self.side > 0:
            return cmp_values(self.q, (1 + bound) * (1 + bound)) < 0
        # 1 - sqrt(q) < bound <=> sqrt(q) > 1 - bound
        low = 1 - bound
        slow = sign_of(low)
        if slow < 0:
            return True
        if slow == 0:
            return sign_of(self.q) > 0
        return cmp_values(self.q, low * low) > 0

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __eq__(self, other):
        return isinstance(other, ExactEps) and self.cmp(other) == 0

    def __float__(self):
        return abs(math.sqrt(quad_to_float(self.q, 70)) - 1.0)

    def expr(self) -> str:
        return f"|sqrt({self.q}) - 1|"

    def __repr__(self):
        return f"ExactEps({float(self):.6g}, side={self.side})"


def _entry_eps(k: int, value: Scalar, location) -> ExactEps:
    return ExactEps(k * value * value, location=location)


# ---------------------------------------------------------------------------
# Block splits
# ---------------------------------------------------------------------------

def _as_index_tuple(idx, order: int, t: int, name: str) -> tuple[int, ...]:
    out = tuple(int(i) for i in idx)
    if len(out) != t:
        raise DomainError(f"{name} must select {t} indices")
    if any(not 0 <= i < order for i in out):
        raise DomainError(f"{name} out of range for order {order}")
    if any(out[i] >= out[i + 1] for i in range(len(out) - 1)):
        raise DomainError(f"{name} must be strictly increasing")
    return out


class BlockSplit:
    """Index-set selection of the [[U, V], [W, D]] partition of a Hadamard
    matrix, with optional lazy sign toggles on the selected rows/columns.

    Negating a selected full row of H flips the corresponding rows of U
    and V; negating a selected column flips columns of U and W.  D is
    never touched, and each toggle preserves the Hadamard property.
    """

    __slots__ = ("source", "t", "row_select", "col_select", "row_negate", "col_negate")

    def __init__(self, source: SignMatrix, row_select, col_select,
                 row_negate=None, col_negate=None):
        if not source.hadamard_verified:
            raise DomainError("split source must be hadamard-verified")
        t = len(tuple(row_select))
        if t not in (1, 2, 3):
            raise DomainError(f"t must be in {{1,2,3}}, got {t}")
        self.source = source
        self.t = t
        self.row_select = _as_index_tuple(row_select, source.order, t, "row_select")
        self.col_select = _as_index_tuple(col_select, source.order, t, "col_select")
        self.row_negate = tuple(bool(b) for b in (row_negate or (False,) * t))
        self.col_negate = tuple(bool(b) for b in (col_negate or (False,) * t))
        if len(self.row_negate) != t or len(self.col_negate) != t:
            raise DomainError("negation masks must have length t")

    def _signs(self, mask) -> np.ndarray:
        return np.array([-1 if b else 1 for b in mask], dtype=np.int64)

    def _complement(self, selected) -> np.ndarray:
        return np.setdiff1d(np.arange(self.source.order), np.array(selected))

    def u_matrix(self) -> np.ndarray:
        h = self.source.rows.astype(np.int64)
        u = h[np.ix_(self.row_select, self.col_select)]
        return u * self._signs(self.row_negate)[:, None] * self._signs(self.col_negate)[None, :]

    def v_matrix(self) -> np.ndarray:
        h = self.source.rows.astype(np.int64)
        v = h[np.ix_(self.row_select, self._complement(self.col_select))]
        return v * self._signs(self.row_negate)[:, None]

    def w_matrix(self) -> np.ndarray:
        h = self.source.rows.astype(np.int64)
        w = h[np.ix_(self._complement(self.row_select), self.col_select)]
        return w * self._signs(self.col_negate)[None, :]

    def d_matrix(self) -> np.ndarray:
        h = self.source.rows.astype(np.int64)
        return h[np.ix_(self._complement(self.row_select), self._complement(self.col_select))]

    def __repr__(self):
        return (
            f"BlockSplit({self.source!r}, rows={self.row_select}, "
            f"cols={self.col_select})"
        )


def corner_split(source: SignMatrix, t: int) -> BlockSplit:
    """U = leading t x t block, no negations."""
    return BlockSplit(source, tuple(range(t)), tuple(range(t)))


@dataclass(frozen=True)
class Provenance:
    source_label: str
    source_order: int
    t: int
    row_select: tuple[int, ...]
    col_select: tuple[int, ...]
    row_negate: tuple[bool, ...]
    col_negate: tuple[bool, ...]
    variant: Optional[str]
    method: str  # "schur" | "closed-form" | "exact-hadamard"
    uclass: Optional[UClass] = None


# ---------------------------------------------------------------------------
# EpsHadamard
# ---------------------------------------------------------------------------

class EpsHadamard:
    """An exactly-orthogonal matrix of order k with certified epsilon.

    Stored as a sum of (scalar coefficient, integer matrix) terms over
    Q(sqrt(radicand)) -- plain rationals when the radicand is a perfect
    square.  Orthogonality (both Y Y^T and Y^T Y), the entry-magnitude
    window, and epsilon are certified exactly at construction; epsilon < 1
    is recorded rather than enforced, since it is only guaranteed for
    t < sqrt(n).
    """

    __slots__ = (
        "order",
        "radicand",
        "terms",
        "provenance",
        "epsilon",
        "epsilon_upper",
        "window_ok",
        "is_eps_hadamard",
        "_distinct",
        "_entry_combo_ids",
        "_combo_values",
    )

    def __init__(self, order, radicand, terms, provenance, verify=True):
        self.order = int(order)
        self.radicand = int(radicand)
        self.terms = tuple((c, _frozen(m)) for c, m in terms)
        self.provenance = provenance
        self._scan_entries()
        if verify:
            self.verify_orthogonal()
        self._certify_window()

    # -- construction helpers ----------------------------------------------

    def _scan_entries(self):
        k = self.order
        mats = np.stack([m for _, m in self.terms])  # (R, k, k)
        flat = mats.reshape(len(self.terms), k * k).T  # (k^2, R)
        combos, inverse = np.unique(flat, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        coeffs = [c for c, _ in self.terms]
        values = []
        for row in combos:
            v: Scalar = Fraction(0)
            for c, m in zip(coeffs, row):
                if m:
                    v = v + c * int(m)
            values.append(v)
        self._entry_combo_ids = inverse.reshape(k, k)
        self._combo_values = values
        # distinct absolute values, ascending
        abs_map: dict = {}
        for ci, v in enumerate(values):
            av = abs(v) if isinstance(v, QuadNum) else abs(Fraction(v))
            abs_map.setdefault(_scalar_key(av), [av, []])[1].append(ci)
        ordered = sorted(abs_map.values(), key=_sort_key_scalar)
        self._distinct = ordered  # list of [abs value, combo ids]

        eps = ExactEps.zero()
        eps_loc = None
        for ci, v in enumerate(values):
            first = tuple(int(x) for x in np.argwhere(self._entry_combo_ids == ci)[0])
            cand = _entry_eps(k, v, first)
            if eps.cmp(cand) < 0:
                eps, eps_loc = cand, first
        self.epsilon = eps
        # largest upward deviation alone (0 if no entry exceeds 1/sqrt(k))
        up = ExactEps.zero()
        for ci, v in enumerate(values):
            cand = _entry_eps(k, v, None)
            if cand.side > 0 and up.cmp(cand) < 0:
                up = cand
        self.epsilon_upper = up
        self.is_eps_hadamard = self.epsilon.lt_bound(Fraction(1))

    def verify_orthogonal(self):
        """Exact check of Y Y^T = I and Y^T Y = I via integer Gram matrices."""
        k = self.order
        coeffs = [c for c, _ in self.terms]
        mats = [m.astype(np.int64) for _, m in self.terms]
        for transpose_first in (False, True):
            grams = []
            scalars = []
            for r, (cr, ar) in enumerate(zip(coeffs, mats)):
                for s_, (cs, as_) in enumerate(zip(coeffs, mats)):
                    g = (ar.T @ as_) if transpose_first else (ar @ as_.T)
                    grams.append(g.reshape(k * k))
                    scalars.append(cr * cs)
            stacked = np.stack(grams).T  # (k^2, P)
            diag = np.eye(k, dtype=np.int64).reshape(k * k, 1)
            combos, inverse = np.unique(
                np.hstack([stacked, diag]), axis=0, return_inverse=True
            )
            inverse = inverse.reshape(k, k)
            for ci, row in enumerate(combos):
                total: Scalar = Fraction(0)
                for c, m in zip(scalars, row[:-1]):
                    if m:
                        total = total + c * int(m)
                want = Fraction(int(row[-1]))
                if cmp_values(total, want) != 0:
                    idx = np.argwhere(inverse == ci)[0]
                    raise CertificationError(
                        f"orthogonality violated at {tuple(int(x) for x in idx)}: "
                        f"got {total}, expected {want}"
                    )

    def _certify_window(self):
        """Entry magnitudes must lie in the closed interval of the reduction
        theorem whenever 1 <= t and t < sqrt(M)."""
        t = self.provenance.t
        m = self.radicand
        self.window_ok = True
        if t < 1 or t * t >= m:
            return
        sqrt_m = exact_sqrt(m)
        lo = (1 - Fraction(t) / (sqrt_m - t)) / sqrt_m
        hi = (1 + Fraction(t) / (sqrt_m - t)) / sqrt_m
        for av, _ in self._distinct:
            if cmp_values(av, lo) < 0 or cmp_values(av, hi) > 0:
                self.window_ok = False
                raise CertificationError(
                    f"entry magnitude {av} outside window [{lo}, {hi}]"
                )

    # -- accessors -----------------------------------------------------------

    def entry(self, i: int, j: int) -> Scalar:
        return self._combo_values[int(self._entry_combo_ids[i, j])]

    def scalar_rows(self) -> list[list[Scalar]]:
        k = self.order
        return [[self.entry(i, j) for j in range(k)] for i in range(k)]

    def distinct_abs_values(self) -> list[Scalar]:
        """Distinct entry magnitudes, ascending."""
        return [av for av, _ in self._distinct]

    def max_abs_entry(self) -> Scalar:
        return self._distinct[-1][0]

    def abs_value_ids(self) -> tuple[np.ndarray, list[Scalar]]:
        """(ids, values): ids[i, j] indexes the magnitude of Y_ij in values."""
        combo_to_abs = np.zeros(len(self._combo_values), dtype=np.int64)
        for ai, (_, combo_ids) in enumerate(self._distinct):
            for ci in combo_ids:
                combo_to_abs[ci] = ai
        return combo_to_abs[self._entry_combo_ids], [av for av, _ in self._distinct]

    @property
    def variant(self) -> Optional[str]:
        return self.provenance.variant

    def __repr__(self):
        return (
            f"EpsHadamard(k={self.order}, m={self.radicand}, "
            f"eps~{float(self.epsilon):.4f}, via={self.provenance.method})"
        )

    # -- alternative constructors -------------------------------------------

    @classmethod
    def from_sign_hadamard(cls, h: SignMatrix) -> "EpsHadamard":
        """Exact Y = H / sqrt(k) for a verified Hadamard matrix (epsilon = 0)."""
        if not h.hadamard_verified:
            raise DomainError("matrix is not hadamard-verified")
        k = h.order
        coeff = 1 / exact_sqrt(k) if k > 1 else Fraction(1)
        prov = Provenance(
            source_label=h.label,
            source_order=k,
            t=0,
            row_select=(),
            col_select=(),
            row_negate=(),
            col_negate=(),
            variant=None,
            method="exact-hadamard",
        )
        return cls(k, k, [(coeff, h.rows.astype(np.int64))], prov)

    @classmethod
    def from_scalar_rows(cls, rows: Sequence[Sequence[Scalar]], radicand: int,
                         provenance: Provenance) -> "EpsHadamard":
        """Rebuild from explicit entries (e.g. parsed JSON) and re-certify.

        Entries are decomposed over indicator matrices of equal-value
        positions, restoring the fast exact-verification path.
        """
        k = len(rows)
        keys: dict = {}
        ids = np.zeros((k, k), dtype=np.int64)
        vals: list[Scalar] = []
        for i, row in enumerate(rows):
            if len(row) != k:
                raise DomainError("entry rows must form a square matrix")
            for j, v in enumerate(row):
                kk = _scalar_key(v)
                if kk not in keys:
                    keys[kk] = len(vals)
                    vals.append(v)
                ids[i, j] = keys[kk]
        terms = []
        for vi, v in enumerate(vals):
            if sign_of(v) == 0 and len(vals) > 1:
                continue  # zero values contribute nothing
            terms.append((v, (ids == vi).astype(np.int64)))
        return cls(k, radicand, terms, provenance)


def _frozen(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.int64).copy()
    arr.setflags(write=False)
    return arr


def _scalar_key(v: Scalar):
    if isinstance(v, QuadNum):
        if v.b == 0:
            return (v.a.numerator, v.a.denominator)
        return (v.a.numerator, v.a.denominator, v.b.numerator, v.b.denominator, v.m)
    f = Fraction(v)
    return (f.numerator, f.denominator)


def _sort_key_scalar(item):
    return _CmpWrap(item[0])


class _CmpWrap:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return cmp_values(self.v, other.v) < 0

    def __eq__(self, other):
        return cmp_values(self.v, other.v) == 0


# ---------------------------------------------------------------------------
# Small exact-matrix helpers (t <= 3)
# ---------------------------------------------------------------------------

def _kmat_identity(t: int) -> list[list[Scalar]]:
    return [[Fraction(int(i == j)) for j in range(t)] for i in range(t)]


def _kmat_mul(a, b) -> list[list[Scalar]]:
    t, mid, cols = len(a), len(b), len(b[0])
    out = []
    for i in range(t):
        row = []
        for j in range(cols):
            acc: Scalar = Fraction(0)
            for x in range(mid):
                acc = acc + a[i][x] * b[x][j]
            row.append(acc)
        out.append(row)
    return out


def _kmat_inverse(a) -> list[list[Scalar]]:
    """Gauss-Jordan with exact scalars and first-nonzero pivoting."""
    t = len(a)
    work = [list(row) + ident for row, ident in zip(a, _kmat_identity(t))]
    for col in range(t):
        pivot = next(
            (r for r in range(col, t) if sign_of(work[r][col]) != 0), None
        )
        if pivot is None:
            raise ExactArithmeticError("singular matrix in exact elimination")
        work[col], work[pivot] = work[pivot], work[col]
        pv = work[col][col]
        work[col] = [x / pv for x in work[col]]
        for r in range(t):
            if r != col and sign_of(work[r][col]) != 0:
                f = work[r][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    return [row[t:] for row in work]


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

def _check_reduction_pre(split: BlockSplit):
    m = split.source.order
    if split.t * split.t >= m:
        raise DomainError(
            f"t={split.t} must satisfy t < sqrt(order) for order {m}"
        )


def schur_reduce(split: BlockSplit, variant: str, verify: bool = True) -> EpsHadamard:
    """General reduction via exact elimination of (I +/- U/sqrt(M)).

    Works for every U; invertibility is guaranteed by diagonal dominance
    when t < sqrt(M).
    """
    _check_reduction_pre(split)
    if variant not in ("Y1", "Y2"):
        raise DomainError(f"variant must be Y1 or Y2, got {variant!r}")
    m = split.source.order
    t = split.t
    sqrt_m = exact_sqrt(m)
    u = split.u_matrix()
    sign = 1 if variant == "Y1" else -1
    a = [
        [
            Fraction(int(i == j)) + sign * int(u[i, j]) / sqrt_m
            for j in range(t)
        ]
        for i in range(t)
    ]
    x = _kmat_inverse(a)
    w, v, d = split.w_matrix(), split.v_matrix(), split.d_matrix()
    terms: list[tuple[Scalar, np.ndarray]] = [(1 / sqrt_m, d)]
    for i in range(t):
        for j in range(t):
            coeff = (-sign) * x[i][j] / m
            terms.append((coeff, np.outer(w[:, i], v[j, :])))
    prov = Provenance(
        source_label=split.source.label,
        source_order=m,
        t=t,
        row_select=split.row_select,
        col_select=split.col_select,
        row_negate=split.row_negate,
        col_negate=split.col_negate,
        variant=variant,
        method="schur",
        uclass=classify_u(u),
    )
    return EpsHadamard(m - t, m, terms, prov, verify=verify)


def _poly_inverse_coeffs(kappa: int, gamma: int, vartheta: Optional[int],
                         alpha: Scalar) -> tuple[Scalar, Scalar, Scalar, Scalar]:
    """Coefficients (x, y, z) with (alpha*I + U)^-1 = x*I + y*U + z*U^2,
    given the relation of U; returns (x, y, z, denominator)."""
    if vartheta is None:
        den = alpha * alpha + gamma * alpha - kappa
        if sign_of(den) == 0:
            raise ExactArithmeticError("vanishing denominator in closed form")
        return (alpha + gamma) / den, -1 / den, Fraction(0), den
    den = alpha * alpha * alpha + vartheta * alpha * alpha - gamma * alpha + kappa
    if sign_of(den) == 0:
        raise ExactArithmeticError("vanishing denominator in closed form")
    z = 1 / den
    y = -(alpha + vartheta) / den
    x = (alpha * (alpha + vartheta) - gamma) / den
    return x, y, z, den


def _negated_params(uclass: UClass) -> tuple[int, int, Optional[int]]:
    """Relation parameters of -U given those of U."""
    if uclass.vartheta is None:
        return uclass.kappa, -uclass.gamma, None
    return -uclass.kappa, uclass.gamma, -uclass.vartheta


def lemma_inverse(u, radicand: int, sign: int = 1) -> tuple[list[list[Scalar]], Scalar]:
    """Exact (I + sign * U/sqrt(radicand))^-1 as a polynomial in U.

    Returns (inverse matrix, non-vanishing denominator), both exact.  The
    inverse of (I + U/alpha) equals alpha * (alpha*I + U)^-1.
    """
    u = np.asarray(u, dtype=np.int64)
    uclass = classify_u(u)
    alpha = exact_sqrt(radicand)
    if sign == 1:
        kappa, gamma, vartheta = uclass.kappa, uclass.gamma, uclass.vartheta
        uu = u
    elif sign == -1:
        kappa, gamma, vartheta = _negated_params(uclass)
        uu = -u
    else:
        raise DomainError("sign must be +1 or -1")
    x, y, z, den = _poly_inverse_coeffs(kappa, gamma, vartheta, alpha)
    t = u.shape[0]
    uu2 = uu @ uu
    inv = [
        [
            alpha * (x * int(i == j) + y * int(uu[i, j]) + z * int(uu2[i, j]))
            for j in range(t)
        ]
        for i in range(t)
    ]
    return inv, den


def closed_form(split: BlockSplit, uclass: UClass, variant: str,
                verify: bool = True) -> EpsHadamard:
    """Reduction via the explicit polynomial-in-U inverse of the relation.

    Produces terms on the integer matrices W V, W U V, W U^2 V with the
    published scalar coefficients; for t = 3 configurations outside the
    published lists this path is unavailable and the general elimination
    must be used.
    """
    _check_reduction_pre(split)
    if variant not in ("Y1", "Y2"):
        raise DomainError(f"variant must be Y1 or Y2, got {variant!r}")
    if not uclass.closed_form_available:
        raise DomainError(
            "no published closed form for this U configuration; use schur_reduce"
        )
    u = split.u_matrix()
    if uclass.t != split.t or not uclass.relation_holds(u):
        raise DomainError("U does not match the supplied relation")
    m = split.source.order
    alpha = exact_sqrt(m)
    if variant == "Y1":
        kappa, gamma, vartheta = uclass.kappa, uclass.gamma, uclass.vartheta
        outer_sign, u_eff = -1, u
    else:
        kappa, gamma, vartheta = _negated_params(uclass)
        outer_sign, u_eff = 1, -u
    x, y, z, _den = _poly_inverse_coeffs(kappa, gamma, vartheta, alpha)
    w, v, d = split.w_matrix(), split.v_matrix(), split.d_matrix()
    wv = w @ v
    wuv = w @ u_eff @ v
    wu2v = w @ u_eff @ u_eff @ v
    terms: list[tuple[Scalar, np.ndarray]] = [(1 / alpha, d)]
    for coeff, mat in ((x, wv), (y, wuv), (z, wu2v)):
        scaled = outer_sign * coeff / alpha
        if sign_of(scaled) != 0:
            terms.append((scaled, mat))
    prov = Provenance(
        source_label=split.source.label,
        source_order=m,
        t=split.t,
        row_select=split.row_select,
        col_select=split.col_select,
        row_negate=split.row_negate,
        col_negate=split.col_negate,
        variant=variant,
        method="closed-form",
        uclass=uclass,
    )
    return EpsHadamard(m - split.t, m, terms, prov, verify=verify)


def reduce_split(split: BlockSplit, variant: str, verify: bool = True) -> EpsHadamard:
    """Closed form when available for this U, general elimination otherwise."""
    uclass = classify_u(split.u_matrix())
    if uclass.closed_form_available:
        return closed_form(split, uclass, variant, verify=verify)
    return schur_reduce(split, variant, verify=verify)


# ---------------------------------------------------------------------------
# Search over splits
# ---------------------------------------------------------------------------

_SCOPES = ("corner-only", "row-col-permutations", "permutations-and-negations")


def _iter_splits(h: SignMatrix, t: int, scope: str):
    if scope == "corner-only":
        yield corner_split(h, t)
        return
    order = h.order
    negs = (
        list(itertools.product((False, True), repeat=t))
        if scope == "permutations-and-negations"
        else [(False,) * t]
    )
    for rows in itertools.combinations(range(order), t):
        for cols in itertools.combinations(range(order), t):
            for rn in negs:
                for cn in negs:
                    yield BlockSplit(h, rows, cols, rn, cn)


def _scope_size(order: int, t: int, scope: str) -> int:
    if scope == "corner-only":
        return 1
    pairs = math.comb(order, t) ** 2
    if scope == "permutations-and-negations":
        pairs *= 4**t
    return pairs


def best_reduction(h: SignMatrix, t: int, search_scope: str = "corner-only",
                   cap: int = 100_000) -> EpsHadamard:
    """Minimum-epsilon reduction over the splits in scope.

    Both variants are evaluated for every candidate split (closed form for
    classified U, elimination otherwise).  Ties break deterministically:
    lexicographically smallest index sets and negation masks, then variant
    Y2.  If the scope holds more than ``cap`` splits, the first ``cap`` are
    evaluated in lexicographic order and a ResourceLimitError carrying the
    partial best is raised.
    """
    if not h.hadamard_verified:
        raise DomainError("best_reduction requires a hadamard-verified matrix")
    if search_scope not in _SCOPES:
        raise DomainError(f"unknown search scope {search_scope!r}")
    if t not in (1, 2, 3):
        raise DomainError(f"t must be in {{1,2,3}}, got {t}")
    if t * t >= h.order:
        raise DomainError(f"t={t} must satisfy t < sqrt({h.order})")

    best: Optional[EpsHadamard] = None
    overflow = _scope_size(h.order, t, search_scope) > cap
    seen = 0
    for split in _iter_splits(h, t, search_scope):
        if seen >= cap:
            break
        seen += 1
        for variant in ("Y2", "Y1"):
            cand = reduce_split(split, variant, verify=False)
            if best is None or _candidate_better(cand, best):
                best = cand
    if best is None:
        raise DomainError("no candidate splits in scope")
    final = reduce_split(
        BlockSplit(
            h,
            best.provenance.row_select,
            best.provenance.col_select,
            best.provenance.row_negate,
            best.provenance.col_negate,
        ),
        best.provenance.variant,
        verify=True,
    )
    if overflow:
        raise ResourceLimitError(
            f"search scope exceeds cap of {cap} splits", partial_best=final
        )
    return final


def _candidate_better(cand: EpsHadamard, best: EpsHadamard) -> bool:
    c = cand.epsilon.cmp(best.epsilon)
    if c != 0:
        return c < 0
    return _tie_key(cand) < _tie_key(best)


def _tie_key(y: EpsHadamard):
    p = y.provenance
    return (p.row_select, p.col_select, p.row_negate, p.col_negate,
            0 if p.variant == "Y2" else 1)


# ---------------------------------------------------------------------------
# Epsilon of an arbitrary matrix, Neumann-series diagnostic
# ---------------------------------------------------------------------------

def epsilon_of(y) -> ExactEps:
    """Exact epsilon of an orthogonal matrix (EpsHadamard or scalar rows)."""
    if isinstance(y, EpsHadamard):
        return y.epsilon
    k = len(y)
    best = ExactEps.zero()
    for i, row in enumerate(y):
        for j, v in enumerate(row):
            cand = _entry_eps(k, v if not isinstance(v, int) else Fraction(v), (i, j))
            if best.cmp(cand) < 0:
                best = cand
    return best


@dataclass
class SeriesCheck:
    residual: Scalar  # max |exact inverse - truncated series| over entries
    tail_bound: Scalar  # geometric bound on the dropped tail
    within_bound: bool
    terms: int


def series_inverse_check(u_hat, terms: int, sign: int = 1) -> SeriesCheck:
    """Compare the truncated Neumann series of (I + sign*U^)^-1 with the
    exact inverse; diagnostic only, never used in certification paths.

    ``u_hat`` is the normalized t x t block (entries of magnitude
    1/sqrt(4n)); convergence requires t * max|entry| < 1.
    """
    t = len(u_hat)
    rows = [[v if not isinstance(v, int) else Fraction(v) for v in row] for row in u_hat]
    cmax: Scalar = Fraction(0)
    for row in rows:
        for v in row:
            av = abs(v) if isinstance(v, QuadNum) else abs(Fraction(v))
            if cmp_values(av, cmax) > 0:
                cmax = av
    if cmp_values(t * cmax, Fraction(1)) >= 0:
        raise DomainError("series diverges: t * max|entry| >= 1")
    ident = _kmat_identity(t)
    a = [
        [ident[i][j] + sign * rows[i][j] for j in range(t)]
        for i in range(t)
    ]
    exact = _kmat_inverse(a)
    # truncated sum of (-sign * U^)^j
    neg = [[-sign * v for v in row] for row in rows]
    acc = _kmat_identity(t)
    total = _kmat_identity(t)
    for _ in range(terms):
        acc = _kmat_mul(acc, neg)
        total = [
            [total[i][j] + acc[i][j] for j in range(t)] for i in range(t)
        ]
    residual: Scalar = Fraction(0)
    for i in range(t):
        for j in range(t):
            dv = exact[i][j] - total[i][j]
            av = abs(dv) if isinstance(dv, QuadNum) else abs(Fraction(dv))
            if cmp_values(av, residual) > 0:
                residual = av
    # sum_{j > terms} t^(j-1) * cmax^j = t^terms * cmax^(terms+1) / (1 - t*cmax)
    tail = (t**terms) * _pow_scalar(cmax, terms + 1) / (1 - t * cmax)
    return SeriesCheck(
        residual=residual,
        tail_bound=tail,
        within_bound=cmp_values(residual, tail) <= 0,
        terms=terms,
    )


def _pow_scalar(x: Scalar, e: int) -> Scalar:
    out: Scalar = Fraction(1)
    for _ in range(e):
        out = out * x
    return out
