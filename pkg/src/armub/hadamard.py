"""Real Hadamard matrices: Sylvester, Paley I/II, Kronecker, order search.

Every constructor re-verifies H * H^T = order * I over the integers before
flagging the result; the flag is enforced, never assumed.  Constructors
return sign-normalized matrices (first row and first column all +1), which
gives the downstream block-selection search a canonical starting point.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .algebra import gf_from_order, prime_power_split
from .errors import DomainError, NotConstructibleError, ResourceLimitError

DEFAULT_SIZE_BUDGET = 4096


def size_budget() -> int:
    """Maximum matrix order; override with env var ARMUB_SIZE_BUDGET."""
    raw = os.environ.get("ARMUB_SIZE_BUDGET")
    return int(raw) if raw else DEFAULT_SIZE_BUDGET


class SignMatrix:
    """A square matrix with entries in {+1, -1}.

    ``hadamard_verified`` is True only after an exact integer check of
    H * H^T = order * I.  The entry array is frozen after construction.
    """

    __slots__ = ("order", "rows", "hadamard_verified", "label")

    def __init__(self, rows, label: str = "", verified: bool = False):
        arr = np.array(rows, dtype=np.int8)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.abs(arr) == 1):
            raise DomainError("entries must be +1 or -1")
        arr.setflags(write=False)
        self.order = arr.shape[0]
        self.rows = arr
        self.label = label
        self.hadamard_verified = bool(verified)

    def __eq__(self, other):
        return (
            isinstance(other, SignMatrix)
            and self.order == other.order
            and np.array_equal(self.rows, other.rows)
        )

    def __hash__(self):
        return hash((self.order, self.rows.tobytes()))

    def __repr__(self):
        tag = self.label or "?"
        return f"SignMatrix(order={self.order}, label={tag!r})"


@dataclass(frozen=True)
class HadamardCheck:
    ok: bool
    order: int
    first_violation: Optional[tuple[int, int, int]]  # (i, j, gram entry)

    def __bool__(self):
        return self.ok


def is_hadamard(m: SignMatrix | np.ndarray) -> HadamardCheck:
    """Exact check of H * H^T = order * I; locates the first violation."""
    rows = m.rows if isinstance(m, SignMatrix) else np.asarray(m)
    n = rows.shape[0]
    gram = rows.astype(np.int64) @ rows.astype(np.int64).T
    target = n * np.eye(n, dtype=np.int64)
    bad = np.argwhere(gram != target)
    if bad.size:
        i, j = map(int, bad[0])
        return HadamardCheck(False, n, (i, j, int(gram[i, j])))
    return HadamardCheck(True, n, None)


def _verified(rows: np.ndarray, label: str) -> SignMatrix:
    m = SignMatrix(rows, label=label)
    check = is_hadamard(m)
    if not check.ok:
        raise AssertionError(f"constructor produced a non-Hadamard matrix: {label}")
    return SignMatrix(normalize_signs(m).rows, label=label, verified=True)


def normalize_signs(m: SignMatrix) -> SignMatrix:
    """Flip rows/columns so the first row and column are all +1.

    Row/column negation preserves the Hadamard property.
    """
    rows = m.rows.astype(np.int8).copy()
    rows *= rows[0:1, :]  # flip columns where first row is -1
    rows *= rows[:, 0:1]  # then rows where first column is -1
    return SignMatrix(rows, label=m.label, verified=m.hadamard_verified)


def _check_budget(order: int):
    if order > size_budget():
        raise ResourceLimitError(
            f"order {order} exceeds size budget {size_budget()}"
        )


def sylvester(doublings: int) -> SignMatrix:
    """H of order 2**doublings via iterated H (x) [[1,1],[1,-1]]."""
    if doublings < 0:
        raise DomainError("doublings must be >= 0")
    order = 1 << doublings
    _check_budget(order)
    idx = np.arange(order)
    # Sylvester entry (i, j) = (-1)^popcount(i & j)
    pop = np.bitwise_count(idx[:, None] & idx[None, :]) if hasattr(np, "bitwise_count") else None
    if pop is None:
        pop = np.zeros((order, order), dtype=np.int64)
        vals = idx[:, None] & idx[None, :]
        while vals.any():
            pop += vals & 1
            vals >>= 1
    rows = np.where(pop % 2 == 0, 1, -1).astype(np.int8)
    return _verified(rows, f"sylvester({doublings})")


def paley(q: int) -> SignMatrix:
    """Paley construction from quadratic residues of GF(q), q an odd prime power.

    q = 3 mod 4 gives type I of order q+1; q = 1 mod 4 gives type II of
    order 2(q+1).
    """
    split = prime_power_split(q)
    if split is None or split[0] == 2:
        raise DomainError(f"{q} is not an odd prime power")
    field = gf_from_order(q)
    codes = np.arange(q, dtype=np.int64)
    diff = np.zeros((q, q), dtype=np.int64)
    for i in range(q):
        for j in range(q):
            diff[i, j] = field.sub(int(codes[i]), int(codes[j]))
    chi = np.zeros((q, q), dtype=np.int64)
    nz = diff != 0
    logs = field._log[diff[nz]]
    chi[nz] = np.where(logs % 2 == 0, 1, -1)

    if q % 4 == 3:
        order = q + 1
        _check_budget(order)
        s = np.zeros((order, order), dtype=np.int64)
        s[0, 1:] = 1
        s[1:, 0] = -1
        s[1:, 1:] = chi
        rows = s + np.eye(order, dtype=np.int64)
        return _verified(rows, f"paley1({q})")

    order = 2 * (q + 1)
    _check_budget(order)
    s = np.zeros((q + 1, q + 1), dtype=np.int64)
    s[0, 1:] = 1
    s[1:, 0] = 1
    s[1:, 1:] = chi
    plus = np.array([[1, 1], [1, -1]], dtype=np.int64)
    diag = np.array([[1, -1], [-1, -1]], dtype=np.int64)
    rows = np.kron(s, plus)
    for i in range(q + 1):
        rows[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = diag
    return _verified(rows, f"paley2({q})")


def kronecker(h1: SignMatrix, h2: SignMatrix) -> SignMatrix:
    """Kronecker product of two verified Hadamard matrices."""
    if not (h1.hadamard_verified and h2.hadamard_verified):
        raise DomainError("kronecker requires hadamard-verified operands")
    order = h1.order * h2.order
    _check_budget(order)
    rows = np.kron(h1.rows.astype(np.int64), h2.rows.astype(np.int64))
    return _verified(rows, f"kron({h1.label},{h2.label})")


# ---------------------------------------------------------------------------
# Order search
# ---------------------------------------------------------------------------

def _generator_orders(limit: int) -> dict[int, str]:
    """Orders reachable by a single generator, mapped to a builder tag.

    Builder preference per order: Sylvester power, then Paley I, then
    Paley II (fixed, for determinism).
    """
    gens: dict[int, str] = {2: "sylvester"}
    power = 4
    while power <= limit:
        gens[power] = "sylvester"
        power *= 2
    for order in range(4, limit + 1, 4):
        if order in gens:
            continue
        q = order - 1
        split = prime_power_split(q)
        if split and split[0] != 2 and q % 4 == 3:
            gens[order] = "paley1"
            continue
        q = order // 2 - 1
        split = prime_power_split(q)
        if split and split[0] != 2 and q % 4 == 1:
            gens[order] = "paley2"
    return gens


def _build_generator(order: int, tag: str) -> SignMatrix:
    if tag == "sylvester":
        return sylvester(order.bit_length() - 1)
    if tag == "paley1":
        return paley(order - 1)
    return paley(order // 2 - 1)


def find_hadamard(target_order: int) -> SignMatrix:
    """Search generator factorizations for a verified matrix of the order.

    Dynamic programming over divisors, minimizing the Kronecker factor
    count with deterministic tie-breaking (largest factor first).  Orders
    where no real Hadamard matrix exists raise DomainError; reachable-in-
    principle orders with no factorization raise NotConstructibleError.
    """
    if target_order < 1:
        raise DomainError("order must be positive")
    if target_order > 2 and target_order % 4 != 0:
        raise DomainError(
            f"no real Hadamard matrix of order {target_order} exists "
            "(order > 2 and not divisible by 4)"
        )
    _check_budget(target_order)
    if target_order == 1:
        return SignMatrix([[1]], label="sylvester(0)", verified=True)
    gens = _generator_orders(target_order)
    usable = sorted((g for g in gens if target_order % g == 0), reverse=True)

    from functools import cache

    @cache
    def best(remaining: int) -> tuple[int, ...] | None:
        if remaining == 1:
            return ()
        found = None
        for g in usable:
            if remaining % g:
                continue
            sub = best(remaining // g)
            if sub is not None:
                cand = (g,) + sub
                if found is None or len(cand) < len(found):
                    found = cand
        return found

    factors = best(target_order)
    if factors is None:
        raise NotConstructibleError(target_order, usable)
    result = None
    for g in factors:
        h = _cached_generator(g, gens[g])
        result = h if result is None else kronecker(result, h)
    assert result is not None and result.order == target_order
    return result


@lru_cache(maxsize=64)
def _cached_generator(order: int, tag: str) -> SignMatrix:
    return _build_generator(order, tag)
