"""Assembly of orthonormal bases from a block design and an orthogonal matrix.

Each parallel class becomes one basis of R^d: block b (points sorted
ascending) contributes k vectors, vector i carrying Y_{i,j} at coordinate
b_j.  Vector index within a basis is block_index * k + row, i.e. blocks in
class order, rows in Y order.  A single Y is used for every block: the
cross-basis bound only needs the maximum entry magnitude of Y, and a fixed
Y keeps runs reproducible.
"""

from __future__ import annotations

import numpy as np

from .algebra import Scalar, cmp_values, sign_of
from .epsh import EpsHadamard
from .errors import CertificationError, DomainError
from .rbd import Rbd


class SparseBasis:
    """One orthonormal basis in sparse block form (k nonzeros per vector)."""

    __slots__ = ("rbd", "y", "class_index")

    def __init__(self, rbd: Rbd, y: EpsHadamard, class_index: int):
        self.rbd = rbd
        self.y = y
        self.class_index = class_index

    @property
    def d(self) -> int:
        return self.rbd.d

    @property
    def k(self) -> int:
        return self.rbd.k

    @property
    def blocks(self) -> np.ndarray:
        return self.rbd.classes[self.class_index]

    def block_of_vector(self, index: int) -> int:
        return index // self.k

    def vector(self, index: int) -> list[tuple[int, Scalar]]:
        """(coordinate, value) pairs of the addressed vector."""
        if not 0 <= index < self.d:
            raise DomainError(f"vector index {index} outside [0, {self.d})")
        block, row = divmod(index, self.k)
        pts = self.blocks[block]
        return [(int(pts[j]), self.y.entry(row, j)) for j in range(self.k)]

    def support(self, index: int) -> tuple[int, ...]:
        block = self.block_of_vector(index)
        return tuple(int(p) for p in self.blocks[block])

    def dense_columns(self) -> list[list[Scalar]]:
        """Column vectors as dense exact lists (small d only)."""
        from fractions import Fraction

        cols = []
        for i in range(self.d):
            col: list[Scalar] = [Fraction(0)] * self.d
            for coord, val in self.vector(i):
                col[coord] = val
            cols.append(col)
        return cols


def vector_at(basis: SparseBasis, index: int) -> list[tuple[int, Scalar]]:
    """The (block, row)-addressed vector of a basis."""
    return basis.vector(index)


class BasisSet:
    """One orthonormal basis per parallel class, sharing one design and one Y."""

    __slots__ = ("rbd", "y", "bases")

    def __init__(self, rbd: Rbd, y: EpsHadamard, bases: list[SparseBasis]):
        self.rbd = rbd
        self.y = y
        self.bases = bases

    @property
    def d(self) -> int:
        return self.rbd.d

    @property
    def s(self) -> int:
        return self.rbd.s

    @property
    def k(self) -> int:
        return self.rbd.k

    @property
    def num_bases(self) -> int:
        return len(self.bases)

    def __len__(self):
        return len(self.bases)

    def __repr__(self):
        return f"BasisSet(d={self.d}, bases={len(self.bases)}, k={self.k})"


def assemble(rbd: Rbd, y: EpsHadamard) -> BasisSet:
    """Build the s bases and re-verify exact orthonormality of each.

    Within a class, vectors from different blocks have disjoint supports
    (partition property) and vectors within a block inherit orthonormality
    from Y's rows, so the verification is the pair of exact facts:
    Y Y^T = I (re-checked here) plus the per-class partition re-check.
    """
    if y.order != rbd.k:
        raise DomainError(
            f"orthogonal matrix order {y.order} != design block size {rbd.k}"
        )
    if rbd.mu is None or rbd.mu != 1:
        raise DomainError("design must carry certified mu = 1")
    y.verify_orthogonal()
    want = np.arange(rbd.d)
    for l in range(rbd.r):
        if not np.array_equal(np.sort(rbd.classes[l].reshape(-1)), want):
            raise CertificationError(f"class {l} is not a partition")
    return BasisSet(rbd, y, [SparseBasis(rbd, y, l) for l in range(rbd.r)])


def sparse_orthonormality_check(basis: SparseBasis) -> bool:
    """Literal exact B^T B = I using only coordinate-sharing vector pairs.

    Vectors of different blocks never share coordinates, so only the
    s within-block k x k Grams contribute.  Quadratic in k per block;
    intended for modest d (tests, spot checks).
    """
    from fractions import Fraction

    k = basis.k
    for b in range(basis.rbd.s):  # s blocks in this class
        for i in range(k):
            vi = dict(basis.vector(b * k + i))
            for j in range(i, k):
                acc: Scalar = Fraction(0)
                for coord, val in basis.vector(b * k + j):
                    if coord in vi:
                        acc = acc + vi[coord] * val
                want = Fraction(int(i == j))
                if cmp_values(acc, want) != 0:
                    return False
    return True
