"""Unbiasedness statistics, bound checks, and classification.

Inner products between vectors of different bases are structurally sparse:
with mu = 1 the supports of two cross-basis vectors share at most one
coordinate, so every cross inner product is zero or a single product of
two Y entries.  Both computation routes exploit this but are independent:

* exhaustive mode aggregates, per basis pair, the count of sharing block
  pairs by (column, column) position and contracts it with per-column
  magnitude histograms of Y -- every one of the d^2 vector pairs is
  accounted for without materializing it;
* sampled mode draws whole basis pairs (counter-based Philox generator)
  and materializes all k^2 products for every sharing block pair.

Values are collected by exact equality (no floating tolerance exists in
classification); beta = sqrt(d) * max|<u,v>| is held exactly via its
square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .algebra import Scalar, cmp_values, exact_sqrt, quad_to_float, sign_of, sqrt_minus_cmp
from .bases import BasisSet
from .epsh import ExactEps, _scalar_key
from .errors import CertificationError, DomainError

CLASS_MUB = "MUB"
CLASS_APMUB = "APMUB"
CLASS_ARMUB = "beta-ARMUB"


class ExactBeta:
    """beta = sqrt(d) * max_ip, compared exactly through its square."""

    __slots__ = ("max_ip", "d")

    def __init__(self, max_ip: Scalar, d: int):
        if sign_of(max_ip) < 0:
            raise DomainError("max inner product magnitude cannot be negative")
        self.max_ip = max_ip
        self.d = d

    def le(self, bound) -> bool:
        """beta <= bound for a nonnegative rational/scalar bound."""
        b = Fraction(bound) if isinstance(bound, (int, str)) else bound
        if sign_of(b) < 0:
            return False
        return cmp_values(self.d * self.max_ip * self.max_ip, b * b) <= 0

    def lt(self, bound) -> bool:
        b = Fraction(bound) if isinstance(bound, (int, str)) else bound
        if sign_of(b) <= 0:
            return False
        return cmp_values(self.d * self.max_ip * self.max_ip, b * b) < 0

    def __float__(self):
        return math.sqrt(self.d) * quad_to_float(self.max_ip, 70)

    def __repr__(self):
        return f"ExactBeta({float(self):.6g})"


@dataclass
class DeltaValue:
    value: Scalar  # |<u, v>| magnitude, exact
    count: int  # occurrences over all ordered cross pairs checked


@dataclass
class UnbiasednessReport:
    d: int
    s: int
    k: int
    num_bases: int
    t: int
    n: Optional[int]
    epsilon: ExactEps
    epsilon_upper: ExactEps
    delta: list[DeltaValue]  # ascending by value
    beta: ExactBeta
    pairs_checked: int
    coverage: dict
    classification: str
    evidence: str  # "exhaustive" | "sampled" (lower-bound classification)
    window_ok: bool
    beta_le_eps_chain: bool  # beta <= (1+eps)^2 sqrt(d)/k, exact
    max_abs_y_sq: Scalar  # (max |Y_ij|)^2, for the formula-route certificate
    radicand: int

    def bound_beta_float(self) -> float:
        return (1.0 + float(self.epsilon)) ** 2 * math.sqrt(self.d) / self.k

    def beta_formula_certificate(self) -> ExactBeta:
        """The mu * max|Y|^2 bound as an exact beta value (route one)."""
        return ExactBeta(self.max_abs_y_sq, self.d)


def _ip_le_eps_square(max_ip: Scalar, eps: ExactEps, k: int) -> bool:
    """Exact check of k * max_ip <= (1 + eps)^2."""
    lhs = k * max_ip
    if eps.side >= 0:
        return cmp_values(lhs, eps.q) <= 0
    # (1+eps)^2 = (2 - sqrt(q))^2 = 4 + q - 4 sqrt(q)
    rhs_linear = 4 + eps.q - lhs
    return sqrt_minus_cmp(16 * eps.q, rhs_linear) <= 0


def _merge_counts(acc: dict, key_scalar: Scalar, count: int):
    key = _scalar_key(key_scalar)
    if key in acc:
        acc[key][1] += count
    else:
        acc[key] = [key_scalar, count]


def _pair_stats_factored(bs: BasisSet, l: int, m: int, ids, col_counts, nvals):
    """Exact per-basis-pair histogram over |Y_a,p * Y_b,q| value ids."""
    r = bs.rbd
    s, k, d = r.s, r.k, r.d
    bl, bm = r.block_map(l), r.block_map(m)
    joint = np.bincount(bl * s + bm, minlength=s * s)
    if int(joint.max()) > 1:
        raise CertificationError(
            f"support law violated between classes {l} and {m} (mu > 1)"
        )
    cp = np.bincount(r.pos_map(l) * k + r.pos_map(m), minlength=k * k)
    cp = cp.reshape(k, k)
    vv = np.einsum("pv,pq,qw->vw", col_counts, cp, col_counts, dtype=np.int64)
    sharing_block_pairs = int(cp.sum())
    zeros = (s * s - sharing_block_pairs) * k * k
    return vv, zeros


def _pair_stats_literal(bs: BasisSet, l: int, m: int, ids, nvals):
    """Materialize all k^2 products for every sharing block pair."""
    r = bs.rbd
    s, k, d = r.s, r.k, r.d
    bl, bm = r.block_map(l), r.block_map(m)
    joint = np.bincount(bl * s + bm, minlength=s * s)
    if int(joint.max()) > 1:
        raise CertificationError(
            f"support law violated between classes {l} and {m} (mu > 1)"
        )
    shared = np.full((s, s), -1, dtype=np.int64)
    shared[bl, bm] = np.arange(d)
    pl, pm = r.pos_map(l), r.pos_map(m)
    vv = np.zeros(nvals * nvals, dtype=np.int64)
    pairs = np.argwhere(shared >= 0)
    for bi, bj in pairs:
        p = int(shared[bi, bj])
        u = ids[:, pl[p]]
        w = ids[:, pm[p]]
        vv += np.bincount(
            (u[:, None] * nvals + w[None, :]).reshape(-1), minlength=nvals * nvals
        )
    zeros = (s * s - len(pairs)) * k * k
    return vv.reshape(nvals, nvals), zeros


def cross_stats(bs: BasisSet, mode: str = "exhaustive", pairs: int = 0,
                seed: int = 0, threads: int = 1) -> UnbiasednessReport:
    """Collect exact cross-basis inner-product statistics.

    ``mode="exhaustive"`` covers every basis pair; ``mode="sampled"``
    draws ``pairs`` distinct basis pairs with a Philox generator keyed by
    ``seed`` and checks each of them in full (all d^2 vector pairs).
    """
    nb = bs.num_bases
    if nb < 2:
        raise DomainError("need at least two bases for cross statistics")
    ids, vals = bs.y.abs_value_ids()
    nvals = len(vals)
    k = bs.k
    col_counts = np.stack(
        [np.bincount(ids[:, c], minlength=nvals) for c in range(k)]
    )  # (k, nvals)

    all_pairs = [(l, m) for l in range(nb) for m in range(l + 1, nb)]
    if mode == "exhaustive":
        chosen = all_pairs
        coverage = {"mode": "exhaustive", "basis_pairs": len(chosen)}
    elif mode == "sampled":
        if pairs <= 0:
            raise DomainError("sampled mode requires a positive basis-pair count")
        rng = np.random.Generator(np.random.Philox(key=seed))
        npick = min(pairs, len(all_pairs))
        picked = rng.choice(len(all_pairs), size=npick, replace=False)
        chosen = [all_pairs[i] for i in sorted(int(x) for x in picked)]
        coverage = {
            "mode": "sampled",
            "basis_pairs": npick,
            "requested": pairs,
            "seed": seed,
            "generator": "philox",
        }
    else:
        raise DomainError(f"unknown mode {mode!r}")

    def run_pair(pair):
        l, m = pair
        if mode == "exhaustive":
            return _pair_stats_factored(bs, l, m, ids, col_counts, nvals)
        return _pair_stats_literal(bs, l, m, ids, nvals)

    vv_total = np.zeros((nvals, nvals), dtype=np.int64)
    zeros_total = 0
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for vv, zeros in pool.map(run_pair, chosen):
                vv_total += vv
                zeros_total += zeros
    else:
        for pair in chosen:
            vv, zeros = run_pair(pair)
            vv_total += vv
            zeros_total += zeros

    # collapse the id histogram into exact value counts
    acc: dict = {}
    if zeros_total:
        _merge_counts(acc, Fraction(0), zeros_total)
    for v in range(nvals):
        for w in range(nvals):
            c = int(vv_total[v, w])
            if c:
                _merge_counts(acc, vals[v] * vals[w], c)
    ordered = sorted(acc.values(), key=lambda item: _OrderKey(item[0]))
    delta = [DeltaValue(value=item[0], count=item[1]) for item in ordered]
    max_ip: Scalar = delta[-1].value if delta else Fraction(0)
    beta = ExactBeta(max_ip, bs.d)

    y = bs.y
    t = y.provenance.t
    source_order = y.provenance.source_order
    n = source_order // 4 if source_order % 4 == 0 else None
    maxy = y.max_abs_entry()
    chain_ok = _ip_le_eps_square(max_ip, y.epsilon, k)
    pairs_checked = len(chosen) * bs.d * bs.d
    exhaustive = mode == "exhaustive" or len(chosen) == len(all_pairs)
    label, evidence = classify_delta(delta, beta, bs.d, exhaustive)
    return UnbiasednessReport(
        d=bs.d,
        s=bs.s,
        k=k,
        num_bases=nb,
        t=t,
        n=n,
        epsilon=y.epsilon,
        epsilon_upper=y.epsilon_upper,
        delta=delta,
        beta=beta,
        pairs_checked=pairs_checked,
        coverage=coverage,
        classification=label,
        evidence=evidence,
        window_ok=y.window_ok,
        beta_le_eps_chain=chain_ok,
        max_abs_y_sq=maxy * maxy,
        radicand=y.radicand,
    )


class _OrderKey:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return cmp_values(self.v, other.v) < 0


def classify_delta(delta: list[DeltaValue], beta: ExactBeta, d: int,
                   exhaustive: bool) -> tuple[str, str]:
    """Classification rules over the exact distinct-value set.

    MUB iff the value set is exactly {1/sqrt(d)}; APMUB iff it is
    {0, beta/sqrt(d)} with beta <= 2; otherwise beta-ARMUB.  Sampled
    evidence yields a lower-bound classification, flagged as such.
    """
    evidence = "exhaustive" if exhaustive else "sampled"
    values = [dv.value for dv in delta]
    if len(values) == 1 and sign_of(values[0]) > 0:
        v = values[0]
        if cmp_values(d * v * v, Fraction(1)) == 0:
            return CLASS_MUB, evidence
    if (
        len(values) == 2
        and sign_of(values[0]) == 0
        and beta.le(Fraction(2))
    ):
        return CLASS_APMUB, evidence
    return CLASS_ARMUB, evidence


def classify(report: UnbiasednessReport) -> str:
    """Classification of a completed report (see :func:`classify_delta`)."""
    label, _ = classify_delta(
        report.delta, report.beta, report.d, report.evidence == "exhaustive"
    )
    return label


# ---------------------------------------------------------------------------
# Bound ledger
# ---------------------------------------------------------------------------

@dataclass
class LedgerLine:
    check: str
    lhs: float
    rhs: float
    applicable: bool
    verdict: str  # "pass" | "fail" | "n/a"
    detail: str = ""

    def as_dict(self):
        return {
            "check": self.check,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "verdict": self.verdict,
            "applicable": self.applicable,
            "detail": self.detail,
        }


_RHO = {1: Fraction(1, 2), 2: Fraction(2), 3: Fraction(4)}


def check_theorem_bounds(report: UnbiasednessReport) -> list[LedgerLine]:
    """Exact pass/fail ledger for every bound claimed of the construction.

    Lines outside their stated hypotheses are marked n/a rather than
    failed (e.g. the epsilon < 1 guarantee needs t < sqrt(n); the rho_3
    bound is stated for n >= 4).
    """
    lines: list[LedgerLine] = []
    eps, t, n = report.epsilon, report.t, report.n

    # epsilon <= rho_t / sqrt(n)
    applicable = t in _RHO and n is not None and n >= 1 and (t != 3 or n >= 4)
    if applicable:
        bound = _RHO[t] / exact_sqrt(n)
        ok = eps.le_bound(bound)
        lines.append(LedgerLine(
            "eps-le-rho/sqrt(n)", float(eps), quad_to_float(bound),
            True, "pass" if ok else "fail",
            f"rho_{t}={_RHO[t]}, n={n}",
        ))
    else:
        lines.append(LedgerLine(
            "eps-le-rho/sqrt(n)", float(eps), float("nan"), False, "n/a",
            "stated for t in {1,2,3}" + (", n >= 4 when t = 3" if t == 3 else ""),
        ))

    # epsilon < 1, guaranteed when t < sqrt(n)
    applicable = n is not None and t >= 1 and t * t < n
    verdict = "n/a"
    if applicable:
        verdict = "pass" if eps.lt_bound(Fraction(1)) else "fail"
    lines.append(LedgerLine(
        "eps-lt-1", float(eps), 1.0, applicable, verdict,
        "guaranteed only for t < sqrt(n)",
    ))

    # entry window (certified at construction when 1 <= t < sqrt(4n))
    applicable = t >= 1 and t * t < report.radicand
    lines.append(LedgerLine(
        "entry-window", 0.0 if report.window_ok else 1.0, 0.0,
        applicable,
        ("pass" if report.window_ok else "fail") if applicable else "n/a",
        "every |Y_ij| within the reduction window",
    ))

    # beta <= (1+eps)^2 sqrt(d)/k
    lines.append(LedgerLine(
        "beta-le-(1+eps)^2*sqrt(d)/k", float(report.beta),
        report.bound_beta_float(), True,
        "pass" if report.beta_le_eps_chain else "fail",
        "exact, via k*max_ip <= (1+eps)^2",
    ))

    # beta < 2 on the regime where the construction promises it
    applicable = report.k < report.s <= 2 * report.k
    verdict = "n/a"
    if applicable:
        verdict = "pass" if report.beta.lt(2) else "fail"
    lines.append(LedgerLine(
        "beta-lt-2", float(report.beta), 2.0, applicable, verdict,
        "stated for s > k with s, k of the same order",
    ))

    # basis count: emitted bases >= ceil(sqrt(d)) whenever s > k
    applicable = report.s > report.k
    root = math.isqrt(report.d)
    ceil_sqrt_d = root if root * root == report.d else root + 1
    verdict = "n/a"
    if applicable:
        verdict = "pass" if report.num_bases >= ceil_sqrt_d else "fail"
    lines.append(LedgerLine(
        "count-s-ge-ceil-sqrt(d)", float(report.num_bases), float(ceil_sqrt_d),
        applicable, verdict,
        f"bases={report.num_bases}, ceil(sqrt(d))={ceil_sqrt_d}",
    ))
    return lines


def ledger_ok(lines: list[LedgerLine]) -> bool:
    return all(line.verdict != "fail" for line in lines)
