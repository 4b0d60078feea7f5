"""Universal sub-routines for measurement reproduction.

Two building blocks: the post-measurement isometry that realises an
arbitrary instrument given a perfect von Neumann measurement, and
generalised classical cloning, which distinguishes a basis of states
using repeated runs of any non-trivial POVM plus maximum-likelihood
decoding of the outcome string.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from . import qcore
from .errors import (
    NotNormalized,
    ShapeMismatch,
    TooLarge,
    TrivialMeasurement,
    Undecodable,
)
from .qcore import Instrument, Povm, Rng, dagger, density

_ROW_DISTINCT_TV = 1e-6
_THETA_SCAN = tuple(math.pi / 2**k for k in range(3, 12))

_LOG_ZERO = -1e30


# ---------------------------------------------------------------------------
# Post-measurement sub-routine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementIsometry:
    """W mapping |psi> to sum_{i,j} K_j^i|psi> |i> |j>.

    Register order: output system, outcome register, Kraus-index
    register. Measuring the outcome register reproduces the target
    statistics; the Kraus register is traced out, never measured.
    """

    d_in: int
    d_out: int
    m: int
    r: int
    matrix: np.ndarray  # (d_out * m * r, d_in)


def build_measurement_isometry(target: Instrument) -> MeasurementIsometry:
    defect = target.normalization_defect()
    if defect > 1e-9:
        raise NotNormalized(f"Kraus normalisation defect {defect:.3e}")
    din, dout, m = target.dim_in, target.dim_out, target.outcomes
    r = max(len(g) for g in target.kraus)
    w = np.zeros((dout * m * r, din), dtype=complex)
    for i, group in enumerate(target.kraus):
        for j, k in enumerate(group):
            # rows (s, i, j) with s the output-system index
            for s in range(dout):
                w[s * m * r + i * r + j, :] = k[s, :]
    return MeasurementIsometry(d_in=din, d_out=dout, m=m, r=r, matrix=w)


def run_post_measurement(target: Instrument, psi):
    """Execute the sub-routine; returns (outcome, probability, post-state).

    Post-states are None for outcomes of negligible probability.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (target.dim_in,):
        raise ShapeMismatch("state dimension does not match the instrument")
    iso = build_measurement_isometry(target)
    out = (iso.matrix @ psi).reshape(iso.d_out, iso.m, iso.r)
    results = []
    for a in range(iso.m):
        block = out[:, a, :]  # d_out x r
        prob = float(np.sum(np.abs(block) ** 2))
        if prob > 1e-14:
            post = (block @ dagger(block)) / prob
        else:
            post = None
        results.append((a, prob, post))
    return results


def embed_outcomes(m: int, d: int):
    """Register count and injective label map for encoding m outcomes in qudits."""
    if m < 1 or d < 2:
        raise ShapeMismatch("need m >= 1 and d >= 2")
    k = math.ceil(math.log(m, d)) if m > 1 else 0
    # guard against floating log undershoot
    while d**k < m:
        k += 1
    labels = {}
    for a in range(m):
        digits = []
        v = a
        for _ in range(k):
            digits.append(v % d)
            v //= d
        labels[a] = tuple(reversed(digits))
    return k, labels


# ---------------------------------------------------------------------------
# Generalised classical cloning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CloningBasis:
    """Orthonormal cloning states with pairwise-distinct outcome rows."""

    states: tuple  # d vectors
    table: np.ndarray  # (d, m) with rows P(a|i)


def _row_table(povm: Povm, states) -> np.ndarray:
    rows = []
    for s in states:
        rows.append([float(np.real(np.conj(s) @ (e @ s))) for e in povm.elements])
    return np.array(rows)


def _tv(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(p - q)))


def _colliding_pairs(table: np.ndarray):
    d = table.shape[0]
    return [
        (i, j)
        for i in range(d)
        for j in range(i + 1, d)
        if _tv(table[i], table[j]) < _ROW_DISTINCT_TV
    ]


def select_cloning_basis(available: Povm) -> CloningBasis:
    """Find cloning states whose outcome distributions are pairwise distinct.

    Starts from the computational basis. A colliding pair is repaired by
    the eigenvectors of the first POVM element that is not proportional
    to the identity on the pair's span; when every element is, a third
    basis state with a distinct row is adjoined and a plane rotation
    with theta from a fixed scan separates the rows.
    """
    if available.is_trivial():
        raise TrivialMeasurement("all POVM elements proportional to the identity")
    d = available.dim
    states = [np.eye(d, dtype=complex)[:, i] for i in range(d)]

    for _ in range(10 * d * d):
        table = _row_table(available, states)
        collisions = _colliding_pairs(table)
        if not collisions:
            return CloningBasis(states=tuple(states), table=table)
        i, j = collisions[0]
        ei, ej = states[i], states[j]
        fixed = False
        for e in available.elements:
            r00 = np.conj(ei) @ (e @ ei)
            r01 = np.conj(ei) @ (e @ ej)
            r11 = np.conj(ej) @ (e @ ej)
            if abs(r01) > 1e-10 or abs(r00 - r11) > 1e-10:
                restricted = np.array([[r00, r01], [np.conj(r01), r11]])
                _, vecs = qcore.hermitian_eig(restricted)
                states[i] = vecs[0, 0] * ei + vecs[1, 0] * ej
                states[j] = vecs[0, 1] * ei + vecs[1, 1] * ej
                fixed = True
                break
        if fixed:
            continue
        # every element proportional to identity on span{e_i, e_j}:
        # rotate e_i against a basis state with a distinct row
        partners = [
            k
            for k in range(d)
            if k not in (i, j) and _tv(table[k], table[i]) >= _ROW_DISTINCT_TV
        ]
        if not partners:
            raise TrivialMeasurement(
                "no basis state with a distinct outcome distribution exists"
            )
        k = partners[0]
        ek = states[k]
        rotated = False
        for theta in _THETA_SCAN:
            c, s = math.cos(theta), math.sin(theta)
            cand = list(states)
            cand[i] = c * ei + s * ek
            cand[k] = -s * ei + c * ek
            if len(_colliding_pairs(_row_table(available, cand))) < len(collisions):
                states = cand
                rotated = True
                break
        if not rotated:
            raise TrivialMeasurement("rotation scan failed to separate rows")
    raise TrivialMeasurement("basis selection did not converge")


def ml_decode(outcomes, table) -> int:
    """Maximum-likelihood basis index for an outcome string.

    A symbol with zero probability eliminates the hypothesis; ties break
    to the smallest index; all hypotheses eliminated raises Undecodable.
    """
    table = np.asarray(table, dtype=float)
    d, m = table.shape
    counts = np.zeros(m)
    for a in outcomes:
        counts[a] += 1
    logp = np.where(table > 0.0, np.log(np.where(table > 0.0, table, 1.0)), _LOG_ZERO)
    ll = counts @ logp.T
    if np.max(ll) < _LOG_ZERO / 2:
        raise Undecodable("every hypothesis has zero likelihood")
    return int(np.argmax(np.round(ll, 12)))


@dataclass(frozen=True)
class CloningErrorRate:
    per_state: np.ndarray  # error probability per basis state
    average: float
    mode: str
    trials: Optional[int]
    standard_error: Optional[float]  # on the average, sampled mode only
    undecodable: int


def _count_vectors(n: int, m: int):
    """All outcome-count vectors summing to n, lexicographic."""
    for cuts in itertools.combinations(range(n + m - 1), m - 1):
        prev = -1
        vec = []
        for c in cuts:
            vec.append(c - prev - 1)
            prev = c
        vec.append(n + m - 2 - prev)
        yield tuple(vec)


def _decode_counts(counts: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """Vectorised ML decode of count matrices; -1 marks undecodable."""
    ll = counts @ logp.T
    dec = np.argmax(np.round(ll, 12), axis=1)
    dec[np.max(ll, axis=1) < _LOG_ZERO / 2] = -1
    return dec


def cloning_error_rate(
    available: Povm,
    basis: CloningBasis,
    n_uses: int,
    mode: str = "exact",
    trials: int = 100_000,
    rng: Optional[Rng] = None,
) -> CloningErrorRate:
    """Decoding error of N-fold generalised classical cloning.

    Exact mode sums multinomial weights over all outcome-count vectors
    (the ML decision depends on the string only through its counts);
    sampled mode draws count vectors directly.
    """
    table = np.asarray(basis.table, dtype=float)
    d, m = table.shape
    logp = np.where(table > 0.0, np.log(np.where(table > 0.0, table, 1.0)), _LOG_ZERO)
    undecodable = 0
    if mode == "exact":
        if math.comb(n_uses + m - 1, m - 1) > 2 * 10**6:
            raise TooLarge("exact enumeration beyond the supported size")
        counts = np.array(list(_count_vectors(n_uses, m)), dtype=float)
        dec = _decode_counts(counts, logp)
        undecodable = int(np.sum(dec == -1))
        log_multi = math.lgamma(n_uses + 1) - gammaln(counts + 1.0).sum(axis=1)
        per_state = np.zeros(d)
        for i in range(d):
            # zero-probability outcomes kill the weight unless unseen
            terms = np.where(
                counts > 0,
                counts * logp[i][None, :],
                0.0,
            )
            weight = np.exp(log_multi + terms.sum(axis=1))
            weight[terms.sum(axis=1) < _LOG_ZERO / 2] = 0.0
            per_state[i] = float(np.sum(weight[dec != i]))
        return CloningErrorRate(
            per_state=per_state,
            average=float(per_state.mean()),
            mode="exact",
            trials=None,
            standard_error=None,
            undecodable=undecodable,
        )
    if mode != "sampled":
        raise ShapeMismatch(f"unknown mode {mode!r}")
    if rng is None:
        raise ShapeMismatch("sampled mode requires an Rng")
    g = rng.generator
    per_state = np.zeros(d)
    variances = np.zeros(d)
    for i in range(d):
        counts = g.multinomial(n_uses, table[i] / table[i].sum(), size=trials).astype(
            float
        )
        dec = _decode_counts(counts, logp)
        errs = dec != i
        undecodable += int(np.sum(dec == -1))
        rate = float(np.mean(errs))
        per_state[i] = rate
        variances[i] = rate * (1.0 - rate) / trials
    avg = float(per_state.mean())
    se = float(np.sqrt(np.sum(variances)) / d)
    return CloningErrorRate(
        per_state=per_state,
        average=avg,
        mode="sampled",
        trials=trials,
        standard_error=se,
        undecodable=undecodable,
    )


def chernoff_information(p, q) -> float:
    """Symmetric hypothesis-testing exponent between two distributions.

    Returns +inf when the supports are disjoint; minimised over the
    tilting parameter by golden-section search (the log-sum is convex).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeMismatch("distributions must share an alphabet")
    common = (p > 0.0) & (q > 0.0)
    if not np.any(common):
        return float("inf")
    pc, qc = p[common], q[common]

    def f(s):
        return float(np.sum(pc**s * qc ** (1.0 - s)))

    lo, hi = 0.0, 1.0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fa, fb = f(a), f(b)
    for _ in range(200):
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - invphi * (hi - lo)
            fa = f(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + invphi * (hi - lo)
            fb = f(b)
    best = min(f(0.0), f(1.0), f((lo + hi) / 2.0))
    best = min(max(best, 1e-300), 1.0)
    return -math.log(best)
