"""Reproduction-error figures of merit.

Closed forms for diagonal qubit/qudit implementations, the Frobenius
figure of merit for instruments, and Haar Monte Carlo estimators that
cross-check both. Estimates live at the squared-error level; reported
values are the square roots with delta-method standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeMismatch, TooFewSamples
from .qcore import Instrument, Povm, Rng, dagger, haar_states, identity


@dataclass(frozen=True)
class RmsEstimate:
    value: float
    standard_error: float
    sample_count: int
    seed: Optional[int]

    @classmethod
    def exact(cls, value: float) -> "RmsEstimate":
        return cls(value=value, standard_error=0.0, sample_count=0, seed=None)


def rms_closed_form_qubit(x: float, y: float, z: complex = 0.0) -> float:
    """Error of a qubit implementation diagonal up to the off-diagonal z."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ShapeMismatch("x, y must lie in [0, 1]")
    val = ((1.0 - x - y) ** 2 + (1.0 - x) * y + abs(z) ** 2) / 3.0
    return math.sqrt(max(val, 0.0))


def rms_closed_form_qudit(x, d: int, m: int) -> float:
    """Error of a basis-diagonal d-dimensional implementation.

    Normalisation 1/(m d (d+1)) so that d = m = 2 reduces exactly to the
    qubit closed form at z = 0.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (m, d):
        raise ShapeMismatch(f"expected ({m}, {d}) table, got {x.shape}")
    row = x.sum(axis=1)
    val = float(np.sum((row - 1.0) ** 2) + np.sum(x**2))
    diag = min(m, d)
    val += float(-2.0 * np.trace(x[:diag, :diag]) + diag)
    return math.sqrt(max(val / (m * d * (d + 1)), 0.0))


def _expectations(psi: np.ndarray, op: np.ndarray) -> np.ndarray:
    return np.einsum("ni,ij,nj->n", np.conj(psi), op, psi).real


def _estimate_from_squares(sq: np.ndarray, seed) -> RmsEstimate:
    n = sq.size
    mean = float(sq.mean())
    se_sq = float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    value = math.sqrt(max(mean, 0.0))
    if se_sq == 0.0:
        se = 0.0
    elif value > 1e-12:
        se = se_sq / (2.0 * value)
    else:
        se = math.sqrt(se_sq)
    return RmsEstimate(value=value, standard_error=se, sample_count=n, seed=seed)


def rms_monte_carlo_povm(
    impl: Povm, target: Povm, samples: int, rng: Rng
) -> RmsEstimate:
    """Haar Monte Carlo estimate of the outcome-statistics error."""
    if impl.dim != target.dim or impl.outcomes != target.outcomes:
        raise ShapeMismatch("implemented and target POVMs must match in shape")
    if samples < 100:
        raise TooFewSamples(f"{samples} < 100 samples")
    psi = haar_states(impl.dim, samples, rng)
    sq = np.zeros(samples)
    for mi, ti in zip(impl.elements, target.elements):
        sq += (_expectations(psi, mi) - _expectations(psi, ti)) ** 2
    sq /= impl.outcomes
    return _estimate_from_squares(sq, rng.seed)


def _subchannel_outputs(psi: np.ndarray, group) -> np.ndarray:
    """Unnormalised Lambda_a(|psi><psi|) for a batch of states."""
    n = psi.shape[0]
    dout = group[0].shape[0]
    out = np.zeros((n, dout, dout), dtype=complex)
    for k in group:
        v = psi @ k.T  # rows K|psi>
        out += np.einsum("ni,nj->nij", v, np.conj(v))
    return out


def rms_monte_carlo_instrument(
    impl: Instrument, target: Instrument, samples: int, rng: Rng
) -> RmsEstimate:
    """Haar Monte Carlo estimate of the Frobenius sub-channel error."""
    if (
        impl.dim_in != target.dim_in
        or impl.dim_out != target.dim_out
        or impl.outcomes != target.outcomes
    ):
        raise ShapeMismatch("implemented and target instruments must match in shape")
    if samples < 100:
        raise TooFewSamples(f"{samples} < 100 samples")
    psi = haar_states(impl.dim_in, samples, rng)
    sq = np.zeros(samples)
    for gi, gt in zip(impl.kraus, target.kraus):
        diff = _subchannel_outputs(psi, gi) - _subchannel_outputs(psi, gt)
        sq += np.einsum("nij,nij->n", diff, np.conj(diff)).real
    sq /= impl.outcomes
    return _estimate_from_squares(sq, rng.seed)


def symmetric_subspace_projector(d: int) -> np.ndarray:
    """Projector onto the symmetric subspace of two d-level systems."""
    if d < 1:
        raise ShapeMismatch("d must be >= 1")
    swap = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    return (identity(d * d) + swap) / 2.0
