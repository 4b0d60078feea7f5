"""Complex linear algebra and the quantum object model.

Everything here operates on dense ``numpy`` arrays of ``complex128``.
States are 1-D arrays, operators are 2-D arrays. POVMs and instruments
are thin immutable wrappers that carry their elements plus validation
helpers; all heavy lifting is plain linear algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionTooLarge,
    NotHermitian,
    ShapeMismatch,
    ZeroProbabilityOutcome,
)

# Hard cap on operator dimension (rows of any matrix we will build).
DIM_CAP = 2**16

# Default tolerances, matching what tensor products of validated
# objects accumulate in double precision.
COMPLETENESS_ATOL = 1e-10
POSITIVITY_ATOL = 1e-10


def _matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got ndim={m.ndim}")
    return m


def _vector(a) -> np.ndarray:
    v = np.asarray(a, dtype=complex)
    if v.ndim != 1:
        raise ShapeMismatch(f"expected a vector, got ndim={v.ndim}")
    return v


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def density(psi) -> np.ndarray:
    """Rank-one density matrix |psi><psi|."""
    v = _vector(psi)
    return np.outer(v, np.conj(v))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


# ---------------------------------------------------------------------------
# RNG
# ---------------------------------------------------------------------------


@dataclass
class Rng:
    """Seeded random stream with a substream index.

    Identical ``(seed, substream)`` pairs reproduce the identical sample
    sequence. Parallel Monte Carlo must hand each worker its own
    substream via :meth:`split`; a single Rng must never be shared.
    """

    seed: int
    substream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.substream,))
        self._gen = np.random.default_rng(ss)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def split(self, substream: int) -> "Rng":
        """Fresh Rng on the same seed but a different substream."""
        return Rng(self.seed, substream)


# ---------------------------------------------------------------------------
# Quantum object model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Povm:
    """Ordered positive operators summing to the identity."""

    elements: tuple

    def __post_init__(self):
        elems = tuple(_matrix(e) for e in self.elements)
        if not elems:
            raise ShapeMismatch("POVM needs at least one element")
        d = elems[0].shape[0]
        for e in elems:
            if e.shape != (d, d):
                raise ShapeMismatch("POVM elements must be square and same-dim")
        for e in elems:
            e.setflags(write=False)
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.elements)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        rho = _matrix(rho)
        return np.array([np.trace(e @ rho).real for e in self.elements])

    def is_trivial(self, atol: float = 1e-10) -> bool:
        """True when every element is proportional to the identity."""
        d = self.dim
        for e in self.elements:
            if frobenius(e - (np.trace(e) / d) * identity(d)) > atol:
                return False
        return True


@dataclass(frozen=True)
class PovmReport:
    """Structured validation result for a POVM."""

    ok: bool
    completeness_defect: float
    min_eigenvalues: tuple
    violations: tuple


@dataclass(frozen=True)
class Instrument:
    """Per-outcome Kraus operator lists K_i^a."""

    kraus: tuple  # tuple (per outcome) of tuples of matrices

    def __post_init__(self):
        groups = []
        for group in self.kraus:
            groups.append(tuple(_matrix(k) for k in group))
        groups = tuple(groups)
        if not groups or not any(groups):
            raise ShapeMismatch("instrument needs at least one Kraus operator")
        first = next(k for g in groups for k in g)
        dout, din = first.shape
        for g in groups:
            for k in g:
                if k.shape != (dout, din):
                    raise ShapeMismatch("all Kraus operators must share a shape")
                k.setflags(write=False)
        object.__setattr__(self, "kraus", groups)

    @property
    def dim_in(self) -> int:
        return next(k for g in self.kraus for k in g).shape[1]

    @property
    def dim_out(self) -> int:
        return next(k for g in self.kraus for k in g).shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.kraus)

    def normalization_defect(self) -> float:
        s = sum(dagger(k) @ k for g in self.kraus for k in g)
        return frobenius(s - identity(self.dim_in))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def tensor(a, b) -> np.ndarray:
    """Kronecker product with a dimension cap."""
    a, b = _matrix(a), _matrix(b)
    if a.shape[0] * b.shape[0] > DIM_CAP or a.shape[1] * b.shape[1] > DIM_CAP:
        raise DimensionTooLarge(
            f"tensor dimension {a.shape[0] * b.shape[0]} exceeds cap {DIM_CAP}"
        )
    return np.kron(a, b)


def tensor_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    mats = list(mats)
    out = _matrix(mats[0])
    for m in mats[1:]:
        out = tensor(out, m)
    return out


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    ``dims`` are the factor dimensions (their product must match the
    matrix dimension); ``keep`` is a set of factor indices that survive,
    in their original order.
    """
    m = _matrix(m)
    dims = [int(d) for d in dims]
    n = len(dims)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ShapeMismatch(f"dims {dims} do not factor a {m.shape} matrix")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ShapeMismatch(f"keep indices {keep} out of range for {n} factors")
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    cur = n
    for ax in sorted(traced, reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + cur)
        cur -= 1
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kept, kept)


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first non-negligible entry is positive real."""
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    if idx.size == 0:
        return v
    ph = v[idx[0]] / abs(v[idx[0]])
    return v / ph


def hermitian_eig(m, atol: float = 1e-10):
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues sorted descending and orthonormal eigenvector
    columns. Ordering is deterministic: degenerate eigenvalues are
    tie-broken by lexicographic comparison of the (phase-canonicalised)
    eigenvector entries, larger first.
    """
    m = _matrix(m)
    defect = frobenius(m - dagger(m))
    if defect > atol * max(1.0, frobenius(m)):
        raise NotHermitian(f"Hermiticity defect {defect:.3e}")
    h = (m + dagger(m)) / 2
    w, v = np.linalg.eigh(h)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    for j in range(v.shape[1]):
        v[:, j] = _canonical_phase(v[:, j])
    # stable ordering inside degenerate clusters
    j = 0
    n = w.size
    while j < n:
        k = j + 1
        while k < n and abs(w[k] - w[j]) <= 1e-12:
            k += 1
        if k - j > 1:
            cols = sorted(
                range(j, k),
                key=lambda c: tuple(
                    (round(v[r, c].real, 10), round(v[r, c].imag, 10))
                    for r in range(v.shape[0])
                ),
                reverse=True,
            )
            v[:, j:k] = v[:, cols]
        j = k
    return w, v


def haar_state(dim: int, rng: Rng) -> np.ndarray:
    """One Haar-random pure state of the given dimension."""
    if dim < 1:
        raise ShapeMismatch("dim must be >= 1")
    g = rng.generator
    z = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    return z / np.linalg.norm(z)


def haar_states(dim: int, count: int, rng: Rng) -> np.ndarray:
    """Batch of Haar-random pure states, one per row."""
    if dim < 1:
        raise ShapeMismatch("dim must be >= 1")
    g = rng.generator
    z = g.standard_normal((count, dim)) + 1j * g.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitary(dim: int, rng: Rng) -> np.ndarray:
    """Haar-random unitary via QR with the standard phase fix."""
    g = rng.generator
    z = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def validate_povm(p: Povm, atol: float = POSITIVITY_ATOL) -> PovmReport:
    """Positivity and completeness check; reports defects, never raises."""
    total = sum(p.elements)
    completeness = frobenius(total - identity(p.dim))
    min_eigs = []
    violations = []
    for a, e in enumerate(p.elements):
        herm = frobenius(e - dagger(e))
        if herm > 1e-9 * max(1.0, frobenius(e)):
            violations.append(f"element {a}: not Hermitian (defect {herm:.3e})")
            min_eigs.append(float("nan"))
            continue
        lo = float(np.linalg.eigvalsh((e + dagger(e)) / 2)[0])
        min_eigs.append(lo)
        if lo < -atol:
            violations.append(f"element {a}: negative eigenvalue {lo:.3e}")
    if completeness > COMPLETENESS_ATOL:
        violations.append(f"completeness defect {completeness:.3e}")
    return PovmReport(
        ok=not violations,
        completeness_defect=completeness,
        min_eigenvalues=tuple(min_eigs),
        violations=tuple(violations),
    )


def induced_povm(inst: Instrument) -> Povm:
    """POVM element sum_i K_i^a† K_i^a per outcome."""
    din = inst.dim_in
    elems = []
    for group in inst.kraus:
        m = np.zeros((din, din), dtype=complex)
        for k in group:
            m += dagger(k) @ k
        elems.append(m)
    return Povm(tuple(elems))


def apply_subchannel(inst: Instrument, a: int, rho):
    """Outcome probability and normalised post-state for sub-channel a."""
    rho = _matrix(rho)
    out = np.zeros((inst.dim_out, inst.dim_out), dtype=complex)
    for k in inst.kraus[a]:
        out += k @ rho @ dagger(k)
    prob = float(np.trace(out).real)
    if prob < 1e-14:
        raise ZeroProbabilityOutcome(f"outcome {a} has probability {prob:.3e}")
    return prob, out / prob


# ---------------------------------------------------------------------------
# Built-in measurements
# ---------------------------------------------------------------------------


def trine_povm() -> Povm:
    """Symmetric three-outcome qubit POVM at 120 degree separations."""
    phis = [
        np.array([1.0, 0.0], dtype=complex),
        np.array([0.5, math.sqrt(3) / 2], dtype=complex),
        np.array([0.5, -math.sqrt(3) / 2], dtype=complex),
    ]
    return Povm(tuple((2.0 / 3.0) * density(p) for p in phis))


def noisy_z_povm(p: float, q: float) -> Povm:
    """Asymmetric noisy Z measurement {diag(p, 1-q), diag(1-p, q)}."""
    n0 = np.diag([p, 1.0 - q]).astype(complex)
    n1 = np.diag([1.0 - p, q]).astype(complex)
    return Povm((n0, n1))


def von_neumann_povm(dim: int) -> Povm:
    """Projective measurement onto the computational basis."""
    return Povm(tuple(density(np.eye(dim, dtype=complex)[i]) for i in range(dim)))


def degenerate_qutrit_povm() -> Povm:
    m0 = np.diag([1.0, 0.0, 0.0]).astype(complex)
    m1 = np.diag([0.0, 1.0, 1.0]).astype(complex)
    return Povm((m0, m1))


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    w, v = hermitian_eig(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def lueders_instrument(p: Povm) -> Instrument:
    """Single Kraus operator sqrt(M_a) per outcome."""
    return Instrument(tuple((sqrtm_psd(e),) for e in p.elements))


def von_neumann_instrument(dim: int) -> Instrument:
    eye = identity(dim)
    return Instrument(tuple((density(eye[:, i]),) for i in range(dim)))


def identity_instrument(dim: int) -> Instrument:
    return Instrument(((identity(dim),),))
