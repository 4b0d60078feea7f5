"""Finite-rate reproduction via classical block coding.

A measurement induces a classical channel over basis states; its
capacity (computed by Blahut-Arimoto with a certified two-sided gap)
lower-bounds the achievable reproduction rate. Concrete repetition and
random codebooks demonstrate the block protocol at desk scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import NotConverged, ShapeMismatch, TooLarge
from .qcore import Povm, Rng

_LOG_ZERO = -1e30
_CODEBOOK_CAP = 2**16


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalChannel:
    """Conditional distribution p(a|x), rows indexed by the input letter."""

    matrix: np.ndarray  # (inputs, outputs)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ShapeMismatch("channel matrix must be 2-D")
        if np.any(m < -1e-12):
            raise ShapeMismatch("channel entries must be nonnegative")
        if np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-12):
            raise ShapeMismatch("channel rows must sum to 1")
        m = np.clip(m, 0.0, None)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def outputs(self) -> int:
        return self.matrix.shape[1]

    def sample(self, letters: np.ndarray, rng: Rng) -> np.ndarray:
        """Pass an array of input letters through the channel."""
        cum = np.cumsum(self.matrix, axis=1)
        u = rng.generator.random(letters.shape)
        return (u[..., None] > cum[letters]).sum(axis=-1)


def binary_symmetric_channel(flip: float) -> ClassicalChannel:
    return ClassicalChannel(np.array([[1.0 - flip, flip], [flip, 1.0 - flip]]))


def associated_channel(
    available: Povm, states: Optional[Sequence[np.ndarray]] = None
) -> ClassicalChannel:
    """Channel p(a|x) from measuring basis states (or supplied states)."""
    if states is None:
        rhos = [
            np.outer(e, np.conj(e))
            for e in np.eye(available.dim, dtype=complex)
        ]
    else:
        rhos = [np.asarray(r, dtype=complex) for r in states]
        for r in rhos:
            if r.shape != (available.dim, available.dim):
                raise ShapeMismatch("state dimension does not match the POVM")
    rows = [
        [float(np.trace(m @ rho).real) for m in available.elements] for rho in rhos
    ]
    mat = np.clip(np.array(rows), 0.0, None)
    mat /= mat.sum(axis=1, keepdims=True)
    return ClassicalChannel(mat)


def mutual_information(p_x, channel: ClassicalChannel) -> float:
    """I(A:X) in bits for the given input distribution."""
    p_x = np.asarray(p_x, dtype=float)
    if p_x.shape != (channel.inputs,) or abs(p_x.sum() - 1.0) > 1e-9:
        raise ShapeMismatch("p_x must be a distribution on the input alphabet")
    joint = p_x[:, None] * channel.matrix
    q = joint.sum(axis=0)
    mask = joint > 0.0
    ratio = np.ones_like(joint)
    ratio[mask] = joint[mask] / (p_x[:, None] * np.ones_like(joint) * q[None, :])[mask]
    val = float(np.sum(joint[mask] * np.log(ratio[mask])))
    return max(val, 0.0) / math.log(2.0)


@dataclass(frozen=True)
class CapacityResult:
    capacity: float  # bits, certified lower bound
    upper_bound: float  # bits
    p_x: np.ndarray
    iterations: int
    gap: float  # bits


def blahut_arimoto(
    channel: ClassicalChannel, tol: float = 1e-6, max_iter: int = 100_000
) -> CapacityResult:
    """Capacity with the standard certified two-sided stopping rule.

    The per-letter divergences D(p(.|x) || q) give a lower bound at the
    current input distribution and their maximum an upper bound; the
    iteration stops when the gap (in bits) is at most tol.
    """
    if tol <= 0.0:
        raise ShapeMismatch("tol must be positive")
    w = channel.matrix
    n_in = channel.inputs
    r = np.full(n_in, 1.0 / n_in)
    ln2 = math.log(2.0)
    mask = w > 0.0
    logw = np.where(mask, np.log(np.where(mask, w, 1.0)), 0.0)
    lower = upper = 0.0
    for it in range(1, max_iter + 1):
        q = r @ w
        logq = np.where(q > 0.0, np.log(np.where(q > 0.0, q, 1.0)), _LOG_ZERO)
        div = np.sum(np.where(mask, w * (logw - logq[None, :]), 0.0), axis=1)
        lower = float(r @ div)
        upper = float(np.max(div))
        if upper - lower <= tol * ln2:
            return CapacityResult(
                capacity=lower / ln2,
                upper_bound=upper / ln2,
                p_x=r,
                iterations=it,
                gap=(upper - lower) / ln2,
            )
        r = r * np.exp(div - np.max(div))
        r /= r.sum()
    raise NotConverged(
        f"gap {(upper - lower) / ln2:.3e} bits above tol after {max_iter} iterations",
        lower=lower / ln2,
        upper=upper / ln2,
    )


# ---------------------------------------------------------------------------
# Block codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockCode:
    """Encoder/decoder pair for k message symbols in blocks of length n."""

    kind: str  # repetition | random | identity
    k: int
    n: int
    d: int  # alphabet size (messages and codewords)
    copies: int = 0  # repetition only
    codebook: Optional[np.ndarray] = None  # random only, (d**k, n)

    @property
    def rate_targets_per_use(self) -> float:
        """k/N: target measurements reproduced per available use."""
        return self.k / self.n

    @property
    def rate_uses_per_target(self) -> float:
        """N/k: available uses spent per target measurement."""
        return self.n / self.k

    def encode(self, messages: np.ndarray) -> np.ndarray:
        """Map message rows (batch, k) to codeword rows (batch, n)."""
        messages = np.asarray(messages)
        if self.kind == "repetition":
            return np.repeat(messages, self.copies, axis=1)
        if self.kind == "identity":
            return messages.copy()
        idx = _pack(messages, self.d)
        return self.codebook[idx]

    def decode(self, outputs: np.ndarray, channel: ClassicalChannel) -> np.ndarray:
        """ML decode output rows (batch, n) back to message rows (batch, k)."""
        outputs = np.asarray(outputs)
        if self.kind == "identity":
            return outputs.copy()
        logw = np.where(
            channel.matrix > 0.0,
            np.log(np.where(channel.matrix > 0.0, channel.matrix, 1.0)),
            _LOG_ZERO,
        )
        if self.kind == "repetition":
            batch = outputs.shape[0]
            grouped = outputs.reshape(batch, self.k, self.copies)
            # log-likelihood of each input letter for each message symbol
            ll = logw[:, grouped].sum(axis=-1)  # (d, batch, k)
            ll = np.moveaxis(ll, 0, -1)  # (batch, k, d)
            return np.argmax(np.round(ll, 12), axis=-1)
        # random codebook: full ML over all codewords
        ll = np.zeros((outputs.shape[0], self.codebook.shape[0]))
        for j in range(self.n):
            ll += logw[self.codebook[:, j][None, :], outputs[:, j][:, None]]
        best = np.argmax(np.round(ll, 12), axis=1)
        return _unpack(best, self.d, self.k)


def _pack(messages: np.ndarray, d: int) -> np.ndarray:
    idx = np.zeros(messages.shape[0], dtype=np.int64)
    for j in range(messages.shape[1]):
        idx = idx * d + messages[:, j]
    return idx


def _unpack(idx: np.ndarray, d: int, k: int) -> np.ndarray:
    out = np.zeros((idx.size, k), dtype=np.int64)
    v = idx.copy()
    for j in range(k - 1, -1, -1):
        out[:, j] = v % d
        v //= d
    return out


def repetition_code(k: int, copies: int, d: int) -> BlockCode:
    """Each message symbol repeated ``copies`` times; per-symbol ML decode."""
    if k < 1 or copies < 1 or d < 2:
        raise ShapeMismatch("need k >= 1, copies >= 1, d >= 2")
    return BlockCode(kind="repetition", k=k, n=k * copies, d=d, copies=copies)


def identity_code(k: int, d: int) -> BlockCode:
    return BlockCode(kind="identity", k=k, n=k, d=d)


def random_codebook(k: int, n: int, d: int, rng: Rng) -> BlockCode:
    """Uniformly random distinct codewords with full-ML decoding."""
    n_msgs = d**k
    n_words = d**n
    if n_msgs > _CODEBOOK_CAP or n_words > 2**62:
        raise TooLarge(f"codebook with {n_msgs} messages exceeds the cap")
    if n_msgs > n_words:
        raise TooLarge("more messages than available codewords")
    g = rng.generator
    chosen: set = set()
    words = []
    # distinct draws keep the encoder injective
    while len(words) < n_msgs:
        c = int(g.integers(0, n_words))
        if c not in chosen:
            chosen.add(c)
            words.append(c)
    codebook = _unpack(np.array(words, dtype=np.int64), d, n)
    return BlockCode(kind="random", k=k, n=n, d=d, codebook=codebook)


# ---------------------------------------------------------------------------
# Block protocol simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockRunResult:
    error_rate: float
    standard_error: float
    trials: int
    decoded_distribution: np.ndarray  # empirical frequency per message index


def simulate_block_protocol(
    channel: ClassicalChannel,
    code: BlockCode,
    amplitudes: Optional[np.ndarray],
    trials: int,
    rng: Rng,
) -> BlockRunResult:
    """Run the single-round block protocol and report the block error rate.

    The quantum layer reduces to sampling messages with weights
    |alpha_i|^2: the encoding unitary sends basis states to codeword
    product states, so the outcome statistics factor through the
    classical channel.
    """
    if code.d != channel.inputs:
        raise ShapeMismatch("code alphabet does not match the channel input")
    n_msgs = code.d**code.k
    if amplitudes is None:
        weights = np.full(n_msgs, 1.0 / n_msgs)
    else:
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (n_msgs,):
            raise ShapeMismatch(f"need {n_msgs} amplitudes")
        weights = np.abs(amplitudes) ** 2
        weights /= weights.sum()
    g = rng.generator
    msg_idx = g.choice(n_msgs, size=trials, p=weights)
    messages = _unpack(msg_idx, code.d, code.k)
    codewords = code.encode(messages)
    outputs = channel.sample(codewords, rng)
    decoded = code.decode(outputs, channel)
    errors = np.any(decoded != messages, axis=1)
    rate = float(np.mean(errors))
    se = math.sqrt(max(rate * (1.0 - rate), 0.0) / trials)
    dec_idx = _pack(decoded, code.d)
    dist = np.bincount(dec_idx, minlength=n_msgs).astype(float) / trials
    return BlockRunResult(
        error_rate=rate,
        standard_error=se,
        trials=trials,
        decoded_distribution=dist,
    )


def exact_repetition_error(channel: ClassicalChannel, copies: int) -> np.ndarray:
    """Per-input-letter decode error of a single repeated symbol, exact.

    Enumerates outcome-count vectors (the per-symbol sufficient
    statistic) rather than raw strings.
    """
    w = channel.matrix
    d, m = w.shape
    if math.comb(copies + m - 1, m - 1) > 2 * 10**6:
        raise TooLarge("count-vector enumeration beyond the supported size")
    logw = np.where(w > 0.0, np.log(np.where(w > 0.0, w, 1.0)), _LOG_ZERO)
    vectors = []
    for cuts in itertools.combinations(range(copies + m - 1), m - 1):
        prev = -1
        vec = []
        for c in cuts:
            vec.append(c - prev - 1)
            prev = c
        vec.append(copies + m - 2 - prev)
        vectors.append(vec)
    counts = np.array(vectors, dtype=float)
    ll = counts @ logw.T
    dec = np.argmax(np.round(ll, 12), axis=1)
    dec[np.max(ll, axis=1) < _LOG_ZERO / 2] = -1
    log_multi = math.lgamma(copies + 1) - gammaln(counts + 1.0).sum(axis=1)
    errs = np.zeros(d)
    for x in range(d):
        terms = np.where(counts > 0, counts * logw[x][None, :], 0.0).sum(axis=1)
        weight = np.exp(log_multi + terms)
        weight[terms < _LOG_ZERO / 2] = 0.0
        errs[x] = float(np.sum(weight[dec != x]))
    return errs


def block_protocol_statevector_distribution(
    available: Povm, code: BlockCode, amplitudes: np.ndarray
) -> np.ndarray:
    """Exact decoded-outcome distribution via the full state vector.

    Consistency check only, capped at k <= 2, n <= 4: builds the encoded
    superposition of codeword product states and enumerates every
    outcome string of the N parallel measurements.
    """
    if code.k > 2 or code.n > 4:
        raise TooLarge("state-vector path capped at k <= 2, n <= 4")
    d = available.dim
    if code.d != d:
        raise ShapeMismatch("code alphabet does not match the POVM dimension")
    m = available.outcomes
    n_msgs = d**code.k
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.shape != (n_msgs,):
        raise ShapeMismatch(f"need {n_msgs} amplitudes")
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    messages = _unpack(np.arange(n_msgs, dtype=np.int64), d, code.k)
    codewords = code.encode(messages)
    # encoded state: sum_i alpha_i |c_i>, a vector on d**n
    psi = np.zeros(d**code.n, dtype=complex)
    for alpha, word in zip(amplitudes, codewords):
        idx = 0
        for letter in word:
            idx = idx * d + int(letter)
        psi[idx] += alpha
    channel = associated_channel(available)
    dist = np.zeros(n_msgs)
    for outcome in itertools.product(range(m), repeat=code.n):
        op = np.eye(1, dtype=complex)
        for a in outcome:
            op = np.kron(op, available.elements[a])
        prob = float(np.real(np.conj(psi) @ (op @ psi)))
        if prob <= 0.0:
            continue
        decoded = code.decode(np.array([outcome]), channel)[0]
        dist[_pack(decoded[None, :], d)[0]] += prob
    return dist
