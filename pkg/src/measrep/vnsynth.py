"""Synthesis of von Neumann measurements from repeated uses of a POVM.

The pipeline: partition the outcome strings of N parallel uses into
target outcomes (giving a coarse-grained POVM on the N-fold space),
minimise the reproduction error over achievable expectation values
(a box-constrained quadratic program), then construct orthonormal
prepared states realising the optimum, with a single unmeasured
ancilla qubit when no in-space solution exists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import qcore
from .errors import (
    DimensionTooLarge,
    Infeasible,
    InvalidBounds,
    SearchSpaceTooLarge,
    ShapeMismatch,
    Unachievable,
)
from .qcore import Povm, Rng, dagger, identity, tensor

_EXHAUSTIVE_STRING_CAP = 12


# ---------------------------------------------------------------------------
# Partition protocols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionProtocol:
    """Outcome-string partition plus the coarse-grained POVM it induces."""

    available: Povm
    n_uses: int
    assignment: tuple  # target outcome per lexicographic outcome string
    m_target: int
    coarse: tuple  # Q_i operators on the N-fold space

    @property
    def dim(self) -> int:
        return self.coarse[0].shape[0]

    def strings(self):
        return itertools.product(range(self.available.outcomes), repeat=self.n_uses)


def _string_tensors(available: Povm, n_uses: int) -> list:
    """Tensor products M_{a_1} x ... x M_{a_N} in lexicographic string order."""
    if available.dim**n_uses > qcore.DIM_CAP:
        raise DimensionTooLarge(
            f"dim {available.dim}^{n_uses} exceeds cap {qcore.DIM_CAP}"
        )
    tensors = [np.eye(1, dtype=complex)]
    for _ in range(n_uses):
        tensors = [tensor(t, e) for t in tensors for e in available.elements]
    return tensors


def build_partition_povm(
    available: Povm,
    n_uses: int,
    f: Callable[[tuple], int] | Sequence[int],
    m_target: int,
) -> PartitionProtocol:
    """Coarse-grain N parallel uses of ``available`` through the map f."""
    if m_target < 2:
        raise ShapeMismatch("m_target must be >= 2")
    strings = list(itertools.product(range(available.outcomes), repeat=n_uses))
    if callable(f):
        assignment = tuple(int(f(s)) for s in strings)
    else:
        assignment = tuple(int(v) for v in f)
        if len(assignment) != len(strings):
            raise ShapeMismatch(
                f"assignment length {len(assignment)} != {len(strings)} strings"
            )
    if any(v < 0 or v >= m_target for v in assignment):
        raise ShapeMismatch("assignment value outside target outcome range")
    tensors = _string_tensors(available, n_uses)
    dim = available.dim**n_uses
    coarse = [np.zeros((dim, dim), dtype=complex) for _ in range(m_target)]
    for t, v in zip(tensors, assignment):
        coarse[v] += t
    return PartitionProtocol(
        available=available,
        n_uses=n_uses,
        assignment=assignment,
        m_target=m_target,
        coarse=tuple(coarse),
    )


# ---------------------------------------------------------------------------
# Box quadratic programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxQuadSolution:
    """Solution of the qubit two-variable box quadratic program."""

    lam_min: float
    lam_max: float
    x_star: float
    y_star: float
    epsilon: float
    region: str  # left | corner | right


def _qubit_objective(x, y):
    return ((1.0 - x - y) ** 2 + (1.0 - x) * y) / 3.0


def solve_box_quadratic_qubit(lam_min: float, lam_max: float) -> BoxQuadSolution:
    """Minimise the qubit reproduction error over the eigenvalue box.

    Convex quadratic on a square, so the minimiser is either the
    unconstrained optimum (1, 0), the 1-D optimum along one edge, or a
    corner; all candidates are enumerated. For ordinary eigenvalue
    boxes this lands in one of three regions: x pinned at lambda_max
    with interior y, both pinned at a corner, or y pinned at lambda_min
    with interior x.
    """
    if not (0.0 <= lam_min <= lam_max <= 1.0):
        raise InvalidBounds(f"bounds ({lam_min}, {lam_max}) outside [0,1]")
    lo, hi = lam_min, lam_max

    def clamp(v):
        return min(max(v, lo), hi)

    candidates = []
    if lo <= 1.0 <= hi and lo <= 0.0 <= hi:
        candidates.append((1.0, 0.0))
    candidates.append((hi, clamp((1.0 - hi) / 2.0)))  # edge x = lambda_max
    candidates.append((clamp(1.0 - lo / 2.0), lo))  # edge y = lambda_min
    candidates.append((lo, clamp((1.0 - lo) / 2.0)))
    candidates.append((clamp(1.0 - hi / 2.0), hi))
    x, y = min(candidates, key=lambda c: _qubit_objective(*c))
    if abs(x - hi) <= 1e-15 and abs(y - (1.0 - hi) / 2.0) <= 1e-15:
        region = "left"
    elif abs(x - (1.0 - lo / 2.0)) <= 1e-15 and abs(y - lo) <= 1e-15:
        region = "right"
    else:
        region = "corner"
    eps = math.sqrt(max(_qubit_objective(x, y), 0.0))
    return BoxQuadSolution(lam_min, lam_max, x, y, eps, region)


@dataclass(frozen=True)
class QuditQpProblem:
    """Bounds for the d-outcome generalisation of the box program."""

    d: int
    lower: tuple  # per-outcome smallest eigenvalue of Q_a
    upper: tuple  # per-outcome largest eigenvalue of Q_a

    @property
    def m(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class QuditQpSolution:
    problem: QuditQpProblem
    x: np.ndarray  # (m, d) table of expectation values
    epsilon: float
    kkt_residual: float
    iterations: int


def qudit_objective(x: np.ndarray, d: int) -> float:
    """Unnormalised quadratic; epsilon**2 = value / (m d (d+1))."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    row = x.sum(axis=1)
    val = float(np.sum((row - 1.0) ** 2) + np.sum(x**2))
    diag = min(m, d)
    val += float(-2.0 * np.trace(x[:diag, :diag]) + diag)
    return val


def _project_columns(v, lower, upper):
    """Project each column onto {l <= x <= u, sum x = 1} by dual bisection."""
    lower = lower[:, None]
    upper = upper[:, None]
    lo = np.min(v - upper, axis=0) - 1.0
    hi = np.max(v - lower, axis=0) + 1.0
    for _ in range(200):
        tau = (lo + hi) / 2.0
        s = np.clip(v - tau[None, :], lower, upper).sum(axis=0)
        # s is non-increasing in tau: move the bracket end that keeps
        # the root inside
        lo = np.where(s >= 1.0, tau, lo)
        hi = np.where(s < 1.0, tau, hi)
    tau = (lo + hi) / 2.0
    return np.clip(v - tau[None, :], lower, upper)


def solve_box_quadratic_qudit(
    problem: QuditQpProblem,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> QuditQpSolution:
    """Projected-gradient solve of the qudit box quadratic program."""
    m, d = problem.m, problem.d
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    if np.any(lower > upper + 1e-12):
        raise Infeasible("lower bound above upper bound")
    if lower.sum() > 1.0 + 1e-9 or upper.sum() < 1.0 - 1e-9:
        raise Infeasible("column sums cannot reach 1 inside the boxes")
    delta = np.zeros((m, d))
    diag = min(m, d)
    delta[np.arange(diag), np.arange(diag)] = 1.0
    lip = 2.0 * (d + 1)
    x = _project_columns(np.full((m, d), 1.0 / m), lower, upper)
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        row = x.sum(axis=1)
        grad = 2.0 * (row - 1.0)[:, None] + 2.0 * x - 2.0 * delta
        x_new = _project_columns(x - grad / lip, lower, upper)
        residual = float(np.linalg.norm(x_new - x))
        x = x_new
        if residual <= tol:
            break
    eps = math.sqrt(max(qudit_objective(x, d), 0.0) / (m * d * (d + 1)))
    return QuditQpSolution(
        problem=problem,
        x=x,
        epsilon=eps,
        kkt_residual=residual * lip,
        iterations=it,
    )


def qudit_problem_from_protocol(protocol: PartitionProtocol) -> QuditQpProblem:
    lower, upper = [], []
    for q in protocol.coarse:
        w = np.linalg.eigvalsh((q + dagger(q)) / 2)
        lower.append(float(np.clip(w[0], 0.0, 1.0)))
        upper.append(float(np.clip(w[-1], 0.0, 1.0)))
    return QuditQpProblem(d=protocol.m_target, lower=tuple(lower), upper=tuple(upper))


# ---------------------------------------------------------------------------
# State preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatePrep:
    """Orthonormal prepared states on measured systems (+ optional ancilla)."""

    n_measured: int
    ancilla_qubits: int  # 0 or 1
    states: tuple  # one state vector per target outcome

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]


def _mix_eigvecs(vec_hi, mu_hi, vec_lo, mu_lo, target):
    """Real combination of two eigenvectors with a given expectation."""
    if abs(mu_hi - mu_lo) < 1e-14:
        return vec_hi
    c2 = (target - mu_lo) / (mu_hi - mu_lo)
    c2 = min(max(c2, 0.0), 1.0)
    return math.sqrt(c2) * vec_hi + math.sqrt(1.0 - c2) * vec_lo


def _inspace_binary(evals, evecs, x, y):
    """Try orthogonal states from disjoint eigenvector pairs; None on failure."""
    n = evals.size
    tol = 1e-12
    used = set()

    exact_x = [j for j in range(n) if abs(evals[j] - x) <= tol]
    if exact_x:
        u0 = evecs[:, exact_x[0]]
        used.add(exact_x[0])
    else:
        partners = [j for j in range(1, n) if evals[j] <= x]
        if evals[0] < x or not partners:
            return None
        p = partners[0]
        u0 = _mix_eigvecs(evecs[:, 0], evals[0], evecs[:, p], evals[p], x)
        used.update({0, p})

    free = [j for j in range(n) if j not in used]
    exact_y = [j for j in free if abs(evals[j] - y) <= tol]
    if exact_y:
        return u0, evecs[:, exact_y[-1]]
    lo_cands = [j for j in free if evals[j] <= y]
    hi_cands = [j for j in free if evals[j] >= y]
    if not lo_cands or not hi_cands:
        return None
    lo = lo_cands[-1]
    hi = [j for j in hi_cands if j != lo][-1] if [j for j in hi_cands if j != lo] else None
    if hi is None:
        return None
    u1 = _mix_eigvecs(evecs[:, hi], evals[hi], evecs[:, lo], evals[lo], y)
    return u0, u1


def construct_states(protocol: PartitionProtocol, targets) -> StatePrep:
    """States with prescribed expectations on the coarse POVM.

    Only binary targets (m_target = 2) are supported: the in-space route
    combines disjoint eigenvector pairs of Q_0; when that fails a single
    unmeasured ancilla qubit tags the states |u_i>|i> to restore
    orthogonality.
    """
    if protocol.m_target != 2:
        raise Unachievable("state construction implemented for binary targets only")
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        x, y = float(targets[0]), float(targets[1])
    else:
        x, y = float(targets[0, 0]), float(targets[0, 1])
    evals, evecs = qcore.hermitian_eig(protocol.coarse[0])
    lam_min, lam_max = evals[-1], evals[0]
    slack = 1e-9
    if not (lam_min - slack <= x <= lam_max + slack) or not (
        lam_min - slack <= y <= lam_max + slack
    ):
        raise Unachievable(
            f"targets ({x}, {y}) outside eigenvalue range [{lam_min}, {lam_max}]"
        )
    x = min(max(x, lam_min), lam_max)
    y = min(max(y, lam_min), lam_max)

    pair = _inspace_binary(evals, evecs, x, y)
    if pair is not None:
        u0, u1 = pair
        return StatePrep(
            n_measured=protocol.n_uses, ancilla_qubits=0, states=(u0, u1)
        )

    v_hi, v_lo = evecs[:, 0], evecs[:, -1]
    u0 = _mix_eigvecs(v_hi, lam_max, v_lo, lam_min, x)
    u1 = _mix_eigvecs(v_hi, lam_max, v_lo, lam_min, y)
    e = np.eye(2, dtype=complex)
    states = (np.kron(u0, e[:, 0]), np.kron(u1, e[:, 1]))
    return StatePrep(n_measured=protocol.n_uses, ancilla_qubits=1, states=states)


def implemented_povm(prep: StatePrep, protocol: PartitionProtocol) -> Povm:
    """Effective POVM on the original system, via the prepared-state isometry."""
    d = protocol.m_target
    anc = 2**prep.ancilla_qubits
    vmat = np.column_stack(prep.states)
    elems = []
    for q in protocol.coarse:
        big = tensor(q, identity(anc)) if anc > 1 else q
        if big.shape[0] != vmat.shape[0]:
            raise ShapeMismatch("state and coarse POVM dimensions disagree")
        elems.append(dagger(vmat) @ big @ vmat)
    del d
    return Povm(tuple(elems))


# ---------------------------------------------------------------------------
# Partition searches (binary target)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchResult:
    protocol: PartitionProtocol
    solution: BoxQuadSolution
    co_optimal: tuple  # assignments tying the optimum (canonical form)
    evaluated: int


def _eval_assignment(tensors, dim, bits):
    q0 = np.zeros((dim, dim), dtype=complex)
    for t, b in zip(tensors, bits):
        if b == 0:
            q0 += t
    w = np.linalg.eigvalsh((q0 + dagger(q0)) / 2)
    lam_min = float(np.clip(w[0], 0.0, 1.0))
    lam_max = float(np.clip(w[-1], 0.0, 1.0))
    return solve_box_quadratic_qubit(lam_min, lam_max)


def exhaustive_search(available: Povm, n_uses: int):
    """Global optimum over all deterministic binary partitions.

    Partitions are canonicalised by assigning the lexicographically
    first string to outcome 0, halving the enumeration; co-optimal
    partitions (up to that relabelling) are reported alongside.
    """
    n_strings = available.outcomes**n_uses
    if n_strings > _EXHAUSTIVE_STRING_CAP:
        raise SearchSpaceTooLarge(
            f"{n_strings} strings exceeds cap {_EXHAUSTIVE_STRING_CAP}; "
            "use hill_climb_search"
        )
    tensors = _string_tensors(available, n_uses)
    dim = available.dim**n_uses
    best = None
    best_bits = None
    ties = []
    count = 0
    for rest in itertools.product((0, 1), repeat=n_strings - 1):
        bits = (0,) + rest
        sol = _eval_assignment(tensors, dim, bits)
        count += 1
        if best is None or sol.epsilon < best.epsilon - 1e-15:
            best, best_bits = sol, bits
            ties = [bits]
        elif abs(sol.epsilon - best.epsilon) <= 1e-12:
            ties.append(bits)
    protocol = build_partition_povm(available, n_uses, best_bits, 2)
    return SearchResult(
        protocol=protocol,
        solution=best,
        co_optimal=tuple(ties),
        evaluated=count,
    )


def _zero_string_seed(available: Povm, n_uses: int) -> tuple:
    """Partition mapping strings containing outcome 0 to target 0."""
    return tuple(
        0 if 0 in s else 1
        for s in itertools.product(range(available.outcomes), repeat=n_uses)
    )


def hill_climb_search(
    available: Povm,
    n_uses: int,
    restarts: int = 8,
    rng: Optional[Rng] = None,
    seeds: Optional[Sequence[Sequence[int]]] = None,
):
    """Local search over single-string reassignments.

    The closed-form 'no zero outcome -> 1' partition is always included
    as a seed, so the result is never worse than that family.
    """
    rng = rng if rng is not None else Rng(0)
    n_strings = available.outcomes**n_uses
    tensors = _string_tensors(available, n_uses)
    dim = available.dim**n_uses
    cache: dict = {}

    def score(bits):
        if bits not in cache:
            cache[bits] = _eval_assignment(tensors, dim, bits)
        return cache[bits]

    starts = [_zero_string_seed(available, n_uses)]
    if seeds:
        starts.extend(tuple(int(v) for v in s) for s in seeds)
    g = rng.generator
    for _ in range(restarts):
        starts.append(tuple(int(v) for v in g.integers(0, 2, size=n_strings)))

    best_bits, best = None, None
    for start in starts:
        bits = (0,) + tuple(1 - b for b in start[1:]) if start[0] == 1 else start
        cur = score(bits)
        improved = True
        while improved:
            improved = False
            for i in range(1, n_strings):
                cand = bits[:i] + (1 - bits[i],) + bits[i + 1 :]
                s = score(cand)
                if s.epsilon < cur.epsilon - 1e-14:
                    bits, cur = cand, s
                    improved = True
        if best is None or cur.epsilon < best.epsilon - 1e-15:
            best_bits, best = bits, cur
    protocol = build_partition_povm(available, n_uses, best_bits, 2)
    return SearchResult(
        protocol=protocol,
        solution=best,
        co_optimal=(best_bits,),
        evaluated=len(cache),
    )


# ---------------------------------------------------------------------------
# Closed-form protocol families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesizedProtocol:
    protocol: PartitionProtocol
    solution: BoxQuadSolution
    prep: StatePrep


def trine_optimal_protocol(n_uses: int) -> SynthesizedProtocol:
    """The optimal N-use trine partition with its closed-form states.

    Target outcome 1 is declared exactly when no single use returned
    outcome 0; the error is 3^-N / 2 and the prepared states are the
    nearly-cloned pair with the last qubit slightly rotated.
    """
    if n_uses < 1:
        raise ShapeMismatch("n_uses must be >= 1")
    trine = qcore.trine_povm()
    protocol = build_partition_povm(
        trine, n_uses, lambda s: 0 if 0 in s else 1, 2
    )
    lam_max = 1.0 - 3.0**-n_uses
    solution = solve_box_quadratic_qubit(0.0, lam_max)
    if n_uses == 1:
        # ancilla route: measured qubit rotated onto the nearest trine
        # direction, ancilla flipped to keep the pair orthogonal
        u0 = np.array([1.0, 0.0], dtype=complex)
        u1 = np.array([0.5, math.sqrt(3) / 2], dtype=complex)
        e = np.eye(2, dtype=complex)
        prep = StatePrep(
            n_measured=1,
            ancilla_qubits=1,
            states=(np.kron(u0, e[:, 0]), np.kron(u1, e[:, 1])),
        )
    else:
        zero = np.array([1.0, 0.0], dtype=complex)
        one = np.array([0.0, 1.0], dtype=complex)
        psi0 = zero
        for _ in range(n_uses - 1):
            psi0 = np.kron(psi0, zero)
        amp0 = 0.5 * 3.0 ** (-(n_uses - 1) / 2.0)
        phi = np.array([amp0, math.sqrt(1.0 - amp0**2)], dtype=complex)
        psi1 = one
        for _ in range(n_uses - 2):
            psi1 = np.kron(psi1, one)
        psi1 = np.kron(psi1, phi)
        prep = StatePrep(n_measured=n_uses, ancilla_qubits=0, states=(psi0, psi1))
    return SynthesizedProtocol(protocol=protocol, solution=solution, prep=prep)


@dataclass(frozen=True)
class NoisyZParams:
    p: float
    q: float
    region: str  # rotate-zero | trivial | rotate-one
    gamma: Optional[float]


@dataclass(frozen=True)
class NoisyZResult:
    params: NoisyZParams
    protocol: PartitionProtocol
    solution: BoxQuadSolution
    prep: StatePrep


def classify_noisy_z(p: float, q: float) -> NoisyZParams:
    if not (0.5 < p <= 1.0 and 0.5 < q <= 1.0):
        raise InvalidBounds(f"(p, q) = ({p}, {q}) outside (1/2, 1]")
    if p > (1.0 + q) / 2.0:
        gamma = math.sqrt((3.0 * q - 1.0) / (2.0 * (p + q - 1.0)))
        return NoisyZParams(p, q, "rotate-zero", gamma)
    if q > (1.0 + p) / 2.0:
        gamma = math.sqrt((3.0 * p - 1.0) / (2.0 * (p + q - 1.0)))
        return NoisyZParams(p, q, "rotate-one", gamma)
    return NoisyZParams(p, q, "trivial", None)


def noisy_z_optimal(p: float, q: float) -> NoisyZResult:
    """Optimal single-use protocol for the asymmetric noisy Z family."""
    params = classify_noisy_z(p, q)
    povm = qcore.noisy_z_povm(p, q)
    protocol = build_partition_povm(povm, 1, lambda s: s[0], 2)
    solution = solve_box_quadratic_qubit(1.0 - q, p)
    prep = construct_states(protocol, (solution.x_star, solution.y_star))
    return NoisyZResult(params=params, protocol=protocol, solution=solution, prep=prep)
