import itertools
import math

import numpy as np
import pytest

from measrep import qcore, vnsynth
from measrep.errors import (
    Infeasible,
    InvalidBounds,
    SearchSpaceTooLarge,
    ShapeMismatch,
    Unachievable,
)
from measrep.qcore import Rng, identity, trine_povm
from measrep.vnsynth import (
    QuditQpProblem,
    build_partition_povm,
    classify_noisy_z,
    construct_states,
    exhaustive_search,
    hill_climb_search,
    implemented_povm,
    noisy_z_optimal,
    qudit_objective,
    qudit_problem_from_protocol,
    solve_box_quadratic_qubit,
    solve_box_quadratic_qudit,
    trine_optimal_protocol,
)


# ---------------------------------------------------------------------------
# partition protocols
# ---------------------------------------------------------------------------


def test_partition_povm_completeness():
    trine = trine_povm()
    proto = build_partition_povm(trine, 2, lambda s: 0 if 0 in s else 1, 2)
    total = sum(proto.coarse)
    assert np.allclose(total, identity(4), atol=1e-12)


def test_partition_povm_two_use_spectrum():
    trine = trine_povm()
    proto = build_partition_povm(trine, 2, lambda s: 0 if 0 in s else 1, 2)
    evals, _ = qcore.hermitian_eig(proto.coarse[0])
    assert np.allclose(evals, [8 / 9, 2 / 3, 2 / 3, 0.0], atol=1e-12)


def test_partition_povm_sequence_assignment():
    trine = trine_povm()
    bits = [0 if 0 in s else 1 for s in itertools.product(range(3), repeat=2)]
    proto = build_partition_povm(trine, 2, bits, 2)
    assert proto.assignment == tuple(bits)


def test_partition_povm_bad_assignment():
    trine = trine_povm()
    with pytest.raises(ShapeMismatch):
        build_partition_povm(trine, 1, [0, 1], 2)
    with pytest.raises(ShapeMismatch):
        build_partition_povm(trine, 1, [0, 1, 5], 2)


# ---------------------------------------------------------------------------
# qubit box program
# ---------------------------------------------------------------------------


def test_qubit_qp_left_region():
    sol = solve_box_quadratic_qubit(0.0, 8 / 9)
    assert sol.region == "left"
    assert abs(sol.x_star - 8 / 9) < 1e-14
    assert abs(sol.y_star - 1 / 18) < 1e-14
    assert abs(sol.epsilon - 1 / 18) < 1e-14


def test_qubit_qp_corner_region():
    sol = solve_box_quadratic_qubit(0.5, 0.5)
    assert sol.region == "corner"
    assert abs(sol.epsilon - 1 / math.sqrt(12)) < 1e-14


def test_qubit_qp_right_region():
    sol = solve_box_quadratic_qubit(0.4, 0.95)
    assert sol.region == "right"
    assert abs(sol.x_star - (1 - 0.2)) < 1e-14
    assert abs(sol.y_star - 0.4) < 1e-14


def test_qubit_qp_exact_case():
    sol = solve_box_quadratic_qubit(0.0, 1.0)
    assert abs(sol.epsilon) < 1e-14
    assert (sol.x_star, sol.y_star) == (1.0, 0.0)


def test_qubit_qp_invalid_bounds():
    with pytest.raises(InvalidBounds):
        solve_box_quadratic_qubit(0.8, 0.2)
    with pytest.raises(InvalidBounds):
        solve_box_quadratic_qubit(-0.1, 0.5)


def test_qubit_qp_against_grid():
    # spot-check the analytic minimiser on a modest grid
    rng = Rng(21).generator
    for _ in range(25):
        lo = rng.uniform(0.0, 1.0)
        hi = rng.uniform(lo, 1.0)
        sol = solve_box_quadratic_qubit(lo, hi)
        xs = np.linspace(lo, hi, 400)
        t = 1.0 - xs[:, None] - xs[None, :]
        f = (t**2 + (1.0 - xs[:, None]) * xs[None, :]) / 3.0
        assert sol.epsilon**2 <= f.min() + 1e-9


# ---------------------------------------------------------------------------
# qudit box program
# ---------------------------------------------------------------------------


def test_qudit_qp_reduces_to_qubit():
    for lo, hi in [(0.0, 8 / 9), (0.5, 0.5), (0.4, 0.95), (0.1, 0.7)]:
        qubit = solve_box_quadratic_qubit(lo, hi)
        problem = QuditQpProblem(d=2, lower=(lo, 1 - hi), upper=(hi, 1 - lo))
        qudit = solve_box_quadratic_qudit(problem)
        assert abs(qudit.epsilon - qubit.epsilon) < 1e-7
        assert abs(qudit.x[0, 0] - qubit.x_star) < 1e-5
        assert abs(qudit.x[0, 1] - qubit.y_star) < 1e-5


def test_qudit_qp_feasible_solution():
    problem = QuditQpProblem(
        d=3, lower=(0.0, 0.0, 0.1), upper=(0.9, 0.8, 0.7)
    )
    sol = solve_box_quadratic_qudit(problem)
    x = sol.x
    assert np.all(x >= np.array(problem.lower)[:, None] - 1e-9)
    assert np.all(x <= np.array(problem.upper)[:, None] + 1e-9)
    assert np.allclose(x.sum(axis=0), 1.0, atol=1e-9)
    assert sol.kkt_residual < 1e-6


def test_qudit_qp_achieves_exact_when_identity_feasible():
    problem = QuditQpProblem(d=2, lower=(0.0, 0.0), upper=(1.0, 1.0))
    sol = solve_box_quadratic_qudit(problem)
    assert sol.epsilon < 1e-7


def test_qudit_qp_infeasible():
    with pytest.raises(Infeasible):
        solve_box_quadratic_qudit(QuditQpProblem(d=2, lower=(0.6, 0.6), upper=(0.7, 0.7)))


def test_qudit_objective_matches_qubit_closed_form():
    # binary table with unit column sums: the normalised qudit objective
    # collapses to the qubit closed form on the first row
    x = np.array([[0.8, 0.1], [0.2, 0.9]])
    val = qudit_objective(x, 2) / (2 * 2 * 3)
    a, b = x[0]
    ref = ((1 - a - b) ** 2 + (1 - a) * b) / 3.0
    assert val == pytest.approx(ref, abs=1e-12)


def test_qudit_problem_from_protocol():
    proto = build_partition_povm(trine_povm(), 2, lambda s: 0 if 0 in s else 1, 2)
    problem = qudit_problem_from_protocol(proto)
    assert problem.lower[0] == pytest.approx(0.0, abs=1e-12)
    assert problem.upper[0] == pytest.approx(8 / 9, abs=1e-12)


# ---------------------------------------------------------------------------
# state construction
# ---------------------------------------------------------------------------


def test_construct_states_two_use_inspace():
    proto = build_partition_povm(trine_povm(), 2, lambda s: 0 if 0 in s else 1, 2)
    prep = construct_states(proto, (8 / 9, 1 / 18))
    assert prep.ancilla_qubits == 0
    u0, u1 = prep.states
    assert abs(np.vdot(u0, u1)) < 1e-12
    q0 = proto.coarse[0]
    assert np.vdot(u0, q0 @ u0).real == pytest.approx(8 / 9, abs=1e-12)
    assert np.vdot(u1, q0 @ u1).real == pytest.approx(1 / 18, abs=1e-12)


def test_construct_states_ancilla_route():
    # single use: only two eigenvectors exist, so the second state needs
    # the ancilla tag
    proto = build_partition_povm(trine_povm(), 1, lambda s: 0 if s[0] == 0 else 1, 2)
    prep = construct_states(proto, (2 / 3, 1 / 6))
    assert prep.ancilla_qubits == 1
    u0, u1 = prep.states
    assert abs(np.vdot(u0, u1)) < 1e-12
    impl = implemented_povm(prep, proto)
    assert impl.elements[0][0, 0].real == pytest.approx(2 / 3, abs=1e-12)
    assert impl.elements[0][1, 1].real == pytest.approx(1 / 6, abs=1e-12)


def test_construct_states_unachievable():
    proto = build_partition_povm(trine_povm(), 1, lambda s: 0 if s[0] == 0 else 1, 2)
    with pytest.raises(Unachievable):
        construct_states(proto, (0.9, 0.1))  # above lambda_max = 2/3


def test_implemented_povm_is_valid():
    syn = trine_optimal_protocol(3)
    impl = implemented_povm(syn.prep, syn.protocol)
    report = qcore.validate_povm(impl)
    assert report.ok


# ---------------------------------------------------------------------------
# searches
# ---------------------------------------------------------------------------


def test_exhaustive_search_two_use_optimum():
    result = exhaustive_search(trine_povm(), 2)
    assert abs(result.solution.epsilon - 1 / 18) < 1e-12
    assert abs(result.solution.x_star - 8 / 9) < 1e-12
    assert abs(result.solution.y_star - 1 / 18) < 1e-12
    assert result.evaluated == 2**8


def test_exhaustive_search_cap():
    with pytest.raises(SearchSpaceTooLarge):
        exhaustive_search(trine_povm(), 3)


def test_hill_climb_matches_exhaustive_two_use():
    exact = exhaustive_search(trine_povm(), 2)
    climbed = hill_climb_search(trine_povm(), 2, restarts=4, rng=Rng(5))
    assert climbed.solution.epsilon <= exact.solution.epsilon + 1e-12


def test_exhaustive_noisy_z_identity_partition():
    result = exhaustive_search(qcore.noisy_z_povm(0.8, 0.8), 1)
    sol = result.solution
    assert sol.x_star == pytest.approx(0.8, abs=1e-12)
    assert sol.y_star == pytest.approx(0.2, abs=1e-12)
    assert sol.epsilon == pytest.approx(0.2 / math.sqrt(3), abs=1e-12)


def test_hill_climb_degenerate_povm():
    half = qcore.identity(2) / 2
    degenerate = qcore.Povm((half, half))
    result = hill_climb_search(degenerate, 2, restarts=2, rng=Rng(1))
    assert result.solution.epsilon == pytest.approx(1 / math.sqrt(12), abs=1e-12)


def test_hill_climb_three_use_matches_closed_form():
    climbed = hill_climb_search(trine_povm(), 3, restarts=2, rng=Rng(5))
    assert climbed.solution.epsilon <= 3.0**-3 / 2 + 1e-12


# ---------------------------------------------------------------------------
# closed-form families
# ---------------------------------------------------------------------------


def test_trine_optimal_protocol_errors():
    for n in range(1, 5):
        syn = trine_optimal_protocol(n)
        assert abs(syn.solution.epsilon - 3.0**-n / 2) < 1e-12
        assert abs(syn.solution.lam_max - (1 - 3.0**-n)) < 1e-12


def test_trine_optimal_protocol_states_orthonormal():
    for n in (1, 2, 4):
        syn = trine_optimal_protocol(n)
        u0, u1 = syn.prep.states
        assert abs(np.linalg.norm(u0) - 1) < 1e-12
        assert abs(np.linalg.norm(u1) - 1) < 1e-12
        assert abs(np.vdot(u0, u1)) < 1e-12


def test_trine_optimal_implemented_element():
    for n in (1, 2, 3):
        syn = trine_optimal_protocol(n)
        impl = implemented_povm(syn.prep, syn.protocol)
        ref = np.diag([1 - 3.0**-n, 3.0**-n / 2]).astype(complex)
        assert np.allclose(impl.elements[0], ref, atol=1e-10)


def test_classify_noisy_z_regions():
    assert classify_noisy_z(0.95, 0.6).region == "rotate-zero"
    assert classify_noisy_z(0.6, 0.95).region == "rotate-one"
    assert classify_noisy_z(0.7, 0.7).region == "trivial"
    # the boundary p = (1+q)/2 belongs to the trivial region
    assert classify_noisy_z(0.8, 0.6).region == "trivial"


def test_classify_noisy_z_gamma():
    params = classify_noisy_z(0.95, 0.6)
    assert params.gamma == pytest.approx(
        math.sqrt((3 * 0.6 - 1) / (2 * (0.95 + 0.6 - 1))), abs=1e-14
    )
    assert classify_noisy_z(0.7, 0.7).gamma is None


def test_classify_noisy_z_invalid():
    with pytest.raises(InvalidBounds):
        classify_noisy_z(0.5, 0.8)
    with pytest.raises(InvalidBounds):
        classify_noisy_z(0.8, 1.1)


def test_noisy_z_optimal_rotate_zero():
    res = noisy_z_optimal(0.95, 0.6)
    assert res.params.region == "rotate-zero"
    assert abs(res.solution.epsilon - (1 - 0.6) / 2) < 1e-12
    # the constructed zero-state overlaps |0> with amplitude gamma
    u0 = res.prep.states[0]
    overlap = abs(u0[0]) if res.prep.ancilla_qubits == 0 else abs(u0[0])
    assert overlap == pytest.approx(res.params.gamma, abs=1e-10)


def test_noisy_z_optimal_trivial_region():
    res = noisy_z_optimal(0.7, 0.7)
    assert res.solution.x_star == pytest.approx(0.7, abs=1e-12)
    assert res.solution.y_star == pytest.approx(0.3, abs=1e-12)
