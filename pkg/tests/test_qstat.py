import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from coldlimits import qstat as Q
from coldlimits.errors import InvalidInputError

H2 = Q.HamiltonianSpec.diagonal([0.0, 1.0])


def probs(n, min_size=2, max_size=8):
    return st.lists(st.floats(0.01, 1.0), min_size=min_size, max_size=max_size).map(
        lambda v: np.asarray(v) / np.sum(v))


def test_thermal_state_qubit():
    rho = Q.thermal_state(H2, 1.0)
    np.testing.assert_allclose(np.diag(rho.matrix).real, [0.73105858, 0.26894142], atol=1e-8)


def test_thermal_state_needs_positive_beta():
    with pytest.raises(InvalidInputError):
        Q.thermal_state(H2, 0.0)
    rho = Q.thermal_state(Q.HamiltonianSpec.diagonal([0, 1, 5]), 1e-12)
    np.testing.assert_allclose(rho.matrix, np.eye(3) / 3, atol=1e-11)


def test_hamiltonian_rejects_non_hermitian():
    with pytest.raises(InvalidInputError):
        Q.HamiltonianSpec([[0, 1], [0, 0]])


def test_density_matrix_rejects_bad_trace():
    with pytest.raises(InvalidInputError):
        Q.DensityMatrix(np.diag([0.5, 0.6]))


def test_relative_entropy_examples():
    rho = Q.DensityMatrix.diagonal([0.7310585786, 0.2689414214])
    sigma = Q.DensityMatrix.diagonal([0.9, 0.1])
    assert Q.relative_entropy(rho, sigma) == pytest.approx(0.1140821, abs=1e-7)
    assert Q.relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-14)
    assert Q.relative_entropy(Q.DensityMatrix.diagonal([1, 0]), Q.DensityMatrix.diagonal([0, 1])) == math.inf


def test_relative_entropy_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        Q.relative_entropy(np.eye(2) / 2, np.eye(3) / 3)


def test_relative_entropy_non_commuting_against_expm():
    from scipy.linalg import logm

    rng = np.random.default_rng(3)
    for _ in range(5):
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        sig = b @ b.conj().T
        sig /= np.trace(sig).real
        ref = np.trace(rho @ (logm(rho) - logm(sig))).real
        assert Q.relative_entropy(rho, sig) == pytest.approx(ref, rel=1e-9)


def test_vacancy_examples():
    assert Q.vacancy(Q.DensityMatrix.diagonal([0.9, 0.1]), H2, 1.0) == pytest.approx(0.1140821, abs=1e-7)
    assert Q.vacancy(Q.thermal_state(H2, 2.0), H2, 2.0) == pytest.approx(0.0, abs=1e-14)
    assert Q.vacancy(Q.DensityMatrix.pure([1, 0]), H2, 1.0) == math.inf


def test_renyi_examples():
    p, q = [0.5, 0.5], [0.9, 0.1]
    assert Q.renyi_divergence(p, q, 2.0) == pytest.approx(1.0216512, abs=1e-7)
    assert Q.renyi_divergence(p, q, 1.0) == pytest.approx(0.5108256, abs=1e-7)
    assert Q.renyi_divergence(p, p, 0.7) == pytest.approx(0.0, abs=1e-15)
    # continuity at alpha = 1
    assert Q.renyi_divergence(p, q, 1 + 1e-7) == pytest.approx(0.5108256, abs=1e-6)


def test_renyi_rejects_negative_order():
    with pytest.raises(InvalidInputError):
        Q.renyi_divergence([0.5, 0.5], [0.5, 0.5], -0.1)


@given(probs(4, 4, 4), probs(4, 4, 4))
def test_renyi_nonnegative_and_monotone(p, q):
    vals = [Q.renyi_divergence(p, q, a) for a in (0.0, 0.3, 0.5, 1.0, 2.0, 7.0, 100.0)]
    assert min(vals) >= -1e-12
    assert np.all(np.diff(vals) >= -1e-9)


def test_renyi_monotone_bulk():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = rng.integers(2, 9)
        p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        assert Q.relative_entropy(np.diag(p), np.diag(q)) >= 0
        assert Q.renyi_divergence(p, q, 0.5) >= 0


def test_free_energy_examples():
    assert Q.free_energy(Q.thermal_state(H2, 1.0), H2, 1.0) == pytest.approx(-0.3132617, abs=1e-7)
    zero = Q.HamiltonianSpec.diagonal([0.0, 0.0])
    assert Q.free_energy(np.eye(2) / 2, zero, 1.0) == pytest.approx(-math.log(2), abs=1e-12)
    assert Q.free_energy(Q.DensityMatrix.pure([1, 0]), zero, 1.0) == pytest.approx(0.0, abs=1e-14)


@given(probs(3, 3, 3), st.floats(0.1, 5.0))
def test_free_energy_excess_is_relative_entropy(p, beta):
    H = Q.HamiltonianSpec.diagonal([0.0, 0.4, 1.3])
    w = Q.thermal_state(H, beta)
    lhs = Q.free_energy(np.diag(p), H, beta) - Q.free_energy(w, H, beta)
    assert lhs == pytest.approx(Q.relative_entropy(np.diag(p), w) / beta, abs=1e-10)
    assert lhs >= -1e-12


@given(probs(2, 2, 2), probs(3, 3, 3), st.floats(0.2, 3.0))
def test_vacancy_additive(p1, p2, beta):
    e1, e2 = np.array([0.0, 0.7]), np.array([0.0, 0.3, 1.1])
    joint = Q.vacancy(np.diag(np.kron(p1, p2)), np.diag(np.add.outer(e1, e2).ravel()), beta)
    parts = Q.vacancy(np.diag(p1), np.diag(e1), beta) + Q.vacancy(np.diag(p2), np.diag(e2), beta)
    assert joint == pytest.approx(parts, abs=1e-10)


def test_transition_allowed_examples():
    e = [0.0, 1.0]
    same = Q.SpectrumPair([0.8, 0.2], e)
    rep = Q.transition_allowed(same, same, 1.0)
    assert rep.allowed and rep.worst_margin == pytest.approx(0.0, abs=1e-12)
    thermal = Q.SpectrumPair(Q.SpectrumPair([1, 0], e).thermal_probs(1.0), e)
    assert not Q.transition_allowed(thermal, Q.SpectrumPair([0.9, 0.1], e), 1.0).allowed
    work = Q.SpectrumPair([0.0, 1.0], [0.0, 2.0])
    ground = Q.SpectrumPair([1.0, 0.0], e)
    rep = Q.transition_allowed(work, ground, 1.0)
    assert rep.allowed
    assert set(Q.REQUIRED_ALPHAS) <= set(rep.margins)


def test_transition_work_qubit_margins_are_flat():
    # a pure state has S_alpha = -ln q for every order
    rep = Q.transition_allowed(Q.SpectrumPair([0.0, 1.0], [0.0, 2.0]),
                               Q.SpectrumPair([1.0, 0.0], [0.0, 1.0]), 1.0)
    expected = (2.0 + math.log1p(math.exp(-2.0))) - math.log1p(math.exp(-1.0))
    for m in rep.margins.values():
        assert m == pytest.approx(expected, abs=1e-10)


def test_transition_allowed_empty_grid():
    s = Q.SpectrumPair([0.5, 0.5], [0, 1])
    with pytest.raises(InvalidInputError):
        Q.transition_allowed(s, s, 1.0, alpha_grid=[])


def test_zero_slope_is_derivative_at_zero():
    p, q = np.array([0.2, 0.5, 0.3]), np.array([0.6, 0.3, 0.1])
    h = 1e-6
    fd = Q.renyi_divergence(p, q, h) / h
    assert Q._renyi_zero_slope(p, q) == pytest.approx(fd, rel=1e-4)
    assert Q._renyi_zero_slope(p, q) == pytest.approx(Q.relative_entropy(np.diag(q), np.diag(p)), rel=1e-12)


def test_worst_case_work_examples():
    H = Q.HamiltonianSpec.diagonal([0.0, 1.5])
    assert Q.worst_case_work(np.eye(2), H) == 0.0
    assert Q.worst_case_work([[0, 1], [1, 0]], H) == pytest.approx(1.5)
    assert Q.worst_case_work(np.diag([1, np.exp(0.3j)]), H) == 0.0
    with pytest.raises(InvalidInputError):
        Q.worst_case_work([[1, 1], [0, 1]], H)


def test_worst_case_work_brute_force():
    rng = np.random.default_rng(5)
    for d in (2, 4, 8, 16):
        e = np.sort(rng.uniform(0, 3, d))
        U = unitary_group.rvs(d, random_state=rng)
        brute = max(e[i] - e[j] for i in range(d) for j in range(d) if abs(U[i, j]) > 1e-10)
        assert Q.worst_case_work(U, np.diag(e)) == pytest.approx(brute)


def test_worst_case_work_degenerate_basis_independent():
    H = np.diag([0.0, 1.0, 1.0])
    R = np.eye(3, dtype=complex)
    R[1:, 1:] = unitary_group.rvs(2, random_state=1)
    U = unitary_group.rvs(3, random_state=2)
    assert Q.worst_case_work(U, H) == pytest.approx(Q.worst_case_work(R @ U @ R.conj().T, H))


def test_partial_trace_examples():
    a = Q.DensityMatrix.diagonal([0.3, 0.7])
    rng = np.random.default_rng(0)
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = g @ g.conj().T
    b /= np.trace(b).real
    ab = a.tensor(Q.DensityMatrix(b))
    np.testing.assert_allclose(Q.partial_trace(ab, [2, 3], [0]).matrix, a.matrix, atol=1e-12)
    np.testing.assert_allclose(Q.partial_trace(ab, [2, 3], [1]).matrix, b, atol=1e-12)
    np.testing.assert_allclose(Q.partial_trace(ab, [2, 3], [0, 1]).matrix, ab.matrix, atol=1e-14)
    bell = Q.DensityMatrix.pure([1, 0, 0, 1])
    np.testing.assert_allclose(Q.partial_trace(bell, [2, 2], [1]).matrix, np.eye(2) / 2, atol=1e-14)
    with pytest.raises(InvalidInputError):
        Q.partial_trace(bell, [2, 3], [0])


def test_thermal_state_minimises_free_energy():
    rng = np.random.default_rng(8)
    H = Q.HamiltonianSpec.diagonal([0.0, 0.5, 2.0])
    for beta in (0.5, 1.0, 4.0):
        f0 = Q.free_energy(Q.thermal_state(H, beta), H, beta)
        for _ in range(100):
            g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            rho = g @ g.conj().T
            rho /= np.trace(rho).real
            assert Q.free_energy(rho, H, beta) >= f0 - 1e-12
