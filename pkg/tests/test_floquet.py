import math

import numpy as np
import pytest

from coldlimits import floquet as F
from coldlimits.errors import InstabilityError, InvalidInputError
from coldlimits.network import DampingBackend, NetworkSpec

V0 = np.array([[1.0, 0.2], [0.2, 1.5]])
MARK = DampingBackend.markovian(np.diag([0.05, 0.08]), 20.0)


def pheno(gamma=0.1, w0=1.0):
    return DampingBackend.phenomenological_backend([gamma], [w0])


def driven(ratio, omega_d=0.8):
    return NetworkSpec(V0=V0, Vk={1: ratio * np.linalg.norm(V0, 2) * np.diag([1.0, 0.0])}, omega_d=omega_d)


def test_phenomenological_static_value():
    g = F.undriven_propagator(NetworkSpec(V0=[[1.0]]), pheno(), 0.0)
    assert g[0, 0] == pytest.approx(-1 / 1.01, rel=1e-14)


def test_lossless_off_resonance_is_real_symmetric():
    net = NetworkSpec(V0=V0)
    g = F.undriven_propagator(net, DampingBackend.markovian(np.zeros((2, 2))), 0.3)
    np.testing.assert_allclose(g, np.linalg.inv(V0 - 0.09 * np.eye(2)), rtol=1e-13)
    assert np.max(np.abs(g.imag)) == 0 and np.allclose(g, g.T)


def test_propagator_decays_as_inverse_square():
    net = NetworkSpec(V0=V0)
    for w in (1e3, 1e4):
        g = F.undriven_propagator(net, MARK, w)
        assert np.linalg.norm(g, 2) * w**2 == pytest.approx(1.0, rel=1e-2)


def test_markovian_static_limit_is_bare_potential():
    D = F.inverse_propagator(NetworkSpec(V0=V0), MARK, [0.0])[0]
    np.testing.assert_allclose(D, V0)


def test_singular_propagator_raises():
    with pytest.raises(InstabilityError):
        F.undriven_propagator(NetworkSpec(V0=[[1.0]]), pheno(gamma=0.0), 1.0)


def test_perturbative_single_oscillator():
    d = pheno(0.01, 1.0)
    v = 0.05
    net = NetworkSpec(V0=[[1.0]], Vk={1: [[v]]}, omega_d=2.0)
    pt = F.floquet_perturbative(net, d, 1.0)
    g = lambda w: 1 / ((w - 0.01j) ** 2 - 1.0)  # noqa: E731
    # magnitudes follow the first-order formula; the sign follows the backend convention
    for k in (1, -1):
        literal = -g(1 + 2 * k) * v * g(1.0)
        assert abs(pt.coeffs[k][0, 0]) == pytest.approx(abs(literal), rel=1e-13)
        assert pt.coeffs[k][0, 0] == pytest.approx(-literal, rel=1e-13)
    assert pt.coeffs[0][0, 0] == pytest.approx(g(1.0), rel=1e-13)
    assert pt.weak


def test_perturbative_is_linear_in_drive():
    a = F.perturbative_batch(driven(1e-3), MARK, [0.4, 1.2])
    b = F.perturbative_batch(driven(3e-3), MARK, [0.4, 1.2])
    np.testing.assert_allclose(b[[0, 2]], 3 * a[[0, 2]], rtol=1e-13)
    np.testing.assert_allclose(b[1], a[1], rtol=1e-14)


def test_undriven_harmonic_balance_is_exact():
    net = NetworkSpec(V0=V0)
    A = F.harmonic_balance_batch(net, MARK, [0.3, 1.1], 3)
    g = np.linalg.inv(F.inverse_propagator(net, MARK, [0.3, 1.1]))
    np.testing.assert_allclose(A[3], g, rtol=1e-13)
    assert np.all(A[np.arange(7) != 3] == 0)


def test_harmonic_balance_matches_perturbative_weak_drive():
    net = driven(1e-3)
    # the gap is third order and grows as (|V1| |g|)^2 where a sideband meets a mode
    modes = np.sqrt(np.linalg.eigvalsh(V0))
    w = np.linspace(0.05, 2.5, 200)
    side = np.abs(np.abs(w[:, None, None] + 0.8 * np.arange(-3, 4)[None, :, None]) - modes)
    w = w[side.min(axis=(1, 2)) > 0.2]
    assert len(w) > 5
    hb = F.harmonic_balance_batch(net, MARK, w, 3)
    pt = F.perturbative_batch(net, MARK, w)
    for k in (-1, 1):
        err = np.max(np.abs(hb[3 + k] - pt[1 + k]) / np.abs(pt[1 + k]).max(axis=(1, 2))[:, None, None])
        assert err < 1e-5


def test_harmonic_balance_matches_perturbative_phenomenological():
    d = pheno(0.05, 1.0)
    net = NetworkSpec(V0=[[1.0]], Vk={1: [[1e-4]]}, omega_d=2.0)
    w = np.array([0.2, 0.7, 1.4])
    hb = F.harmonic_balance_batch(net, d, w, 3)
    pt = F.perturbative_batch(net, d, w)
    np.testing.assert_allclose(hb[2:5], pt, rtol=1e-5, atol=0)


def test_cross_solver_gap_is_quadratic_in_drive():
    w = np.array([0.37, 1.3])
    gaps = []
    for r in (1e-3, 2e-3, 4e-3):
        net = driven(r)
        gaps.append(np.max(np.abs(F.harmonic_balance_batch(net, MARK, w, 3)[4]
                                  - F.perturbative_batch(net, MARK, w)[2])))
    slope = np.polyfit(np.log([1, 2, 4]), np.log(gaps), 1)[0]
    assert 1.8 < slope < 3.2


def test_truncation_converged():
    net = driven(1e-3)
    w = np.array([0.37, 1.3])
    a = F.harmonic_balance_batch(net, MARK, w, 3)[[2, 4]]
    b = F.harmonic_balance_batch(net, MARK, w, 5)[[4, 6]]
    assert np.max(np.abs(a - b)) <= 1e-8 * np.max(np.abs(b))


def test_choose_truncation():
    assert F.choose_truncation(NetworkSpec(V0=V0), MARK) == 0
    K = F.choose_truncation(driven(0.05), MARK)
    assert 3 <= K <= F.K_MAX


def test_K_below_harmonic_rejected():
    net = NetworkSpec(V0=V0, Vk={2: 0.01 * np.eye(2)}, omega_d=0.5)
    with pytest.raises(InvalidInputError):
        F.harmonic_balance_batch(net, MARK, [0.3], 1)


def test_reciprocity_relation(driven_pair):
    sol, _ = driven_pair
    for w in (0.21, 0.93, 1.7):
        A0 = sol.at(w)[0]
        np.testing.assert_allclose(A0, A0.T, atol=1e-12 * np.abs(A0).max())
        for k in (1, 2, -1, -2):
            Ak = sol.at(w)[k]
            Amk = sol.at(w + k * sol.omega_d)[-k]
            assert np.max(np.abs(Ak.T - Amk)) <= 1e-8 * np.abs(Ak).max()


def test_coefficients_decay(driven_pair):
    sol, _ = driven_pair
    A = sol.coefficients([10.0, 100.0, 1000.0])
    norms = np.abs(A).max(axis=(2, 3))
    assert np.all(norms[:, 2] < norms[:, 0])


def test_solution_metadata(driven_pair):
    sol, _ = driven_pair
    assert sol.K == 5 and sol.method == "harmonic_balance" and sol.stable
    assert np.all(np.diff(sol.grid) > 0)
    assert sol.coeffs.shape == (11, len(sol.grid), 2, 2)
    assert np.all(sol.condition_numbers < F.COND_THRESHOLD)


def test_stability_examples():
    one = NetworkSpec(V0=[[1.0]])
    rep = F.stability_check(one, DampingBackend.markovian([[0.1]]))
    assert rep.stable
    rep = F.stability_check(one, DampingBackend.markovian([[0.0]]))
    assert not rep.stable and not rep.undriven_stable
    assert rep.worst_omega == pytest.approx(1.0)


def test_parametric_resonance_flagged():
    gamma = 1e-3
    damping = DampingBackend.markovian([[gamma]])
    weak = NetworkSpec(V0=[[1.0]], Vk={1: [[0.1 * gamma]]}, omega_d=2.0)
    assert F.stability_check(weak, damping, K=8).stable
    strong = NetworkSpec(V0=[[1.0]], Vk={1: [[0.2]]}, omega_d=2.0)
    rep = F.stability_check(strong, damping, K=8)
    assert not rep.stable
    assert rep.max_multiplier > 1.0
    sol = F.solve(strong, damping, K=8)
    assert not sol.stable and "parametric" in sol.stability.notes[-1]


def test_solve_rejects_unstable_undriven():
    with pytest.raises(InstabilityError):
        F.solve(NetworkSpec(V0=[[1.0]]), DampingBackend.markovian([[0.0]]))


def test_time_domain_markovian_oscillator():
    sol = F.solve(NetworkSpec(V0=[[1.0]]), DampingBackend.markovian([[0.2]]))
    Om = math.sqrt(1 - 0.01)
    expected = math.exp(-0.1) * math.sin(Om) / Om
    assert F.greens_time_domain(sol, 1.0, 0.0)[0, 0] == pytest.approx(expected, abs=1e-4)
    assert expected == pytest.approx(0.762758, abs=1e-6)


def test_time_domain_phenomenological_oscillator():
    sol = F.solve(NetworkSpec(V0=[[1.0]]), pheno(0.1, 1.0))
    # the literal propagator has poles at +-omega_0 + i gamma and overall sign -1
    expected = -math.exp(-0.1) * math.sin(1.0)
    assert F.greens_time_domain(sol, 1.0, 0.0)[0, 0] == pytest.approx(expected, abs=1e-4)


def test_time_domain_initial_conditions():
    sol = F.solve(NetworkSpec(V0=V0), MARK)
    G0 = F.greens_time_domain(sol, 0.0, 0.0)
    assert np.max(np.abs(G0)) < 1e-4
    h = 1e-3
    # one-sided: G vanishes for t < t0
    dG = (F.greens_time_domain(sol, h, 0.0) - G0) / h
    np.testing.assert_allclose(dG, np.eye(2), atol=1e-3)
    assert np.max(np.abs(F.greens_time_domain(sol, -0.5, 0.0))) < 1e-4


def test_time_domain_driven_against_ode():
    from scipy.integrate import solve_ivp

    net = NetworkSpec(V0=[[1.0]], Vk={1: [[0.1]]}, omega_d=1.3)
    damping = DampingBackend.markovian([[0.3]])
    sol = F.solve(net, damping)
    t0, t1 = 0.4, 2.1

    def rhs(t, y):
        return [y[1], -0.3 * y[1] - net.V_at(t)[0, 0] * y[0]]

    ref = solve_ivp(rhs, (t0, t1), [0.0, 1.0], rtol=1e-11, atol=1e-12).y[0, -1]
    assert F.greens_time_domain(sol, t1, t0)[0, 0] == pytest.approx(ref, abs=1e-5)
