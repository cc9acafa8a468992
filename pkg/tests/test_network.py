import numpy as np
import pytest

from coldlimits.errors import ContractError, InvalidInputError, ModelError
from coldlimits.network import (DampingBackend, NetworkSpec, ReservoirSpec, SpectralDensity,
                                build_network, renormalized_potential)


def test_network_fills_negative_harmonics():
    net = NetworkSpec(V0=[[1.0]], Vk={1: [[0.2]], 2: [[0.1]]}, omega_d=0.5)
    assert set(net.Vk) == {-2, -1, 1, 2}
    assert net.max_harmonic == 2 and net.driven and net.n_nodes == 1
    np.testing.assert_allclose(net.V_at(0.0), [[1.0 + 2 * 0.2 + 2 * 0.1]])
    np.testing.assert_allclose(net.V_at(np.pi / 0.5), [[1.0 - 0.4 + 0.2]])


def test_network_validation():
    with pytest.raises(InvalidInputError):
        NetworkSpec(V0=[[1.0, 0.1], [0.2, 1.0]])
    with pytest.raises(InvalidInputError):
        NetworkSpec(V0=[[1.0]], Vk={1: [[0.1]]})
    with pytest.raises(InvalidInputError):
        NetworkSpec(V0=[[1.0]], Vk={1: [[0.1j]]}, omega_d=1.0)


def test_undriven_network():
    net = NetworkSpec(V0=np.diag([1.0, 2.0]), masses=[1.0, 3.0])
    assert not net.driven and net.max_harmonic == 0
    np.testing.assert_allclose(net.M, np.diag([1.0, 3.0]))


def test_build_network_fragment():
    net = build_network({"V0": [1.0, 2.0], "Vk": {"1": 0.1}, "omega_d": 0.7})
    np.testing.assert_allclose(net.V0, np.diag([1.0, 2.0]))
    np.testing.assert_allclose(net.Vk[1], 0.1 * np.eye(2))
    with pytest.raises(InvalidInputError):
        build_network({"V0": [[1.0, 2.0], [2.0, 1.0]]})
    with pytest.raises(InvalidInputError):
        build_network({})


def test_ohmic_density_values():
    d = SpectralDensity.ohmic(0.1, np.eye(1), cutoff=10.0)
    w = np.array([-1.0, 0.0, 2.0])
    expected = (2 / np.pi) * 0.1 * 2.0 * 100 / (4 + 100)
    np.testing.assert_allclose(d(w)[:, 0, 0], [0.0, 0.0, expected])
    assert d.scalar(1.0) == pytest.approx((2 / np.pi) * 0.1 * 100 / 101)


def test_delta_density_cannot_be_sampled():
    d = SpectralDensity.delta(1.0, 2.0, np.eye(1))
    assert d.is_delta and d.breakpoints() == (2.0,)
    with pytest.raises(ContractError):
        d(np.array([2.0]))


def test_flat_and_table_densities():
    flat = SpectralDensity.flat(2.0, np.eye(1), (1.0, 3.0))
    vals = flat(np.array([0.5, 1.0, 2.0, 3.0, 3.5]))[:, 0, 0]
    np.testing.assert_allclose(vals, [0.0, 2.0, 2.0, 2.0, 0.0], atol=1e-6)
    tab = SpectralDensity.table([0.0, 1.0, 2.0], [0.0, 1.0, 0.0], np.eye(1))
    np.testing.assert_allclose(tab(np.array([0.5, 1.5, 5.0]))[:, 0, 0], [0.5, 0.5, 0.0])
    with pytest.raises(InvalidInputError):
        SpectralDensity.table([0.0, 1.0], [0.0, -1.0], np.eye(1))
    with pytest.raises(InvalidInputError):
        SpectralDensity.table([1.0, 0.5], [1.0, 1.0], np.eye(1))


def test_lorentzian_has_unit_area():
    from coldlimits.quadrature import integrate

    lor = SpectralDensity.lorentzian(1.0, 5.0, 1e-3, np.eye(1))
    r = integrate(lambda w: lor(w)[:, 0, :], 0.0, 10.0, points=lor.breakpoints(), rtol=1e-10)
    assert r.value[0] == pytest.approx(1.0, rel=2e-3)


def test_reservoir_projector():
    d = SpectralDensity.ohmic(0.1, np.diag([1.0, 0.0]))
    r = ReservoirSpec("a", 0.5, d)
    np.testing.assert_array_equal(r.projector, np.diag([1.0, 0.0]))
    with pytest.raises(InvalidInputError):
        ReservoirSpec("a", 0.5, d, projector=np.diag([0.0, 1.0]))
    with pytest.raises(InvalidInputError):
        ReservoirSpec("a", -1.0, d)


def test_damping_backends():
    res = [ReservoirSpec("a", 0.1, SpectralDensity.ohmic(0.1, np.diag([1.0, 0.0]), 20.0)),
           ReservoirSpec("b", 0.1, SpectralDensity.ohmic(0.2, np.diag([0.0, 1.0]), 20.0))]
    d = DampingBackend.from_reservoirs(res)
    np.testing.assert_allclose(d.Gamma(2), np.diag([0.1, 0.2]))
    net = NetworkSpec(V0=np.diag([1.0, 2.0]))
    np.testing.assert_allclose(renormalized_potential(net, d), net.V0)
    ph = DampingBackend.phenomenological_backend([0.1, 0.1], [1.0, 1.5])
    np.testing.assert_allclose(renormalized_potential(net, ph), np.diag([1.0, 2.25]))
    with pytest.raises(ContractError):
        ph.Gamma()
    with pytest.raises(ModelError):
        renormalized_potential(net, DampingBackend("tabulated_kernel"))
    with pytest.raises(InvalidInputError):
        DampingBackend.markovian(-np.eye(2))
    with pytest.raises(InvalidInputError):
        DampingBackend("other")
