"""Built-in invariant suite run by ``coldlimits --mode validate``.

Each check returns ``(passed, detail)``. The fixtures are small so the whole
suite finishes in well under a minute on one core.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds, cooling, currents, floquet, qstat
from .network import DampingBackend, NetworkSpec, ReservoirSpec, SpectralDensity


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def two_node_fixture(T=(0.3, 0.6), gamma=(0.05, 0.08), drive=0.05, omega_d=0.8, K=5):
    """Driven two-node network with one Drude-ohmic reservoir per node."""
    net = NetworkSpec(V0=[[1.0, 0.2], [0.2, 1.5]], Vk={1: np.diag([drive, 0.0])}, omega_d=omega_d)
    res = [ReservoirSpec("a", T[0], SpectralDensity.ohmic(gamma[0], np.diag([1.0, 0.0]), 20.0)),
           ReservoirSpec("b", T[1], SpectralDensity.ohmic(gamma[1], np.diag([0.0, 1.0]), 20.0))]
    damping = DampingBackend.from_reservoirs(res)
    return floquet.solve(net, damping, K=K), res


def _rel(a, b):
    return abs(a - b) / abs(b)


def check_thermal_state(rng):
    rho = qstat.thermal_state(qstat.HamiltonianSpec.diagonal([0.0, 1.0]), 1.0)
    p = np.real(np.diag(rho.matrix))
    ok = np.allclose(p, [1 / (1 + math.e**-1), math.e**-1 / (1 + math.e**-1)], atol=1e-12)
    return ok, f"populations {p[0]:.8f}, {p[1]:.8f}"


def check_vacancy_additivity(rng):
    worst = 0.0
    for _ in range(20):
        e1, e2 = rng.uniform(0, 2, 2), rng.uniform(0, 2, 3)
        p1, p2 = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(3))
        beta = rng.uniform(0.2, 3.0)
        H = np.add.outer(e1, e2).ravel()
        v12 = qstat.vacancy(np.diag(np.kron(p1, p2)), np.diag(H), beta)
        v = qstat.vacancy(np.diag(p1), np.diag(e1), beta) + qstat.vacancy(np.diag(p2), np.diag(e2), beta)
        worst = max(worst, abs(v12 - v))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def check_renyi_monotone(rng):
    alphas = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 5.0, 100.0]
    worst = 0.0
    for _ in range(50):
        p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        vals = [qstat.renyi_divergence(p, q, a) for a in alphas]
        worst = max(worst, max(0.0, -min(np.diff(vals))))
    return worst <= 1e-9, f"largest decrease {worst:.2e}"


def check_landauer(rng, trials=300):
    rep = bounds.landauer_brute_force_oracle(2, 3, 1.0, trials, seed=rng)
    return rep.violations == 0, f"{rep.violations} violations in {rep.trials} trials"


def check_radiation_example(rng):
    task = bounds.CoolingTask(2, 1, 1.0, 1.0, 10.0)
    val = bounds.radiation_temperature_bound(task, 1.0)
    expected = 15.0 / math.pi**2 * math.log(4 / 3) ** 4 * 1e-4
    return _rel(val, expected) < 1e-12, f"bound {val:.7e}"


def check_masanes_leading_order(rng):
    worst = 0.0
    for nu in (0.25, 0.5, 0.75):
        for W in (3.0, 8.0):
            task = bounds.CoolingTask(8, 1, 1.0, 1.0, W)
            mb = bounds.masanes_error_bound(task, bounds.DoSModel(a=1.0, nu=nu))
            closed = math.log(bounds.bath_family_error_bound(task, 1.0, nu, 1.0))
            worst = max(worst, _rel(mb.leading_log_epsilon, closed))
    return worst < 1e-8, f"leading exponent vs closed form, max rel {worst:.1e}"


def check_hb_vs_perturbative(rng):
    net = NetworkSpec(V0=[[1.0, 0.2], [0.2, 1.5]], Vk={1: np.diag([1e-4, 0.0])}, omega_d=0.8)
    damping = DampingBackend.markovian(np.diag([0.05, 0.08]), 20.0)
    w = np.array([0.3, 1.1, 1.9])
    hb = floquet.harmonic_balance_batch(net, damping, w, 3)[2:5]
    pt = floquet.perturbative_batch(net, damping, w, 1)
    err = np.max(np.abs(hb - pt)) / np.max(np.abs(pt[1]))
    return err < 1e-6, f"relative difference {err:.2e}"


def check_reciprocity(rng):
    sol, _ = two_node_fixture()
    w = 0.37
    err = 0.0
    for k in (1, 2, -1):
        Ak = sol.at(w)[k]
        Amk = sol.at(w + k * sol.omega_d)[-k]
        err = max(err, np.max(np.abs(Ak.T - Amk)) / np.max(np.abs(Ak)))
    return err < 1e-8, f"max |A_k^T - A_-k(w + k wd)| / |A_k| = {err:.1e}"


def check_heat_decomposition(rng):
    sol, res = two_node_fixture()
    rep = currents.heat_currents(sol, res, direct=True, power=True)
    rel = np.max(np.abs(rep.q_total - rep.q_direct) / np.abs(rep.q_direct))
    closure = rep.first_law_residual()
    ok = rel <= 1e-4 and closure <= 1e-3
    return ok, f"direct vs decomposition {rel:.1e}, first-law residual {closure:.1e}"


def check_zero_temperature(rng):
    sol, res = two_node_fixture(T=(0.0, 0.0))
    dec = currents.decompose(sol, res)
    resonant = np.max(np.abs(dec.rp) + np.abs(dec.rh))
    ok = resonant <= 1e-10 and np.all(dec.nrh < 0)
    return ok, f"|RP|+|RH| = {resonant:.1e}, NRH = {dec.nrh[0]:.3e}, {dec.nrh[1]:.3e}"


def check_sideband(rng):
    setup = cooling.CoolingSetup(1.0, 100.0, 0.01)
    r = cooling.optimize_drive_frequency(setup, (90.0, 110.0), steps=201)
    ok = _rel(r.omega_d_opt, 99.0) < 1e-3 and _rel(r.n_bar_min, 2.5e-5) < 0.2
    return ok, f"omega_d {r.omega_d_opt:.5f}, n_bar {r.n_bar_min:.4e}"


def check_doppler(rng):
    setup = cooling.CoolingSetup(1.0, 1000.0, 50.0)
    r = cooling.optimize_drive_frequency(setup, (500.0, 1500.0), steps=201)
    ref = cooling.doppler_limit(50.0, 1.0, 1000.0).value
    ok = _rel(r.n_bar_min, ref) < 0.2 and _rel(r.omega_d_opt, 950.0) < 0.05
    return ok, f"omega_d {r.omega_d_opt:.3f}, n_bar {r.n_bar_min:.4f} (limit {ref:.4f})"


CHECKS = (
    ("thermal_state", check_thermal_state),
    ("vacancy_additivity", check_vacancy_additivity),
    ("renyi_monotone", check_renyi_monotone),
    ("landauer_oracle", check_landauer),
    ("radiation_example", check_radiation_example),
    ("masanes_leading_order", check_masanes_leading_order),
    ("hb_vs_perturbative", check_hb_vs_perturbative),
    ("reciprocity", check_reciprocity),
    ("heat_decomposition", check_heat_decomposition),
    ("zero_temperature", check_zero_temperature),
    ("sideband_limit", check_sideband),
    ("doppler_limit", check_doppler),
)


def run_suite(seed=0, names=None) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS:
        if names is not None and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed invariant, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
