"""Unattainability bounds on final temperature and cooling error.

Evaluators for the finite-resource, finite-heat-capacity, finite-dimension
and Landauer-type limits, plus brute-force sampling checks where one exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import qstat
from .errors import DomainError, InvalidInputError, ModelError, SingularCapacityError
from .quadrature import integrate
from .roots import bracket_root

RADIATION_NU = 0.75
RADIATION_A = (4.0 / 3.0) * 15.0 ** (-0.25) * np.sqrt(np.pi)


@dataclass(frozen=True)
class DoSModel:
    """Bath density of states through its Boltzmann entropy ``ln Omega(E)``.

    ``kind`` is one of ``power_law_entropy`` (``ln Omega = a V^(1-nu) E^nu``),
    ``radiation`` (the power law with ``nu = 3/4`` and the black-body prefactor)
    or ``tabulated`` (pairs ``(E, ln Omega)``, interpolated with a cubic spline).
    """

    kind: str = "power_law_entropy"
    a: float = 1.0
    nu: float = 0.5
    volume: float = 1.0
    table: tuple | None = None

    def __post_init__(self):
        if self.kind == "radiation":
            object.__setattr__(self, "a", RADIATION_A)
            object.__setattr__(self, "nu", RADIATION_NU)
        if self.kind not in ("power_law_entropy", "radiation", "tabulated"):
            raise InvalidInputError(f"unknown DoS kind {self.kind!r}")
        if self.volume <= 0:
            raise InvalidInputError("volume must be positive")
        if self.kind == "tabulated":
            if self.table is None or len(self.table) < 5:
                raise InvalidInputError("tabulated DoS needs at least 5 (E, ln Omega) pairs")
            E = np.array([row[0] for row in self.table], dtype=float)
            if np.any(np.diff(E) <= 0):
                raise InvalidInputError("tabulated energies must be strictly increasing")
        elif self.a <= 0:
            raise InvalidInputError("entropy prefactor a must be positive")

    @classmethod
    def radiation(cls, volume=1.0):
        return cls(kind="radiation", volume=volume)

    @property
    def prefactor(self) -> float:
        """``a V^(1-nu)``: coefficient of ``E^nu`` in the entropy."""
        return self.a * self.volume ** (1.0 - self.nu)

    def _spline(self):
        from scipy.interpolate import CubicSpline

        E = np.array([r[0] for r in self.table], dtype=float)
        S = np.array([r[1] for r in self.table], dtype=float)
        return CubicSpline(E, S)

    @property
    def domain(self):
        if self.kind == "tabulated":
            return float(self.table[0][0]), float(self.table[-1][0])
        return 0.0, np.inf

    def log_omega(self, E):
        E = np.asarray(E, dtype=float)
        if self.kind == "tabulated":
            return self._spline()(E)
        return self.prefactor * np.power(np.maximum(E, 0.0), self.nu)

    def dlog_omega(self, E, order=1):
        """Energy derivatives of ``ln Omega``.

        Tabulated models use central differences on the interpolant.
        """
        E = np.asarray(E, dtype=float)
        if self.kind == "tabulated":
            lo, hi = self.domain
            h = 1e-3 * (hi - lo) / len(self.table)
            f = self.log_omega
            if order == 1:
                return (f(E + h) - f(E - h)) / (2 * h)
            return (f(E + h) - 2 * f(E) + f(E - h)) / h**2
        c, nu = self.prefactor, self.nu
        if order == 1:
            return c * nu * E ** (nu - 1.0)
        return c * nu * (nu - 1.0) * E ** (nu - 2.0)


@dataclass(frozen=True)
class CoolingTask:
    d_S: int
    g: int
    delta: float
    T: float
    W_wc: float

    def __post_init__(self):
        if self.d_S < 1 or self.g < 1:
            raise InvalidInputError("d_S and g must be positive integers")
        if self.g > self.d_S:
            raise InvalidInputError("g cannot exceed d_S")
        for name in ("delta", "T", "W_wc"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")

    @property
    def log_rank_ratio(self) -> float:
        """``ln(2 d_S / 3 g)``, the numerator of the E0 condition."""
        return float(np.log(2.0 * self.d_S / (3.0 * self.g)))


def temperature_from_error(task: CoolingTask, epsilon: float) -> float:
    """Temperature-like lower bound ``Delta / ln(d_S / (g eps))``."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    arg = np.log(task.d_S / task.g) - np.log(epsilon)
    if arg <= 0:
        raise DomainError("d_S / (g eps) <= 1: bound is vacuous")
    return float(task.delta / arg)


def heat_capacity(dos: DoSModel, E: float) -> float:
    """Micro-canonical heat capacity ``-(S')^2 / S''`` of the bath."""
    lo, hi = dos.domain
    if not lo < E < hi:
        raise DomainError(f"energy {E} outside model domain ({lo}, {hi})")
    d1 = float(dos.dlog_omega(E, 1))
    d2 = float(dos.dlog_omega(E, 2))
    if d2 == 0 or not np.isfinite(d2):
        raise SingularCapacityError(f"zero curvature of ln Omega at E={E}")
    return -(d1**2) / d2


def solve_E0(task: CoolingTask, dos: DoSModel, rtol: float = 1e-10) -> float:
    """Root of ``d ln Omega / dE = ln(2 d_S / 3 g) / W_wc``."""
    L = task.log_rank_ratio
    if L <= 0:
        raise DomainError("ln(2 d_S / 3 g) <= 0 for this task")
    target = L / task.W_wc
    if dos.kind != "tabulated" and not 0 < dos.nu < 1:
        raise ModelError("power-law entropy needs 0 < nu < 1 for a unique E0")

    def f(E):
        return float(dos.dlog_omega(E, 1)) - target

    lo, hi = dos.domain
    if dos.kind == "tabulated":
        a, b = lo + 1e-9 * (hi - lo), hi - 1e-9 * (hi - lo)
    else:
        # S'(E) decreases monotonically from +inf to 0; expand a bracket around the guess
        guess = (dos.prefactor * dos.nu / target) ** (1.0 / (1.0 - dos.nu))
        a, b = guess / 4.0, guess * 4.0
        for _ in range(200):
            if f(a) > 0:
                break
            a /= 4.0
        for _ in range(200):
            if f(b) < 0:
                break
            b *= 4.0
    if f(a) * f(b) > 0:
        raise ModelError("no root of the E0 equation inside the model domain")
    return bracket_root(f, a, b, rtol=rtol)


def log_partition_function(dos: DoSModel, T: float) -> float:
    """``ln int_0^inf exp(ln Omega(E) - E/T) dE`` around the Laplace point.

    The maximiser ``S'(E*) = 1/T`` and the Laplace width
    ``sigma = (-S''(E*))^(-1/2)`` fix the window ``E* +/- 40 sigma``; the
    upper edge is pushed out to at least ``E* + 60 T`` so that the pure
    Boltzmann tail is never clipped when the peak is broad.
    """
    if T <= 0:
        raise InvalidInputError("temperature must be positive")
    if dos.kind == "tabulated":
        lo, hi = dos.domain
        grid = np.linspace(lo, hi, 4001)
        phi = dos.log_omega(grid) - grid / T
        m = phi.max()
        res = integrate(lambda E: np.exp(dos.log_omega(E) - E / T - m)[:, None], lo, hi,
                        points=[grid[np.argmax(phi)]], rtol=1e-12)
        return float(m + np.log(res.value[0]))
    c, nu = dos.prefactor, dos.nu
    E_star = (c * nu * T) ** (1.0 / (1.0 - nu))
    sigma = np.sqrt(T * E_star / (1.0 - nu))
    phi_star = c * E_star**nu - E_star / T
    lo = max(0.0, E_star - 40.0 * sigma)
    hi = E_star + max(40.0 * sigma, 60.0 * T)

    def integrand(E):
        return np.exp(c * np.power(E, nu) - E / T - phi_star)[:, None]

    res = integrate(integrand, lo, hi, points=[E_star], rtol=1e-12, atol=1e-300)
    return float(phi_star + np.log(res.value[0]))


@dataclass
class MasanesBound:
    epsilon_min: float
    E0: float
    log_epsilon: float
    log_partition: float
    leading_log_epsilon: float
    regime_valid: bool
    meta: dict = field(default_factory=dict)


def masanes_error_bound(task: CoolingTask, dos: DoSModel) -> MasanesBound:
    """Cooling-error bound ``Omega(E0) exp(-E0/T) / Z_B`` with worst-case work.

    ``leading_log_epsilon`` is ``-E0/T`` alone, the term that survives at
    large ``W_wc``; ``regime_valid`` flags ``W_wc >= 10 T`` and
    ``W_wc >= 10 Delta``.
    """
    E0 = solve_E0(task, dos)
    logZ = log_partition_function(dos, task.T)
    log_eps = float(dos.log_omega(E0)) - E0 / task.T - logZ
    return MasanesBound(
        epsilon_min=float(np.exp(min(log_eps, 0.0))),
        E0=E0,
        log_epsilon=log_eps,
        log_partition=logZ,
        leading_log_epsilon=-E0 / task.T,
        regime_valid=bool(task.W_wc >= 10 * task.T and task.W_wc >= 10 * task.delta),
    )


def bath_family_error_bound(task: CoolingTask, a: float, nu: float, V: float) -> float:
    """Closed-form bound for the power-law entropy family."""
    return float(np.exp(-bath_family_exponent(task, a, nu, V)))


def bath_family_exponent(task: CoolingTask, a: float, nu: float, V: float) -> float:
    """``-ln`` of the closed-form bound; finite where the bound itself underflows."""
    if not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    if a <= 0 or V < 0:
        raise DomainError("a must be positive and V nonnegative")
    L = task.log_rank_ratio
    if L <= 0:
        raise DomainError("ln(2 d_S / 3 g) <= 0 for this task")
    return float((V / task.T) * (a * nu * task.W_wc / L) ** (1.0 / (1.0 - nu)))


@dataclass
class RadiationBound:
    value: float
    regime: str


def radiation_temperature_bound(task: CoolingTask, V: float) -> float:
    """Final-temperature bound for a black-body bath of volume ``V`` (c = hbar = 1)."""
    if V <= 0:
        raise InvalidInputError("volume must be positive")
    L = task.log_rank_ratio
    if L <= 0:
        raise DomainError("ln(2 d_S / 3 g) <= 0 for this task")
    return float(15.0 / np.pi**2 * L**4 * task.T * task.delta / (V * task.W_wc**4))


def radiation_regime_flag(task: CoolingTask, V: float) -> bool:
    """Large ``V W_wc^4`` regime: the exponent of the error bound is >= 10."""
    expo = bath_family_exponent(task, RADIATION_A, RADIATION_NU, V)
    return bool(expo >= 10.0 * max(1.0, np.log(task.d_S / task.g)))


def time_scaling_bound(task: CoolingTask, t: float, w_rate: float, c_speed: float) -> float:
    """Radiation bound with ``W_wc = w_rate t`` and ``V = (c_speed t)^3``."""
    for name, v in (("t", t), ("w_rate", w_rate), ("c_speed", c_speed)):
        if not v > 0:
            raise InvalidInputError(f"{name} must be positive")
    timed = CoolingTask(task.d_S, task.g, task.delta, task.T, w_rate * t)
    return radiation_temperature_bound(timed, (c_speed * t) ** 3)


def landauer_purity_bound(lambda_min_in: float, beta: float, J_B: float) -> float:
    if not 0 < lambda_min_in <= 1:
        raise InvalidInputError("lambda_min must lie in (0, 1]")
    if beta < 0 or J_B < 0:
        raise InvalidInputError("beta and J_B must be nonnegative")
    return float(np.exp(-beta * J_B) * lambda_min_in)


@dataclass
class LandauerReport:
    violations: int
    trials: int
    min_slack: float


def landauer_brute_force_oracle(dim_S: int = 2, dim_B: int = 3, beta: float = 1.0,
                                trials: int = 1000, seed=None, unitaries=None,
                                slack: float = 1e-9) -> LandauerReport:
    """Sample random erasure protocols and count purity-bound violations.

    Every trial draws a random full-rank system state, a random bath
    Hamiltonian and a Haar-random unitary on system plus bath, then compares
    the smallest eigenvalue of the reduced output with
    ``exp(-beta J_B) lambda_min(rho_S)``. ``unitaries`` may supply a fixed
    sequence of unitaries instead of sampling.
    """
    if dim_S > 4 or dim_B > 6:
        raise InvalidInputError("oracle is limited to dim_S <= 4 and dim_B <= 6")
    if beta < 0:
        raise InvalidInputError("beta must be nonnegative")
    rng = np.random.default_rng(seed)
    d = dim_S * dim_B
    if unitaries is None:
        haar = stats.unitary_group(dim=d, seed=rng)
    violations, min_slack = 0, np.inf
    for n in range(trials):
        g = rng.standard_normal((dim_S, dim_S)) + 1j * rng.standard_normal((dim_S, dim_S))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        eB = np.sort(rng.uniform(0.0, 3.0, dim_B))
        J_B = eB[-1] - eB[0]
        wB = np.exp(-beta * (eB - eB[0]))
        wB /= wB.sum()
        U = unitaries[n] if unitaries is not None else haar.rvs()
        big = np.kron(rho, np.diag(wB))
        out = U @ big @ U.conj().T
        red = np.trace(out.reshape(dim_S, dim_B, dim_S, dim_B), axis1=1, axis2=3)
        lam_out = np.linalg.eigvalsh(0.5 * (red + red.conj().T))[0]
        lam_in = np.linalg.eigvalsh(rho)[0]
        s = lam_out - np.exp(-beta * J_B) * lam_in
        min_slack = min(min_slack, s)
        if s < -slack:
            violations += 1
    return LandauerReport(violations, trials, float(min_slack))


def _check_temperature_args(T, delta, J_B):
    if not (T > 0 and delta > 0 and J_B > 0):
        raise InvalidInputError("T, delta and J_B must be positive")


def scharlau_bound(T: float, delta: float, J_B: float, d_B: int) -> float:
    """``T Delta / (J_B + T ln d_B)`` for energy-conserving protocols."""
    _check_temperature_args(T, delta, J_B)
    if d_B < 1:
        raise InvalidInputError("bath dimension must be a positive integer")
    return float(T * delta / (J_B + T * np.log(d_B)))


def allahverdyan_bound(T: float, delta: float, J_B: float) -> float:
    _check_temperature_args(T, delta, J_B)
    return float(T * delta / J_B)


def cooling_necessary_condition(resource_vacancy: float, target_vacancy: float) -> bool:
    """Vacancy of the resource must be at least that of the target state.

    ``target_vacancy`` is the vacancy of the final (cold) system state.
    """
    return bool(resource_vacancy >= target_vacancy)


def work_qubit_cooling_possible(W: float, H_S, beta: float) -> bool:
    """A pure work qubit of gap ``W`` cools ``H_S`` to its ground state iff ``W > ln Z``."""
    return bool(W > qstat.log_partition_function(H_S, beta))
