"""Cooling a single mode with a parametrically driven oscillator.

The cold reservoir is one mode at ``omega_m``; a second, broadband reservoir
(the dump) at zero temperature receives the extracted energy. The working
oscillator uses the phenomenological propagator
``g(w) = 1 / ((w - i gamma)^2 - omega_0^2)``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import floquet
from .errors import DomainError, InvalidInputError, ModelError, RegimeError
from .network import DampingBackend, NetworkSpec, ReservoirSpec, SpectralDensity

DOPPLER_RATIO = 10.0
SIDEBAND_RATIO = 0.1
SCAN_COLUMNS = ("omega_d", "n_bar", "T_equiv")


@dataclass(frozen=True)
class CoolingSetup:
    omega_m: float
    omega_0: float
    gamma: float
    I_B: SpectralDensity | None = None
    v: float = 1.0
    k_max: int = 5

    def __post_init__(self):
        for name in ("omega_m", "omega_0", "gamma"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.v == 0:
            raise InvalidInputError("drive amplitude must be nonzero")
        if self.k_max < 1:
            raise InvalidInputError("k_max must be >= 1")
        if self.I_B is None:
            flat = SpectralDensity.flat(1.0, [[1.0]], (0.0, 10.0 * (self.omega_0 + self.omega_m)))
            object.__setattr__(self, "I_B", flat)
        elif self.I_B.is_delta or self.I_B.n_nodes != 1:
            raise InvalidInputError("the dump density must be a smooth single-node density")

    def dump(self, w):
        return self.I_B(np.atleast_1d(np.asarray(w, dtype=float)))[:, 0, 0]

    def damping(self) -> DampingBackend:
        return DampingBackend.phenomenological_backend([self.gamma], [self.omega_0])

    def network(self, omega_d: float) -> NetworkSpec:
        """``V(t) = omega_0^2 + 2 v cos(omega_d t)``."""
        return NetworkSpec(V0=[[self.omega_0**2]], Vk={1: [[self.v]]}, omega_d=omega_d)

    def g(self, w):
        w = np.asarray(w, dtype=float)
        return 1.0 / ((w - 1j * self.gamma) ** 2 - self.omega_0**2)


def _check_drive(omega_d):
    if not omega_d > 0:
        raise InvalidInputError("omega_d must be positive")


def _balance_sums(setup: CoolingSetup, omega_d: float):
    """Pumping sum, heating sum and outer-shell tail ratio from harmonic balance."""
    _check_drive(omega_d)
    net = setup.network(omega_d)
    damping = setup.damping()
    K = max(setup.k_max, floquet.choose_truncation(net, damping))
    A = floquet.harmonic_balance_batch(net, damping, [setup.omega_m], K)[:, 0, 0, 0]
    wm = setup.omega_m
    ks = np.arange(1, setup.k_max + 1)
    kd = math.floor(wm / omega_d) + 1
    pump = setup.dump(ks * omega_d + wm) * np.abs(A[K + ks]) ** 2
    heat_k = ks[ks >= kd]
    heat = setup.dump(heat_k * omega_d - wm) * np.abs(A[K - heat_k]) ** 2
    num, den = float(pump.sum()), float(heat.sum())
    tail = max(pump[-1] / num if num else 0.0, heat[-1] / den if den and len(heat) else 0.0)
    return num, den, tail


def rp_nrh_ratio(setup: CoolingSetup, omega_d: float, n_bar: float) -> float:
    """``|Q_RP / Q_NRH|`` of the cold mode, neglecting the heating part of RP."""
    if n_bar < 0:
        raise InvalidInputError("n_bar must be nonnegative")
    num, den, _ = _balance_sums(setup, omega_d)
    if den == 0:
        raise ModelError("no heating channel: every denominator term vanishes")
    frac = 1.0 if np.isinf(n_bar) else n_bar / (1.0 + n_bar)
    return frac * num / den


def _invert(x):
    return x / (1.0 - x) if x < 1.0 else np.inf


def min_occupation_balance(setup: CoolingSetup, omega_d: float) -> float:
    """Lowest occupation from the pumping/pair-creation balance with harmonic balance A_k."""
    num, den, _ = _balance_sums(setup, omega_d)
    if num == 0:
        raise ModelError("no pumping channel: every numerator term vanishes")
    return _invert(den / num)


def balance_tail_ratio(setup: CoolingSetup, omega_d: float) -> float:
    """Relative weight of the outermost ``k = k_max`` shell in the balance sums."""
    return _balance_sums(setup, omega_d)[2]


def min_occupation_weak(setup: CoolingSetup, omega_d: float) -> float:
    """Lowest occupation keeping only the ``k = +-1`` sidebands (``omega_d > omega_m``)."""
    _check_drive(omega_d)
    wm = setup.omega_m
    if omega_d <= wm:
        raise RegimeError("the single-sideband formula needs omega_d > omega_m")
    g0 = setup.g(wm)
    a_plus = -setup.g(wm + omega_d) * setup.v * g0
    a_minus = -setup.g(wm - omega_d) * setup.v * g0
    num = setup.dump(omega_d + wm)[0] * abs(a_plus) ** 2
    den = setup.dump(omega_d - wm)[0] * abs(a_minus) ** 2
    if num == 0:
        raise ModelError("dump density vanishes at omega_d + omega_m")
    return _invert(den / num)


def occupation_to_temperature(n_bar: float, omega_m: float) -> float:
    """Invert the Planck distribution: ``T = omega_m / ln(1 + 1/n)``."""
    if not n_bar > 0:
        raise DomainError("n_bar must be positive (T = 0 is not reachable)")
    if not omega_m > 0:
        raise DomainError("omega_m must be positive")
    if np.isinf(n_bar):
        return float("inf")
    return float(omega_m / math.log1p(1.0 / n_bar))


def classify_regime(gamma: float, omega_m: float) -> str:
    r = gamma / omega_m
    if r >= DOPPLER_RATIO:
        return "doppler"
    if r <= SIDEBAND_RATIO:
        return "sideband"
    return "intermediate"


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    regime: str
    valid: bool

    def __float__(self):
        return float(self.value)


def doppler_limit(gamma: float, omega_m: float, omega_0: float) -> LimitEstimate:
    """Broad-line limit ``(gamma / 2 omega_m) omega_0 / (omega_0 - gamma)``."""
    if not (gamma > 0 and omega_m > 0):
        raise DomainError("gamma and omega_m must be positive")
    if omega_0 <= gamma:
        raise DomainError("needs omega_0 > gamma")
    val = gamma / (2 * omega_m) * omega_0 / (omega_0 - gamma)
    valid = gamma >= DOPPLER_RATIO * omega_m and omega_0 >= DOPPLER_RATIO * omega_m
    return LimitEstimate(float(val), "doppler", bool(valid))


def sideband_limit(gamma: float, omega_m: float) -> LimitEstimate:
    """Resolved-sideband limit ``gamma^2 / (4 omega_m^2)``, reached at ``omega_d = omega_0 - omega_m``."""
    if not (gamma > 0 and omega_m > 0):
        raise DomainError("gamma and omega_m must be positive")
    return LimitEstimate(float(gamma**2 / (4 * omega_m**2)), "sideband", bool(gamma < omega_m))


@dataclass
class CoolingResult:
    n_bar_min: float
    omega_d_opt: float
    T_min: float
    regime: str
    scan: list = field(default_factory=list)
    method: str = "weak"

    def scan_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        for wd, n, T in self.scan:
            w.writerow([f"{wd:.12e}", f"{n:.12e}", f"{T:.12e}"])
        return buf.getvalue()

    def summary_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n_bar_min", "omega_d_opt", "T_min", "regime", "method"))
        w.writerow([f"{self.n_bar_min:.12e}", f"{self.omega_d_opt:.12e}", f"{self.T_min:.12e}",
                    self.regime, self.method])
        return buf.getvalue()


def _equiv_temperature(n, omega_m):
    if n == 0:
        return 0.0
    return occupation_to_temperature(n, omega_m)


def optimize_drive_frequency(setup: CoolingSetup, omega_d_range=None, steps=400,
                             method="weak", threads=1) -> CoolingResult:
    """Coarse scan over ``omega_d`` then golden-section refinement of the best bracket.

    ``threads > 1`` spreads the coarse scan over a thread pool; results keep
    grid order so the output does not depend on the thread count.
    """
    if method == "weak":
        fn = min_occupation_weak
    elif method == "balance":
        fn = min_occupation_balance
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    if omega_d_range is None:
        omega_d_range = (setup.omega_m * (1 + 1e-6), 2.0 * setup.omega_0)
    lo, hi = map(float, omega_d_range)
    if method == "weak" and lo <= setup.omega_m:
        raise RegimeError("the weak formula needs omega_d > omega_m over the whole range")
    if not (0 < lo < hi) or steps < 3:
        raise InvalidInputError("need 0 < lo < hi and at least 3 scan steps")
    grid = np.linspace(lo, hi, steps)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            nbar = np.array(list(pool.map(lambda wd: fn(setup, wd), grid)))
    else:
        nbar = np.array([fn(setup, wd) for wd in grid])
    if not np.any(np.isfinite(nbar)):
        raise RegimeError("no drive frequency in the range cools the mode")
    i = int(np.argmin(nbar))
    best_wd, best_n = grid[i], nbar[i]
    if 0 < i < steps - 1:
        res = minimize_scalar(lambda x: fn(setup, x), bracket=(grid[i - 1], grid[i], grid[i + 1]),
                              method="golden", options={"xtol": 1e-6})
        if res.fun <= best_n:
            best_wd, best_n = float(res.x), float(res.fun)
    scan = [(float(w), float(n), _equiv_temperature(n, setup.omega_m)) for w, n in zip(grid, nbar)]
    return CoolingResult(float(best_n), float(best_wd), _equiv_temperature(best_n, setup.omega_m),
                         classify_regime(setup.gamma, setup.omega_m), scan, method)


def reservoirs(setup: CoolingSetup, T_A: float, strength: float = 1.0, T_B: float = 0.0):
    """Delta-mode cold reservoir ``A`` and the dump ``B`` on the single node."""
    A = ReservoirSpec("A", T_A, SpectralDensity.delta(strength, setup.omega_m, [[1.0]]))
    B = ReservoirSpec("B", T_B, setup.I_B)
    return [A, B]
