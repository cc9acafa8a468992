"""Floquet coefficients ``A_k(omega)`` of the asymptotic Green's function.

The two-time Green's function of the driven network is expanded as

    G(t, t') = (1/2 pi) sum_k int A_k(w) exp(i w (t - t')) exp(i k w_d t) dw

and the coefficients solve the harmonic-balance system

    D(w + k w_d) A_k + sum_{m != 0} V_m A_{k-m} = delta_{k0}

with ``D = g^{-1}`` the inverse undriven propagator. Truncating at
``|k| <= K`` gives a dense block system that is solved for many
frequencies at once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import InstabilityError, InvalidInputError, ModelError
from .network import DampingBackend, NetworkSpec, renormalized_potential
from .quadrature import integrate

COND_THRESHOLD = 1e12
K_MAX = 25
TRUNCATION_TOL = 1e-8


def inverse_propagator(net: NetworkSpec, damping: DampingBackend, omega) -> np.ndarray:
    """``D(w) = g(iw)^{-1}`` for an array of real frequencies, shape ``(n, N, N)``."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    N = net.n_nodes
    if damping.kind == "phenomenological":
        g, w0 = damping.gamma, damping.omega0
        if g.shape != (N,):
            raise InvalidInputError("phenomenological backend size does not match the network")
        d = (w[:, None] - 1j * g[None, :]) ** 2 - w0[None, :] ** 2
        out = np.zeros((len(w), N, N), dtype=complex)
        out[:, np.arange(N), np.arange(N)] = d
        return out
    if damping.kind != "markovian_ohmic":
        raise ModelError("tabulated damping kernels are not supported")
    VR = renormalized_potential(net, damping)
    out = -(w**2)[:, None, None] * net.M[None] + VR[None].astype(complex)
    for G, cut in damping.terms:
        if np.isinf(cut):
            fac = 1j * w
        else:
            fac = 1j * w * cut / (cut + 1j * w)
        out = out + fac[:, None, None] * G[None]
    return out


def undriven_propagator(net: NetworkSpec, damping: DampingBackend, omega) -> np.ndarray:
    """``g(i omega)`` for a scalar frequency (or a batch, shape ``(n, N, N)``)."""
    scalar = np.ndim(omega) == 0
    D = inverse_propagator(net, damping, omega)
    cond = np.linalg.cond(D)
    bad = ~np.isfinite(cond) | (cond > 1.0 / np.finfo(float).eps)
    if np.any(bad):
        w = np.atleast_1d(omega)[np.argmax(bad)]
        raise InstabilityError(f"undriven propagator is singular at omega={w:g}")
    g = np.linalg.inv(D)
    return g[0] if scalar else g


def undriven_poles(net: NetworkSpec, damping: DampingBackend) -> np.ndarray:
    """Complex frequencies where ``D(w)`` is singular; stable poles have ``Im > 0``."""
    if damping.kind == "phenomenological":
        return np.concatenate([damping.omega0 + 1j * damping.gamma,
                               -damping.omega0 + 1j * damping.gamma])
    lam = np.linalg.eigvals(_state_matrix(net, damping, np.zeros_like(net.V0)))
    return -1j * lam


def _state_matrix(net, damping, Vdrive):
    """First-order generator for ``(x, xdot, aux...)`` with extra potential ``Vdrive``."""
    N = net.n_nodes
    if damping.kind == "phenomenological":
        g = np.diag(damping.gamma)
        stiff = g @ g + np.diag(damping.omega0**2) - Vdrive
        return np.block([[np.zeros((N, N)), np.eye(N)], [-stiff, -2 * g]])
    Minv = np.diag(1.0 / net.masses)
    fast = [G for G, cut in damping.terms if np.isinf(cut)]
    slow = [(G, cut) for G, cut in damping.terms if np.isfinite(cut)]
    n = 2 + len(slow)
    A = np.zeros((n * N, n * N))
    A[:N, N:2 * N] = np.eye(N)
    A[N:2 * N, :N] = -Minv @ (net.V0 + Vdrive)
    A[N:2 * N, N:2 * N] = -Minv @ sum(fast, np.zeros((N, N)))
    for i, (G, cut) in enumerate(slow):
        s = slice((2 + i) * N, (3 + i) * N)
        A[N:2 * N, s] = -Minv @ G
        A[s, N:2 * N] = cut * np.eye(N)
        A[s, s] = -cut * np.eye(N)
    return A


def _drive_sign(damping):
    # The phenomenological propagator is minus the physical response, so in
    # the literal harmonic-balance system the drive enters with flipped sign.
    return -1.0 if damping.kind == "phenomenological" else 1.0


def monodromy_multipliers(net: NetworkSpec, damping: DampingBackend, tol=1e-8) -> np.ndarray:
    """Floquet multipliers over one drive period (midpoint-exponential stepping)."""
    if not net.driven:
        raise InvalidInputError("monodromy needs a driven network")
    period = 2 * np.pi / net.omega_d
    sign = _drive_sign(damping)
    prev = None
    steps = 64
    while True:
        h = period / steps
        Phi = np.eye(_state_matrix(net, damping, np.zeros_like(net.V0)).shape[0])
        for i in range(steps):
            Vd = sign * (net.V_at((i + 0.5) * h) - net.V0)
            Phi = expm(h * _state_matrix(net, damping, Vd)) @ Phi
        mu = np.linalg.eigvals(Phi)
        top = np.max(np.abs(mu))
        if prev is not None and abs(top - prev) <= tol * max(1.0, top):
            return mu
        if steps >= 8192:
            return mu
        prev = top
        steps *= 2


def _check_K(net, K):
    if K < net.max_harmonic:
        raise InvalidInputError(f"K={K} is below the largest drive harmonic {net.max_harmonic}")
    if K < 0:
        raise InvalidInputError("K must be nonnegative")


def harmonic_balance_batch(net: NetworkSpec, damping: DampingBackend, omega, K: int,
                           with_condition=False):
    """Coefficients ``A_k(w)`` for ``|k| <= K``, shape ``(2K+1, n, N, N)``."""
    _check_K(net, K)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    N = net.n_nodes
    nk = 2 * K + 1
    big = _hb_matrices(net, damping, w, K)
    rhs = np.zeros((nk * N, N), dtype=complex)
    rhs[K * N:(K + 1) * N] = np.eye(N)
    X = np.linalg.solve(big, np.broadcast_to(rhs, (len(w),) + rhs.shape))
    A = X.reshape(len(w), nk, N, N).transpose(1, 0, 2, 3)
    if with_condition:
        return A, np.linalg.cond(big)
    return A


def perturbative_batch(net: NetworkSpec, damping: DampingBackend, omega, K=None):
    """First-order coefficients ``A_0 = g``, ``A_k = -g(w + k w_d) V_k g(w)``.

    With the phenomenological propagator the drive enters with the same
    flipped sign as in the harmonic-balance system, so both methods share
    one convention.
    """
    K = net.max_harmonic if K is None else K
    _check_K(net, K)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    N = net.n_nodes
    g0 = np.linalg.inv(inverse_propagator(net, damping, w))
    A = np.zeros((2 * K + 1, len(w), N, N), dtype=complex)
    A[K] = g0
    for k, Vk in net.Vk.items():
        gk = np.linalg.inv(inverse_propagator(net, damping, w + k * net.omega_d))
        A[k + K] = -_drive_sign(damping) * gk @ Vk @ g0
    return A


@dataclass
class FloquetPoint:
    """Coefficients at a single frequency."""

    omega: float
    coeffs: dict
    method: str
    condition: float = float("nan")
    weak_ratio: float = 0.0
    weak: bool = True


def floquet_perturbative(net, damping, omega: float, weak_threshold=0.1) -> FloquetPoint:
    undriven_propagator(net, damping, omega)  # surfaces real-axis singularities
    A = perturbative_batch(net, damping, [omega])
    K = net.max_harmonic
    ratio = net.drive_ratio()
    coeffs = {0: A[K, 0]}
    coeffs.update({k: A[k + K, 0] for k in net.Vk})
    return FloquetPoint(float(omega), coeffs, "perturbative", weak_ratio=ratio,
                        weak=ratio <= weak_threshold)


def floquet_harmonic_balance(net, damping, omega: float, K: int | None = None) -> FloquetPoint:
    """Harmonic-balance coefficients at one frequency.

    Raises :class:`InstabilityError` when the block system's condition number
    exceeds ``1e12``.
    """
    if K is None:
        K = choose_truncation(net, damping)
    A, cond = harmonic_balance_batch(net, damping, [omega], K, with_condition=True)
    cond = float(cond[0])
    if not np.isfinite(cond) or cond > COND_THRESHOLD:
        raise InstabilityError(f"harmonic-balance system near resonance at omega={omega:g} "
                               f"(condition number {cond:.3g})")
    coeffs = {int(k): A[k + K, 0] for k in range(-K, K + 1)}
    ratio = net.drive_ratio()
    return FloquetPoint(float(omega), coeffs, "harmonic_balance", condition=cond,
                        weak_ratio=ratio, weak=ratio <= 0.1)


def _probe_frequencies(net, damping):
    poles = undriven_poles(net, damping)
    res = np.unique(np.round(np.abs(poles.real), 12))
    probes = list(res[res > 0])
    if net.driven:
        probes += [0.5 * net.omega_d] + [abs(r - 0.5 * net.omega_d) + 1e-3 * r for r in res]
    return np.array(sorted(set(probes)) or [1.0])


def choose_truncation(net: NetworkSpec, damping: DampingBackend) -> int:
    """Smallest K of the doubling sequence where ``A_{+-1}`` has settled.

    Starts at ``max(3, 3 max|k|)`` and doubles up to 25 until the largest
    change in ``A_{+-1}`` at the probe frequencies (undriven resonances and
    their drive-shifted images) falls below ``1e-8`` relative.
    """
    if not net.driven:
        return 0
    probes = _probe_frequencies(net, damping)
    K = min(max(3, 3 * net.max_harmonic), K_MAX)
    prev = harmonic_balance_batch(net, damping, probes, K)[[K - 1, K + 1]]
    while K < K_MAX:
        K2 = min(2 * K, K_MAX)
        cur = harmonic_balance_batch(net, damping, probes, K2)[[K2 - 1, K2 + 1]]
        scale = max(np.max(np.abs(cur)), 1e-300)
        K = K2
        if np.max(np.abs(cur - prev)) <= TRUNCATION_TOL * scale:
            break
        prev = cur
    return K


def resonance_points(net: NetworkSpec, damping: DampingBackend, K: int):
    """Nonnegative frequencies ``|+-Omega_r - k w_d|`` and matching peak widths."""
    poles = undriven_poles(net, damping)
    centers, widths = [], []
    wd = net.omega_d or 0.0
    for p in poles:
        for k in range(-K, K + 1):
            c = p.real - k * wd
            if c >= 0:
                centers.append(c)
                widths.append(abs(p.imag))
    order = np.argsort(centers)
    return np.asarray(centers)[order], np.asarray(widths)[order]


def frequency_grid(net, damping, K, n_linear=400, n_log=24, omega_max=None) -> np.ndarray:
    """Linear grid on ``[0, omega_max]`` refined logarithmically around every resonance."""
    centers, widths = resonance_points(net, damping, K)
    top = centers.max() if len(centers) else 1.0
    omega_max = omega_max or 2.0 * top + 10.0 * max(abs(undriven_poles(net, damping).real))
    pts = [np.linspace(0.0, omega_max, n_linear)]
    offs = np.logspace(-2, 2, n_log // 2)
    for c, w in zip(centers, widths):
        w = max(w, 1e-6 * max(c, 1.0))
        pts.append(c + w * offs)
        pts.append(c - w * offs)
        pts.append([c])
    g = np.unique(np.concatenate(pts))
    return g[(g >= 0) & (g <= omega_max)]


@dataclass
class StabilityReport:
    stable: bool
    undriven_stable: bool
    max_condition: float
    worst_omega: float
    max_multiplier: float = float("nan")
    notes: list = field(default_factory=list)


def stability_check(net, damping, omega_grid=None, K=None, multipliers=True) -> StabilityReport:
    """Undriven pole locations, harmonic-balance conditioning and Floquet multipliers.

    ``stable`` requires every undriven pole strictly above the real axis,
    condition numbers below ``1e12`` on the grid and, for a driven network,
    all monodromy multipliers inside the unit circle.
    """
    poles = undriven_poles(net, damping)
    scale = max(np.max(np.abs(poles)), 1.0)
    margin = poles.imag
    undriven_ok = bool(np.all(margin > 1e-12 * scale))
    notes = []
    worst = float(abs(poles[np.argmin(margin)].real))
    if not undriven_ok:
        notes.append(f"undriven pole on or below the real axis at omega={worst:g}")
    if K is None:
        K = choose_truncation(net, damping) if undriven_ok else net.max_harmonic
    if omega_grid is None:
        omega_grid = frequency_grid(net, damping, K, n_linear=200, n_log=12)
    omega_grid = np.asarray(omega_grid, dtype=float)
    with np.errstate(all="ignore"):
        big_cond = _condition_numbers(net, damping, omega_grid, K)
    i = int(np.nanargmax(np.where(np.isfinite(big_cond), big_cond, np.inf)))
    max_cond = float(big_cond[i])
    if not np.isfinite(max_cond) or max_cond > COND_THRESHOLD:
        notes.append(f"harmonic-balance condition number {max_cond:.3g} at omega={omega_grid[i]:g}")
        if undriven_ok:
            worst = float(omega_grid[i])
    mu_max = float("nan")
    if multipliers and net.driven and damping.kind != "tabulated_kernel":
        mu_max = float(np.max(np.abs(monodromy_multipliers(net, damping))))
        if mu_max >= 1.0:
            notes.append(f"parametric instability: Floquet multiplier {mu_max:.6g}")
    stable = undriven_ok and np.isfinite(max_cond) and max_cond <= COND_THRESHOLD and \
        not (mu_max >= 1.0)
    return StabilityReport(bool(stable), undriven_ok, max_cond, worst, mu_max, notes)


def _condition_numbers(net, damping, grid, K):
    out = np.empty(len(grid))
    for s in range(0, len(grid), 256):
        chunk = grid[s:s + 256]
        try:
            _, c = harmonic_balance_batch(net, damping, chunk, K, with_condition=True)
        except np.linalg.LinAlgError:
            c = np.array([np.linalg.cond(b) for b in _hb_matrices(net, damping, chunk, K)])
        out[s:s + 256] = c
    return out


def _hb_matrices(net, damping, w, K):
    N = net.n_nodes
    nk = 2 * K + 1
    ks = np.arange(-K, K + 1)
    shifted = (w[:, None] + ks[None, :] * (net.omega_d or 0.0)).ravel()
    D = inverse_propagator(net, damping, shifted).reshape(len(w), nk, N, N)
    big = np.zeros((len(w), nk, N, nk, N), dtype=complex)
    big[:, np.arange(nk), :, np.arange(nk), :] = D.transpose(1, 0, 2, 3)
    for m, Vm in net.Vk.items():
        for i, k in enumerate(ks):
            if -K <= k - m <= K:
                big[:, i, :, k - m + K, :] += _drive_sign(damping) * Vm
    return big.reshape(len(w), nk * N, nk * N)


@dataclass
class FloquetSolution:
    """Coefficients on a frequency grid plus the recipe to evaluate them anywhere.

    ``coeffs[k + K, i]`` is ``A_k(grid[i])``. Heat-current integrals call
    :meth:`coefficients` at quadrature nodes rather than interpolating.
    """

    net: NetworkSpec
    damping: DampingBackend
    K: int
    method: str
    grid: np.ndarray
    coeffs: np.ndarray
    stable: bool
    condition_numbers: np.ndarray
    stability: StabilityReport | None = None

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def omega_d(self) -> float:
        return self.net.omega_d or 0.0

    def coefficients(self, omega) -> np.ndarray:
        if self.method == "perturbative":
            return perturbative_batch(self.net, self.damping, omega, self.K)
        return harmonic_balance_batch(self.net, self.damping, omega, self.K)

    def at(self, omega: float) -> dict:
        A = self.coefficients([omega])
        return {int(k): A[k + self.K, 0] for k in self.ks}

    def resonances(self):
        return resonance_points(self.net, self.damping, self.K)

    def asymptotic_mass(self) -> np.ndarray:
        """``c = -lim w^2 A_0(w)``."""
        if self.damping.kind == "phenomenological":
            return -np.eye(self.net.n_nodes)
        return np.diag(1.0 / self.net.masses)


def solve(net: NetworkSpec, damping: DampingBackend, method="harmonic_balance", K=None,
          grid=None, check=True) -> FloquetSolution:
    """Build a :class:`FloquetSolution` on a resonance-refined grid."""
    if method not in ("harmonic_balance", "perturbative"):
        raise InvalidInputError(f"unknown Floquet method {method!r}")
    report = stability_check(net, damping, K=K) if check else None
    if check and not report.undriven_stable:
        raise InstabilityError("; ".join(report.notes))
    if K is None:
        K = choose_truncation(net, damping) if method == "harmonic_balance" else net.max_harmonic
    _check_K(net, K)
    if grid is None:
        grid = frequency_grid(net, damping, K)
    grid = np.asarray(grid, dtype=float)
    if method == "harmonic_balance":
        A, cond = harmonic_balance_batch(net, damping, grid, K, with_condition=True)
    else:
        A = perturbative_batch(net, damping, grid, K)
        cond = np.linalg.cond(inverse_propagator(net, damping, grid))
    stable = bool(report.stable) if report else bool(np.all(cond < COND_THRESHOLD))
    return FloquetSolution(net, damping, K, method, grid, A, stable, cond, report)


def greens_time_domain(sol: FloquetSolution, t: float, t_prime: float, rtol=1e-9) -> np.ndarray:
    """``G(t, t')`` by Fourier inversion of the coefficients.

    The slow ``1/w^2`` decay of ``A_0`` is removed with a damped reference
    oscillator whose transform is known in closed form; the remainder and
    the ``k != 0`` terms are integrated numerically.
    """
    tau = float(t - t_prime)
    N = sol.net.n_nodes
    poles = undriven_poles(sol.net, sol.damping)
    Om = float(np.max(np.abs(poles.real))) or 1.0
    eta = max(float(np.max(poles.imag)), 0.1 * Om)
    c = sol.asymptotic_mass()
    K = sol.K

    def ref(w):
        return 1.0 / (-w**2 + 2j * eta * w + eta**2 + Om**2)

    def f(w):
        A_pos = sol.coefficients(w)
        A_neg = sol.coefficients(-w)
        A_pos[K] -= ref(w)[:, None, None] * c
        A_neg[K] -= ref(-w)[:, None, None] * c
        ph = np.exp(1j * w * tau)[None, :, None, None]
        return (A_pos * ph + A_neg / ph).transpose(1, 0, 2, 3).reshape(len(w), -1)

    centers, _ = sol.resonances()
    pts = np.concatenate([centers, [Om]])
    res = integrate(f, 0.0, np.inf, points=pts, rtol=rtol, atol=1e-12, raise_on_failure=False)
    if res.error > max(1e-6, 1e3 * rtol * np.linalg.norm(res.value)):
        warnings.warn(f"time-domain inversion error estimate {res.error:.2e}", stacklevel=2)
    Ak = res.value.reshape(2 * K + 1, N, N) / (2 * np.pi)
    phases = np.exp(1j * sol.ks * sol.omega_d * t)
    G = np.einsum("k,kij->ij", phases, Ak)
    if tau > 0:
        G = G + c * np.exp(-eta * tau) * np.sin(Om * tau) / Om
    return G.real

