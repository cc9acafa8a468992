"""Heat currents of a driven harmonic network.

Every piece of the resonant-pumping / resonant-heating / non-resonant-heating
decomposition is an integral of the form

    int_lo^hi (a w + b) (N_s(w) + c) p^(k)_{rs}(w) dw

where ``s`` is the reservoir a quantum leaves (at frequency ``w``) and ``r``
the one it enters (at ``|w + k w_d|``). Writing the heat currents as lists of
such terms lets delta-mode reservoirs be collapsed analytically term by term
while all smooth terms share one vector-valued adaptive quadrature.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, InstabilityError, InvalidInputError
from .floquet import FloquetSolution
from .network import ReservoirSpec, SpectralDensity
from .quadrature import integrate

HALF_PI = 0.5 * np.pi
REPORT_COLUMNS = ("reservoir", "q_rp", "q_rh", "q_nrh", "q_total", "q_direct", "power",
                  "err_estimate")


def planck_occupation(omega: float, T: float) -> float:
    """Bose occupation ``1 / (exp(omega/T) - 1)``; zero at ``T = 0``."""
    if not omega > 0:
        raise DomainError("planck_occupation needs omega > 0")
    if T < 0:
        raise DomainError("temperature must be nonnegative")
    return float(_planck(np.array([omega]), T)[0])


def _planck(w, T):
    w = np.asarray(w, dtype=float)
    if T == 0:
        return np.zeros_like(w)
    with np.errstate(over="ignore", divide="ignore"):
        out = 1.0 / np.expm1(np.maximum(w, 1e-300) / T)
    return np.where(w > 0, out, 0.0)


def _coth_half(w, T):
    """``coth(w / 2T)``, equal to 1 at ``T = 0``."""
    w = np.asarray(w, dtype=float)
    if T == 0:
        return np.ones_like(w)
    return 1.0 + 2.0 * _planck(w, T)


def _index(reservoirs, key):
    if isinstance(key, (int, np.integer)):
        if not 0 <= key < len(reservoirs):
            raise InvalidInputError(f"no reservoir with index {key}")
        return int(key)
    for i, r in enumerate(reservoirs):
        if r.label == key:
            return i
    raise InvalidInputError(f"no reservoir labelled {key!r}")


def _check(sol: FloquetSolution, reservoirs):
    if not reservoirs:
        raise ContractError("at least one reservoir is required")
    for r in reservoirs:
        if r.density.n_nodes != sol.net.n_nodes:
            raise InvalidInputError(f"reservoir {r.label!r} does not match the network size")
    if not sol.stable:
        raise InstabilityError("Floquet solution is flagged unstable")


def _tr(X, Y):
    """Batched ``Tr(X Y)`` over the leading axis."""
    return np.einsum("...ij,...ji->...", X, Y)


def transfer_function(sol: FloquetSolution, reservoirs, alpha, beta, k: int, omega: float) -> float:
    """``(pi/2) Tr[I_a(|w + k w_d|) A_k(w) I_b(w) A_k(w)^H]`` at one frequency."""
    ia, ib = _index(reservoirs, alpha), _index(reservoirs, beta)
    if abs(k) > sol.K:
        return 0.0
    if omega < 0:
        raise DomainError("transfer functions are evaluated at omega >= 0")
    Ia, Ib = reservoirs[ia].density, reservoirs[ib].density
    if Ia.is_delta or Ib.is_delta:
        raise ContractError("delta_mode densities only exist inside frequency integrals")
    A = sol.coefficients([omega])[k + sol.K]
    val = HALF_PI * _tr(Ia([abs(omega + k * sol.omega_d)]), A @ Ib([omega]) @ A.conj().transpose(0, 2, 1))
    return float(val.real[0])


@dataclass(frozen=True)
class _Term:
    out: int
    k: int
    r: int
    s: int
    a: float
    b: float
    offset: float
    lo: float
    hi: float
    sign: float


def _decomposition_terms(sol, reservoirs):
    """RP, RH and NRH terms for every reservoir; outputs indexed (kind, alpha, shell)."""
    K, wd = sol.K, sol.omega_d
    nres, nk = len(reservoirs), 2 * sol.K + 1

    def out(kind, alpha, k):
        return (kind * nres + alpha) * nk + (k + K)

    terms = []
    for al in range(nres):
        for k in range(-K, K + 1):
            lo = max(0.0, -k * wd)
            for be in range(nres):
                if be == al:
                    continue
                terms.append(_Term(out(0, al, k), k, be, al, 1.0, 0.0, 0.0, lo, np.inf, 1.0))
                terms.append(_Term(out(0, al, k), k, al, be, 1.0, k * wd, 0.0, lo, np.inf, -1.0))
            if k != 0:
                terms.append(_Term(out(1, al, k), k, al, al, 0.0, k * wd, 0.0, lo, np.inf, -1.0))
        for k in range(1, K + 1):
            hi = k * wd
            terms.append(_Term(out(2, al, k), -k, al, al, 0.0, k * wd, 0.5, 0.0, hi, -1.0))
            for be in range(nres):
                if be == al:
                    continue
                terms.append(_Term(out(2, al, k), -k, al, be, -1.0, k * wd, 0.5, 0.0, hi, -1.0))
                terms.append(_Term(out(2, al, k), -k, be, al, 1.0, 0.0, 0.5, 0.0, hi, -1.0))
    return terms, 3 * nres * nk


def _breakpoints(sol, reservoirs, shifted=True):
    """Resonance peaks (with shoulders one and ten widths out), density features
    and the kinks at ``|k| w_d`` where integration limits and ``|w + k w_d|`` bend."""
    K, wd = sol.K, sol.omega_d
    centers, widths = sol.resonances()
    pts = list(centers)
    for c, w in zip(centers, widths):
        pts += [c - 10 * w, c - w, c + w, c + 10 * w]
    feats = []
    for r in reservoirs:
        feats += list(r.density.breakpoints())
    pts += feats
    if shifted:
        for k in range(-K, K + 1):
            pts.append(abs(k) * wd)
            for f in feats:
                pts += [f - k * wd, -f - k * wd]
    pts = np.unique(np.asarray(pts, dtype=float))
    return pts[pts > 0]


class _Evaluator:
    """Transfer functions for all requested (k, r, s) channels at a batch of frequencies."""

    def __init__(self, sol, reservoirs):
        self.sol = sol
        self.res = reservoirs
        self.cont = [not r.density.is_delta for r in reservoirs]

    def p_channels(self, w, channels):
        sol, K, wd = self.sol, self.sol.K, self.sol.omega_d
        A = sol.coefficients(w)
        Is = {s: self.res[s].density(w) for s in {c[2] for c in channels}}
        out = {}
        for k, r, s in channels:
            Ak = A[k + K]
            B = Ak @ Is[s] @ Ak.conj().transpose(0, 2, 1)
            Ir = self.res[r].density(np.abs(w + k * wd))
            out[(k, r, s)] = HALF_PI * _tr(Ir, B).real
        return out


def _delta_value(sol, reservoirs, t: _Term):
    """Contribution of a term in which at least one slot is a delta-mode density."""
    K, wd = sol.K, sol.omega_d
    R, S = reservoirs[t.r], reservoirs[t.s]
    Ir, Is = R.density, S.density
    T = S.temperature

    def weight(w):
        return t.sign * (t.a * w + t.b) * (_planck(np.array([w]), T)[0] + t.offset)

    def edge(w):
        scale = max(1.0, abs(w))
        return abs(w - t.lo) < 1e-12 * scale or (np.isfinite(t.hi) and abs(w - t.hi) < 1e-12 * scale)

    def inside(w):
        return t.lo < w < t.hi

    if Is.is_delta and Ir.is_delta:
        w = Is.omega_m
        if abs(abs(w + t.k * wd) - Ir.omega_m) < 1e-12 * max(1.0, Ir.omega_m) and \
                (inside(w) or edge(w)) and weight(w) != 0:
            raise ContractError("two delta-mode densities coincide inside a transfer integral")
        return 0.0
    if Is.is_delta:
        w = Is.omega_m
        if not (inside(w) or edge(w)):
            return 0.0
        A = sol.coefficients([w])[t.k + K, 0]
        Iw = Is.strength * Is.site_weights
        val = HALF_PI * np.trace(Ir([abs(w + t.k * wd)])[0] @ A @ Iw @ A.conj().T).real
        v = weight(w) * val
        if edge(w) and v != 0:
            raise ContractError("delta-mode frequency sits on an integration limit")
        return v
    total = 0.0
    for w in (Ir.omega_m - t.k * wd, -Ir.omega_m - t.k * wd):
        if w <= 0 or not (inside(w) or edge(w)):
            continue
        A = sol.coefficients([w])[t.k + K, 0]
        Iw = Ir.strength * Ir.site_weights
        val = HALF_PI * np.trace(Iw @ A @ Is([w])[0] @ A.conj().T).real
        v = weight(w) * val
        if edge(w) and v != 0:
            raise ContractError("delta-mode frequency sits on an integration limit")
        total += v
    return total


def _integrate_terms(sol, reservoirs, terms, n_out, rtol, groups):
    ev = _Evaluator(sol, reservoirs)
    smooth = [t for t in terms if ev.cont[t.r] and ev.cont[t.s]]
    delta = [t for t in terms if not (ev.cont[t.r] and ev.cont[t.s])]
    values = np.zeros(n_out)
    err = np.zeros(n_out)
    for t in delta:
        values[t.out] += _delta_value(sol, reservoirs, t)
    if smooth:
        channels = sorted({(t.k, t.r, t.s) for t in smooth})
        temps = [r.temperature for r in reservoirs]

        def f(w):
            p = ev.p_channels(w, channels)
            occ = {s: _planck(w, temps[s]) for s in {t.s for t in smooth}}
            out = np.zeros((len(w), n_out))
            for t in smooth:
                mask = (w > t.lo) & (w < t.hi)
                val = t.sign * (t.a * w + t.b) * (occ[t.s] + t.offset) * p[(t.k, t.r, t.s)]
                out[:, t.out] += np.where(mask, val, 0.0)
            return out

        res = integrate(f, 0.0, np.inf, points=_breakpoints(sol, reservoirs), rtol=rtol,
                        atol=1e-14, groups=groups)
        values += res.value
        err += res.component_error
    return values, err


@dataclass
class Decomposition:
    labels: list
    rp: np.ndarray
    rh: np.ndarray
    nrh: np.ndarray
    error: np.ndarray
    shells: np.ndarray      # (3, nres, 2K+1) contributions per Fourier shell
    tail_ratio: np.ndarray  # |outermost shell| / |sum| per reservoir

    @property
    def total(self) -> np.ndarray:
        return self.rp + self.rh + self.nrh


def decompose(sol: FloquetSolution, reservoirs, rtol=1e-8) -> Decomposition:
    """RP, RH and NRH heat currents out of every reservoir."""
    _check(sol, reservoirs)
    if sol.net.driven and not sol.net.time_reversal:
        raise ContractError("the NRH formula needs time-reversal-invariant driving")
    terms, n_out = _decomposition_terms(sol, reservoirs)
    nres, nk = len(reservoirs), 2 * sol.K + 1
    groups = np.repeat(np.arange(3 * nres), nk)
    vals, err = _integrate_terms(sol, reservoirs, terms, n_out, rtol, groups)
    shells = vals.reshape(3, nres, nk)
    errs = err.reshape(3, nres, nk).sum(axis=2)
    rp, rh, nrh = shells.sum(axis=2)
    K = sol.K
    outer = np.abs(shells[:, :, 0]) + np.abs(shells[:, :, -1]) if K > 0 else np.zeros((3, nres))
    tot = np.abs(shells.sum(axis=2))
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(tot > 0, outer / tot, 0.0).max(axis=0)
    return Decomposition([r.label for r in reservoirs], rp, rh, nrh, errs.sum(axis=0), shells, tail)


def heat_rp(sol, reservoirs, alpha) -> float:
    return float(decompose(sol, reservoirs).rp[_index(reservoirs, alpha)])


def heat_rh(sol, reservoirs, alpha) -> float:
    return float(decompose(sol, reservoirs).rh[_index(reservoirs, alpha)])


def heat_nrh(sol, reservoirs, alpha) -> float:
    return float(decompose(sol, reservoirs).nrh[_index(reservoirs, alpha)])


# --- covariances -----------------------------------------------------------

_KINDS = ("xx", "xp", "pp")


def _cov_factor(kind, w, j, k, wd):
    if kind == "xx":
        return np.ones_like(w)
    if kind == "xp":
        return w + k * wd
    return (w + j * wd) * (w + k * wd)


def _covariance_integrals(sol, reservoirs, requests, rtol=1e-8):
    """``sum over (j, k) in each request of S^{kind}_{jk}``.

    ``requests`` is a list of ``(kind, [(j, k), ...])``; the result has one
    N x N matrix per request. Each request is its own error-control group.
    """
    _check(sol, reservoirs)
    K, wd, N = sol.K, sol.omega_d, sol.net.n_nodes
    for kind, pairs in requests:
        if kind not in _KINDS:
            raise InvalidInputError(f"unknown covariance kind {kind!r}")
        for j, k in pairs:
            if abs(j) > K or abs(k) > K:
                raise InvalidInputError(f"coefficient ({j}, {k}) is outside |k| <= {K}")
    cont = [r for r in reservoirs if not r.density.is_delta]
    deltas = [r for r in reservoirs if r.density.is_delta]

    def kernel(w, A, dens):
        """Source-weighted ``A_j I A_k^H`` contributions for all requests."""
        out = np.zeros((len(w), len(requests), N, N), dtype=complex)
        for res, Iw in dens:
            c = 0.5 * _coth_half(w, res.temperature)
            for q, (kind, pairs) in enumerate(requests):
                for j, k in pairs:
                    f = c * _cov_factor(kind, w, j, k, wd)
                    out[:, q] += f[:, None, None] * (A[j + K] @ Iw @ A[k + K].conj().transpose(0, 2, 1))
        return out

    total = np.zeros((len(requests), N, N), dtype=complex)
    for r in deltas:
        w = np.array([r.density.omega_m])
        A = sol.coefficients(w)
        Iw = (r.density.strength * r.density.site_weights)[None]
        total += kernel(w, A, [(r, Iw)])[0]
    if cont:
        def f(w):
            A = sol.coefficients(w)
            return kernel(w, A, [(r, r.density(w)) for r in cont]).reshape(len(w), -1)

        groups = np.repeat(np.arange(len(requests)), N * N)
        res = integrate(f, 0.0, np.inf, points=_breakpoints(sol, reservoirs, shifted=False),
                        rtol=rtol, atol=1e-14, groups=groups)
        total += res.value.reshape(len(requests), N, N)
    return total


def covariance_coefficients(sol: FloquetSolution, reservoirs, kind="xp", pairs=None, rtol=1e-8) -> dict:
    """Fourier coefficients ``S^{kind}_{jk}`` as a map ``(j, k) -> N x N matrix``.

    ``S_{jk} = (1/2) sum_a int_0^inf f_{jk}(w) A_j I_a A_k^H coth(w / 2T_a) dw`` with
    ``f = w + k w_d`` for ``xp``, ``1`` for ``xx`` and ``(w + j w_d)(w + k w_d)`` for
    ``pp``. The equal-time covariances follow from :func:`equal_time_covariances`.
    """
    K = sol.K
    if pairs is None:
        pairs = [(j, k) for j in range(-K, K + 1) for k in range(-K, K + 1)]
    vals = _covariance_integrals(sol, reservoirs, [(kind, [p]) for p in pairs], rtol)
    return {tuple(p): v for p, v in zip(pairs, vals)}


def _harmonic_pairs(K, n):
    """Pairs (j, k) with j - k = n inside the truncation."""
    return [(j, j - n) for j in range(-K, K + 1) if -K <= j - n <= K]


def covariance_harmonics(sol, reservoirs, kind, ns, rtol=1e-8) -> dict:
    """``H_n = sum_{j-k=n} S_{jk}``: the e^{i n w_d t} content of the covariance."""
    reqs = [(kind, _harmonic_pairs(sol.K, n)) for n in ns]
    vals = _covariance_integrals(sol, reservoirs, reqs, rtol)
    return {n: v for n, v in zip(ns, vals)}


def equal_time_covariances(sol, reservoirs, t=0.0, rtol=1e-8) -> dict:
    """``sigma^{xx}(t)``, ``sigma^{xp}(t)`` and ``sigma^{pp}(t)`` (symmetrized).

    ``sigma^xx = Re sum H^xx_n e^{i n w_d t}``, ``sigma^xp = Im sum H^xp_n e^{..} M``,
    ``sigma^pp = M Re sum H^pp_n e^{..} M``.
    """
    K, wd = sol.K, sol.omega_d
    ns = list(range(-2 * K, 2 * K + 1))
    M = sol.net.M
    reqs = [(kind, _harmonic_pairs(K, n)) for kind in _KINDS for n in ns]
    vals = _covariance_integrals(sol, reservoirs, reqs, rtol).reshape(3, len(ns), *M.shape)
    ph = np.exp(1j * np.array(ns) * wd * t)[:, None, None]
    xx, xp, pp = ((v * ph).sum(axis=0) for v in vals)
    return {"xx": xx.real, "xp": xp.imag @ M, "pp": M @ pp.real @ M}


def _drive_components(net):
    comps = {0: net.V0.astype(complex)}
    comps.update(net.Vk)
    return comps


def heat_direct_all(sol, reservoirs, rtol=1e-8) -> np.ndarray:
    """Period-averaged ``Tr[P_a V(t) sigma^xp(t) M^-1]`` for every reservoir."""
    comps = _drive_components(sol.net)
    ns = sorted({n for m in comps for n in (m, -m)})
    H = covariance_harmonics(sol, reservoirs, "xp", ns, rtol)
    out = []
    for r in reservoirs:
        acc = 0.0
        for m, Vm in comps.items():
            c = (H[-m] - H[m].conj()) / 2j
            acc += np.trace(r.projector @ Vm @ c)
        out.append(acc.real)
    return np.array(out)


def heat_direct(sol, reservoirs, alpha, rtol=1e-8) -> float:
    return float(heat_direct_all(sol, reservoirs, rtol)[_index(reservoirs, alpha)])


def power_from_covariance(sol, reservoirs, rtol=1e-8) -> float:
    """Period-averaged ``Tr[dV/dt sigma^xx(t)] / 2``: work done by the drive."""
    if not sol.net.driven:
        return 0.0
    comps = sol.net.Vk
    ns = sorted({n for m in comps for n in (m, -m)})
    H = covariance_harmonics(sol, reservoirs, "xx", ns, rtol)
    acc = 0.0
    for m, Vm in comps.items():
        acc += 0.25j * m * sol.omega_d * np.trace(Vm @ (H[-m] + H[m].conj()))
    return float(acc.real)


@dataclass
class HeatCurrentReport:
    labels: list
    q_rp: np.ndarray
    q_rh: np.ndarray
    q_nrh: np.ndarray
    err_estimate: np.ndarray
    q_direct: np.ndarray | None = None
    power_covariance: float | None = None
    tail_ratio: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def q_total(self) -> np.ndarray:
        return self.q_rp + self.q_rh + self.q_nrh

    @property
    def power(self) -> float:
        return float(-np.sum(self.q_total))

    def first_law_residual(self) -> float:
        """``|W + sum Q| / max |Q|`` using the covariance-based power."""
        if self.power_covariance is None:
            return float("nan")
        scale = max(np.max(np.abs(self.q_total)), 1e-300)
        return float(abs(self.power_covariance + np.sum(self.q_total)) / scale)

    def rows(self):
        for i, lab in enumerate(self.labels):
            yield {
                "reservoir": lab,
                "q_rp": self.q_rp[i],
                "q_rh": self.q_rh[i],
                "q_nrh": self.q_nrh[i],
                "q_total": self.q_total[i],
                "q_direct": np.nan if self.q_direct is None else self.q_direct[i],
                "power": self.power,
                "err_estimate": self.err_estimate[i],
            }

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in self.rows():
            w.writerow([row["reservoir"]] + [f"{row[c]:.12e}" for c in REPORT_COLUMNS[1:]])
        return buf.getvalue()


def heat_currents(sol: FloquetSolution, reservoirs, direct=True, power=True, rtol=1e-8) -> HeatCurrentReport:
    """Full report: decomposition, optional direct heat and covariance power."""
    dec = decompose(sol, reservoirs, rtol)
    q_dir = heat_direct_all(sol, reservoirs, rtol) if direct else None
    pw = power_from_covariance(sol, reservoirs, rtol) if power else None
    return HeatCurrentReport(dec.labels, dec.rp, dec.rh, dec.nrh, dec.error, q_dir, pw,
                             dec.tail_ratio, {"K": sol.K, "method": sol.method,
                                              "n_reservoirs": len(reservoirs)})


def average_power(report: HeatCurrentReport, reservoirs=None, closure_tol=1e-3) -> float:
    """``W = -sum_a Q_a``; cross-checked against the covariance estimate when present."""
    if reservoirs is not None and [r.label for r in reservoirs] != list(report.labels):
        raise ContractError("report does not cover every reservoir")
    if report.meta.get("n_reservoirs", len(report.labels)) != len(report.labels):
        raise ContractError("report does not cover every reservoir")
    W = report.power
    if report.power_covariance is not None:
        report.meta["first_law_residual"] = report.first_law_residual()
        report.meta["first_law_ok"] = bool(report.first_law_residual() <= closure_tol)
    return W


def cooling_condition(report: HeatCurrentReport, alpha) -> bool:
    """Reservoir is net cooled: ``Q_RP > |Q_RH + Q_NRH|``."""
    i = alpha if isinstance(alpha, (int, np.integer)) else list(report.labels).index(alpha)
    return bool(report.q_rp[i] > abs(report.q_rh[i] + report.q_nrh[i]))


def mollified(reservoir: ReservoirSpec, width: float, n_nodes=2001) -> ReservoirSpec:
    """Replace a delta-mode density by a tabulated Lorentzian of the given width."""
    d = reservoir.density
    if not d.is_delta:
        raise InvalidInputError("only delta-mode reservoirs can be mollified")
    lor = SpectralDensity.lorentzian(d.strength, d.omega_m, width, d.site_weights, n_nodes)
    return ReservoirSpec(reservoir.label, reservoir.temperature, lor, reservoir.projector)


def richardson_zero(widths, values) -> np.ndarray:
    """Polynomial extrapolation of ``values(width)`` to zero width."""
    widths = np.asarray(widths, dtype=float)
    values = np.asarray(values, dtype=float)
    V = np.vander(widths, len(widths), increasing=True)
    coef = np.linalg.solve(V, values.reshape(len(widths), -1))
    return coef[0].reshape(values.shape[1:])
