"""Driven harmonic networks, their reservoirs and damping backends."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InvalidInputError, ModelError

SYM_TOL = 1e-12


def _symmetric(name, m, n=None, allow_complex=False):
    a = np.asarray(m, dtype=complex if allow_complex else float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix")
    if n is not None and a.shape[0] != n:
        raise InvalidInputError(f"{name} must be {n}x{n}, got {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > SYM_TOL:
        raise InvalidInputError(f"{name} is not symmetric")
    return a


@dataclass(frozen=True)
class NetworkSpec:
    """Masses, static potential ``V0`` and Fourier components ``Vk`` of V(t).

    Missing negative harmonics are filled in as ``V_{-k} = conj(V_k)`` so
    that V(t) is real. With ``time_reversal`` set every component must
    satisfy ``V_{-k} = V_k`` (cosine-type driving).
    """

    V0: np.ndarray
    Vk: dict = field(default_factory=dict)
    omega_d: float | None = None
    masses: np.ndarray | None = None
    time_reversal: bool = True

    def __post_init__(self):
        V0 = _symmetric("V0", self.V0)
        n = V0.shape[0]
        masses = np.ones(n) if self.masses is None else np.asarray(self.masses, dtype=float)
        if masses.shape != (n,) or np.any(masses <= 0):
            raise InvalidInputError("masses must be N positive numbers")
        comps = {}
        for k, m in self.Vk.items():
            k = int(k)
            if k == 0:
                raise InvalidInputError("the static part belongs in V0, not Vk[0]")
            a = _symmetric(f"Vk[{k}]", m, n, allow_complex=True)
            if np.max(np.abs(a)) > 0:
                comps[k] = a
        for k in list(comps):
            if -k not in comps:
                comps[-k] = comps[k].conj()
            elif np.max(np.abs(comps[-k] - comps[k].conj())) > SYM_TOL:
                raise InvalidInputError(f"V(t) is not real: Vk[{-k}] != conj(Vk[{k}])")
        if self.time_reversal:
            for k, a in comps.items():
                if np.max(np.abs(a - comps[-k])) > SYM_TOL:
                    raise InvalidInputError(
                        f"time_reversal requires Vk[{-k}] == Vk[{k}] (real components)")
            comps = {k: a.real.copy() for k, a in comps.items()}
        if comps and not (self.omega_d is not None and self.omega_d > 0):
            raise InvalidInputError("driving components given without a positive omega_d")
        object.__setattr__(self, "V0", V0)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "Vk", dict(sorted(comps.items())))
        if self.omega_d is not None:
            object.__setattr__(self, "omega_d", float(self.omega_d))

    @property
    def n_nodes(self) -> int:
        return self.V0.shape[0]

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.masses)

    @property
    def driven(self) -> bool:
        return bool(self.Vk)

    @property
    def max_harmonic(self) -> int:
        return max((abs(k) for k in self.Vk), default=0)

    def drive_ratio(self) -> float:
        """``max_k ||V_k|| / ||V_0||`` in spectral norm."""
        if not self.Vk:
            return 0.0
        top = max(np.linalg.norm(a, 2) for a in self.Vk.values())
        return float(top / np.linalg.norm(self.V0, 2))

    def V_at(self, t: float) -> np.ndarray:
        out = self.V0.astype(complex)
        for k, a in self.Vk.items():
            out = out + a * np.exp(1j * k * self.omega_d * t)
        return out.real


@dataclass(frozen=True)
class SpectralDensity:
    """Matrix-valued spectral density ``I(omega)`` of one reservoir.

    ``delta_mode`` is a single mode ``strength * W * delta(omega - omega_m)``
    and can only be integrated against, never sampled. ``ohmic`` is
    ``(2/pi) gamma omega Lambda^2 / (omega^2 + Lambda^2) W`` (``cutoff=inf``
    drops the Drude factor). ``phenomenological_table`` interpolates sampled
    ``(omega, matrix)`` pairs linearly and is zero outside the table.
    ``features`` lists frequencies where the density is sharp, used as
    quadrature break points.
    """

    kind: str
    site_weights: np.ndarray
    strength: float = 0.0
    omega_m: float = 0.0
    gamma: float = 0.0
    cutoff: float = np.inf
    table_omega: np.ndarray | None = None
    table_values: np.ndarray | None = None
    features: tuple = ()

    def __post_init__(self):
        W = _symmetric("site_weights", self.site_weights)
        if np.linalg.eigvalsh(W)[0] < -1e-12:
            raise InvalidInputError("site_weights must be positive semidefinite")
        object.__setattr__(self, "site_weights", W)
        if self.kind == "delta_mode":
            if not (self.strength >= 0 and self.omega_m > 0):
                raise InvalidInputError("delta_mode needs strength >= 0 and omega_m > 0")
        elif self.kind == "ohmic":
            if not (self.gamma >= 0 and self.cutoff > 0):
                raise InvalidInputError("ohmic needs gamma >= 0 and a positive cutoff")
        elif self.kind == "phenomenological_table":
            w = np.asarray(self.table_omega, dtype=float)
            vals = np.asarray(self.table_values, dtype=float)
            if vals.ndim == 1:
                vals = vals[:, None, None] * W[None]
            if w.ndim != 1 or len(w) < 2 or np.any(np.diff(w) <= 0) or w[0] < 0:
                raise InvalidInputError("table frequencies must be >= 0 and strictly increasing")
            if vals.shape != (len(w),) + W.shape:
                raise InvalidInputError("table values must be one N x N matrix per frequency")
            for v in vals:
                if np.linalg.eigvalsh(0.5 * (v + v.T))[0] < -1e-12:
                    raise InvalidInputError("tabulated density is not positive semidefinite")
            object.__setattr__(self, "table_omega", w)
            object.__setattr__(self, "table_values", vals)
        else:
            raise InvalidInputError(f"unknown spectral density kind {self.kind!r}")
        object.__setattr__(self, "features", tuple(float(f) for f in self.features))

    @classmethod
    def delta(cls, strength, omega_m, site_weights):
        return cls("delta_mode", site_weights, strength=strength, omega_m=omega_m)

    @classmethod
    def ohmic(cls, gamma, site_weights, cutoff=np.inf):
        return cls("ohmic", site_weights, gamma=gamma, cutoff=cutoff)

    @classmethod
    def table(cls, omega, values, site_weights, features=()):
        return cls("phenomenological_table", site_weights, table_omega=omega,
                   table_values=values, features=features)

    @classmethod
    def flat(cls, level, site_weights, band):
        """Constant ``level * W`` on ``band = (lo, hi)``, zero elsewhere."""
        lo, hi = band
        eps = 1e-9 * (hi - lo)
        w = np.array([max(lo - eps, 0.0), lo, hi, hi + eps]) if lo > 0 else np.array([0.0, hi, hi + eps])
        v = np.where((w >= lo) & (w <= hi), float(level), 0.0)
        return cls.table(w, v, site_weights, features=(lo, hi) if lo > 0 else (hi,))

    @classmethod
    def lorentzian(cls, strength, omega_m, width, site_weights, n_nodes=2001):
        """Tabulated Lorentzian of unit area times ``strength``: a mollified delta.

        Nodes sit at log-spaced offsets ``width * 10^-3 .. omega_m`` on both
        sides of ``omega_m`` so the linear interpolant keeps a small relative
        error from the peak out to the far tails on ``[0, 2 omega_m]``.
        """
        half = (n_nodes - 1) // 2
        offs = width * np.logspace(-3, np.log10(omega_m / width), half)
        w = np.concatenate([omega_m - offs[::-1], [omega_m], omega_m + offs])
        w[0] = 0.0
        vals = strength * (width / np.pi) / ((w - omega_m) ** 2 + width**2)
        feats = [omega_m + s * width for s in (-10, -1, 0, 1, 10)]
        return cls.table(w, vals, site_weights, features=feats)

    @property
    def is_delta(self) -> bool:
        return self.kind == "delta_mode"

    @property
    def n_nodes(self) -> int:
        return self.site_weights.shape[0]

    def scalar(self, omega):
        """Scalar profile multiplying ``site_weights`` (ohmic only)."""
        w = np.asarray(omega, dtype=float)
        g = (2.0 / np.pi) * self.gamma * w
        if np.isfinite(self.cutoff):
            g = g * self.cutoff**2 / (w**2 + self.cutoff**2)
        return np.where(w > 0, g, 0.0)

    def __call__(self, omega):
        """``I(omega)`` for an array of frequencies, shape ``(n, N, N)``."""
        if self.is_delta:
            raise ContractError("a delta_mode density cannot be sampled pointwise")
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.kind == "ohmic":
            return self.scalar(w)[:, None, None] * self.site_weights[None]
        tw, tv = self.table_omega, self.table_values
        idx = np.clip(np.searchsorted(tw, w, side="right") - 1, 0, len(tw) - 2)
        t = (w - tw[idx]) / (tw[idx + 1] - tw[idx])
        out = (1 - t)[:, None, None] * tv[idx] + t[:, None, None] * tv[idx + 1]
        inside = (w >= tw[0]) & (w <= tw[-1]) & (w >= 0)
        return np.where(inside[:, None, None], out, 0.0)

    def breakpoints(self):
        if self.is_delta:
            return (self.omega_m,)
        if self.kind == "phenomenological_table":
            return self.features + (float(self.table_omega[0]), float(self.table_omega[-1]))
        return self.features


@dataclass(frozen=True)
class ReservoirSpec:
    label: str
    temperature: float
    density: SpectralDensity
    projector: np.ndarray | None = None

    def __post_init__(self):
        if not self.temperature >= 0:
            raise InvalidInputError("reservoir temperature must be >= 0")
        W = self.density.site_weights
        if self.projector is None:
            P = np.diag((np.abs(W).sum(axis=1) > 0).astype(float))
        else:
            P = np.asarray(self.projector, dtype=float)
        if P.shape != W.shape or np.any(P != np.diag(np.diag(P))) or \
                not np.all(np.isin(np.diag(P), (0.0, 1.0))):
            raise InvalidInputError("projector must be a diagonal 0/1 matrix of network size")
        if np.max(np.abs(P @ W @ P - W)) > 1e-12:
            raise InvalidInputError(f"density of {self.label!r} reaches sites outside its projector")
        object.__setattr__(self, "projector", P)


@dataclass(frozen=True)
class DampingBackend:
    """How the reservoirs enter the undriven propagator.

    ``markovian_ohmic`` holds one ``(gamma W, cutoff)`` term per ohmic
    reservoir and gives ``D(w) = -w^2 M + V_R + i w Gamma(w)`` with
    ``Gamma(w) = sum gamma W Lambda / (Lambda + i w)``; an infinite cutoff is
    the memoryless limit. ``phenomenological`` uses the per-node form
    ``1 / ((w - i gamma)^2 - omega_0^2)``. ``tabulated_kernel`` exists only
    to be rejected.
    """

    kind: str
    terms: tuple = ()
    gamma: np.ndarray | None = None
    omega0: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "markovian_ohmic":
            terms = []
            for G, cut in self.terms:
                G = _symmetric("Gamma", G)
                if np.linalg.eigvalsh(G)[0] < -1e-12:
                    raise InvalidInputError("Gamma must be positive semidefinite")
                if not cut > 0:
                    raise InvalidInputError("damping cutoff must be positive")
                terms.append((G, float(cut)))
            object.__setattr__(self, "terms", tuple(terms))
        elif self.kind == "phenomenological":
            g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
            w0 = np.atleast_1d(np.asarray(self.omega0, dtype=float))
            if g.shape != w0.shape or np.any(g < 0) or np.any(w0 <= 0):
                raise InvalidInputError("phenomenological backend needs gamma >= 0 and omega0 > 0 per node")
            object.__setattr__(self, "gamma", g)
            object.__setattr__(self, "omega0", w0)
        elif self.kind != "tabulated_kernel":
            raise InvalidInputError(f"unknown damping backend {self.kind!r}")

    @classmethod
    def markovian(cls, Gamma, cutoff=np.inf):
        return cls("markovian_ohmic", terms=((Gamma, cutoff),))

    @classmethod
    def from_reservoirs(cls, reservoirs):
        """Pair every ohmic reservoir with its own damping term (same gamma, W, cutoff)."""
        terms = [(r.density.gamma * r.density.site_weights, r.density.cutoff)
                 for r in reservoirs if r.density.kind == "ohmic"]
        return cls("markovian_ohmic", terms=tuple(terms))

    @classmethod
    def phenomenological_backend(cls, gamma, omega0):
        return cls("phenomenological", gamma=gamma, omega0=omega0)

    def Gamma(self, n=None):
        """Static damping matrix ``Gamma(0)``."""
        if self.kind != "markovian_ohmic":
            raise ContractError("Gamma is defined for the markovian_ohmic backend only")
        out = sum((G for G, _ in self.terms), np.zeros((n, n)) if n else 0.0)
        return np.asarray(out, dtype=float)


def renormalized_potential(net: NetworkSpec, damping: DampingBackend) -> np.ndarray:
    """Static part of ``V_R = V - gamma(0)``.

    In the ohmic backend the kernel counterterm is absorbed into the
    definition of ``D`` so ``V_R`` is ``V0``; the phenomenological backend
    carries its renormalized frequencies explicitly.
    """
    if damping.kind == "markovian_ohmic":
        return net.V0.copy()
    if damping.kind == "phenomenological":
        if damping.omega0.shape != (net.n_nodes,):
            raise InvalidInputError("phenomenological backend size does not match the network")
        return np.diag(damping.omega0**2)
    raise ModelError("tabulated damping kernels are not supported")


def _matrix(name, value, n):
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = a * np.eye(n) if n > 1 else a.reshape(1, 1)
    if a.ndim == 1:
        a = np.diag(a)
    return _symmetric(name, a, n)


def build_network(fragment: dict) -> NetworkSpec:
    """NetworkSpec from a config fragment.

    Keys: ``V0`` (matrix, or a list of squared frequencies for the diagonal),
    ``masses``, ``Vk`` (map of harmonic index to matrix), ``omega_d``,
    ``time_reversal``. ``V0`` must be positive definite.
    """
    if "V0" not in fragment:
        raise InvalidInputError("network needs V0")
    V0 = np.asarray(fragment["V0"], dtype=float)
    if V0.ndim == 1:
        V0 = np.diag(V0)
    n = V0.shape[0]
    Vk = {int(k): _matrix(f"Vk[{k}]", v, n) for k, v in fragment.get("Vk", {}).items()}
    if Vk and fragment.get("omega_d") is None:
        raise InvalidInputError("Vk given without omega_d")
    net = NetworkSpec(V0=V0, Vk=Vk, omega_d=fragment.get("omega_d"),
                      masses=fragment.get("masses"),
                      time_reversal=fragment.get("time_reversal", True))
    if np.linalg.eigvalsh(net.V0)[0] <= 0:
        raise InvalidInputError("V0 must be positive definite")
    return net
