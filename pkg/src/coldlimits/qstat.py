"""Finite-dimensional states, entropies and divergences.

All logarithms are natural (results in nats); energies, temperatures and
inverse temperatures share one unit with hbar = k_B = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidInputError

HERMITIAN_TOL = 1e-12
RANK_TOL = 1e-12
ALPHA_INF_PROXY = 100.0
REQUIRED_ALPHAS = (0.0, 0.5, 1.0, 2.0, ALPHA_INF_PROXY)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Hermitian energy operator on a ``dim``-dimensional space."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"Hamiltonian must be square, got shape {m.shape}")
        dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if dev > HERMITIAN_TOL:
            raise InvalidInputError(f"Hamiltonian is not Hermitian (deviation {dev:.3g})")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diagonal(cls, energies):
        return cls(np.diag(np.asarray(energies, dtype=float)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigh(self):
        return linalg.eigh(self.matrix)

    @property
    def energies(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)

    @property
    def gap(self) -> float:
        """Energy gap above the (possibly degenerate) ground level."""
        e = self.energies
        above = e[e > e[0] + 1e-10]
        return float(above[0] - e[0]) if above.size else 0.0

    @property
    def ground_degeneracy(self) -> int:
        e = self.energies
        return int(np.sum(e <= e[0] + 1e-10))

    @property
    def energy_range(self) -> float:
        e = self.energies
        return float(e[-1] - e[0])


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace positive semidefinite operator."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvalidInputError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-12:
            raise InvalidInputError(f"density matrix trace is {tr!r}, expected 1")
        if linalg.eigvalsh(m)[0] < -1e-12:
            raise InvalidInputError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diagonal(cls, probs):
        return cls(np.diag(np.asarray(probs, dtype=float)))

    @classmethod
    def pure(cls, vector):
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(np.kron(self.matrix, other.matrix))


@dataclass(frozen=True)
class SpectrumPair:
    """Populations and energies of a state diagonal in the energy basis."""

    probs: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        e = np.asarray(self.energies, dtype=float).ravel()
        if p.shape != e.shape:
            raise InvalidInputError("probs and energies must have equal length")
        _check_distribution(p)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "energies", e)

    def thermal_probs(self, beta: float) -> np.ndarray:
        return _gibbs_weights(self.energies, beta)


def _check_distribution(p):
    if p.size == 0:
        raise InvalidInputError("empty distribution")
    if np.any(p < -1e-12):
        raise InvalidInputError("distribution has negative entries")
    if abs(p.sum() - 1.0) > 1e-10:
        raise InvalidInputError(f"distribution sums to {p.sum()!r}, expected 1")


def _gibbs_weights(energies, beta):
    e = np.asarray(energies, dtype=float)
    # shift by the ground energy so that huge beta does not underflow everything
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def _as_hamiltonian(H) -> HamiltonianSpec:
    return H if isinstance(H, HamiltonianSpec) else HamiltonianSpec(H)


def _as_state(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def _check_beta(beta):
    if not np.isfinite(beta) or beta <= 0:
        raise InvalidInputError(f"beta must be positive and finite, got {beta!r}")


def thermal_state(H, beta: float) -> DensityMatrix:
    """Gibbs state ``exp(-beta H) / Z``."""
    H = _as_hamiltonian(H)
    _check_beta(beta)
    e, U = H.eigh()
    w = _gibbs_weights(e, beta)
    m = (U * w) @ U.conj().T
    m = 0.5 * (m + m.conj().T)
    m /= np.trace(m).real
    return DensityMatrix(m)


def log_partition_function(H, beta: float) -> float:
    H = _as_hamiltonian(H)
    _check_beta(beta)
    e = H.energies
    return float(-beta * e.min() + np.log(np.sum(np.exp(-beta * (e - e.min())))))


def von_neumann_entropy(rho) -> float:
    lam = _as_state(rho).eigenvalues
    lam = lam[lam > RANK_TOL]
    return float(-np.sum(lam * np.log(lam)))


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy S(rho || sigma) in nats.

    Returns ``inf`` when the support of ``rho`` is not contained in the
    support of ``sigma`` (eigenvalues of sigma below ``RANK_TOL`` count as zero).
    """
    rho, sigma = _as_state(rho), _as_state(sigma)
    if rho.dim != sigma.dim:
        raise InvalidInputError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    p, U = linalg.eigh(rho.matrix)
    q, V = linalg.eigh(sigma.matrix)
    # overlaps |<u_i|v_j>|^2 turn both logs into sums over eigenvalues
    overlap = np.abs(U.conj().T @ V) ** 2
    p_pos = p > RANK_TOL
    q_zero = q <= RANK_TOL
    if np.any(overlap[np.ix_(p_pos, q_zero)] > RANK_TOL):
        return float("inf")
    pp = p[p_pos]
    term1 = np.sum(pp * np.log(pp))
    logq = np.where(q_zero, 0.0, np.log(np.where(q_zero, 1.0, q)))
    term2 = np.sum(pp[:, None] * overlap[p_pos] * logq[None, :])
    return float(max(term1 - term2, 0.0))


def vacancy(rho, H, beta: float) -> float:
    """Relative entropy of the Gibbs state with respect to ``rho``."""
    return relative_entropy(thermal_state(H, beta), rho)


def free_energy(rho, H, beta: float) -> float:
    rho, H = _as_state(rho), _as_hamiltonian(H)
    if rho.dim != H.dim:
        raise InvalidInputError("state and Hamiltonian dimensions differ")
    _check_beta(beta)
    energy = float(np.trace(rho.matrix @ H.matrix).real)
    return energy - von_neumann_entropy(rho) / beta


def renyi_divergence(p, q, alpha: float) -> float:
    """Classical Renyi divergence of order ``alpha`` (nats).

    ``S_alpha(p||q) = log(sum p^alpha q^(1-alpha)) / (alpha - 1)``, with the
    Kullback-Leibler divergence at ``alpha = 1``, ``-log sum_{p>0} q`` at
    ``alpha = 0`` and ``log max(p/q)`` at ``alpha = inf``.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise InvalidInputError("distributions must have equal length")
    _check_distribution(p)
    _check_distribution(q)
    if not alpha >= 0:
        raise InvalidInputError(f"alpha must be >= 0, got {alpha!r}")
    psup = p > RANK_TOL
    qsup = q > RANK_TOL
    if alpha == 0:
        mass = q[psup].sum()
        return float(-np.log(mass)) if mass > 0 else float("inf")
    if np.isinf(alpha):
        if np.any(psup & ~qsup):
            return float("inf")
        return float(np.log(np.max(p[psup] / q[psup])))
    if alpha >= 1 and np.any(psup & ~qsup):
        return float("inf")
    if alpha == 1:
        return float(max(np.sum(p[psup] * np.log(p[psup] / q[psup])), 0.0))
    both = psup & qsup
    if not np.any(both):
        return float("inf")
    # log-sum-exp for large alpha
    logs = alpha * np.log(p[both]) + (1.0 - alpha) * np.log(q[both])
    m = logs.max()
    val = (m + np.log(np.sum(np.exp(logs - m)))) / (alpha - 1.0)
    return float(max(val, 0.0))


@dataclass
class TransitionReport:
    allowed: bool
    worst_alpha: float
    worst_margin: float
    margins: dict
    alpha_inf_proxy: float = ALPHA_INF_PROXY
    zero_slope_margin: float | None = None


def transition_allowed(resource: SpectrumPair, target: SpectrumPair, beta: float,
                       alpha_grid=None, tol: float = 1e-12) -> TransitionReport:
    """Check the family of Renyi second laws on a grid of orders.

    The grid is always augmented with 0, 1/2, 1, 2 and the proxy order
    ``ALPHA_INF_PROXY`` standing in for ``alpha = inf``.
    """
    _check_beta(beta)
    if alpha_grid is not None and len(alpha_grid) == 0:
        raise InvalidInputError("alpha grid is empty")
    grid = sorted(set(float(a) for a in (alpha_grid or ())) | set(REQUIRED_ALPHAS))
    qr = resource.thermal_probs(beta)
    qs = target.thermal_probs(beta)
    margins = {}
    for a in grid:
        lhs = renyi_divergence(resource.probs, qr, a)
        rhs = renyi_divergence(target.probs, qs, a)
        if np.isinf(lhs) and np.isinf(rhs):
            margins[a] = 0.0
        else:
            margins[a] = lhs - rhs
    worst = min(margins, key=margins.get)
    allowed = margins[worst] >= -tol
    slope = None
    if abs(margins[0.0]) <= tol:
        # tie at alpha = 0: the order just above zero decides
        slope = _renyi_zero_slope(resource.probs, qr) - _renyi_zero_slope(target.probs, qs)
        allowed = allowed and slope >= -tol
    return TransitionReport(
        allowed=bool(allowed),
        worst_alpha=worst,
        worst_margin=margins[worst],
        margins=margins,
        zero_slope_margin=slope,
    )


def _renyi_zero_slope(p, q) -> float:
    """``d S_alpha / d alpha`` at ``alpha = 0+``; equals ``S(q||p)`` when ``p`` has full support."""
    sup = p > RANK_TOL
    Q0 = q[sup].sum()
    if Q0 <= 0:
        return float("inf")
    E = np.sum(q[sup] * np.log(p[sup] / np.where(q[sup] > 0, q[sup], 1.0)) * (q[sup] > 0)) / Q0
    return float(-E - np.log(Q0))


def worst_case_work(U, H, overlap_tol: float = 1e-10) -> float:
    """Largest energy jump ``E2 - E1`` between eigenspaces connected by ``U``.

    Degenerate eigenvalues are grouped and the criterion applied to the
    operator norm of the corresponding block of ``U``, so the answer does not
    depend on the basis chosen inside a degenerate eigenspace.
    """
    U = np.asarray(U, dtype=complex)
    H = _as_hamiltonian(H)
    if U.shape != (H.dim, H.dim):
        raise InvalidInputError("unitary and Hamiltonian dimensions differ")
    if np.max(np.abs(U.conj().T @ U - np.eye(H.dim))) > 1e-10:
        raise InvalidInputError("U is not unitary")
    e, vecs = H.eigh()
    groups = _degenerate_groups(e)
    Ue = vecs.conj().T @ U @ vecs
    best = -np.inf
    for g1 in groups:
        for g2 in groups:
            block = Ue[np.ix_(g2, g1)]
            if np.linalg.norm(block, 2) > overlap_tol:
                best = max(best, e[g2[0]] - e[g1[0]])
    return float(best)


def _degenerate_groups(e, tol=1e-10):
    groups, current = [], [0]
    for i in range(1, len(e)):
        if e[i] - e[current[0]] <= tol * max(1.0, abs(e[current[0]])):
            current.append(i)
        else:
            groups.append(current)
            current = [i]
    groups.append(current)
    return groups


def partial_trace(rho, dims, keep) -> DensityMatrix:
    """Reduced state on the factors listed in ``keep``."""
    rho = _as_state(rho)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != rho.dim:
        raise InvalidInputError(f"factor dims {dims} do not multiply to {rho.dim}")
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= len(dims) for k in keep):
        raise InvalidInputError("keep index out of range")
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace pairs from the highest index down so earlier axes keep their numbering
    for count, i in enumerate(sorted(traced, reverse=True)):
        m = n - count
        t = np.trace(t, axis1=i, axis2=i + m)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = t.reshape(d, d)
    return DensityMatrix(0.5 * (out + out.conj().T))
