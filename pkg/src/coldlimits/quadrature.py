"""Vectorised adaptive Gauss-Kronrod quadrature for vector-valued integrands.

The heat-current integrands are matrix-valued and expensive to evaluate one
point at a time (each point is a linear solve), so the integrand here is
called with a whole batch of abscissae at once and must return an array of
shape ``(n_points, *value_shape)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, 7 counted from the edge).
for _i, _w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[_i] = _w
    GAUSS_WEIGHTS[14 - _i] = _w
GAUSS_WEIGHTS[7] = _WG[3]


@dataclass
class QuadResult:
    value: np.ndarray
    error: float
    n_eval: int
    n_intervals: int
    component_error: np.ndarray | None = None


def _gk_batch(f, a, b):
    """Apply the GK15 pair to every interval [a_i, b_i] in one integrand call.

    Returns the Kronrod estimates, the per-component |Kronrod - Gauss|
    differences and the Kronrod estimate of the integral of |f|.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    fx = np.asarray(f(x))
    vshape = fx.shape[1:]
    fx = fx.reshape((len(a), 15, -1))
    kron = half[:, None] * np.einsum("j,ijc->ic", KRONROD_WEIGHTS, fx)
    gauss = half[:, None] * np.einsum("j,ijc->ic", GAUSS_WEIGHTS, fx)
    resabs = np.abs(half)[:, None] * np.einsum("j,ijc->ic", KRONROD_WEIGHTS, np.abs(fx))
    with np.errstate(invalid="ignore"):  # non-finite values are reported by the caller
        err = np.abs(kron - gauss)
    return kron.reshape((len(a),) + vshape), err, resabs


def integrate(f, a, b, points=(), rtol=1e-8, atol=1e-14, max_intervals=20000,
              raise_on_failure=True, groups=None):
    """Adaptive integral of a batched vector-valued function over [a, b].

    ``b`` may be ``np.inf``; the tail beyond the last break point is mapped onto
    a finite interval with ``x = c + s / (1 - s)``. Break points inside the
    interval are always used as subdivision edges.

    By default the error target is ``max(atol, rtol * |I|)`` on the whole
    vector. ``groups`` (one integer label per flattened component, or
    ``"each"``) instead requires every group to meet its own target, which
    keeps small components from drowning in large ones. A round-off floor
    proportional to the integral of ``|f|`` is always allowed.

    Returns a :class:`QuadResult`; raises :class:`AccuracyError` when the
    interval budget runs out first, unless ``raise_on_failure`` is false.
    """
    a = float(a)
    if b <= a:
        probe = np.asarray(f(np.array([a])))
        return QuadResult(np.zeros(probe.shape[1:], dtype=probe.dtype), 0.0, 1, 0)

    pts = sorted({float(p) for p in points if a < p < b})
    edges = [a] + pts
    opts = (rtol, atol, max_intervals, raise_on_failure, groups)
    if np.isinf(b):
        scale = max(1.0, abs(edges[-1]) * 0.5)
        c = edges[-1] + scale
        edges.append(c)
        # The mapped tail s in [0, 1) is placed at [shift, shift + 1) so one
        # adaptive loop refines finite pieces and tail together.
        shift = c + 1.0

        def mapped(x):
            x = np.asarray(x)
            tail = x >= shift
            s = x[tail] - shift
            xs = x.copy()
            xs[tail] = c + scale * s / (1.0 - s)
            vals = np.asarray(f(xs))
            jac = np.ones_like(x)
            jac[tail] = scale / (1.0 - s) ** 2
            return vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))

        lo = np.append(np.array(edges[:-1]), shift)
        hi = np.append(np.array(edges[1:]), shift + 1.0)
        return _adaptive(mapped, lo, hi, *opts)

    edges.append(float(b))
    return _adaptive(f, np.array(edges[:-1]), np.array(edges[1:]), *opts)


def _group_matrix(groups, ncomp):
    if groups is None:
        return np.ones((1, ncomp))
    labels = np.arange(ncomp) if isinstance(groups, str) else np.asarray(groups).ravel()
    if labels.shape != (ncomp,):
        raise ValueError("groups must label every flattened component")
    uniq = np.unique(labels)
    return (labels[None, :] == uniq[:, None]).astype(float)


def _check_finite(vals):
    if not np.all(np.isfinite(vals)):
        raise AccuracyError("integrand returned a non-finite value", {})


def _adaptive(f, lo, hi, rtol, atol, max_intervals, raise_on_failure, groups):
    vals, errs, absv = _gk_batch(f, lo, hi)
    _check_finite(vals)
    G = _group_matrix(groups, errs.shape[1])
    n_eval = 15 * len(lo)
    eps = np.finfo(float).eps
    while True:
        total = vals.sum(axis=0).reshape(-1)
        gerr = errs @ G.T                      # (intervals, groups)
        gnorm = np.sqrt((np.abs(total) ** 2) @ G.T)
        floor = 50.0 * eps * (absv.sum(axis=0) @ G.T)
        tol = np.maximum(np.maximum(atol, rtol * gnorm), floor)
        open_ = gerr.sum(axis=0) > tol
        if not np.any(open_):
            break
        if len(lo) >= max_intervals:
            if raise_on_failure:
                raise AccuracyError(
                    "adaptive quadrature did not converge",
                    {"error": float(gerr.sum()), "tolerance": float(tol.min()),
                     "intervals": len(lo)},
                )
            break
        # interval score: worst error relative to the tolerance of an unconverged group
        score = np.max(gerr[:, open_] / tol[open_], axis=1)
        order = np.argsort(score)[::-1]
        cum = np.cumsum(score[order])
        n_split = int(np.searchsorted(cum, 0.5 * cum[-1]) + 1)
        n_split = max(1, min(n_split, max_intervals - len(lo)))
        # also split anything individually far above its fair share
        big = order[score[order] > 50.0 / len(lo)]
        sel = np.union1d(order[:n_split], big[: max(0, max_intervals - len(lo))])
        width = hi[sel] - lo[sel]
        tiny = width <= 1e-15 * np.maximum(1.0, np.abs(lo[sel]))
        if np.all(tiny):
            if raise_on_failure:
                raise AccuracyError("quadrature interval underflow",
                                    {"error": float(gerr.sum()), "tolerance": float(tol.min())})
            break
        sel = sel[~tiny]
        mid = 0.5 * (lo[sel] + hi[sel])
        new_lo = np.concatenate([lo[sel], mid])
        new_hi = np.concatenate([mid, hi[sel]])
        nv, ne, na = _gk_batch(f, new_lo, new_hi)
        _check_finite(nv)
        n_eval += 15 * len(new_lo)
        keep = np.ones(len(lo), dtype=bool)
        keep[sel] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
        absv = np.concatenate([absv[keep], na])
    comp_err = errs.sum(axis=0).reshape(vals.shape[1:])
    return QuadResult(vals.sum(axis=0), float(errs.sum()), n_eval, len(lo), comp_err)
