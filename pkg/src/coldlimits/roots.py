"""Bracketed scalar root finding with the package's error types."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import AccuracyError, InvalidInputError

_RTOL_FLOOR = 4 * np.finfo(float).eps


def bracket_root(f, a: float, b: float, rtol: float = 1e-10, maxiter: int = 200) -> float:
    """Root of ``f`` inside ``[a, b]``; ``f(a)`` and ``f(b)`` must differ in sign.

    Brent's method. Raises :class:`InvalidInputError` when the root is not
    bracketed and :class:`AccuracyError` when ``maxiter`` is exhausted.
    """
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if math.copysign(1, fa) == math.copysign(1, fb):
        raise InvalidInputError("root is not bracketed")
    x, r = brentq(f, a, b, xtol=1e-300, rtol=max(rtol, _RTOL_FLOOR), maxiter=maxiter,
                  full_output=True, disp=False)
    if not r.converged:
        raise AccuracyError("root finder exhausted its iteration budget",
                            {"a": a, "b": b, "iterations": r.iterations, "last": x})
    return float(x)
