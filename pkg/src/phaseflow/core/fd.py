"""Finite-difference derivatives on uniform grids.

Central stencils in the interior; windows of the same width shifted inward at
the edges, so low-degree polynomials are differentiated exactly everywhere.
"""
from functools import lru_cache
from math import factorial

import numpy as np


@lru_cache(maxsize=None)
def stencil_weights(offsets: tuple, deriv: int) -> np.ndarray:
    """Weights ``w`` with ``sum_k w_k f(x + k h) ~ h^deriv f^(deriv)(x)``."""
    k = np.asarray(offsets, dtype=float)
    A = np.vander(k, increasing=True).T
    b = np.zeros(len(k))
    b[deriv] = factorial(deriv)
    return np.linalg.solve(A, b)


def derivative(values: np.ndarray, axis: int, h: float, deriv: int = 1, accuracy: int = 4) -> np.ndarray:
    if accuracy % 2 or accuracy < 2:
        raise ValueError("accuracy must be an even integer >= 2")
    values = np.asarray(values)
    n = values.shape[axis]
    m = accuracy // 2 + (deriv - 1) // 2
    width = 2 * m + 1
    if n < width:
        raise ValueError(f"axis of length {n} is too short for a {width}-point stencil")
    v = np.moveaxis(values, axis, 0)
    out = np.zeros_like(v, dtype=np.result_type(v, float))

    w = stencil_weights(tuple(range(-m, m + 1)), deriv)
    for j, wj in enumerate(w):
        out[m:n - m] += wj * v[j:n - 2 * m + j]
    for i in list(range(m)) + list(range(n - m, n)):
        start = min(max(i - m, 0), n - width)
        we = stencil_weights(tuple(range(start - i, start - i + width)), deriv)
        out[i] = np.tensordot(we, v[start:start + width], axes=(0, 0))
    return np.moveaxis(out, 0, axis) / h**deriv


def phase_field_gradient(values: np.ndarray, spacing, D: int, accuracy: int = 4):
    """Return ``(d/dq_i, d/dp_i)`` lists for a phase-space array."""
    dq = [derivative(values, i, spacing[i], 1, accuracy) for i in range(D)]
    dp = [derivative(values, D + i, spacing[D + i], 1, accuracy) for i in range(D)]
    return dq, dp
