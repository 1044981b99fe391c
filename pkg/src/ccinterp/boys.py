"""Boys function F_m(z) = int_0^1 u^{2m} exp(-z u^2) du.

Below ``SWITCH`` the highest order is summed from the confluent series

    F_m(z) = exp(-z) sum_k (2z)^k / ((2m+1)(2m+3)...(2m+2k+1))

and lower orders follow by downward recursion.  Above it, F_0 comes from
the error function and higher orders by upward recursion, which is
stable once 2z exceeds 2m+1.
"""

import numpy as np
from scipy.special import erf

SWITCH = 25.0
# series terms needed for 1e-16 relative accuracy at z just below SWITCH
_NTERMS = 120


def boys_array(mmax: int, z) -> np.ndarray:
    """All orders 0..mmax at every z; returns shape (mmax + 1,) + z.shape."""
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.reshape(-1)
    out = np.empty((mmax + 1, z.size))
    small = z < SWITCH
    if small.any():
        out[:, small] = _boys_small(mmax, z[small])
    if (~small).any():
        out[:, ~small] = _boys_large(mmax, z[~small])
    return out.reshape((mmax + 1,) + shape)


def boys(m: int, z: float) -> float:
    if m < 0 or z < 0:
        raise ValueError("boys requires m >= 0 and z >= 0")
    return float(boys_array(m, np.array([z]))[m, 0])


def _boys_small(mmax, z):
    ez = np.exp(-z)
    term = np.full_like(z, 1.0 / (2 * mmax + 1))
    total = term.copy()
    for k in range(1, _NTERMS):
        term = term * (2 * z) / (2 * mmax + 2 * k + 1)
        total += term
    out = np.empty((mmax + 1, z.size))
    out[mmax] = ez * total
    for m in range(mmax - 1, -1, -1):
        out[m] = (2 * z * out[m + 1] + ez) / (2 * m + 1)
    return out


def _boys_large(mmax, z):
    ez = np.exp(-z)
    out = np.empty((mmax + 1, z.size))
    out[0] = 0.5 * np.sqrt(np.pi / z) * erf(np.sqrt(z))
    for m in range(mmax):
        out[m + 1] = ((2 * m + 1) * out[m] - ez) / (2 * z)
    return out
