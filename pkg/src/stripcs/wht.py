"""Fast Walsh-Hadamard transform over F_2^m index space.

Unnormalized convention: W(l) = sum_x (-1)^{l.x} v(x), so applying the
transform twice returns N*v and Parseval reads sum|W|^2 = N * sum|v|^2.
Callers carry any 1/sqrt(N) factors explicitly.
"""

from __future__ import annotations

import numpy as np


def _check_power_of_two(n: int) -> None:
    if n <= 0 or n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")


def fwht_axis(a: np.ndarray) -> np.ndarray:
    """In-place butterfly transform along the last axis of ``a``."""
    n = a.shape[-1]
    _check_power_of_two(n)
    h = 1
    while h < n:
        v = a.reshape(a.shape[:-1] + (n // (2 * h), 2, h))
        x = v[..., 0, :]
        y = v[..., 1, :]
        t = x - y
        x += y
        y[:] = t
        h *= 2
    return a


def fwht(v) -> np.ndarray:
    """O(N log N) Walsh-Hadamard transform of a length-2^m vector."""
    a = np.array(v, dtype=np.complex128)
    if a.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return fwht_axis(a)


def _sign_matrix(n: int) -> np.ndarray:
    idx = np.arange(n)
    par = np.zeros((n, n), dtype=np.int8)
    grid = idx[:, None] & idx[None, :]
    b = 0
    while (1 << b) < n:
        par ^= ((grid >> b) & 1).astype(np.int8)
        b += 1
    return (1 - 2 * par).astype(np.int8)


def naive_wht(v) -> np.ndarray:
    """Quadratic-time oracle: direct evaluation of W(l) = sum_x (-1)^{l.x} v(x)."""
    a = np.asarray(v, dtype=np.complex128)
    if a.ndim != 1:
        raise ValueError("expected a 1-D vector")
    _check_power_of_two(a.size)
    return _sign_matrix(a.size).astype(np.complex128) @ a
