"""Probabilist Hermite polynomials, Hermite tensors and Laplacian-Hermite polynomials.

All evaluation goes through three-term recurrences; no monomial expansions are
used on production paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class HermiteSequence:
    """Values ``He_0(x) .. He_max_order(x)`` at one abscissa (or an array of them)."""

    max_order: int
    values: np.ndarray

    def __getitem__(self, n: int):
        return self.values[n]

    def __len__(self) -> int:
        return self.max_order + 1


@dataclass(frozen=True)
class LaplacianHermiteTable:
    """Radial Laplacian-Hermite values ``H_{0,m}(r)`` and ``H_{1,m}(r)`` for ``m <= max_m``.

    ``even[m]`` is ``exp(r^2/2) Lap^m exp(-r^2/2)`` and ``odd[m]`` is
    ``-exp(r^2/2) Lap^m d/dr exp(-r^2/2)`` in ``dimension`` dimensions.
    """

    dimension: int
    max_m: int
    radius: float
    even: np.ndarray
    odd: np.ndarray


def hermite_array(x, max_order: int) -> np.ndarray:
    """Return an array of shape ``(max_order + 1, *np.shape(x))`` with ``He_n(x)``."""
    if max_order < 0:
        raise ValueError(f"max_order must be non-negative, got {max_order}")
    x = np.asarray(x, dtype=float)
    out = np.empty((max_order + 1,) + x.shape)
    out[0] = 1.0
    if max_order >= 1:
        out[1] = x
    for n in range(1, max_order):
        out[n + 1] = x * out[n] - n * out[n - 1]
    return out


def hermite_values(x, max_order: int) -> HermiteSequence:
    """Evaluate ``He_0 .. He_max_order`` at ``x`` via ``He_{n+1} = x He_n - n He_{n-1}``."""
    return HermiteSequence(max_order=max_order, values=hermite_array(x, max_order))


def parity_counts(index: Sequence[int], dimension: int) -> list[int]:
    """Number of occurrences of each axis ``k`` in the index vector."""
    counts = [0] * dimension
    for a in index:
        if not 0 <= a < dimension:
            raise IndexError(f"tensor index {a} outside 0..{dimension - 1}")
        counts[a] += 1
    return counts


def hermite_tensor_entry(index: Sequence[int], x: Sequence[float]) -> float:
    """Entry of the rank-``len(index)`` Hermite tensor at point ``x``."""
    x = np.asarray(x, dtype=float)
    counts = parity_counts(index, x.size)
    value = 1.0
    for k, s in enumerate(counts):
        value *= float(hermite_array(x[k], s)[s])
    return value


def laplacian_hermite_arrays(r, dimension: int, max_m: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised core of :func:`laplacian_hermite_table`.

    Returns ``(even, odd)`` each of shape ``(max_m + 1, *np.shape(r))``.
    """
    if dimension < 1:
        raise ValueError("dimension must be positive")
    if max_m < 0:
        raise ValueError("max_m must be non-negative")
    r = np.asarray(r, dtype=float)
    even = np.empty((max_m + 1,) + r.shape)
    odd = np.empty_like(even)
    even[0] = 1.0
    odd[0] = r
    for m in range(1, max_m + 1):
        even[m] = r * odd[m - 1] - (dimension + 2 * (m - 1)) * even[m - 1]
        # H_{1,m} = r H_{0,m} - 2m H_{1,m-1}; shifting the left index to m+1 breaks the brute-force check.
        odd[m] = r * even[m] - 2 * m * odd[m - 1]
    return even, odd


def laplacian_hermite_table(r: float, dimension: int, max_m: int) -> LaplacianHermiteTable:
    if r < 0:
        raise ValueError("radius must be non-negative")
    even, odd = laplacian_hermite_arrays(float(r), dimension, max_m)
    return LaplacianHermiteTable(dimension, max_m, float(r), even, odd)


def kernel_coefficients(n_c: int) -> np.ndarray:
    """Weights ``(-1)^j / (2^j j!)`` of the order-``2 n_c`` correction series."""
    return np.array([(-1) ** j / (2.0**j * math.factorial(j)) for j in range(n_c)])


def laplacian_kernel_radial(r, dimension: int, n_c: int) -> np.ndarray:
    """Laplacian stencil kernel ``sum_j c_j H_{0,j+1}(r)`` evaluated at radii ``r``."""
    if n_c < 1:
        raise ValueError("n_c must be at least 1")
    even, _ = laplacian_hermite_arrays(r, dimension, n_c)
    return np.tensordot(kernel_coefficients(n_c), even[1:], axes=1)


def laplacian_kernel(v: Sequence[float], n_c: int) -> float:
    """Kernel weight of node ``v`` (already scaled by ``a``) for the integer Laplacian."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(laplacian_kernel_radial(np.linalg.norm(v), v.size, n_c))
