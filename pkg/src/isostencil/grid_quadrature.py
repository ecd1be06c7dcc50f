"""One-dimensional Hermite grid quadrature on equidistant symmetric nodes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .hermite_poly import hermite_array

log = logging.getLogger(__name__)


class QuadratureError(ArithmeticError):
    """Numerical failure while constructing a quadrature rule."""


@dataclass(frozen=True)
class GaussHermiteRule:
    count: int
    abscissae: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class GridQuadrature1D:
    """One-sided weights ``w_0..w_nq`` on nodes ``k*a``; the rule is mirrored to ``-k*a``."""

    n_q: int
    a: float
    weights: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.a * np.arange(self.n_q + 1)

    def full(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer offsets ``-n_q..n_q`` and the matching symmetric weights."""
        offsets = np.arange(-self.n_q, self.n_q + 1)
        return offsets, self.weights[np.abs(offsets)]


@dataclass(frozen=True)
class OrthogonalityReport:
    cross: float
    moment: float

    @property
    def max_residual(self) -> float:
        return max(self.cross, self.moment)


def gauss_hermite(count: int) -> GaussHermiteRule:
    """Gauss-Hermite rule for the unit Gaussian weight (Golub-Welsch).

    Abscissae are eigenvalues of the Jacobi matrix with off-diagonal
    ``sqrt(1), sqrt(2), ...``; weights are the squared first eigenvector
    components, so they sum to one.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count == 1:
        return GaussHermiteRule(1, np.zeros(1), np.ones(1))
    off = np.sqrt(np.arange(1, count, dtype=float))
    try:
        nodes, vecs = linalg.eigh_tridiagonal(np.zeros(count), off)
    except linalg.LinAlgError as exc:
        raise QuadratureError(f"tridiagonal eigensolver failed for count={count}: {exc}") from exc
    weights = vecs[0] ** 2
    # enforce exact mirror symmetry; the solver only gets it to rounding
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    if count % 2:
        nodes[count // 2] = 0.0
    return GaussHermiteRule(count, nodes, weights / weights.sum())


def _lagrange_weights(n_q: int, a: float, rule: GaussHermiteRule) -> np.ndarray:
    grid = np.arange(-n_q, n_q + 1, dtype=float)
    x = rule.abscissae / a
    w = np.empty(n_q + 1)
    for k in range(n_q + 1):
        others = grid[grid != k]
        denom = np.prod(k - others)
        basis = np.prod(x[:, None] - others[None, :], axis=1) / denom
        w[k] = np.dot(rule.weights, basis)
    if not np.all(np.isfinite(w)):
        raise QuadratureError(f"Lagrange evaluation overflowed for n_q={n_q}, a={a}")
    return w


def grid_weights_1d(n_q: int, a: float) -> GridQuadrature1D:
    """Grid weights from ``w_k = sum_i q_i l_k(xi_i / a)`` with an ``n_q + 1`` point Gauss rule."""
    if n_q < 0:
        raise ValueError("n_q must be non-negative")
    if not a > 0:
        raise ValueError(f"scale a must be positive, got {a}")
    return GridQuadrature1D(n_q, float(a), _lagrange_weights(n_q, a, gauss_hermite(n_q + 1)))


def moment_matrix(n_q: int, a: float, positive_nodes=None) -> np.ndarray:
    """Matrix of ``He_n(k a)^2`` times node multiplicity (1 at the origin, 2 elsewhere)."""
    if positive_nodes is None:
        positive_nodes = np.arange(n_q + 1)
    positive_nodes = np.asarray(positive_nodes, dtype=float)
    he = hermite_array(a * positive_nodes, n_q)
    mult = np.where(positive_nodes == 0, 1.0, 2.0)
    return he**2 * mult[None, :]


def factorials(n_q: int) -> np.ndarray:
    return np.array([float(math.factorial(n)) for n in range(n_q + 1)])


def solve_moment_system(n_q: int, a: float, positive_nodes=None) -> np.ndarray:
    """Direct solve of the squared-Hermite moment system on the given non-negative nodes."""
    return np.linalg.solve(moment_matrix(n_q, a, positive_nodes), factorials(n_q))


def _outer_weight(a: float, n_q: int, rule: GaussHermiteRule) -> float:
    return float(_lagrange_weights(n_q, a, rule)[n_q])


def solve_elimination_scale(n_q: int, lo: float = 0.5, hi: float = 3.0, step: float = 0.05) -> float:
    """Scale ``a`` that zeroes the outermost weight ``w_nq`` (even ``n_q`` only).

    Scans ``(lo, hi]`` for the first sign change of ``w_nq(a)`` and polishes it
    with Brent's method.
    """
    if n_q <= 0 or n_q % 2:
        raise ValueError(f"outer weight elimination needs an even positive n_q, got {n_q}")
    rule = gauss_hermite(n_q + 1)
    grid = np.arange(lo + step, hi + 0.5 * step, step)
    values = np.array([_outer_weight(a, n_q, rule) for a in grid])
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            return float(grid[i])
        if np.sign(values[i]) != np.sign(values[i + 1]):
            return float(
                optimize.brentq(_outer_weight, grid[i], grid[i + 1], args=(n_q, rule), xtol=1e-14, rtol=1e-15)
            )
    raise QuadratureError(f"no sign change of w_{n_q}(a) found for a in ({lo}, {hi}]")


def verify_orthogonality_1d(rule: GridQuadrature1D) -> OrthogonalityReport:
    """Residuals of the discrete Hermite inner products on the full symmetric grid.

    Polynomials are normalised (``He_n / sqrt(n!)``) so both residuals are relative.
    """
    offsets, weights = rule.full()
    he = hermite_array(rule.a * offsets, rule.n_q)
    he = he / np.sqrt(factorials(rule.n_q))[:, None]
    gram = (he * weights[None, :]) @ he.T
    moment = float(np.max(np.abs(np.diag(gram) - 1.0)))
    off = gram - np.diag(np.diag(gram))
    return OrthogonalityReport(cross=float(np.max(np.abs(off))) if rule.n_q else 0.0, moment=moment)
