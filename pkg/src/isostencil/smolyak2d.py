"""Sparse two-dimensional Hermite grid quadrature.

Two independent constructions of the same weights are provided: the square
implicit system over the selected node set, and the modified Smolyak
combination of 1D rules with successive elimination of in-between nodes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .grid_quadrature import QuadratureError, grid_weights_1d, solve_moment_system
from .hermite_poly import hermite_array

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SparseWeights2D:
    """Canonical weights ``entries[(i, j)]`` with ``i >= j >= 0``.

    The full rule follows from ``w[i, j] = w[j, i]`` and sign flips of either index.
    """

    n_q: int
    a: float
    entries: dict
    method: str = "implicit"

    def quadrant(self) -> np.ndarray:
        """Dense ``(n_q+1, n_q+1)`` array of weights on the non-negative quadrant."""
        q = np.zeros((self.n_q + 1, self.n_q + 1))
        for (i, j), w in self.entries.items():
            q[i, j] = w
            q[j, i] = w
        return q


def node_set(n_q: int) -> list[tuple[int, int]]:
    """Canonical nodes ``(i, j)``, ``i >= j``, that carry non-zero weight."""
    if n_q < 0:
        raise ValueError("n_q must be non-negative")
    nodes = set()
    half = n_q // 2
    for i in range(half + 1):
        nodes.update((i, j) for j in range(i + 1))
    for i in range(half + 1, n_q + 1):
        nodes.update((i, j) for j in _row_columns(n_q, i))
    return sorted(nodes)


def _row_columns(n_q: int, row: int) -> list[int]:
    """Columns kept on a row above ``n_q // 2``: ``floor(m*row/(n_q-row))`` up to the diagonal."""
    if row == n_q:
        return [0]
    gap = n_q - row
    cols = []
    for m in range(gap + 1):
        c = (m * row) // gap
        if c not in cols:
            cols.append(c)
    return cols


def condition_count(n_q: int) -> int:
    lo, hi = n_q // 2, (n_q + 1) // 2
    return ((2 + lo) * (1 + lo) + (hi + 1) * hi) // 2


def _conditions(n_q: int) -> list[tuple[int, int]]:
    return [(m, n) for n in range(n_q + 1) for m in range(n, n_q + 1) if m + n <= n_q]


def _orbit(i: int, j: int) -> set[tuple[int, int]]:
    pts = set()
    for p, q in ((i, j), (j, i)):
        for sp in (1, -1):
            for sq in (1, -1):
                pts.add((sp * p, sq * q))
    return pts


def _system(n_q: int, a: float):
    nodes = node_set(n_q)
    conds = _conditions(n_q)
    if len(nodes) != len(conds):
        raise QuadratureError(f"n_q={n_q}: {len(nodes)} nodes but {len(conds)} conditions")
    he2 = hermite_array(a * np.arange(n_q + 1), n_q) ** 2
    mat = np.zeros((len(conds), len(nodes)))
    for c, (m, n) in enumerate(conds):
        for k, (i, j) in enumerate(nodes):
            # orbit sum over all symmetric copies; multiplicity 1, 4 or 8
            mat[c, k] = sum(he2[m, abs(x)] * he2[n, abs(y)] for x, y in _orbit(i, j))
    rhs = np.array([float(math.factorial(m) * math.factorial(n)) for m, n in conds])
    return nodes, mat, rhs


def implicit_weights(n_q: int, a: float) -> SparseWeights2D:
    """Solve the square orthogonality system over :func:`node_set`."""
    nodes, mat, rhs = _system(n_q, a)
    cond = np.linalg.cond(mat)
    log.debug("implicit 2D system n_q=%d a=%.6g cond=%.3e", n_q, a, cond)
    if not np.isfinite(cond) or cond > 1e14:
        raise QuadratureError(f"n_q={n_q}: singular orthogonality system (cond={cond:.3e})")
    w = np.linalg.solve(mat, rhs)
    return SparseWeights2D(n_q, float(a), dict(zip(nodes, w)), "implicit")


def orthogonality_residual(weights: SparseWeights2D) -> float:
    """Max relative residual of all conditions ``m + n <= n_q`` for the full rule."""
    _, mat, rhs = _system(weights.n_q, weights.a)
    w = np.array([weights.entries.get(node, 0.0) for node in node_set(weights.n_q)])
    extra = set(weights.entries) - set(node_set(weights.n_q))
    if any(abs(weights.entries[k]) > 1e-12 for k in extra):
        return math.inf
    return float(np.max(np.abs(mat @ w - rhs) / rhs))


def _padded(w: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[: len(w)] = w
    return out


def _rule_on(order: int, a: float, nodes, size: int) -> np.ndarray:
    """Order-``order`` symmetric 1D rule supported on the given non-negative nodes."""
    out = np.zeros(size)
    out[list(nodes)] = solve_moment_system(order, a, nodes)
    return out


def smolyak_weights(n_q: int, a: float) -> SparseWeights2D:
    """Modified Smolyak construction with successive elimination.

    The combination ``sum_k D_{n_q-k} x wbar_k + wbar_k x D_{n_q-k}`` (``D_n``
    the 1D telescoping difference) is assembled row by row from the outside in.
    Each ``wbar_k`` mixes order-``k`` rules whose diagonal node is moved onto
    the in-between positions of row ``n_q-k`` so those positions cancel. Odd
    ``n_q`` closes with the asymmetric two-unknown form.
    """
    if n_q < 0:
        raise ValueError("n_q must be non-negative")
    size = n_q + 1
    w = [_padded(grid_weights_1d(k, a).weights, size) for k in range(size)]

    def diff(n: int) -> np.ndarray:
        return w[n] - w[n - 1] if n > 0 else w[0]

    total = np.zeros((size, size))
    half = n_q // 2
    odd = n_q % 2 == 1
    for k in range((n_q + 1) // 2):
        row = n_q - k
        if odd and k == half and k > 0:
            total += _odd_closure(total, w, k, a, size)
            break
        if k == 0:
            wbar = w[0]
        else:
            wbar = _eliminating_rule(total, diff(row), k, row, a, size)
        d = diff(row)
        total += np.outer(d, wbar) + np.outer(wbar, d)
    else:
        total += np.outer(w[half], w[half])

    allowed = set(node_set(n_q))
    entries = {}
    for i in range(size):
        for j in range(i + 1):
            if (i, j) in allowed:
                entries[(i, j)] = 0.5 * (total[i, j] + total[j, i])
            elif abs(total[i, j]) > 1e-9 or abs(total[j, i]) > 1e-9:
                raise QuadratureError(f"Smolyak elimination left weight {total[i, j]:.3e} at ({i}, {j})")
    return SparseWeights2D(n_q, float(a), entries, "smolyak")


def _eliminating_rule(total, d, k, row, a, size) -> np.ndarray:
    base = _row_columns_for_order(row, k)
    between = [x for x in range(1, row) if x not in base]
    candidates = [base] + [sorted([c for c in base if c != row] + [x]) for x in between]
    rules = [_rule_on(k, a, nodes, size) for nodes in candidates]
    if not between:
        return rules[0]
    # unknown b_j multiplies the pair D x r_j + r_j x D; row `row` must vanish at `between`
    n = len(candidates)
    mat = np.zeros((n, n))
    rhs = np.zeros(n)
    mat[0, :] = 1.0
    rhs[0] = 1.0
    for e, x in enumerate(between, start=1):
        for j, r in enumerate(rules):
            mat[e, j] = d[row] * r[x] + r[row] * d[x]
        rhs[e] = -total[row, x]
    try:
        b = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise QuadratureError(f"singular elimination system at row {row}") from exc
    return np.tensordot(b, np.array(rules), axes=1)


def _row_columns_for_order(row: int, k: int) -> list[int]:
    return sorted({(m * row) // k for m in range(k + 1)})


def _odd_closure(total, w, k, a, size) -> np.ndarray:
    row = k + 1
    base = _row_columns_for_order(row, k)
    between = [x for x in range(1, row) if x not in base]
    if len(between) != 1:
        raise QuadratureError(f"odd closure expects one in-between node, got {between}")
    x = between[0]
    u0 = _rule_on(k, a, base, size)
    u1 = _rule_on(k, a, sorted([c for c in base if c != row] + [x]), size)
    lead = w[row] - u0
    # T(b) = lead x (b0 u0 + b1 u1) + u0 x w[row]; zero at (row, x) and (x, row)
    mat = np.array(
        [
            [lead[row] * u0[x], lead[row] * u1[x]],
            [lead[x] * u0[row], lead[x] * u1[row]],
        ]
    )
    rhs = -np.array(
        [
            total[row, x] + u0[row] * w[row][x],
            total[x, row] + u0[x] * w[row][row],
        ]
    )
    try:
        b0, b1 = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise QuadratureError("singular odd-order closure system") from exc
    return np.outer(lead, b0 * u0 + b1 * u1) + np.outer(u0, w[row])


def expand_full(sparse: SparseWeights2D) -> np.ndarray:
    """Full symmetric weight field on ``[-n_q, n_q]^2`` (index ``n_q`` is the origin)."""
    n = sparse.n_q
    q = sparse.quadrant()
    idx = np.abs(np.arange(-n, n + 1))
    return q[np.ix_(idx, idx)]


def multiplicity(i: int, j: int) -> int:
    return len(_orbit(i, j))
