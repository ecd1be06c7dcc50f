"""Quadrature backends for cosine transforms of fractional powers of a stencil symbol.

Every backend reduces to a linear *cosine rule*: nodes ``omega_p`` in
``[0, pi]`` and a matrix ``A`` with ``A[m, p]`` such that

    int_0^pi cos(m w) g(w) dw  ~=  sum_p A[m, p] g(omega_p).

A 1D fractional coefficient is then ``-(1/pi) A g`` and the 2D coefficient
array is ``-(1/pi^2) A G A^T`` with ``G`` the symbol power on the node grid,
which is the separable evaluation of the full tensor-product rule.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .kernels import filon_moments

log = logging.getLogger(__name__)

UNIT_ROUNDOFF = 2.0**-53
METHODS = ("fft", "tanh-sinh", "filon")
MIN_FILON_GRID = 128


class IntegratorError(ArithmeticError):
    """Invalid integrator configuration or ill-conditioned rule."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Serializable integrator choice; ``None`` fields are filled per half-width.

    ``n_grid`` is the Filon sample count on ``[0, pi]``. It defaults to
    ``max(half_width, MIN_FILON_GRID)``: a finer grid lowers the quadrature
    error of a narrow stencil without changing its support. ``k_g`` counts
    steps of that grid.
    """

    method: str = "filon"
    n_t: int | None = None
    eps: float = UNIT_ROUNDOFF
    k_g: int | None = None
    n_f: int | None = None
    n_grid: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise IntegratorError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not 0.0 < self.eps < 1.0:
            raise IntegratorError("eps must lie in (0, 1)")
        if self.n_grid is not None and self.n_grid < 1:
            raise IntegratorError("n_grid must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "IntegratorConfig":
        return cls(**data)


@dataclass(frozen=True)
class CosineRule:
    """Nodes in ``[0, pi]`` and the cosine-weighted matrix for indices ``0..m_max``."""

    nodes: np.ndarray
    matrix: np.ndarray
    label: str = ""
    info: dict = field(default_factory=dict)

    @property
    def m_max(self) -> int:
        return self.matrix.shape[0] - 1


# --- tanh-sinh -----------------------------------------------------------------


def psi(x):
    return np.tanh(0.5 * np.pi * np.sinh(x))


def psi_prime(x):
    """``(pi/2) cosh x / cosh^2((pi/2) sinh x)`` in an overflow-free form."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.pi * np.abs(np.sinh(x)))
    return 2.0 * np.pi * np.cosh(x) * e / (1.0 + e) ** 2


def one_minus_psi(x):
    """``1 - psi(x) = 2 / (1 + exp(pi sinh x))`` without cancellation for large ``x``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return 2.0 / (1.0 + np.exp(np.pi * np.sinh(x)))


def one_plus_psi(x):
    return one_minus_psi(-np.asarray(x, dtype=float))


def _model_power(omega, alpha: float):
    """``(4 sin^2(w/2))^(alpha/2)``: the second-order symbol used to size the rules."""
    return np.abs(2.0 * np.sin(0.5 * np.asarray(omega, dtype=float))) ** alpha


@dataclass(frozen=True)
class Endpoints:
    x_star: float
    x_neg: float | None = None
    guess: float = math.nan
    guess_neg: float | None = None


def _refine(ratio, guess: float, eps: float) -> float:
    """Root of ``log ratio(x) = log eps`` bracketed around ``guess``."""

    def g(x):
        r = ratio(x)
        return (math.log(r) if r > 0 else -800.0) - math.log(eps)

    lo, hi = max(0.05, 0.5 * guess), max(1.0, 1.5 * guess)
    while g(lo) < 0 and lo > 1e-3:
        lo *= 0.5
    while g(hi) > 0 and hi < 20:
        hi *= 1.5
    if g(lo) < 0:
        return lo
    if g(hi) > 0:
        raise IntegratorError(f"tanh-sinh endpoint search failed near x={guess:.3f}")
    return float(optimize.brentq(g, lo, hi, xtol=1e-12))


def tanhsinh_endpoint(alpha: float, eps: float = UNIT_ROUNDOFF, h_g: float | None = None) -> Endpoints:
    """Truncation abscissae of the tanh-sinh sum.

    Symmetric mode (``h_g is None``): the rule maps ``[0, pi]`` with the branch
    point at ``w = 0``, and ``x_star`` is where the integrand relative to its
    value at ``w = pi`` drops below ``eps``. Asymmetric mode maps ``[0, h_g]``:
    ``x_star`` is the positive side (towards ``h_g``) and ``x_neg`` the side
    towards the branch point, both relative to the integrand at ``h_g / 2``.
    The closed-form initial guesses are refined on the exact ratio.

    ``alpha`` is the integrand's decay exponent at the branch point. Pass 0
    when the integrand does not vanish there, as along the axes of a 2D
    symbol where ``|S(0, w2)|`` stays finite.
    """
    if not 0.0 <= alpha <= 2.0:
        raise IntegratorError("alpha must lie in [0, 2]")
    if not 0.0 < eps < 1.0:
        raise IntegratorError("eps must lie in (0, 1)")
    log_eps = math.log(eps)
    p0 = float(psi_prime(0.0))
    if h_g is None:
        guess = math.log(-2.0 * (log_eps - alpha * math.log(math.pi)) / (math.pi * (alpha + 1.0)))
        ref = p0 * float(_model_power(math.pi, alpha))

        def ratio(x):
            w = math.pi * float(one_minus_psi(x))
            return float(psi_prime(x)) * float(_model_power(w, alpha)) / ref

        return Endpoints(_refine(ratio, guess, eps), None, guess, None)

    if not 0.0 < h_g <= math.pi:
        raise IntegratorError("h_g must lie in (0, pi]")
    ref = p0 * float(_model_power(0.5 * h_g, alpha))
    guess_pos = math.log(
        -2.0 / math.pi * (log_eps + alpha * math.log(math.sin(0.5 * h_g) / math.sin(h_g)))
    )
    guess_neg = math.log(
        -2.0 / (math.pi * (alpha + 1.0)) * (log_eps + alpha * math.log(math.sin(0.5 * h_g) / math.pi))
    )

    def ratio_pos(x):
        w = h_g * (1.0 - 0.5 * float(one_minus_psi(x)))
        return float(psi_prime(x)) * float(_model_power(w, alpha)) / ref

    def ratio_neg(x):
        w = 0.5 * h_g * float(one_plus_psi(-x))
        return float(psi_prime(x)) * float(_model_power(w, alpha)) / ref

    return Endpoints(_refine(ratio_pos, guess_pos, eps), _refine(ratio_neg, guess_neg, eps), guess_pos, guess_neg)


@dataclass(frozen=True)
class TanhSinhGrid:
    """Mapped nodes and Jacobian-weighted weights: ``int g ~= sum weights * g(nodes)``."""

    n_t: int
    x_star: float
    step: float
    nodes: np.ndarray
    weights: np.ndarray
    n_left: int = 0


def symmetric_tanhsinh_grid(alpha: float, n_t: int, eps: float = UNIT_ROUNDOFF) -> TanhSinhGrid:
    """Rule on ``[0, pi]``: ``w = pi (1 - psi(x))``, ``x = k x*/n_t`` for ``k = 0..n_t``.

    The ``k = 0`` node sits at ``w = pi`` with half weight, which is the
    one-sided view of the trapezoidal sum on ``[0, 2 pi]`` about its centre.
    """
    if n_t < 1:
        raise IntegratorError("n_t must be positive")
    x_star = tanhsinh_endpoint(alpha, eps).x_star
    step = x_star / n_t
    x = step * np.arange(n_t + 1)
    nodes = math.pi * one_minus_psi(x)
    weights = math.pi * step * psi_prime(x)
    weights[0] *= 0.5
    return TanhSinhGrid(n_t, x_star, step, nodes, weights)


def asymmetric_tanhsinh_grid(alpha: float, h_g: float, n_t: int, eps: float = UNIT_ROUNDOFF) -> TanhSinhGrid:
    """Rule on ``[0, h_g]`` with ``n_t`` positive steps and ``n_left`` negative steps.

    ``n_left = ceil(n_t x_neg / x_star)`` so the negative side reaches its own
    truncation point with the same step.
    """
    if n_t < 1:
        raise IntegratorError("n_t must be positive")
    ends = tanhsinh_endpoint(alpha, eps, h_g)
    step = ends.x_star / n_t
    n_left = int(math.ceil(n_t * ends.x_neg / ends.x_star))
    k = np.arange(-n_left, n_t + 1)
    x = step * k
    nodes = np.where(k < 0, 0.5 * h_g * one_plus_psi(x), h_g * (1.0 - 0.5 * one_minus_psi(x)))
    weights = 0.5 * h_g * step * psi_prime(x)
    return TanhSinhGrid(n_t, ends.x_star, step, nodes, weights, n_left)


def _grid_rule(grid: TanhSinhGrid, m_max: int, label: str) -> CosineRule:
    m = np.arange(m_max + 1)
    matrix = np.cos(np.multiply.outer(m, grid.nodes)) * grid.weights[None, :]
    return CosineRule(grid.nodes, matrix, label, {"n_t": grid.n_t, "x_star": grid.x_star, "n_left": grid.n_left})


def tanhsinh_rule(alpha: float, m_max: int, n_t: int, eps: float = UNIT_ROUNDOFF) -> CosineRule:
    return _grid_rule(symmetric_tanhsinh_grid(alpha, n_t, eps), m_max, "tanh-sinh")


def tanhsinh_coefficient(symbol, alpha: float, n: int, grid: TanhSinhGrid) -> float:
    """``-(1/pi) int_0^pi cos(n w) |symbol(w)|^(alpha/2) dw`` on a tanh-sinh grid."""
    g = np.abs(symbol(grid.nodes)) ** (0.5 * alpha)
    return float(-np.dot(grid.weights * np.cos(n * grid.nodes), g) / math.pi)


# --- composite Filon ----------------------------------------------------------


@dataclass(frozen=True)
class FilonPlan:
    """Composite Filon rule on ``[k_g h, pi]`` with ``h = pi / n``.

    ``node_index[r, j]`` is the (mirrored) grid index of interpolation node
    ``j`` in region ``r``; ``weights[i, r, j]`` is ``b_j`` for cosine index
    ``i`` so that ``sum_j b_j f(node) ~= int_region cos(i w) f(w) dw``.
    """

    n: int
    k_g: int
    n_f: int
    q: int
    centres: np.ndarray
    node_index: np.ndarray
    weights: np.ndarray

    @property
    def h(self) -> float:
        return math.pi / self.n

    @property
    def h_g(self) -> float:
        return self.k_g * self.h

    @property
    def regions(self) -> int:
        return self.centres.size

    def operator(self) -> np.ndarray:
        """Weights scattered onto grid indices: ``(m_max + 1, n + 1)``."""
        m_max = self.weights.shape[0] - 1
        out = np.zeros((m_max + 1, self.n + 1))
        for r in range(self.regions):
            for j in range(self.n_f + 1):
                out[:, self.node_index[r, j]] += self.weights[:, r, j]
        return out


def vandermonde(n_f: int) -> np.ndarray:
    """``V[k, j] = (j - n_f/2)^k`` for ``k, j = 0..n_f``."""
    t = np.arange(n_f + 1) - 0.5 * n_f
    return t[None, :] ** np.arange(n_f + 1)[:, None]


def filon_plan(n: int, k_g: int, n_f: int, m_max: int | None = None) -> FilonPlan:
    """Moments by :func:`isostencil.kernels.filon_moments`, weights by one shared solve."""
    if n_f < 1:
        raise IntegratorError("n_f must be at least 1")
    if n_f > 10:
        raise IntegratorError(f"n_f={n_f}: the node Vandermonde system is too ill-conditioned; use n_f <= 10")
    q = 2 if n_f % 2 == 0 else 1
    if not 0 < k_g < n:
        raise IntegratorError(f"split index k_g={k_g} must lie in (0, {n})")
    if (n - k_g) % q:
        raise IntegratorError(f"(n - k_g) = {n - k_g} must be divisible by q = {q} for n_f = {n_f}")
    lowest = k_g + 0.5 * q - 0.5 * n_f
    if lowest < 1:
        raise IntegratorError(
            f"k_g={k_g} too small for n_f={n_f}: the first region would interpolate across the branch point"
        )
    if m_max is None:
        m_max = n
    h = math.pi / n
    regions = (n - k_g) // q
    centre_index = k_g + q * (np.arange(regions) + 0.5)
    offsets = np.arange(n_f + 1) - 0.5 * n_f
    idx = np.rint(centre_index[:, None] + offsets[None, :]).astype(np.int64)
    idx = np.where(idx > n, 2 * n - idx, idx)
    moments = filon_moments(np.arange(m_max + 1), centre_index * h, 0.5 * q * h, n_f)
    scaled = moments / h ** np.arange(n_f + 1)
    vinv = np.linalg.inv(vandermonde(n_f))
    weights = np.einsum("jk,imk->imj", vinv, scaled)
    return FilonPlan(n, k_g, n_f, q, centre_index * h, idx, weights)


def default_n_f(n_c: int, n_q: int, derivative_order: int = 2) -> int:
    """``2 max(n_q - n - n_c + 1, n_c)``: enough for the stencil's own order."""
    return 2 * max(n_q - derivative_order - n_c + 1, n_c)


def default_k_g(n: int, n_f: int) -> int:
    """Split index nearest ``n / 8`` (``h_g ~ pi/8``) meeting the Filon constraints."""
    q = 2 if n_f % 2 == 0 else 1
    k = max(1, int(round(n / 8)))
    while k + 0.5 * q - 0.5 * n_f < 1 or (n - k) % q:
        k += 1
    if k >= n:
        raise IntegratorError(f"no admissible split index for n={n}, n_f={n_f}")
    return k


def default_n_t(n: int) -> int:
    """Tanh-sinh steps per side; doubled with each halving of the grid spacing."""
    return max(48, 2 * n)


def composite_rule(
    n: int,
    alpha: float,
    m_max: int | None = None,
    k_g: int | None = None,
    n_f: int = 4,
    n_t: int | None = None,
    eps: float = UNIT_ROUNDOFF,
) -> CosineRule:
    """Asymmetric tanh-sinh on ``[0, h_g]`` plus composite Filon on ``[h_g, pi]``."""
    if m_max is None:
        m_max = n
    if k_g is None:
        k_g = default_k_g(n, n_f)
    if n_t is None:
        n_t = default_n_t(n)
    plan = filon_plan(n, k_g, n_f, m_max)
    grid = asymmetric_tanhsinh_grid(alpha, plan.h_g, n_t, eps)
    head = _grid_rule(grid, m_max, "tanh-sinh")
    grid_nodes = plan.h * np.arange(n + 1)
    nodes = np.concatenate([head.nodes, grid_nodes])
    matrix = np.concatenate([head.matrix, plan.operator()], axis=1)
    info = {"n_t": n_t, "n_left": grid.n_left, "k_g": k_g, "n_f": n_f, "h_g": plan.h_g, "q": plan.q}
    return CosineRule(nodes, matrix, "filon", info)


def composite_coefficient(symbol, alpha: float, n: int, plan: FilonPlan, grid: TanhSinhGrid) -> float:
    """Single coefficient ``-(1/pi) int_0^pi cos(n w)|symbol|^(alpha/2)`` from both pieces."""
    if abs(grid.nodes.max() - plan.h_g) > 1e-9 * plan.h_g and grid.nodes.max() > plan.h_g:
        raise IntegratorError("tanh-sinh grid does not end at the Filon split point")
    head = np.dot(grid.weights * np.cos(n * grid.nodes), np.abs(symbol(grid.nodes)) ** (0.5 * alpha))
    samples = np.abs(symbol(plan.h * np.arange(plan.n + 1))) ** (0.5 * alpha)
    tail = np.sum(plan.weights[n] * samples[plan.node_index])
    return float(-(head + tail) / math.pi)


# --- FFT baseline -------------------------------------------------------------


def fft_inverse_dtft(samples: np.ndarray, alpha: float) -> np.ndarray:
    """Trapezoidal (FFT) coefficients from symbol samples at ``w_j = j pi / N``.

    ``samples`` has length ``2N`` (1D) or shape ``(2N, 2N)`` (2D). Returns the
    coefficients for indices ``-N..N`` along each axis (``+-N`` alias to one value).
    This is the non-convergent baseline: the branch point at ``w = 0`` leaves
    an ``O(1)`` error at zero frequency.
    """
    samples = np.asarray(samples, dtype=float)
    power = np.abs(samples) ** (0.5 * alpha)
    two_n = samples.shape[0]
    if two_n % 2 or any(s != two_n for s in samples.shape):
        raise IntegratorError("fft baseline needs an even, square sample grid of size 2N")
    coeffs = -np.real(np.fft.fftn(power)) / power.size
    half = two_n // 2
    idx = np.arange(-half, half + 1) % two_n
    return coeffs[np.ix_(*([idx] * samples.ndim))]


def fft_sample_grid(n: int) -> np.ndarray:
    return math.pi * np.arange(2 * n) / n


def sin_fft_samples_2d(n: int) -> np.ndarray:
    """Five-point-Laplacian symbol ``-(4 sin^2(w1/2) + 4 sin^2(w2/2))`` on the FFT grid."""
    w = fft_sample_grid(n)
    s = 4.0 * np.sin(0.5 * w) ** 2
    return -(s[:, None] + s[None, :])


# --- assembly -----------------------------------------------------------------


def build_rule(
    n: int,
    alpha: float,
    config: IntegratorConfig,
    m_max: int | None = None,
    n_f: int = 4,
    dimension: int = 1,
) -> CosineRule:
    """Cosine rule for half-width ``n`` according to ``config``.

    In 2D the tanh-sinh truncation is sized for an integrand that does not
    vanish at ``w = 0`` (decay exponent 0) since each axis sees ``|S(0, w)|``.
    """
    if m_max is None:
        m_max = n
    decay = alpha if dimension == 1 else 0.0
    if config.method == "tanh-sinh":
        n_t = config.n_t or max(200, 8 * n)
        return tanhsinh_rule(decay, m_max, n_t, config.eps)
    if config.method == "filon":
        nf = config.n_f or n_f
        n_grid = config.n_grid or max(n, MIN_FILON_GRID)
        if n_grid < m_max:
            raise IntegratorError(f"n_grid {n_grid} is below the highest index {m_max}")
        return composite_rule(n_grid, decay, m_max, config.k_g, nf, config.n_t, config.eps)
    raise IntegratorError("the fft method has no cosine rule; use fft_inverse_dtft")


def coefficients_1d(rule: CosineRule, symbol_values: np.ndarray, alpha: float) -> np.ndarray:
    """``-(1/pi) A |S|^(alpha/2)`` for ``m = 0..m_max``."""
    return -(rule.matrix @ (np.abs(symbol_values) ** (0.5 * alpha))) / math.pi


def coefficients_2d(rule: CosineRule, symbol_grid: np.ndarray, alpha: float) -> np.ndarray:
    """``-(1/pi^2) A G A^T``: one pass over each axis of the tensor-product rule."""
    g = np.abs(symbol_grid) ** (0.5 * alpha)
    partial = rule.matrix @ g
    return -(partial @ rule.matrix.T) / math.pi**2
