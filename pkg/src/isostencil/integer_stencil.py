"""Integer-order Laplacian stencils from Hermite grid quadrature, and their symbols."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grid_quadrature import GridQuadrature1D, grid_weights_1d, solve_elimination_scale
from .hermite_poly import laplacian_kernel_radial
from .smolyak2d import SparseWeights2D, expand_full, implicit_weights

FORMAT_VERSION = 1
_HEADER = "# isostencil stencil"


class StencilError(ValueError):
    """Invalid stencil request or malformed stencil file."""


@dataclass(frozen=True)
class StencilMeta:
    order_kind: str = "integer"
    alpha: float | None = None
    n_c: int = 1
    n_q: int = 2
    a: float = math.sqrt(3.0)
    method: str = "hermite-quadrature"
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Stencil:
    """Unscaled symmetric stencil; apply with an ``h**-2`` (or ``h**-alpha``) prefactor.

    ``coefficients`` has shape ``(2*half_width + 1,) * dimension`` and index
    ``half_width`` along each axis is the centre.
    """

    dimension: int
    half_width: int
    coefficients: np.ndarray
    meta: StencilMeta = field(default_factory=StencilMeta)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if self.dimension not in (1, 2):
            raise StencilError(f"dimension must be 1 or 2, got {self.dimension}")
        if c.shape != (2 * self.half_width + 1,) * self.dimension:
            raise StencilError(f"coefficient shape {c.shape} does not match half_width {self.half_width}")
        object.__setattr__(self, "coefficients", c)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def __getitem__(self, index):
        idx = np.atleast_1d(index) + self.half_width
        return float(self.coefficients[tuple(idx)])

    def one_sided(self) -> np.ndarray:
        """Coefficients at non-negative indices (1D) or the non-negative quadrant (2D)."""
        n = self.half_width
        return self.coefficients[(slice(n, None),) * self.dimension]

    def symmetry_defect(self) -> float:
        c = self.coefficients
        flips = [np.flip(c, axis=k) for k in range(c.ndim)]
        if c.ndim == 2:
            flips.append(c.T)
        return float(max(np.max(np.abs(c - f)) for f in flips))

    def apply(self, field_values: np.ndarray, h: float, power: float = 2.0) -> np.ndarray:
        """Apply to the interior of a sampled field; output shrinks by ``half_width`` per side."""
        from scipy.signal import correlate

        return correlate(field_values, self.coefficients, mode="valid") / h**power


def default_scale(n_q: int) -> float:
    """Scale used when none is given.

    Even ``n_q`` takes its eliminating root. Odd ``n_q`` borrows the root of
    ``n_q - 1``, which keeps every 2D symbol strictly negative where ``a = 1``
    does not (``n_q = 3`` and ``5`` turn positive near the corner ``(pi, pi)``).
    """
    even = n_q - (n_q % 2)
    return solve_elimination_scale(even) if even > 0 else 1.0


def _trim(coeffs: np.ndarray, n: int, rel: float = 1e-13) -> tuple[np.ndarray, int]:
    scale = np.max(np.abs(coeffs))
    while n > 1:
        ring = np.ones(coeffs.shape, dtype=bool)
        inner = (slice(1, -1),) * coeffs.ndim
        ring[inner] = False
        if np.max(np.abs(coeffs[ring])) > rel * scale:
            break
        coeffs = coeffs[inner]
        n -= 1
    return coeffs, n


def build_integer_laplacian(
    dimension: int,
    n_c: int,
    n_q: int | None = None,
    weights: GridQuadrature1D | SparseWeights2D | None = None,
    a: float | None = None,
) -> Stencil:
    """Laplacian stencil of accuracy ``2*n_c`` from Hermite grid weights.

    The coefficient at integer node ``i`` is ``a**2 * w_i * K(a*|i|)`` where
    ``K = sum_j (-1)^j/(2^j j!) H_{0,j+1}`` is the radial Laplacian-Hermite kernel.
    """
    if n_c < 1:
        raise StencilError("n_c must be at least 1")
    if weights is not None:
        n_q = weights.n_q
        a = weights.a
    if n_q is None:
        n_q = 2 * n_c
    if n_q < 2 * n_c:
        raise StencilError(f"accuracy 2*n_c={2 * n_c} needs n_q >= {2 * n_c}, got n_q={n_q}")
    if a is None:
        a = default_scale(n_q)
    if dimension == 1:
        if weights is None:
            weights = grid_weights_1d(n_q, a)
        if not isinstance(weights, GridQuadrature1D):
            raise StencilError("1D stencil needs 1D grid weights")
        offsets, w = weights.full()
        radius = a * np.abs(offsets)
    elif dimension == 2:
        if weights is None:
            weights = implicit_weights(n_q, a)
        if not isinstance(weights, SparseWeights2D):
            raise StencilError("2D stencil needs sparse 2D weights")
        w = expand_full(weights)
        off = np.arange(-n_q, n_q + 1)
        radius = a * np.hypot(off[:, None], off[None, :])
    else:
        raise StencilError(f"dimension must be 1 or 2, got {dimension}")
    coeffs = a * a * w * laplacian_kernel_radial(radius, dimension, n_c)
    coeffs, half = _trim(coeffs, n_q)
    meta = StencilMeta("integer", None, n_c, n_q, float(a), "hermite-quadrature")
    return Stencil(dimension, half, coeffs, meta)


def _frequencies(k, dimension: int) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if dimension == 1:
        return k.reshape(-1, 1) if k.ndim <= 1 else k
    if k.shape[-1] != 2:
        raise StencilError("2D symbol needs frequency pairs")
    return k.reshape(-1, 2)


def dtft(stencil: Stencil, k) -> np.ndarray:
    """Direct cosine sum ``sum_n c_n prod_l cos(n_l k_l)``."""
    scalar = np.ndim(k) == 0 or (stencil.dimension == 2 and np.ndim(k) == 1)
    kk = _frequencies(k, stencil.dimension)
    n = stencil.offsets
    if stencil.dimension == 1:
        out = np.cos(np.outer(kk[:, 0], n)) @ stencil.coefficients
    else:
        c1 = np.cos(np.outer(kk[:, 0], n))
        c2 = np.cos(np.outer(kk[:, 1], n))
        out = np.einsum("pi,ij,pj->p", c1, stencil.coefficients, c2)
    return float(out[0]) if scalar else out.reshape(np.shape(k)[: np.ndim(k) - (stencil.dimension == 2)])


def _half_sin2(k, n) -> np.ndarray:
    return np.sin(0.5 * np.multiply.outer(k, n)) ** 2


def symbol_1d(coeffs_one_sided: np.ndarray, omega) -> np.ndarray:
    """Symbol of a symmetric zero-sum 1D stencil as ``-4 sum_{n>=1} c_n sin^2(n w/2)``."""
    n = np.arange(1, len(coeffs_one_sided))
    return -4.0 * (_half_sin2(np.asarray(omega, dtype=float), n) @ coeffs_one_sided[1:])


def symbol_2d_grid(coeffs: np.ndarray, w1, w2) -> np.ndarray:
    """Symbol on the tensor grid ``w1 x w2`` without cancellation near the origin.

    Uses ``cos a cos b - 1 = -2 sin^2(a/2) cos b - 2 sin^2(b/2)`` so the zero-sum
    constant never enters; cost is two small matrix products.
    """
    n = (coeffs.shape[0] - 1) // 2
    idx = np.arange(-n, n + 1)
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    s1 = _half_sin2(w1, idx)
    c2 = np.cos(np.multiply.outer(w2, idx))
    s2 = _half_sin2(w2, idx)
    first = s1 @ coeffs @ c2.T
    second = s2 @ coeffs.sum(axis=0)
    return -2.0 * first - 2.0 * second[None, :]


def dtft_stable(stencil: Stencil, k) -> np.ndarray:
    """Symbol evaluated from ``cos - 1 = -2 sin^2`` terms, accurate near ``k = 0``."""
    if stencil.dimension == 1:
        kk = np.asarray(k, dtype=float)
        out = symbol_1d(stencil.one_sided(), kk.reshape(-1))
        return float(out[0]) if kk.ndim == 0 else out.reshape(kk.shape)
    kk = np.asarray(k, dtype=float)
    pts = kk.reshape(-1, 2)
    idx = stencil.offsets
    s1 = _half_sin2(pts[:, 0], idx)
    c2 = np.cos(np.multiply.outer(pts[:, 1], idx))
    s2 = _half_sin2(pts[:, 1], idx)
    c = stencil.coefficients
    out = -2.0 * np.einsum("pi,ij,pj->p", s1, c, c2) - 2.0 * (s2 @ c.sum(axis=0))
    return float(out[0]) if kk.ndim == 1 else out.reshape(kk.shape[:-1])


@dataclass(frozen=True)
class ProbeResult:
    order: float
    steps: np.ndarray
    errors: np.ndarray


def convergence_probe(
    stencil: Stencil,
    f: Callable[[np.ndarray], np.ndarray],
    exact: float,
    point: Sequence[float],
    steps: Sequence[float],
    power: float = 2.0,
    floor: float = 1e-12,
) -> ProbeResult:
    """Least-squares slope of ``log|error|`` against ``log h``.

    ``f`` takes an array of shape ``(..., d)``. Steps whose error falls below
    ``floor`` (relative to ``max(1, |exact|)``) are treated as hitting rounding
    and dropped together with every finer step.
    """
    point = np.asarray(point, dtype=float)
    offs = stencil.offsets
    grids = np.meshgrid(*([offs] * stencil.dimension), indexing="ij")
    disp = np.stack(grids, axis=-1)
    errors = []
    for h in steps:
        approx = float(np.sum(stencil.coefficients * f(point + h * disp))) / h**power
        errors.append(abs(approx - exact))
    errors = np.array(errors)
    steps = np.asarray(steps, dtype=float)
    usable = len(errors)
    for i, e in enumerate(errors):
        if e <= floor * max(1.0, abs(exact)):
            usable = i
            break
    if usable < 2:
        return ProbeResult(math.nan, steps[:usable], errors[:usable])
    slope = np.polyfit(np.log(steps[:usable]), np.log(errors[:usable]), 1)[0]
    return ProbeResult(float(slope), steps[:usable], errors[:usable])


def symbol_taylor_defect(stencil: Stencil, k: float) -> float:
    """Relative deviation of the 1D symbol from ``-k**2`` at frequency ``k``."""
    return float(abs(dtft_stable(stencil, k) + k * k) / (k * k))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_stencil(stencil: Stencil) -> str:
    """Metadata header lines then one row per first-axis index, 17 significant digits."""
    meta = asdict(stencil.meta)
    lines = [
        f"{_HEADER} v{FORMAT_VERSION}",
        f"# dimension={stencil.dimension}",
        f"# half_width={stencil.half_width}",
        f"# order_kind={meta['order_kind']}",
        f"# alpha={'' if meta['alpha'] is None else _fmt(meta['alpha'])}",
        f"# n_c={meta['n_c']}",
        f"# n_q={meta['n_q']}",
        f"# a={_fmt(meta['a'])}",
        f"# method={meta['method']}",
        f"# config={json.dumps(meta['config'], sort_keys=True)}",
    ]
    rows = np.atleast_2d(stencil.coefficients)
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_stencil(stencil: Stencil, path: str | Path) -> None:
    Path(path).write_text(format_stencil(stencil))


def read_stencil(path: str | Path) -> Stencil:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(_HEADER):
        raise StencilError(f"{path}: missing stencil header")
    version = int(text[0].rsplit("v", 1)[1])
    if version != FORMAT_VERSION:
        raise StencilError(f"{path}: unsupported format version {version}")
    fields = {}
    body = []
    for line in text[1:]:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            fields[key] = value
        elif line.strip():
            body.append([float(v) for v in line.split(",")])
    try:
        dim = int(fields["dimension"])
        half = int(fields["half_width"])
        meta = StencilMeta(
            order_kind=fields["order_kind"],
            alpha=float(fields["alpha"]) if fields["alpha"] else None,
            n_c=int(fields["n_c"]),
            n_q=int(fields["n_q"]),
            a=float(fields["a"]),
            method=fields["method"],
            config=json.loads(fields.get("config") or "{}"),
        )
    except (KeyError, ValueError) as exc:
        raise StencilError(f"{path}: bad header field ({exc})") from exc
    coeffs = np.array(body)
    if dim == 1:
        coeffs = coeffs.reshape(-1)
    return Stencil(dim, half, coeffs, meta)


def with_meta(stencil: Stencil, **changes) -> Stencil:
    return replace(stencil, meta=replace(stencil.meta, **changes))
