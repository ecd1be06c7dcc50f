"""Convergence and isotropy experiments on the disk benchmarks, with CSV/JSON/PGM output.

Geometry. The fine grid has spacing ``2/N_max`` and the error is summed over
the box ``[-1, 1]^2`` (indices ``|j|, |k| <= N_max/2``). A level-``i`` stencil
of half-width ``N_i`` uses spacing ``2/N_i`` (stride ``N_max/N_i`` fine
points), so it reaches distance 2 and sees the whole unit-disk support from
every evaluation point. ``f`` is sampled on the halo ``[-3, 3]^2`` and each
stencil sum is one FFT correlation with the dilated coefficient array.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from .fractional_stencil import build_fractional, sin_fft_stencil
from .integer_stencil import Stencil, build_integer_laplacian
from .reference_models import BenchmarkProblem
from .spectral_integrators import IntegratorConfig

log = logging.getLogger(__name__)

METHOD_LABELS = ("sin-fft", "he-fft", "he-filon", "he-tanhsinh")
_INTEGRATOR = {"he-fft": "fft", "he-filon": "filon", "he-tanhsinh": "tanh-sinh"}
DERIVATIVE_ORDER = 2
REACH = 2


class BenchError(ValueError):
    """Invalid experiment parameters."""


def n_iso(n_q: int, n_c: int, n: int = DERIVATIVE_ORDER) -> int:
    """Isotropy order ``N_q - n - N_c + 1`` of a Laplacian stencil."""
    return n_q - n - n_c + 1


def level_sizes(levels: int, n_max: int) -> list[int]:
    if levels < 0:
        raise BenchError("levels must be non-negative")
    sizes = [2 ** (i + 4) for i in range(levels + 1)]
    if n_max < 2 or n_max & (n_max - 1) or n_max < sizes[-1]:
        raise BenchError(f"n_max={n_max} must be a power of two >= {sizes[-1]} for {levels + 1} levels")
    return sizes


def build_method_stencil(
    method: str,
    alpha: float,
    half_width: int,
    n_c: int = 2,
    n_q: int = 4,
    config: IntegratorConfig | None = None,
) -> Stencil:
    """2D fractional stencil for a benchmark method label."""
    if method not in METHOD_LABELS:
        raise BenchError(f"unknown method {method!r}; expected one of {METHOD_LABELS}")
    if method == "sin-fft":
        return sin_fft_stencil(alpha, half_width)
    base = build_integer_laplacian(2, n_c, n_q)
    cfg = config or IntegratorConfig()
    cfg = replace(cfg, method=_INTEGRATOR[method])
    return build_fractional(base, alpha, half_width, cfg)


def _radii(spacing: float, reach: int) -> np.ndarray:
    idx = np.arange(-reach, reach + 1) * spacing
    return np.hypot(idx[:, None], idx[None, :])


@dataclass
class ReferenceGrid:
    """Exact values on the evaluation box and ``f`` samples on the stencil-reach halo.

    ``n_max`` fixes the fine spacing ``2/n_max``; evaluation indices run over
    ``-n_max/2..n_max/2`` and samples over ``-3 n_max/2..3 n_max/2``.
    """

    n_max: int
    exact: np.ndarray
    usable: np.ndarray
    samples: np.ndarray

    @property
    def spacing(self) -> float:
        return 2.0 / self.n_max

    @property
    def half(self) -> int:
        return self.n_max // 2

    @classmethod
    def build(cls, problem: BenchmarkProblem, n_max: int) -> "ReferenceGrid":
        if n_max < 2 or n_max % 2:
            raise BenchError(f"n_max must be even, got {n_max}")
        h = 2.0 / n_max
        half = n_max // 2
        r = _radii(h, half)
        # radial: evaluate each distinct radius once
        uniq, inv = np.unique(r, return_inverse=True)
        ref = problem.reference(uniq)
        exact = ref.values[inv].reshape(r.shape)
        usable = ~ref.failed[inv].reshape(r.shape)
        samples = problem.value(_radii(h, half + REACH * half))
        return cls(n_max, exact, usable, samples)

    @property
    def excluded(self) -> int:
        return int(np.count_nonzero(~self.usable))


def apply_dilated(stencil: Stencil, samples: np.ndarray, stride: int) -> np.ndarray:
    """``sum_{n,m} H[n,m] f[j + stride n, k + stride m]`` over the valid region."""
    n = stencil.half_width
    size = 2 * n * stride + 1
    kernel = np.zeros((size, size))
    kernel[::stride, ::stride] = stencil.coefficients
    # H is symmetric, so convolution and correlation coincide
    return fftconvolve(samples, kernel, mode="valid")


def _centre(a: np.ndarray, shape) -> np.ndarray:
    off = [(s - t) // 2 for s, t in zip(a.shape, shape)]
    return a[off[0] : off[0] + shape[0], off[1] : off[1] + shape[1]]


def residual_field(stencil: Stencil, grid: ReferenceGrid, power: float, stride: int | None = None) -> np.ndarray:
    """Signed ``exact - h^-power (H f)`` on the evaluation box.

    ``stride`` defaults to ``n_max / half_width`` (reach 2); the stencil
    spacing is ``h = stride * 2 / n_max``.
    """
    if stride is None:
        if grid.n_max % stencil.half_width:
            raise BenchError(f"half-width {stencil.half_width} does not divide n_max {grid.n_max}")
        stride = grid.n_max // stencil.half_width
    if stencil.half_width * stride > REACH * grid.half:
        raise BenchError("stencil reaches beyond the sampled halo")
    h = stride * grid.spacing
    full = apply_dilated(stencil, grid.samples, stride)
    return grid.exact - h ** (-power) * _centre(full, grid.exact.shape)


def error_sum(residual: np.ndarray, usable: np.ndarray, n_max: int) -> float:
    """``(1/N_max^2) sum |residual|``: per-row sums, then an ordered exact reduction."""
    rows = np.sum(np.where(usable, np.abs(residual), 0.0), axis=1)
    return math.fsum(rows.tolist()) / n_max**2


@dataclass
class ConvergenceReport:
    alpha: float
    method: str
    problem: str
    levels: list
    sizes: list
    errors: list
    rates: list = field(default_factory=list)
    excluded: int = 0
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rates and len(self.errors) > 1:
            self.rates = rates_from_errors(self.errors)
        if len(self.rates) != max(len(self.errors) - 1, 0):
            raise BenchError("rates must have one entry fewer than errors")
        if any(e < 0 for e in self.errors):
            raise BenchError("errors must be non-negative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_json_default)

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        return cls(**json.loads(text))

    def to_csv(self) -> str:
        """Rows ``alpha, method, level, N, E, r`` (``r`` empty on the last level); 17 digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "method", "level", "N", "E", "r"])
        for k, (lvl, n, e) in enumerate(zip(self.levels, self.sizes, self.errors)):
            rate = f"{self.rates[k]:.17g}" if k < len(self.rates) else ""
            w.writerow([f"{self.alpha:.17g}", self.method, lvl, n, f"{e:.17g}", rate])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, problem: str = "", config: dict | None = None) -> "ConvergenceReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise BenchError("empty convergence CSV")
        return cls(
            alpha=float(rows[0]["alpha"]),
            method=rows[0]["method"],
            problem=problem,
            levels=[int(r["level"]) for r in rows],
            sizes=[int(r["N"]) for r in rows],
            errors=[float(r["E"]) for r in rows],
            rates=[float(r["r"]) for r in rows if r["r"] != ""],
            config=config or {},
        )


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def rates_from_errors(errors: Sequence[float]) -> list[float]:
    out = []
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 else math.nan)
    return out


def run_convergence(
    problem: BenchmarkProblem,
    method: str,
    levels: int = 2,
    n_max: int = 128,
    n_c: int = 2,
    n_q: int = 4,
    config: IntegratorConfig | None = None,
    grid: ReferenceGrid | None = None,
) -> ConvergenceReport:
    """Errors ``E_i`` for ``N_i = 2^(i+4)``, ``i = 0..levels``; see the module notes for the grid."""
    sizes = level_sizes(levels, n_max)
    if grid is None or grid.n_max != n_max:
        grid = ReferenceGrid.build(problem, n_max)
    if grid.excluded:
        log.warning("%d grid point(s) excluded: reference series did not converge", grid.excluded)
    errors = []
    last = None
    for n_i in sizes:
        last = build_method_stencil(method, problem.alpha, n_i, n_c, n_q, config)
        res = residual_field(last, grid, problem.alpha)
        errors.append(error_sum(res, grid.usable, n_max))
        log.info("%s %s alpha=%g N=%d E=%.6e", problem.name, method, problem.alpha, n_i, errors[-1])
    snapshot = {
        "problem": problem.to_dict(),
        "n_max": n_max,
        "n_c": n_c,
        "n_q": n_q,
        "geometry": "fine spacing 2/N_max, sum over [-1,1]^2, stencil spacing 2/N_i (reach 2), f = 0 for r > 1",
        "stencil": dict(last.meta.config) if last is not None else {},
    }
    return ConvergenceReport(
        alpha=float(problem.alpha),
        method=method,
        problem=problem.name,
        levels=list(range(levels + 1)),
        sizes=sizes,
        errors=errors,
        excluded=grid.excluded,
        config=snapshot,
    )


# --- isotropy --------------------------------------------------------------------


@dataclass
class IsotropyResult:
    n_c: int
    n_q: int
    n_iso: int
    error: np.ndarray
    edges: np.ndarray
    scores: np.ndarray

    def summary(self) -> dict:
        return {
            "n_c": self.n_c,
            "n_q": self.n_q,
            "n_iso": self.n_iso,
            "max_error": float(np.nanmax(self.error)),
            "mean_score": float(np.nanmean(self.scores)),
        }


def annulus_edges(n: int, r_min: float = 0.2, r_max: float = 0.9, width: float | None = None) -> np.ndarray:
    """Thin annuli of default width ``2/n`` (two grid spacings) covering ``[r_min, r_max]``."""
    width = width or 2.0 / n
    count = max(1, int(round((r_max - r_min) / width)))
    return np.linspace(r_min, r_max, count + 1)


def isotropy_scores(field_values: np.ndarray, radius: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Relative standard deviation over angle inside each annulus.

    The radial trend across an annulus is removed first (least-squares line
    in ``r``) so only angular variation is scored; a radial field scores 0.
    """
    scores = np.full(len(edges) - 1, np.nan)
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        sel = (radius >= lo) & (radius < hi)
        if np.count_nonzero(sel) < 4:
            continue
        v = field_values[sel]
        r = radius[sel]
        mean = float(np.mean(np.abs(v)))
        if mean == 0.0:
            scores[k] = 0.0
            continue
        design = np.stack([np.ones_like(r), r - r.mean()], axis=1)
        coef, *_ = np.linalg.lstsq(design, v, rcond=None)
        resid = v - design @ coef
        scores[k] = float(np.sqrt(np.mean(resid**2)) / mean)
    return scores


def run_isotropy(
    problem: BenchmarkProblem,
    n: int = 64,
    settings: Sequence[tuple[int, int]] = ((2, 4), (2, 5)),
    method: str = "he-filon",
    config: IntegratorConfig | None = None,
    edges: np.ndarray | None = None,
) -> list[IsotropyResult]:
    """Absolute error fields on the ``(2n+1)^2`` grid of spacing ``1/n`` for each ``(N_c, N_q)``.

    Fractional stencils have half-width ``2n`` (reach 2) at spacing ``1/n``.
    With ``problem.alpha == 2`` the integer base stencil itself is used.
    """
    grid = ReferenceGrid.build(problem, 2 * n)
    radius = _radii(1.0 / n, n)
    edges = annulus_edges(n) if edges is None else np.asarray(edges)
    out = []
    for n_c, n_q in settings:
        if problem.alpha == 2.0:
            res = residual_field(build_integer_laplacian(2, n_c, n_q), grid, 2.0, stride=1)
        else:
            stencil = build_method_stencil(method, problem.alpha, 2 * n, n_c, n_q, config)
            res = residual_field(stencil, grid, problem.alpha, stride=1)
        err = np.where(grid.usable, np.abs(res), np.nan)
        scores = isotropy_scores(np.nan_to_num(err), radius, edges)
        out.append(IsotropyResult(n_c, n_q, n_iso(n_q, n_c), err, edges, scores))
    return out


def fraction_better(high: IsotropyResult, low: IsotropyResult) -> float:
    """Share of annuli where ``high`` scores strictly lower than ``low``."""
    ok = np.isfinite(high.scores) & np.isfinite(low.scores)
    if not np.any(ok):
        return math.nan
    return float(np.mean(high.scores[ok] < low.scores[ok]))


# --- output ----------------------------------------------------------------------


def write_pgm(values: np.ndarray, path: str | Path, source: dict | None = None, maxval: int = 255) -> dict:
    """Plain P2 graymap scaled by the field maximum, plus a ``.json`` sidecar with the scale."""
    values = np.nan_to_num(np.asarray(values, dtype=float))
    top = float(np.max(np.abs(values)))
    scale = maxval / top if top > 0 else 0.0
    pixels = np.rint(np.abs(values) * scale).astype(int)
    lines = ["P2", f"{values.shape[1]} {values.shape[0]}", str(maxval)]
    lines.extend(" ".join(str(p) for p in row) for row in pixels)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    meta = {
        "max_value": top,
        "maxval": maxval,
        "normalization": "abs(value) / max_value * maxval",
        "shape": list(values.shape),
    }
    if source:
        meta["source"] = source
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, default=_json_default))
    return meta


def read_pgm(path: str | Path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if not tokens or tokens[0] != "P2":
        raise BenchError(f"{path}: not a plain PGM")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array(tokens[4:], dtype=int).reshape(h, w)


def write_field_csv(values: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, values, delimiter=",", fmt="%.17g")
