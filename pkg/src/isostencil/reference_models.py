"""Benchmark functions on the unit disk and their exact 2D fractional Laplacians.

Both are radial, vanish for ``r > 1`` and have closed-form Riesz fractional
Laplacians written with generalized hypergeometric series. Values returned by
``*_frac_laplacian`` are ``-(-Delta)^(alpha/2) f``, i.e. the sign convention
of the stencils (negative at the peak).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .kernels import SERIES_CAP, hypergeometric_series

BETA = 6.6
POWER_N = 6
NEAR_ONE = 0.999
TOL = 1e-14
TOL_NEAR_ONE = 1e-10
# f2's interior groups carry opposite poles at alpha = 1 and cancel to about
# 1e-9/|alpha - 1| absolute in doubles; inside this band use extended precision
_EXTENDED_BAND = 0.05


class ReferenceModelError(ArithmeticError):
    """Reference solution could not be evaluated (pole, or series not converged)."""


class SeriesError(ReferenceModelError):
    """Series hit its term cap; ``partial`` and ``error`` hold what was reached."""

    def __init__(self, message: str, partial: float, error: float):
        super().__init__(message)
        self.partial = partial
        self.error = error


@dataclass(frozen=True)
class HypergeometricSpec:
    top: tuple
    bottom: tuple
    z: float

    def __post_init__(self):
        object.__setattr__(self, "top", tuple(float(a) for a in self.top))
        object.__setattr__(self, "bottom", tuple(float(b) for b in self.bottom))
        if any(b <= 0 and b == math.floor(b) for b in self.bottom):
            raise ReferenceModelError(f"bottom parameter at a pole: {self.bottom}")
        if abs(self.z) > 1.0 and not self.terminating:
            raise ReferenceModelError(f"|z| = {abs(self.z)} > 1 needs analytic continuation")

    @property
    def terminating(self) -> bool:
        return any(a <= 0 and a == math.floor(a) for a in self.top)

    @property
    def margin(self) -> float:
        """``sum(bottom) + 1 - sum(top)``; the series at ``|z| = 1`` converges when positive."""
        return sum(self.bottom) + 1.0 - sum(self.top)


@dataclass(frozen=True)
class SeriesValue:
    value: float
    error: float
    terms: int


def phq(spec: HypergeometricSpec, tol: float = TOL, cap: int = SERIES_CAP) -> SeriesValue:
    """Partial sums of ``pFq(top; bottom; z)`` until two terms fall below ``tol`` relative."""
    if abs(spec.z) == 1.0 and not spec.terminating and spec.margin <= 0:
        raise ReferenceModelError(f"series diverges at |z| = 1 (parameter margin {spec.margin:.3g})")
    values, errors, counts = hypergeometric_series(
        np.array(spec.top), np.array(spec.bottom), np.array([float(spec.z)]), tol, cap
    )
    value, error, terms = float(values[0]), float(errors[0]), int(counts[0])
    if not np.isfinite(error):
        raise SeriesError(f"no convergence after {terms} terms at z={spec.z}", value, error)
    return SeriesValue(value, error, terms)


def gamma_ratio(num: Sequence[float], den: Sequence[float]) -> float:
    """``prod Gamma(num) / prod Gamma(den)`` through log-Gamma.

    A pole in the denominator makes the ratio 0 (the limit of the full
    coefficient); a pole in the numerator is an error.
    """

    def pole(x):
        return x <= 0 and x == math.floor(x)

    if any(pole(x) for x in num):
        raise ReferenceModelError(f"Gamma pole in numerator: {num}")
    if any(pole(x) for x in den):
        return 0.0
    log_mag = sum(float(special.gammaln(x)) for x in num) - sum(float(special.gammaln(x)) for x in den)
    sign = np.prod([special.gammasgn(x) for x in num]) * np.prod([special.gammasgn(x) for x in den])
    return float(sign) * math.exp(log_mag)


@dataclass(frozen=True)
class ReferenceField:
    """Values on an array of radii with per-point status."""

    values: np.ndarray
    flagged: np.ndarray
    failed: np.ndarray

    @property
    def excluded(self) -> int:
        return int(np.count_nonzero(self.failed))


def _series(top, bottom, z, tol=TOL):
    """Series on an array; points with ``|z| > NEAR_ONE`` are flagged.

    Flagged points are still tried at ``tol`` first and fall back to
    ``TOL_NEAR_ONE`` only if the strict pass hits the cap: f2's interior
    formula cancels terms up to 1e9 times its value, so the looser tolerance
    is kept as a last resort.
    """
    z = np.asarray(z, dtype=float)
    top = np.asarray(top, float)
    bottom = np.asarray(bottom, float)
    values, errors, _ = hypergeometric_series(top, bottom, z, tol, SERIES_CAP)
    flagged = np.abs(z) > NEAR_ONE
    retry = flagged & ~np.isfinite(errors)
    if np.any(retry):
        v, e, _ = hypergeometric_series(top, bottom, z[retry], TOL_NEAR_ONE, SERIES_CAP)
        values[retry] = v
        errors[retry] = e
    return values, flagged, ~np.isfinite(errors)


def _check_alpha(alpha):
    if not 0.0 < alpha <= 2.0:
        raise ReferenceModelError(f"alpha must lie in (0, 2], got {alpha}")


# --- f1 = (1 - r^2)^beta ---------------------------------------------------------


def f1_value(r, beta: float = BETA):
    r = np.asarray(r, dtype=float)
    out = np.where(r <= 1.0, np.clip(1.0 - r * r, 0.0, None) ** beta, 0.0)
    return float(out) if out.ndim == 0 else out


def _f1_laplacian_classical(r, beta):
    s = 1.0 - r * r
    inside = r <= 1.0
    sc = np.where(inside, s, 0.0)
    return np.where(
        inside,
        -4.0 * beta * sc ** (beta - 1.0) + 4.0 * beta * (beta - 1.0) * r * r * sc ** (beta - 2.0),
        0.0,
    )


def f1_field(r, alpha: float, beta: float = BETA) -> ReferenceField:
    _check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = r.reshape(-1)
    values = np.zeros(r.shape)
    flagged = np.zeros(r.shape, dtype=bool)
    failed = np.zeros(r.shape, dtype=bool)
    if alpha == 2.0:
        values = _f1_laplacian_classical(r, beta)
        return ReferenceField(values.reshape(shape), flagged.reshape(shape), failed.reshape(shape))
    a2 = 0.5 * alpha
    inside = r <= 1.0
    if np.any(inside):
        pref = -(2.0**alpha) * gamma_ratio([1.0 + beta, 1.0 + a2], [1.0 + beta - a2])
        v, fl, fa = _series([1.0 + a2, a2 - beta], [1.0], r[inside] ** 2)
        values[inside], flagged[inside], failed[inside] = pref * v, fl, fa
    out = ~inside
    if np.any(out):
        ro = r[out]
        pref = -(2.0**alpha) / (1.0 + beta) * gamma_ratio([1.0 + a2], [-a2])
        v, fl, fa = _series([1.0 + a2, 1.0 + a2], [2.0 + beta], ro**-2)
        values[out], flagged[out], failed[out] = pref * v / ro ** (2.0 + alpha), fl, fa
    return ReferenceField(values.reshape(shape), flagged.reshape(shape), failed.reshape(shape))


def _strict(field: ReferenceField):
    if np.any(field.failed):
        raise ReferenceModelError(f"series did not converge at {field.excluded} point(s)")
    v = field.values
    return float(v) if v.ndim == 0 else v


def f1_frac_laplacian(r, alpha: float, beta: float = BETA):
    """``-(-Delta)^(alpha/2) f1`` in 2D; raises if any series fails to converge."""
    return _strict(f1_field(r, alpha, beta))


# --- f2 = (4 r (1 - r))^n ---------------------------------------------------------


def f2_value(r, n: int = POWER_N):
    r = np.asarray(r, dtype=float)
    out = np.where(r <= 1.0, np.clip(4.0 * r * (1.0 - r), 0.0, None) ** n, 0.0)
    return float(out) if out.ndim == 0 else out


def _f2_laplacian_classical(r, n):
    inside = r <= 1.0
    rc = np.where(inside, r, 0.0)
    g = 4.0 * rc * (1.0 - rc)
    dg = 4.0 - 8.0 * rc
    second = n * (n - 1) * g ** (n - 2) * dg**2 - 8.0 * n * g ** (n - 1)
    # g^(n-1) / r without dividing by zero at the origin
    g_over_r = 4.0 ** (n - 1) * rc ** (n - 2) * (1.0 - rc) ** (n - 1)
    first = n * g_over_r * dg
    return np.where(inside, second + first, 0.0)


def _f2_interior(r, alpha, n):
    a2 = 0.5 * alpha
    z = r * r
    total = np.zeros(r.shape)
    flagged = np.abs(z) > NEAR_ONE
    failed = np.zeros(r.shape, dtype=bool)
    g1 = gamma_ratio([(alpha - 1.0 - n) / 2.0, 2.0 + n], [-(n + 1.0) / 2.0, n / 2.0, (3.0 + n - alpha) / 2.0])
    g2 = gamma_ratio([(alpha - n) / 2.0, 1.0 + n], [-n / 2.0, (1.0 + n) / 2.0, (2.0 + n - alpha) / 2.0])
    inner = np.zeros(r.shape)
    if g1 != 0.0:
        v, _, fa = _series(
            [(1.0 - n) / 2.0, 1.0 - n / 2.0, (3.0 + n) / 2.0, (3.0 + n) / 2.0],
            [1.5, (3.0 + n - alpha) / 2.0, (3.0 + n - alpha) / 2.0],
            z,
        )
        inner += g1 * r * v
        failed |= fa
    if g2 != 0.0:
        v, _, fa = _series(
            [-n / 2.0, (1.0 - n) / 2.0, (2.0 + n) / 2.0, (2.0 + n) / 2.0],
            [0.5, 1.0 + (n - alpha) / 2.0, 1.0 + (n - alpha) / 2.0],
            z,
        )
        inner -= g2 * v
        failed |= fa
    total += math.sqrt(math.pi) * 2.0 ** (n + alpha) * r ** (n - alpha) * inner
    # Gamma(n - alpha) here, not Gamma((n - alpha)/2): at r = 0 this term must equal
    # 2 pi C 4^n B(n - alpha, n + 1) from direct integration of the radial profile
    g3 = 2.0 ** (1 + 2 * n + alpha) * gamma_ratio([n - alpha, 1.0 + n, 1.0 + a2], [1.0 + 2 * n - alpha, -a2])
    if g3 != 0.0:
        v, _, fa = _series(
            [a2 - n, (1.0 + alpha) / 2.0 - n, 1.0 + a2, 1.0 + a2],
            [1.0, (1.0 + alpha - n) / 2.0, 1.0 + (alpha - n) / 2.0],
            z,
        )
        total -= g3 * v
        failed |= fa
    return total, flagged, failed


def _f2_interior_extended(r, alpha, n, dps: int = 60):
    """Interior f2 value in extended precision, for ``alpha`` near 1.

    Singular part ``-4^n sum_k C(n,k) (-1)^k c(n+k) r^(n+k-alpha)`` with
    ``c(p)`` the coefficient of ``(-Delta)^(a/2) |x|^p = c(p) |x|^(p-a)``, plus
    the regular ``4F3`` series; the two carry opposite poles at ``alpha = 1``
    which cancel, so ``alpha = 1`` itself is the mean of ``1 +- 1e-25``.
    """
    import mpmath as mp

    out = np.empty(r.shape)
    uniq, inv = np.unique(r, return_inverse=True)
    vals = np.empty(uniq.shape)
    with mp.workdps(dps):
        a0 = mp.mpf(alpha)
        shifts = (mp.mpf("1e-25"), -mp.mpf("1e-25")) if abs(alpha - 1.0) < 1e-14 else (mp.mpf(0),)
        for idx, rv in enumerate(uniq):
            x = mp.mpf(rv)
            acc = mp.mpf(0)
            for sh in shifts:
                a = a0 + sh
                sing = mp.mpf(0)
                for k in range(n + 1):
                    p = mp.mpf(n + k)
                    c = 2**a * mp.gamma(1 + p / 2) * mp.gamma((a - p) / 2) * mp.rgamma(-p / 2) * mp.rgamma(1 + (p - a) / 2)
                    if c != 0 and x != 0:
                        sing += mp.binomial(n, k) * (-1) ** (k + 1) * c * x ** (p - a)
                s_ = 1 + a / 2
                lead = 2 ** (1 + a) * mp.gamma(s_) / abs(mp.gamma(-a / 2))
                lead *= 4**n * mp.factorial(n) * mp.gamma(n - a) * mp.rgamma(2 * n + 1 - a)
                reg = lead * mp.hyper([s_, s_, a / 2 - n, (1 + a) / 2 - n], [1, (1 + a - n) / 2, 1 + (a - n) / 2], x * x)
                acc += (4**n) * sing + reg
            vals[idx] = float(acc / len(shifts))
    out[:] = vals[inv]
    return out


def f2_field(r, alpha: float, n: int = POWER_N, extended: bool = False) -> ReferenceField:
    """Interior values lose about ``1e-16`` times the largest group (up to 1e7 for
    ``alpha`` near 2, so about 1e-7 absolute near ``r = 1``); ``extended=True``
    evaluates the interior in extended precision for every ``alpha``.
    """
    _check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = r.reshape(-1)
    values = np.zeros(r.shape)
    flagged = np.zeros(r.shape, dtype=bool)
    failed = np.zeros(r.shape, dtype=bool)
    if alpha == 2.0:
        values = _f2_laplacian_classical(r, n)
        return ReferenceField(values.reshape(shape), flagged.reshape(shape), failed.reshape(shape))
    inside = r <= 1.0
    if np.any(inside):
        ri = r[inside]
        if extended or abs(alpha - 1.0) < _EXTENDED_BAND:
            values[inside] = _f2_interior_extended(ri, alpha, n)
            flagged[inside] = ri * ri > NEAR_ONE
        else:
            values[inside], flagged[inside], failed[inside] = _f2_interior(ri, alpha, n)
    out = ~inside
    if np.any(out):
        ro = r[out]
        a2 = 0.5 * alpha
        pref = -math.sqrt(math.pi) * 2.0 ** (alpha - 1.0) * gamma_ratio([1.0 + n, 1.0 + a2], [1.5 + n, -a2])
        v, fl, fa = _series([1.0 + n / 2.0, (3.0 + n) / 2.0, 1.0 + a2, 1.0 + a2], [1.0, 1.5 + n, 2.0 + n], ro**-2)
        values[out], flagged[out], failed[out] = pref * v / ro ** (2.0 + alpha), fl, fa
    return ReferenceField(values.reshape(shape), flagged.reshape(shape), failed.reshape(shape))


def f2_frac_laplacian(r, alpha: float, n: int = POWER_N, extended: bool = False):
    """``-(-Delta)^(alpha/2) f2`` in 2D; raises if any series fails to converge."""
    return _strict(f2_field(r, alpha, n, extended))


# --- problem wrapper --------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkProblem:
    """``f1`` takes ``shape = beta``; ``f2`` takes ``shape = n``."""

    name: str
    alpha: float
    shape: float | None = None

    def __post_init__(self):
        if self.name not in ("f1", "f2"):
            raise ReferenceModelError(f"unknown problem {self.name!r}; expected f1 or f2")
        _check_alpha(self.alpha)
        if self.shape is None:
            object.__setattr__(self, "shape", BETA if self.name == "f1" else POWER_N)

    def value(self, r):
        return f1_value(r, self.shape) if self.name == "f1" else f2_value(r, int(self.shape))

    def reference(self, r) -> ReferenceField:
        if self.name == "f1":
            return f1_field(r, self.alpha, self.shape)
        return f2_field(r, self.alpha, int(self.shape))

    def to_dict(self) -> dict:
        return {"name": self.name, "alpha": self.alpha, "shape": self.shape}


def export_reference_csv(problem: BenchmarkProblem, radii, path: str | Path) -> None:
    """Columns ``r, f, frac_laplacian, flagged, failed`` at 17 significant digits."""
    radii = np.asarray(radii, dtype=float)
    ref = problem.reference(radii)
    f = problem.value(radii)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "f", "frac_laplacian", "flagged", "failed"])
        for row in zip(radii, np.atleast_1d(f), ref.values, ref.flagged, ref.failed):
            w.writerow([f"{row[0]:.17g}", f"{row[1]:.17g}", f"{row[2]:.17g}", int(row[3]), int(row[4])])
