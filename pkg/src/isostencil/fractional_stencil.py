"""Riesz fractional Laplacian stencils built from an integer Laplacian stencil's symbol.

Coefficients approximate ``-(-Delta)^(alpha/2)`` (negative centre) and carry no
grid spacing; apply them with an ``h**-alpha`` prefactor.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .integer_stencil import Stencil, StencilMeta, symbol_1d, symbol_2d_grid
from .spectral_integrators import (
    IntegratorConfig,
    build_rule,
    coefficients_1d,
    coefficients_2d,
    default_n_f,
    fft_inverse_dtft,
    fft_sample_grid,
    sin_fft_samples_2d,
)


class FractionalError(ValueError):
    """Invalid fractional order or a base stencil whose symbol changes sign."""


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 2.0:
        raise FractionalError(f"alpha must lie in (0, 2], got {alpha}")


def _check_symbol(values: np.ndarray) -> None:
    top = float(np.max(values))
    scale = float(np.max(np.abs(values)))
    if top > 1e-13 * scale:
        raise FractionalError(
            f"base stencil symbol reaches {top:.3e} > 0; its fractional power would need the "
            "absolute value and no longer approximates the Riesz symbol"
        )


def _mirror_1d(one_sided: np.ndarray) -> np.ndarray:
    return np.concatenate([one_sided[:0:-1], one_sided])


def _mirror_2d(quadrant: np.ndarray) -> np.ndarray:
    rows = np.concatenate([quadrant[:0:-1], quadrant], axis=0)
    return np.concatenate([rows[:, :0:-1], rows], axis=1)


def build_fractional(
    base: Stencil,
    alpha: float,
    half_width: int,
    config: IntegratorConfig | None = None,
) -> Stencil:
    """Fractional stencil of half-width ``half_width`` from ``base``'s symbol.

    The ``filon`` and ``tanh-sinh`` methods evaluate the cosine transform with
    :mod:`isostencil.spectral_integrators`; ``fft`` is the trapezoidal baseline.
    """
    _check_alpha(alpha)
    if base.meta.order_kind != "integer":
        raise FractionalError("base must be an integer Laplacian stencil")
    if half_width < base.half_width:
        raise FractionalError(f"half_width {half_width} is smaller than the base half-width {base.half_width}")
    config = config or IntegratorConfig()
    n = half_width
    d = base.dimension
    n_f = config.n_f or default_n_f(base.meta.n_c, base.meta.n_q)
    info = config.to_dict()
    if alpha == 2.0 and config.method != "fft":
        # no branch point: |S| = -S is a trig polynomial of degree base.half_width,
        # which a trapezoid rule with more samples integrates exactly
        m = n + 1
        w = fft_sample_grid(m)
        samples = symbol_1d(base.one_sided(), w) if d == 1 else symbol_2d_grid(base.coefficients, w, w)
        _check_symbol(samples)
        full = fft_inverse_dtft(samples, alpha)
        coeffs = full[(slice(1, -1),) * d]
        info["exact_rule"] = "trapezoid"
    elif config.method == "fft":
        w = fft_sample_grid(n)
        samples = symbol_1d(base.one_sided(), w) if d == 1 else symbol_2d_grid(base.coefficients, w, w)
        _check_symbol(samples)
        coeffs = fft_inverse_dtft(samples, alpha)
    else:
        rule = build_rule(n, alpha, config, m_max=n, n_f=n_f, dimension=d)
        info.update({k: v for k, v in rule.info.items() if k not in info or info[k] is None})
        if d == 1:
            s = symbol_1d(base.one_sided(), rule.nodes)
            _check_symbol(s)
            coeffs = _mirror_1d(coefficients_1d(rule, s, alpha))
        else:
            s = symbol_2d_grid(base.coefficients, rule.nodes, rule.nodes)
            _check_symbol(s)
            coeffs = _mirror_2d(coefficients_2d(rule, s, alpha))
    meta = StencilMeta(
        order_kind="fractional",
        alpha=float(alpha),
        n_c=base.meta.n_c,
        n_q=base.meta.n_q,
        a=base.meta.a,
        method=f"he-{config.method}",
        config={k: (float(v) if isinstance(v, np.floating) else v) for k, v in info.items()},
    )
    return Stencil(d, n, coeffs, meta)


def sin_fft_stencil(alpha: float, half_width: int) -> Stencil:
    """2D baseline: FFT of the five-point Laplacian symbol's fractional power."""
    _check_alpha(alpha)
    coeffs = fft_inverse_dtft(sin_fft_samples_2d(half_width), alpha)
    meta = StencilMeta("fractional", float(alpha), 1, 2, 1.0, "sin-fft", {"method": "fft"})
    return Stencil(2, half_width, coeffs, meta)


def closed_form_1d(alpha: float, n: int) -> float:
    """``(-1)^(n+1) Gamma(alpha+1) / (Gamma(alpha/2-n+1) Gamma(alpha/2+n+1))``.

    Exact coefficients of the 1D second-order base raised to ``alpha/2``.
    Returns 0 where ``Gamma(alpha/2-n+1)`` has a pole.
    """
    _check_alpha(alpha)
    n = abs(int(n))
    x = 0.5 * alpha - n + 1.0
    if x <= 0 and x == math.floor(x):
        return 0.0
    log_mag = math.lgamma(alpha + 1.0) - math.lgamma(x) - math.lgamma(0.5 * alpha + n + 1.0)
    sign = (-1.0) ** (n + 1) * float(special.gammasgn(x))
    return sign * math.exp(log_mag)


def _tail_coefficients(alpha: float, m: np.ndarray) -> np.ndarray:
    """``h_m`` for ``m >= 1`` via the reflected form, positive for every ``m > alpha/2``."""
    pref = math.gamma(alpha + 1.0) * math.sin(0.5 * math.pi * alpha) / math.pi
    return pref * np.exp(special.gammaln(m - 0.5 * alpha) - special.gammaln(m + 0.5 * alpha + 1.0))


def aliasing_error_1d(alpha: float, n: int, direct_terms: int = 20000) -> float:
    """Scaled zero-frequency defect ``n^alpha sum_{|k|<=n} (h~_k - h_k)`` of the FFT stencil.

    ``h~`` is the trapezoidal (FFT) stencil with ``2n`` samples, whose alias sum
    is ``h~_k - h_k = sum_{j != 0} h_{k + 2nj}``. The tail beyond
    ``direct_terms`` uses ``Gamma(m-a/2)/Gamma(m+a/2+1) ~ m^(-1-a) (1 + O(m^-2))``
    summed with the Hurwitz zeta function.
    """
    _check_alpha(alpha)
    if n < 1:
        raise FractionalError("n must be positive")
    if alpha == 2.0:
        return 0.0
    pref = math.gamma(alpha + 1.0) * math.sin(0.5 * math.pi * alpha) / math.pi
    cut = n + direct_terms
    m = np.arange(n + 1, cut + 1, dtype=float)
    beyond = float(np.sum(_tail_coefficients(alpha, m))) + pref * float(special.zeta(1.0 + alpha, cut + 1))
    # odd multiples (2j+1) n, j >= 1, are reached from both k = n and k = -n
    j = np.arange(1, direct_terms + 1, dtype=float)
    odd = float(np.sum(_tail_coefficients(alpha, (2 * j + 1) * n)))
    odd += pref * n ** (-1.0 - alpha) * 2.0 ** (-1.0 - alpha) * float(special.zeta(1.0 + alpha, direct_terms + 1.5))
    edge = float(_tail_coefficients(alpha, np.array([float(n)]))[0])
    total = 2.0 * (edge + beyond + odd)
    return n**alpha * total


def fft_defect_1d(alpha: float, n: int) -> float:
    """Same quantity computed from an actual FFT stencil, for cross-checking."""
    w = fft_sample_grid(n)
    samples = symbol_1d(np.array([-2.0, 1.0]), w)
    approx = fft_inverse_dtft(samples, alpha)
    exact = np.array([closed_form_1d(alpha, k) for k in range(-n, n + 1)])
    return float(n**alpha * np.sum(approx - exact))
