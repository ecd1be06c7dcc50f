"""Hot loops with a numba build and a numpy build of each.

``filon_moments`` and ``hypergeometric_series`` dispatch through
:func:`isostencil._accel.select`; the ``*_loop`` and ``*_numpy`` variants are
exported so tests and the benchmark can compare the two paths directly.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit, select

SERIES_CAP = 10_000


def _filon_moments_loop(freqs, centres, s, k_max):
    out = np.zeros((freqs.shape[0], centres.shape[0], k_max + 1))
    for i in range(freqs.shape[0]):
        n = float(freqs[i])
        x = n * s
        for m in range(centres.shape[0]):
            c = centres[m]
            if n == 0.0:
                for k in range(0, k_max + 1, 2):
                    out[i, m, k] = 2.0 * s ** (k + 1) / (k + 1)
                continue
            cn = math.cos(n * c)
            sn = math.sin(n * c)
            if x <= k_max + 1.0:
                # power series in n*s: the recurrence divides by n and loses digits here
                for k in range(k_max + 1):
                    total = 0.0
                    if k % 2 == 0:
                        term = 1.0
                        j = 0
                        while True:
                            piece = term / (2 * j + k + 1)
                            total += piece
                            if abs(piece) <= 1e-18 * abs(total) and j > x:
                                break
                            term *= -x * x / ((2 * j + 1) * (2 * j + 2))
                            j += 1
                        out[i, m, k] = 2.0 * s ** (k + 1) * cn * total
                    else:
                        term = x
                        j = 0
                        while True:
                            piece = term / (2 * j + k + 2)
                            total += piece
                            if abs(piece) <= 1e-18 * abs(total) and j > x:
                                break
                            term *= -x * x / ((2 * j + 2) * (2 * j + 3))
                            j += 1
                        out[i, m, k] = -2.0 * s ** (k + 1) * sn * total
                continue
            a = c - s
            b = c + s
            sa = math.sin(n * a)
            sb = math.sin(n * b)
            ca = math.cos(n * a)
            cb = math.cos(n * b)
            out[i, m, 0] = (sb - sa) / n
            if k_max >= 1:
                out[i, m, 1] = s * (sb + sa) / n + (cb - ca) / (n * n)
            for k in range(2, k_max + 1):
                sk = s**k
                msk = (-s) ** k
                sk1 = s ** (k - 1)
                msk1 = (-s) ** (k - 1)
                out[i, m, k] = (
                    sk * sb - msk * sa + (k / n) * (sk1 * cb - msk1 * ca - (k - 1) * out[i, m, k - 2])
                ) / n
    return out


_filon_moments_jit = njit(_filon_moments_loop)


def filon_moments_numpy(freqs, centres, s, k_max):
    """Vectorised moments ``J_k = int_{-s}^{s} cos(n (x + c)) x^k dx``."""
    freqs = np.asarray(freqs, dtype=float)
    centres = np.asarray(centres, dtype=float)
    n = freqs[:, None]
    c = centres[None, :]
    x = np.broadcast_to(n * s, (freqs.size, centres.size))
    out = np.zeros((freqs.size, centres.size, k_max + 1))
    cn = np.cos(n * c)
    sn = np.sin(n * c)
    # series branch, fixed number of terms (x never exceeds k_max + 1 here)
    n_terms = int(max(k_max + 1.0, 1.0) * 2 + 30)
    j = np.arange(n_terms)
    xs = x[..., None]
    # running products, as in the loop version; exp(log) would cost digits where the series cancels
    x2 = -(xs * xs)
    even_ratio = np.concatenate([np.ones_like(xs), x2 / ((2 * j[:-1] + 1) * (2 * j[:-1] + 2))], axis=-1)
    odd_ratio = np.concatenate([xs, x2 / ((2 * j[:-1] + 2) * (2 * j[:-1] + 3))], axis=-1)
    even_terms = np.cumprod(even_ratio, axis=-1)
    odd_terms = np.cumprod(odd_ratio, axis=-1)
    for k in range(k_max + 1):
        if k % 2 == 0:
            ser = 2.0 * s ** (k + 1) * cn * np.sum(even_terms / (2 * j + k + 1), axis=-1)
        else:
            ser = -2.0 * s ** (k + 1) * sn * np.sum(odd_terms / (2 * j + k + 2), axis=-1)
        out[:, :, k] = ser
    big = (x > k_max + 1.0) & (n != 0)
    if np.any(big):
        nn = np.broadcast_to(n, x.shape)[big]
        cc = np.broadcast_to(c, x.shape)[big]
        a = cc - s
        b = cc + s
        sa, sb, ca, cb = np.sin(nn * a), np.sin(nn * b), np.cos(nn * a), np.cos(nn * b)
        rec = np.zeros((nn.size, k_max + 1))
        rec[:, 0] = (sb - sa) / nn
        if k_max >= 1:
            rec[:, 1] = s * (sb + sa) / nn + (cb - ca) / nn**2
        for k in range(2, k_max + 1):
            rec[:, k] = (
                s**k * sb - (-s) ** k * sa + (k / nn) * (s ** (k - 1) * cb - (-s) ** (k - 1) * ca - (k - 1) * rec[:, k - 2])
            ) / nn
        out[big] = rec
    zero = freqs == 0
    if np.any(zero):
        ks = np.arange(k_max + 1)
        mono = np.where(ks % 2 == 0, 2.0 * s ** (ks + 1) / (ks + 1), 0.0)
        out[zero] = mono
    return out


def filon_moments_loop(freqs, centres, s, k_max):
    """Jitted moments (plain Python loops when numba is unavailable)."""
    return _filon_moments_jit(
        np.ascontiguousarray(freqs, dtype=np.int64), np.ascontiguousarray(centres, dtype=float), float(s), int(k_max)
    )


def filon_moments(freqs, centres, s, k_max):
    return select(filon_moments_loop, filon_moments_numpy)(freqs, centres, s, k_max)


def _pfq_loop(top, bottom, z, tol, cap):
    values = np.zeros(z.shape[0])
    errors = np.zeros(z.shape[0])
    counts = np.zeros(z.shape[0], dtype=np.int64)
    for i in range(z.shape[0]):
        term = 1.0
        total = 1.0
        small = 0
        last_ratio = 0.0
        j = 0
        while j < cap:
            ratio = z[i] / (j + 1.0)
            for a in top:
                ratio *= a + j
            for b in bottom:
                ratio /= b + j
            term *= ratio
            total += term
            j += 1
            if term == 0.0:
                small = 2
                last_ratio = 0.0
                break
            last_ratio = abs(ratio)
            # near z = 1 the terms decay algebraically: judge the tail, not the term
            tail = abs(term) / (1.0 - last_ratio) if last_ratio < 1.0 else math.inf
            if tail <= tol * abs(total):
                small += 1
                if small >= 2:
                    break
            else:
                small = 0
        counts[i] = j
        if small >= 2:
            tail = abs(term) / (1.0 - last_ratio) if last_ratio < 1.0 else abs(term) * j
            errors[i] = tail
        else:
            errors[i] = np.inf
        values[i] = total
    return values, errors, counts


_pfq_jit = njit(_pfq_loop)


def hypergeometric_series_loop(top, bottom, z, tol=1e-14, cap=SERIES_CAP):
    return _pfq_jit(
        np.ascontiguousarray(top, dtype=float),
        np.ascontiguousarray(bottom, dtype=float),
        np.ascontiguousarray(z, dtype=float),
        float(tol),
        int(cap),
    )


def hypergeometric_series_numpy(top, bottom, z, tol=1e-14, cap=SERIES_CAP):
    """Same stopping rule as the loop version, advanced for all ``z`` at once.

    Stops after two consecutive terms whose geometric tail estimate
    ``|t| / (1 - |ratio|)`` is below ``tol`` relative to the partial sum.
    """
    top = np.asarray(top, dtype=float)
    bottom = np.asarray(bottom, dtype=float)
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    small = np.zeros(z.shape, dtype=np.int64)
    counts = np.zeros(z.shape, dtype=np.int64)
    last_ratio = np.zeros_like(z)
    active = np.ones(z.shape, dtype=bool)
    j = 0
    # finished or divergent entries may overflow; divergence surfaces as an infinite error
    with np.errstate(over="ignore", invalid="ignore"):
        while j < cap and np.any(active):
            ratio = z / (j + 1.0)
            for a in top:
                ratio = ratio * (a + j)
            for b in bottom:
                ratio = ratio / (b + j)
            term = np.where(active, term * ratio, term)
            total = np.where(active, total + term, total)
            counts = np.where(active, j + 1, counts)
            hit_zero = active & (term == 0.0)
            last_ratio = np.where(active, np.where(hit_zero, 0.0, np.abs(ratio)), last_ratio)
            with np.errstate(divide="ignore"):
                est = np.where(np.abs(ratio) < 1.0, np.abs(term) / (1.0 - np.abs(ratio)), np.inf)
            below = est <= tol * np.abs(total)
            small = np.where(active, np.where(hit_zero, 2, np.where(below, small + 1, 0)), small)
            active &= small < 2
            j += 1
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(last_ratio < 1.0, np.abs(term) / (1.0 - last_ratio), np.abs(term) * counts)
    errors = np.where(small >= 2, tail, np.inf)
    return total, errors, counts


def hypergeometric_series(top, bottom, z, tol=1e-14, cap=SERIES_CAP):
    return select(hypergeometric_series_loop, hypergeometric_series_numpy)(top, bottom, z, tol, cap)
