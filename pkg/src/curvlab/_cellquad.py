"""Exact integrals of functions of a cell-wise linear field.

Inside one cell a linear field equals ``a + P1 + P2`` where ``Pi`` is
uniform on an interval of width ``Ai = |slope_i| * spacing_i`` centered at
zero. Band fractions, first moments and mean absolute values then follow
from the piecewise polynomial distribution of the sum.
"""

from __future__ import annotations

import numpy as np

# below this ratio the narrower uniform is dropped; the error is O(B/A)
_THIN = 1e-4


def _pos(y, k):
    return np.maximum(y, 0.0) ** k


def _widths(A, B):
    A = np.abs(np.asarray(A, dtype=float))
    B = np.abs(np.asarray(B, dtype=float))
    return np.maximum(A, B), np.minimum(A, B)


def cdf(v, A, B=0.0):
    """P(S <= v) for S the sum of two centered uniforms of widths A and B."""
    A, B = _widths(A, B)
    v = np.asarray(v, dtype=float)
    A, B, v = np.broadcast_arrays(A, B, v)
    out = np.where(v >= 0.0, 1.0, 0.0)
    one = (A > 0) & (B <= _THIN * A)
    two = B > _THIN * A
    with np.errstate(divide="ignore", invalid="ignore"):
        x1 = v + A / 2
        out = np.where(one, np.clip(x1 / np.where(A > 0, A, 1.0), 0.0, 1.0), out)
        x = v + (A + B) / 2
        AB = np.where(two, A * B, 1.0)
        f = (_pos(x, 2) - _pos(x - A, 2) - _pos(x - B, 2) + _pos(x - A - B, 2)) / (2 * AB)
        f = np.where(x >= A + B, 1.0, np.where(x <= 0, 0.0, f))
        out = np.where(two, f, out)
    return out


def cdf_integral(v, A, B=0.0):
    """Integral of the CDF from -inf to v."""
    A, B = _widths(A, B)
    v = np.asarray(v, dtype=float)
    A, B, v = np.broadcast_arrays(A, B, v)
    out = np.maximum(v, 0.0)
    one = (A > 0) & (B <= _THIN * A)
    two = B > _THIN * A
    with np.errstate(divide="ignore", invalid="ignore"):
        x1 = v + A / 2
        safeA = np.where(A > 0, A, 1.0)
        g1 = np.where(x1 <= 0, 0.0, np.where(x1 >= A, x1 - A / 2, x1 * x1 / (2 * safeA)))
        out = np.where(one, g1, out)
        x = v + (A + B) / 2
        AB = np.where(two, A * B, 1.0)
        g = (_pos(x, 3) - _pos(x - A, 3) - _pos(x - B, 3) + _pos(x - A - B, 3)) / (6 * AB)
        g = np.where(x >= A + B, x - (A + B) / 2, np.where(x <= 0, 0.0, g))
        out = np.where(two, g, out)
    return out


def band_fraction(a, A, B, lo, hi):
    """Fraction of the cell where lo <= a + S <= hi."""
    a = np.asarray(a, dtype=float)
    return np.clip(cdf(np.asarray(hi) - a, A, B) - cdf(np.asarray(lo) - a, A, B), 0.0, 1.0)


def band_moment(a, A, B, lo, hi):
    """Cell average of Y * [lo <= Y <= hi] with Y = a + S."""
    a = np.asarray(a, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    Fh, Fl = cdf(hi - a, A, B), cdf(lo - a, A, B)
    return hi * Fh - lo * Fl - (cdf_integral(hi - a, A, B) - cdf_integral(lo - a, A, B))


def mean_abs(a, A, B=0.0):
    """Cell average of |a + S|."""
    a = np.asarray(a, dtype=float)
    return a + 2.0 * cdf_integral(-a, A, B)


def mean_sign(a, A, B=0.0):
    """Cell average of sign(a + S)."""
    a = np.asarray(a, dtype=float)
    return 1.0 - 2.0 * cdf(-a, A, B)
