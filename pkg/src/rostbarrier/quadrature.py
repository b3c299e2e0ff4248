"""Quadrature building blocks: Gaussian tail probabilities, adaptive
Gauss-Legendre panels and Gauss rules for the middle-thirds Cantor measure."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable

import mpmath
import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import NumericalDomainError

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def interval_prob(a, b):
    """P(a < Z <= b) for a standard normal Z, accurate in both tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = ndtr(-a) - ndtr(-b)
    lower = ndtr(b) - ndtr(a)
    return np.maximum(np.where(a > 0.0, upper, lower), 0.0)


def log_interval_prob(a, b):
    """log P(a < Z <= b); ``-inf`` for empty intervals."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # right tail: log(Phi(-a) - Phi(-b))
        la, lb = log_ndtr(-a), log_ndtr(-b)
        right = la + np.log1p(-np.exp(lb - la))
        # left tail: log(Phi(b) - Phi(a))
        lb2, la2 = log_ndtr(b), log_ndtr(a)
        left = lb2 + np.log1p(-np.exp(la2 - lb2))
        out = np.where(a > 0.0, right, left)
    return np.where(b > a, out, -np.inf)


def gaussian_pdf(d, var):
    """Centred normal density with variance ``var`` at ``d``."""
    d = np.asarray(d, dtype=float)
    var = np.asarray(var, dtype=float)
    return np.exp(-0.5 * d * d / var - LOG_SQRT_2PI - 0.5 * np.log(var))


# ---------------------------------------------------------------------------
# Gauss-Legendre


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_sums(f, lefts, widths, n):
    x, w = _legendre(n)
    nodes = lefts[:, None] + 0.5 * widths[:, None] * (x[None, :] + 1.0)
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericalDomainError("integrand returned non-finite values")
    return 0.5 * widths * (vals @ w)


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    max_width: float | None = None,
    tol: float = 1e-12,
    max_depth: int = 40,
    breakpoints=None,
) -> float:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    Panels start no wider than ``max_width`` (and are split at ``breakpoints``);
    any panel whose 20- and 10-point results disagree by more than its share of
    ``tol`` is bisected.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise NumericalDomainError("adaptive_gauss_legendre needs finite limits")
    if b <= a:
        return 0.0
    edges = [a, b]
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        bp = bp[(bp > a) & (bp < b)]
        edges = np.unique(np.concatenate([[a, b], bp]))
    edges = np.asarray(edges, dtype=float)
    if max_width is not None and max_width > 0:
        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = max(1, int(np.ceil((hi - lo) / max_width)))
            pieces.append(np.linspace(lo, hi, m + 1)[:-1])
        lefts = np.concatenate(pieces)
        rights = np.append(lefts[1:], b)
    else:
        lefts, rights = edges[:-1], edges[1:]
    widths = rights - lefts
    total = 0.0
    span = b - a
    for _ in range(max_depth):
        fine = _panel_sums(f, lefts, widths, 20)
        coarse = _panel_sums(f, lefts, widths, 10)
        bad = np.abs(fine - coarse) > tol * np.maximum(widths / span, 1e-6)
        total += float(np.sum(fine[~bad]))
        if not np.any(bad):
            return total
        lefts, widths = lefts[bad], widths[bad] / 2.0
        lefts = np.concatenate([lefts, lefts + widths])
        widths = np.concatenate([widths, widths])
    return total + float(np.sum(_panel_sums(f, lefts, widths, 20)))


# ---------------------------------------------------------------------------
# Cantor measure


def cantor_moments(n: int) -> list[Fraction]:
    """Exact moments E[X^k], k < n, of the Cantor distribution on [0, 1].

    Uses X = (2B + X') / 3 with B a fair bit, which gives
    (3^k - 1) m_k = sum_{j<k} C(k, j) 2^(k-j-1) m_j.
    """
    m = [Fraction(1)]
    for k in range(1, n):
        s = sum(comb(k, j) * Fraction(2) ** (k - j - 1) * m[j] for j in range(k))
        m.append(s / (3**k - 1))
    return m


@lru_cache(maxsize=None)
def cantor_gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule for the Cantor measure on [0, 1] (Golub-Welsch on
    the exact Hankel moment matrix, in 80-digit arithmetic)."""
    with mpmath.workdps(80):
        m = [mpmath.mpf(q.numerator) / q.denominator for q in cantor_moments(2 * n + 1)]
        H = mpmath.matrix(n + 1, n + 1)
        for i in range(n + 1):
            for j in range(n + 1):
                H[i, j] = m[i + j]
        R = mpmath.cholesky(H).T
        J = mpmath.matrix(n, n)
        for j in range(n):
            prev = R[j - 1, j] / R[j - 1, j - 1] if j > 0 else 0
            J[j, j] = R[j, j + 1] / R[j, j] - prev
            if j < n - 1:
                J[j, j + 1] = J[j + 1, j] = R[j + 1, j + 1] / R[j, j]
        E, Q = mpmath.eigsy(J)
        x = np.array([float(E[i]) for i in range(n)])
        w = np.array([float(Q[0, i] ** 2) for i in range(n)])
    order = np.argsort(x)
    return x[order], w[order]


def cantor_cdf_unit(u, depth: int):
    """Cantor function on [0, 1] truncated after ``depth`` ternary digits
    (linear on the remaining level-``depth`` cell, so the error is at most
    2**-depth)."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    F = np.zeros_like(u)
    scale = np.full_like(u, 0.5)
    alive = u < 1.0
    F = np.where(u >= 1.0, 1.0, F)
    r = u.copy()
    for _ in range(depth):
        if not np.any(alive):
            break
        t = 3.0 * r
        digit = np.floor(t)
        mid = alive & (digit == 1.0)
        F = np.where(mid, F + scale, F)
        alive = alive & ~mid
        hi = alive & (digit >= 2.0)
        F = np.where(hi, F + scale, F)
        r = np.where(hi, t - 2.0, np.where(alive, t, r))
        scale = np.where(alive, scale * 0.5, scale)
    # remaining linear piece of mass 2*scale over the current cell
    F = np.where(alive, F + 2.0 * scale * r, F)
    return F


def cantor_cdf_integral_unit(u, depth: int):
    """A(u) = int_0^u F(z) dz for the truncated Cantor function, u in [0, 1].

    Self-similarity: A(u) = A(3u)/6 on the first third, A(1/3) + (u-1/3)/2 in
    the gap and A(2/3) + (u-2/3)/2 + A(3u-2)/6 on the last third, with
    A(1/3) = 1/12 and A(2/3) = 1/4.
    """
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 0.5 + (u - 1.0), 0.0)
    r = np.clip(u, 0.0, 1.0)
    alive = (u > 0.0) & (u < 1.0)
    coef = np.ones_like(r)  # weight multiplying A(r) in the unrolled recursion
    for _ in range(depth):
        if not np.any(alive):
            break
        t = 3.0 * r
        first = alive & (t < 1.0)
        gap = alive & (t >= 1.0) & (t <= 2.0)
        last = alive & (t > 2.0)
        out = np.where(gap, out + coef * (1.0 / 12.0 + (r - 1.0 / 3.0) / 2.0), out)
        out = np.where(last, out + coef * (0.25 + (r - 2.0 / 3.0) / 2.0), out)
        alive = alive & ~gap
        r = np.where(first, t, np.where(last, t - 2.0, r))
        coef = np.where(alive, coef / 6.0, coef)
    # remaining cell: linear CDF on [0, 1] scaled, A_lin(r) = r^2 / 2
    out = np.where(alive, out + coef * 0.5 * r * r, out)
    return out
