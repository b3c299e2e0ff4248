"""Brownian transition density and expected local time."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import NumericalDomainError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(z):
    """Phi(z) through erfc, so the left tail keeps full relative precision."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) * _INV_SQRT2)


def std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class HeatKernelQuery:
    t: float
    x: float
    s: float
    y: float

    def __post_init__(self) -> None:
        if not self.s > self.t:
            raise NumericalDomainError(f"heat kernel needs s > t, got t={self.t}, s={self.s}")


def heat_kernel(t, x, s, y):
    """p(t, x, s, y) = exp(-(x - y)^2 / (2 (s - t))) / sqrt(2 pi (s - t))."""
    t, x, s, y = (np.asarray(a, dtype=float) for a in (t, x, s, y))
    dt = s - t
    if np.any(dt <= 0):
        raise NumericalDomainError("heat kernel needs s > t")
    d = x - y
    out = np.exp(-0.5 * d * d / dt) / np.sqrt(2.0 * math.pi * dt)
    return out if out.ndim else float(out)


def expected_local_time(x, y, u):
    """E_x[L^y_u] for standard Brownian motion.

    Closed form of E_x|B_u - y| - |x - y|, equal to int_0^u p(0, x, r, y) dr.
    Zero when u == 0.
    """
    x, y, u = (np.asarray(a, dtype=float) for a in (x, y, u))
    if np.any(u < 0):
        raise NumericalDomainError("expected_local_time needs u >= 0")
    d = np.abs(x - y)
    sig = np.sqrt(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = d / sig
        # |d| (2 Phi(|d|/s) - 1) - |d| = -2 |d| Phi(-|d|/s), which avoids cancellation
        val = 2.0 * sig * std_normal_pdf(z) - 2.0 * d * std_normal_cdf(-z)
    out = np.where(u > 0, val, 0.0)
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)
