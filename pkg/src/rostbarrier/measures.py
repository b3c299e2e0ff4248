"""Probability measures on the real line as mixtures of named families.

Every component carries its exact CDF, the running integral of its CDF (used
by the optimal-stopping payoff) and a routine that integrates a Gaussian
kernel against it. For atoms and the density families that integral is in
closed form; for the Cantor family it uses a self-similar Gauss rule whose
cells are never wider than a caller-supplied resolution.

Intervals are half-open, ``(lo, hi]``, to match right-continuous CDFs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import MeasureError, NumericalDomainError, UnsupportedSampling
from .quadrature import (
    LOG_SQRT_2PI,
    adaptive_gauss_legendre,
    cantor_cdf_integral_unit,
    cantor_cdf_unit,
    cantor_gauss_rule,
    gaussian_pdf,
    interval_prob,
    log_interval_prob,
)

INF = math.inf
# tail mass ignored when an unbounded component is clipped to a finite hull
TAIL = 1e-17
MASS_TOL = 1e-12


def _as_float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class Component:
    """One mixture component; ``w`` is its total mass."""

    w: float
    kind: str = ""

    # subclasses override the following
    def cdf(self, y) -> np.ndarray:
        raise NotImplementedError

    def cdf_integral(self, y) -> np.ndarray:
        """int_{-inf}^y F(z) dz for this component's (weighted) CDF."""
        raise NotImplementedError

    def hull(self) -> tuple[float, float]:
        raise NotImplementedError

    def effective_hull(self) -> tuple[float, float]:
        return self.hull()

    def gauss_mass(self, x, var, lo, hi) -> np.ndarray:
        """int_{(lo, hi]} p(var, x - y) dcomp(y), p the centred normal density."""
        raise NotImplementedError

    def integrate(self, f, lo: float, hi: float, resolution: float, breakpoints=None) -> float:
        """int_{(lo, hi]} f dcomp; ``breakpoints`` mark kinks of ``f``."""
        raise NotImplementedError

    def support_at_or_above(self, y: float) -> float:
        """Smallest support point >= y (``inf`` if none)."""
        raise NotImplementedError

    def support_at_or_below(self, y: float) -> float:
        """Largest support point <= y (``-inf`` if none)."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise UnsupportedSampling(f"cannot sample from a {self.kind} component")

    def to_spec(self) -> dict[str, Any]:
        raise NotImplementedError

    @property
    def is_atom(self) -> bool:
        return False

    @property
    def is_singular(self) -> bool:
        return False


def _check_weight(w: float) -> None:
    if not (np.isfinite(w) and w > 0.0):
        raise MeasureError(f"component weight must be positive and finite, got {w}")


@dataclass(frozen=True)
class Atom(Component):
    x: float
    w: float = 1.0
    kind: str = field(default="atom", init=False, repr=False)

    def __post_init__(self) -> None:
        _check_weight(self.w)
        if not np.isfinite(self.x):
            raise MeasureError("atom location must be finite")

    def cdf(self, y):
        return self.w * (_as_float_array(y) >= self.x)

    def cdf_integral(self, y):
        return self.w * np.maximum(_as_float_array(y) - self.x, 0.0)

    def hull(self):
        return (self.x, self.x)

    def gauss_mass(self, x, var, lo, hi):
        inside = (_as_float_array(lo) < self.x) & (self.x <= _as_float_array(hi))
        return np.where(inside, self.w * gaussian_pdf(self.x - _as_float_array(x), var), 0.0)

    def integrate(self, f, lo, hi, resolution, breakpoints=None):
        if lo < self.x <= hi:
            v = float(np.asarray(f(np.array([self.x])))[0])
            if not np.isfinite(v):
                raise NumericalDomainError("integrand is not finite at an atom")
            return self.w * v
        return 0.0

    def support_at_or_above(self, y):
        return self.x if self.x >= y else INF

    def support_at_or_below(self, y):
        return self.x if self.x <= y else -INF

    def sample(self, rng, n):
        return np.full(n, self.x)

    def to_spec(self):
        return {"kind": "atom", "x": self.x, "w": self.w}

    @property
    def is_atom(self):
        return True


class _Density(Component):
    """Shared behaviour of absolutely continuous components."""

    def integrate(self, f, lo, hi, resolution, breakpoints=None):
        a, b = self.effective_hull()
        lo, hi = max(lo, a), min(hi, b)
        if hi <= lo:
            return 0.0
        return adaptive_gauss_legendre(lambda y: f(y) * self.pdf(y), lo, hi, max_width=resolution,
                                       breakpoints=breakpoints)

    def pdf(self, y) -> np.ndarray:
        raise NotImplementedError

    def support_at_or_above(self, y):
        a, b = self.hull()
        if y > b:
            return INF
        return max(y, a)

    def support_at_or_below(self, y):
        a, b = self.hull()
        if y < a:
            return -INF
        return min(y, b)


@dataclass(frozen=True)
class Uniform(_Density):
    a: float
    b: float
    w: float = 1.0
    kind: str = field(default="uniform", init=False, repr=False)

    def __post_init__(self) -> None:
        _check_weight(self.w)
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise MeasureError("uniform needs finite a < b")

    @property
    def height(self) -> float:
        return self.w / (self.b - self.a)

    def pdf(self, y):
        y = _as_float_array(y)
        return np.where((y >= self.a) & (y <= self.b), self.height, 0.0)

    def cdf(self, y):
        return self.w * np.clip((_as_float_array(y) - self.a) / (self.b - self.a), 0.0, 1.0)

    def cdf_integral(self, y):
        y = _as_float_array(y)
        L = self.b - self.a
        inside = (y - self.a) ** 2 / (2.0 * L)
        above = 0.5 * L + (y - self.b)
        return self.w * np.where(y <= self.a, 0.0, np.where(y <= self.b, inside, above))

    def hull(self):
        return (self.a, self.b)

    def gauss_mass(self, x, var, lo, hi):
        x = _as_float_array(x)
        s = np.sqrt(_as_float_array(var))
        lo = np.maximum(_as_float_array(lo), self.a)
        hi = np.minimum(_as_float_array(hi), self.b)
        prob = interval_prob((lo - x) / s, (hi - x) / s)
        return np.where(hi > lo, self.height * prob, 0.0)

    def sample(self, rng, n):
        return self.a + (self.b - self.a) * rng.random(n)

    def to_spec(self):
        return {"kind": "uniform", "a": self.a, "b": self.b, "w": self.w}


@dataclass(frozen=True)
class Normal(_Density):
    mean: float
    var: float
    w: float = 1.0
    kind: str = field(default="normal", init=False, repr=False)

    def __post_init__(self) -> None:
        _check_weight(self.w)
        if not (np.isfinite(self.mean) and np.isfinite(self.var) and self.var > 0):
            raise MeasureError("normal needs finite mean and var > 0")

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    def pdf(self, y):
        return self.w * gaussian_pdf(_as_float_array(y) - self.mean, self.var)

    def cdf(self, y):
        from scipy.special import ndtr

        return self.w * ndtr((_as_float_array(y) - self.mean) / self.sd)

    def cdf_integral(self, y):
        from scipy.special import ndtr

        z = (_as_float_array(y) - self.mean) / self.sd
        return self.w * self.sd * (z * ndtr(z) + np.exp(-0.5 * z * z - LOG_SQRT_2PI))

    def hull(self):
        return (-INF, INF)

    def effective_hull(self):
        k = 9.0  # Phi(-9) ~ 1e-19
        return (self.mean - k * self.sd, self.mean + k * self.sd)

    def gauss_mass(self, x, var, lo, hi):
        # product of two Gaussians in y is a Gaussian in y times a Gaussian in x
        x = _as_float_array(x)
        v = _as_float_array(var)
        tot = v + self.var
        centre = (x * self.var + self.mean * v) / tot
        spread = np.sqrt(v * self.var / tot)
        d = x - self.mean
        log_front = -0.5 * d * d / tot - LOG_SQRT_2PI - 0.5 * np.log(tot)
        lp = log_interval_prob((_as_float_array(lo) - centre) / spread, (_as_float_array(hi) - centre) / spread)
        return self.w * np.exp(log_front + lp)

    def sample(self, rng, n):
        return self.mean + self.sd * rng.standard_normal(n)

    def to_spec(self):
        return {"kind": "normal", "mean": self.mean, "var": self.var, "w": self.w}


@dataclass(frozen=True)
class Exponential(_Density):
    rate: float
    w: float = 1.0
    kind: str = field(default="exponential", init=False, repr=False)

    def __post_init__(self) -> None:
        _check_weight(self.w)
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise MeasureError("exponential needs rate > 0")

    def pdf(self, y):
        y = _as_float_array(y)
        with np.errstate(over="ignore"):
            return np.where(y >= 0.0, self.w * self.rate * np.exp(-self.rate * np.maximum(y, 0.0)), 0.0)

    def cdf(self, y):
        y = _as_float_array(y)
        return self.w * np.where(y > 0.0, -np.expm1(-self.rate * np.maximum(y, 0.0)), 0.0)

    def cdf_integral(self, y):
        y = _as_float_array(y)
        yp = np.maximum(y, 0.0)
        return self.w * np.where(y > 0.0, yp + np.expm1(-self.rate * yp) / self.rate, 0.0)

    def hull(self):
        return (0.0, INF)

    def effective_hull(self):
        return (0.0, -math.log(TAIL) / self.rate)

    def gauss_mass(self, x, var, lo, hi):
        # -(y-x)^2/2v - r y = -(y - (x - r v))^2/2v - r x + r^2 v/2
        x = _as_float_array(x)
        v = _as_float_array(var)
        s = np.sqrt(v)
        r = self.rate
        shift = x - r * v
        lo = np.maximum(_as_float_array(lo), 0.0)
        lp = log_interval_prob((lo - shift) / s, (_as_float_array(hi) - shift) / s)
        return self.w * r * np.exp(-r * x + 0.5 * r * r * v + lp)

    def sample(self, rng, n):
        return rng.exponential(1.0 / self.rate, n)

    def to_spec(self):
        return {"kind": "exponential", "rate": self.rate, "w": self.w}


@dataclass(frozen=True)
class Polynomial(_Density):
    """Density proportional to sum_j coeffs[j] y**j on [a, b], scaled to mass ``w``."""

    a: float
    b: float
    coeffs: tuple[float, ...]
    w: float = 1.0
    kind: str = field(default="polynomial", init=False, repr=False)

    def __post_init__(self) -> None:
        _check_weight(self.w)
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise MeasureError("polynomial needs finite a < b")
        if not self.coeffs:
            raise MeasureError("polynomial needs at least one coefficient")
        grid = np.linspace(self.a, self.b, 2001)
        if np.min(P.polyval(grid, self.coeffs)) < -1e-12:
            raise MeasureError("polynomial density must be nonnegative on [a, b]")
        if self._norm <= 0:
            raise MeasureError("polynomial density has zero mass")

    @property
    def _norm(self) -> float:
        anti = P.polyint(self.coeffs)
        return float(P.polyval(self.b, anti) - P.polyval(self.a, anti))

    @property
    def _scaled(self) -> np.ndarray:
        return np.asarray(self.coeffs) * (self.w / self._norm)

    def pdf(self, y):
        y = _as_float_array(y)
        return np.where((y >= self.a) & (y <= self.b), P.polyval(y, self._scaled), 0.0)

    def cdf(self, y):
        y = np.clip(_as_float_array(y), self.a, self.b)
        anti = P.polyint(self._scaled)
        return P.polyval(y, anti) - P.polyval(self.a, anti)

    def cdf_integral(self, y):
        y = _as_float_array(y)
        anti = P.polyint(self._scaled)
        anti = P.polysub(anti, [P.polyval(self.a, anti)])
        anti2 = P.polyint(anti)
        yc = np.clip(y, self.a, self.b)
        inside = P.polyval(yc, anti2) - P.polyval(self.a, anti2)
        return np.where(y <= self.b, inside, inside + self.w * (y - self.b))

    def hull(self):
        return (self.a, self.b)

    def gauss_mass(self, x, var, lo, hi):
        # substitute y = x + s z and use truncated standard-normal moments
        x, v, lo, hi = np.broadcast_arrays(*map(_as_float_array, (x, var, lo, hi)))
        s = np.sqrt(v)
        lo = np.maximum(lo, self.a)
        hi = np.minimum(hi, self.b)
        ok = hi > lo
        lo = np.where(ok, lo, x)
        hi = np.where(ok, hi, x)
        al, be = (lo - x) / s, (hi - x) / s
        c = self._scaled
        deg = len(c) - 1
        pa = np.exp(-0.5 * al * al - LOG_SQRT_2PI)
        pb = np.exp(-0.5 * be * be - LOG_SQRT_2PI)
        moments = [interval_prob(al, be), pa - pb]
        for n in range(2, deg + 1):
            moments.append((n - 1) * moments[n - 2] + al ** (n - 1) * pa - be ** (n - 1) * pb)
        total = np.zeros_like(x)
        for n in range(deg + 1):
            dn = np.zeros_like(x)
            for j in range(n, deg + 1):
                dn = dn + c[j] * math.comb(j, n) * x ** (j - n)
            total = total + dn * s**n * moments[n]
        return np.where(ok, total, 0.0)

    def sample(self, rng, n):
        u = rng.random(n) * self.w
        lo = np.full(n, self.a)
        hi = np.full(n, self.b)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def to_spec(self):
        return {"kind": "polynomial", "a": self.a, "b": self.b, "coeffs": list(self.coeffs), "w": self.w}


# Gauss points used on Cantor cells: more on coarse cells, fewer once a cell
# is much narrower than the kernel it is integrated against.
_CANTOR_BASE_POINTS = 8
_CANTOR_MAX_BASE_LEVEL = 8


def _refine_points(extra_levels: int) -> int:
    if extra_levels < 3:
        return 8
    if extra_levels < 6:
        return 4
    return 2


@dataclass(frozen=True)
class Cantor(Component):
    """Middle-thirds Cantor distribution on [a, b], truncated at ``depth``
    ternary levels (CDF error <= 2**-depth)."""

    a: float
    b: float
    depth: int = 30
    w: float = 1.0
    kind: str = field(default="cantor", init=False, repr=False)

    def __post_init__(self) -> None:
        _check_weight(self.w)
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise MeasureError("cantor needs finite a < b")
        if int(self.depth) != self.depth or self.depth < 1 or self.depth > 45:
            raise MeasureError("cantor depth must be an integer in [1, 45]")

    @property
    def is_singular(self):
        return True

    @property
    def length(self) -> float:
        return self.b - self.a

    def _u(self, y):
        return (_as_float_array(y) - self.a) / self.length

    def cdf(self, y):
        return self.w * cantor_cdf_unit(self._u(y), self.depth)

    def cdf_integral(self, y):
        return self.w * self.length * cantor_cdf_integral_unit(self._u(y), self.depth)

    def hull(self):
        return (self.a, self.b)

    def base_level(self, resolution: float) -> int:
        """Coarsest ternary level whose cells are no wider than ``resolution``."""
        if not resolution > 0:
            return self.depth
        lvl = math.ceil(math.log(self.length / resolution, 3.0)) if resolution < self.length else 0
        return int(min(max(lvl, 0), self.depth))

    def support_at_or_above(self, y):
        u = float(self._u(y))
        if u > 1.0:
            return INF
        if u <= 0.0:
            return self.a
        left, L = 0.0, 1.0
        for _ in range(self.depth):
            L3 = L / 3.0
            if u <= left + L3:
                L = L3
            elif u < left + 2 * L3:
                return self.a + self.length * (left + 2 * L3)
            else:
                left, L = left + 2 * L3, L3
        return self.a + self.length * u

    def support_at_or_below(self, y):
        u = float(self._u(y))
        if u < 0.0:
            return -INF
        if u >= 1.0:
            return self.b
        left, L = 0.0, 1.0
        for _ in range(self.depth):
            L3 = L / 3.0
            if u < left + 2 * L3 and u > left + L3:
                return self.a + self.length * (left + L3)
            if u <= left + L3:
                L = L3
            else:
                left, L = left + 2 * L3, L3
        return self.a + self.length * u

    # --- quadrature rules --------------------------------------------------

    @lru_cache(maxsize=16)
    def _base_rule(self, level: int):
        """Nodes/weights (unit coordinates, unit mass) of the level cells, and
        the cells' left ends."""
        lefts = np.zeros(1)
        L = 1.0
        for _ in range(level):
            L /= 3.0
            lefts = np.concatenate([lefts, lefts + 2.0 * L]).reshape(2, -1).T.ravel()
        x, w = cantor_gauss_rule(_CANTOR_BASE_POINTS)
        nodes = lefts[:, None] + L * x[None, :]
        weights = np.broadcast_to(w * 0.5**level, nodes.shape)
        return lefts, L, nodes, np.ascontiguousarray(weights)

    def _partial_rule(self, u: float, level: int):
        """Rule for the mass in (-inf, u] (unit coordinates) restricted to the
        level cell containing u. Returns (cells_below, nodes, weights)."""
        lefts, L, _, _ = self._base_rule(level)
        if u <= 0.0:
            return 0, np.empty(0), np.empty(0)
        if u >= 1.0:
            return len(lefts), np.empty(0), np.empty(0)
        count = int(np.searchsorted(lefts + L, u, side="right"))
        if count >= len(lefts) or u <= lefts[count]:
            return count, np.empty(0), np.empty(0)
        nodes, weights = [], []
        left, size, mass = float(lefts[count]), L, 0.5**level
        for lvl in range(level, self.depth):
            size3 = size / 3.0
            child_mass = 0.5 * mass
            if u < left + size3:
                size, mass = size3, child_mass
                continue
            x, w = cantor_gauss_rule(_refine_points(lvl + 1 - level))
            nodes.append(left + size3 * x)
            weights.append(child_mass * w)
            if u <= left + 2 * size3:
                break  # u sits in the gap
            left, size, mass = left + 2 * size3, size3, child_mass
        else:
            frac = (u - left) / size
            nodes.append(np.array([left + 0.5 * (u - left)]))
            weights.append(np.array([mass * frac]))
        if not nodes:
            return count, np.empty(0), np.empty(0)
        return count, np.concatenate(nodes), np.concatenate(weights)

    @lru_cache(maxsize=65536)
    def _cut(self, c: float, level: int):
        u = float(self._u(c))
        count, nodes, weights = self._partial_rule(u, level)
        return count, self.a + self.length * nodes, self.w * weights

    def gauss_mass(self, x, var, lo, hi, resolution: float | None = None):
        x, var, lo, hi = np.broadcast_arrays(*map(_as_float_array, (x, var, lo, hi)))
        out = np.zeros(x.shape)
        if out.size == 0:
            return out
        if resolution is None:
            resolution = 0.5 * math.sqrt(float(np.min(var)))
        level = self.base_level(resolution)
        if level > _CANTOR_MAX_BASE_LEVEL:
            return self._gauss_mass_adaptive(x.ravel(), var.ravel(), lo.ravel(), hi.ravel()).reshape(x.shape)
        lefts, L, unit_nodes, unit_w = self._base_rule(level)
        nodes = self.a + self.length * unit_nodes
        weights = self.w * unit_w
        xf, vf, lof, hif = (arr.ravel() for arr in (x, var, lo, hi))
        # full base cells: per-query prefix sums over cells
        dens = gaussian_pdf(nodes[None, :, :] - xf[:, None, None], vf[:, None, None])
        cell_sums = np.einsum("qcn,cn->qc", dens, weights)
        prefix = np.concatenate([np.zeros((len(xf), 1)), np.cumsum(cell_sums, axis=1)], axis=1)
        res = np.zeros(len(xf))
        seg_nodes, seg_w, seg_q = [], [], []
        for q in range(len(xf)):
            if not hif[q] > lof[q]:
                continue
            for sign, c in ((1.0, hif[q]), (-1.0, lof[q])):
                count, nd, wt = self._cut(float(c), level)
                res[q] += sign * prefix[q, count]
                if nd.size:
                    seg_nodes.append(nd)
                    seg_w.append(sign * wt)
                    seg_q.append(np.full(nd.size, q))
        if seg_nodes:
            nd = np.concatenate(seg_nodes)
            wt = np.concatenate(seg_w)
            qi = np.concatenate(seg_q)
            contrib = wt * gaussian_pdf(nd - xf[qi], vf[qi])
            res += np.bincount(qi, weights=contrib, minlength=len(xf))
        return res.reshape(x.shape)

    def _gauss_mass_adaptive(self, x, var, lo, hi):
        """Cell-by-cell refinement for narrow kernels: a cell is kept once it
        is no wider than half the kernel's standard deviation, dropped once
        it lies outside the section or 12 deviations from x, and split while
        it straddles a section end (down to ``depth``, then linear)."""
        n = len(x)
        res = np.zeros(n)
        sd = np.sqrt(var) / self.length
        xu = self._u(x)
        lou = np.clip(self._u(lo), -1.0, 2.0)
        hiu = np.clip(self._u(hi), -1.0, 2.0)
        q = np.flatnonzero(hiu > lou)
        left = np.zeros(q.size)
        level = 0
        while q.size:
            L = 3.0**-level
            mass = self.w * 0.5**level
            right = left + L
            dist = np.maximum(np.maximum(left - xu[q], xu[q] - right), 0.0)
            keep = (right > lou[q]) & (left < hiu[q]) & (dist < 12.0 * sd[q])
            q, left, right = q[keep], left[keep], right[keep]
            cut = ((lou[q] > left) & (lou[q] < right)) | ((hiu[q] > left) & (hiu[q] < right))
            resolved = ~cut & (L <= 0.5 * sd[q])
            if level == self.depth:
                # linear remainder on the cells' intersection with the section
                a = np.maximum(left, lou[q])
                b = np.minimum(right, hiu[q])
                mid = self.a + self.length * 0.5 * (a + b)
                res += np.bincount(q, weights=mass * (b - a) / L * gaussian_pdf(mid - x[q], var[q]), minlength=n)
                break
            if np.any(resolved):
                qr, lr = q[resolved], left[resolved]
                ratio = L / sd[qr]
                for npts, sel in ((8, ratio > 1 / 16), (4, (ratio <= 1 / 16) & (ratio > 1 / 128)), (2, ratio <= 1 / 128)):
                    if not np.any(sel):
                        continue
                    un, uw = cantor_gauss_rule(npts)
                    nodes = self.a + self.length * (lr[sel][:, None] + L * un[None, :])
                    vals = gaussian_pdf(nodes - x[qr[sel]][:, None], var[qr[sel]][:, None]) @ (mass * uw)
                    res += np.bincount(qr[sel], weights=vals, minlength=n)
            split = ~resolved
            q, left = q[split], left[split]
            L3 = L / 3.0
            q = np.concatenate([q, q])
            left = np.concatenate([left, left + 2.0 * L3])
            level += 1
        return res

    def integrate(self, f, lo, hi, resolution, breakpoints=None):
        """Gauss-Cantor rules on the cells that meet (lo, hi]: a cell is used
        once it is no wider than ``resolution`` and does not straddle an end
        of the interval; cells holding a breakpoint are refined six levels
        further. Straddling cells are split down to ``depth``, where the
        truncated measure is uniform."""
        lou = min(max(float(self._u(lo)), -1.0), 2.0)
        hiu = min(max(float(self._u(hi)), -1.0), 2.0)
        if not hiu > lou:
            return 0.0
        res_u = resolution / self.length if resolution > 0 else 0.0
        bps = np.empty(0)
        if breakpoints is not None:
            bps = np.sort(self._u(np.asarray(breakpoints, dtype=float)).ravel())
            bps = bps[(bps > lou) & (bps < hiu)]
        un, uw = cantor_gauss_rule(_CANTOR_BASE_POINTS)
        base = self.base_level(resolution)
        left = np.zeros(1)
        total = 0.0
        level = 0
        while left.size:
            L = 3.0**-level
            mass = self.w * 0.5**level
            right = left + L
            keep = (right > lou) & (left < hiu)
            left, right = left[keep], right[keep]
            cut = ((lou > left) & (lou < right)) | ((hiu > left) & (hiu < right))
            if level == self.depth:
                a = np.maximum(left, lou)
                b = np.minimum(right, hiu)
                mid = self.a + self.length * 0.5 * (a + b)
                total += float(self._eval(f, mid) @ (mass * (b - a) / L))
                break
            coarse = np.full(left.shape, L > res_u)
            if bps.size:
                inside = np.searchsorted(bps, right, side="left") > np.searchsorted(bps, left, side="right")
                coarse = coarse | (inside & (level < base + 6))
            resolved = ~cut & ~coarse
            if np.any(resolved):
                nodes = self.a + self.length * (left[resolved][:, None] + L * un[None, :])
                total += float(np.sum(self._eval(f, nodes.ravel()).reshape(nodes.shape) @ (mass * uw)))
            left = left[~resolved]
            left = np.concatenate([left, left + 2.0 * L / 3.0])
            level += 1
        return total

    @staticmethod
    def _eval(f, pts: np.ndarray) -> np.ndarray:
        vals = np.asarray(f(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericalDomainError("integrand returned non-finite values")
        return vals

    def to_spec(self):
        return {"kind": "cantor", "a": self.a, "b": self.b, "depth": int(self.depth), "w": self.w}


_KINDS: dict[str, tuple[type, tuple[str, ...]]] = {
    "atom": (Atom, ("x",)),
    "uniform": (Uniform, ("a", "b")),
    "normal": (Normal, ("mean", "var")),
    "exponential": (Exponential, ("rate",)),
    "polynomial": (Polynomial, ("a", "b", "coeffs")),
    "cantor": (Cantor, ("a", "b")),
}
_OPTIONAL = {"cantor": ("depth",)}


def component_from_spec(spec: dict[str, Any]) -> Component:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MeasureError(f"component spec must be an object with a 'kind': {spec!r}")
    kind = spec["kind"]
    if kind not in _KINDS:
        raise MeasureError(f"unknown component kind {kind!r}")
    cls, required = _KINDS[kind]
    allowed = set(required) | set(_OPTIONAL.get(kind, ())) | {"kind", "w"}
    unknown = set(spec) - allowed
    if unknown:
        raise MeasureError(f"unknown keys for {kind}: {sorted(unknown)}")
    missing = [k for k in required if k not in spec]
    if missing:
        raise MeasureError(f"missing keys for {kind}: {missing}")
    kwargs = {k: spec[k] for k in allowed - {"kind"} if k in spec}
    try:
        if "coeffs" in kwargs:
            kwargs["coeffs"] = tuple(float(c) for c in kwargs["coeffs"])
        for k, v in kwargs.items():
            if k not in ("coeffs", "depth"):
                kwargs[k] = float(v)
        if "depth" in kwargs:
            kwargs["depth"] = int(kwargs["depth"])
    except (TypeError, ValueError) as exc:
        raise MeasureError(f"bad value in {kind} component: {exc}") from exc
    return cls(**kwargs)


@dataclass(frozen=True)
class Measure:
    """Probability measure given as an ordered mixture of components."""

    components: tuple[Component, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise MeasureError("a measure needs at least one component")
        total = sum(c.w for c in comps)
        if abs(total - 1.0) > 1e-10:
            raise MeasureError(f"component weights sum to {total}, not 1")

    @classmethod
    def of(cls, *components: Component) -> "Measure":
        return cls(tuple(components))

    @classmethod
    def from_spec(cls, spec: dict[str, Any]) -> "Measure":
        if not isinstance(spec, dict) or set(spec) != {"components"}:
            raise MeasureError("measure spec must be an object with exactly one key, 'components'")
        comps = spec["components"]
        if not isinstance(comps, list):
            raise MeasureError("'components' must be a list")
        return cls(tuple(component_from_spec(c) for c in comps))

    def to_spec(self) -> dict[str, Any]:
        return {"components": [c.to_spec() for c in self.components]}

    # --- distribution ------------------------------------------------------

    def cdf(self, y):
        return sum(c.cdf(y) for c in self.components)

    def cdf_integral(self, y):
        return sum(c.cdf_integral(y) for c in self.components)

    def mass(self, lo: float, hi: float) -> float:
        """Mass of (lo, hi]."""
        if hi <= lo:
            return 0.0
        return float(self.cdf(hi) - self.cdf(lo))

    @property
    def has_atoms(self) -> bool:
        return any(c.is_atom for c in self.components)

    @property
    def has_singular(self) -> bool:
        return any(c.is_singular for c in self.components)

    def hull(self) -> tuple[float, float]:
        h = [c.hull() for c in self.components]
        return (min(a for a, _ in h), max(b for _, b in h))

    def effective_hull(self) -> tuple[float, float]:
        h = [c.effective_hull() for c in self.components]
        return (min(a for a, _ in h), max(b for _, b in h))

    def support_at_or_above(self, y: float) -> float:
        return min(c.support_at_or_above(y) for c in self.components)

    def support_at_or_below(self, y: float) -> float:
        return max(c.support_at_or_below(y) for c in self.components)

    # --- integration -------------------------------------------------------

    def gauss_mass(self, x, var, lo, hi):
        """int_{(lo, hi]} p(var, y - x) m(dy), broadcast over all arguments."""
        return sum(c.gauss_mass(x, var, lo, hi) for c in self.components)

    def integrate(self, f: Callable, lo: float, hi: float, resolution: float | None = None,
                  breakpoints=None) -> float:
        a, b = self.effective_hull()
        if resolution is None:
            span = min(hi, b) - max(lo, a)
            resolution = max(span, 1e-12) / 32.0
        return float(sum(c.integrate(f, lo, hi, resolution, breakpoints) for c in self.components))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.has_singular:
            raise UnsupportedSampling("cannot sample from a measure with a singular component")
        w = np.array([c.w for c in self.components])
        pick = rng.choice(len(w), size=n, p=w / w.sum())
        out = np.empty(n)
        for i, c in enumerate(self.components):
            sel = pick == i
            if np.any(sel):
                out[sel] = c.sample(rng, int(sel.sum()))
        return out


# ---------------------------------------------------------------------------
# module-level operations


def cdf(m: Measure, x):
    """F_m(x) = m((-inf, x])."""
    return m.cdf(x)


@dataclass(frozen=True)
class SupportInfo:
    a_plus: float
    a_minus: float
    mu_plus: float
    mu_minus: float


def support_info(mu: Measure, nu: Measure) -> SupportInfo:
    """Support extremes of the initial law ``nu`` and the target ``mu``."""
    nlo, nhi = nu.hull()
    mlo, mhi = mu.hull()
    info = SupportInfo(a_plus=nhi, a_minus=-nlo, mu_plus=mhi, mu_minus=-mlo)
    if info.a_plus < 0 or info.a_minus < 0:
        raise MeasureError("the support hull of nu must contain 0 (a_+ >= 0 and a_- >= 0)")
    return info


def hat_b(mu: Measure, nu: Measure) -> tuple[float, float]:
    """Endpoints (hat_b_minus, hat_b_plus) of the largest mu-null open interval
    (-hat_b_minus, hat_b_plus) containing the support hull of ``nu``."""
    if mu.has_atoms:
        raise MeasureError("target measure mu must be atom-less")
    info = support_info(mu, nu)
    inner = mu.mass(-info.a_minus, info.a_plus)
    if inner > MASS_TOL:
        raise MeasureError(
            f"mu charges the support hull of nu (mass {inner:.3g}); no mu-null interval contains it"
        )
    # a side without mu-mass beyond the hull of nu carries no boundary
    plus = INF if 1.0 - float(mu.cdf(info.a_plus)) <= MASS_TOL else mu.support_at_or_above(info.a_plus)
    minus = INF if float(mu.cdf(-info.a_minus)) <= MASS_TOL else 0.0 - mu.support_at_or_below(-info.a_minus)
    return minus + 0.0, plus + 0.0


def stieltjes(f: Callable, m: Measure, a: float, b: float, resolution: float | None = None,
              breakpoints=None) -> float:
    """int_{(a, b]} f dm; endpoints may be infinite."""
    if b <= a:
        return 0.0
    return m.integrate(f, a, b, resolution, breakpoints)


def signed_stieltjes(
    f: Callable, nu: Measure, mu: Measure, a: float, b: float, resolution: float | None = None,
    breakpoints=None,
) -> float:
    """int_{(a, b]} f d(nu - mu)."""
    return stieltjes(f, nu, a, b, resolution, breakpoints) - stieltjes(f, mu, a, b, resolution, breakpoints)


def mixture(parts: Sequence[Component]) -> Measure:
    return Measure(tuple(parts))
