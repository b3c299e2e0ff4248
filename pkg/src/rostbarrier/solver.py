"""Backward recursion for the time-reversed barrier boundaries.

Boundaries are stored in reversed time, ``b(t_k) = s(T - t_k)`` on the
uniform grid ``t_k = k h``. Starting from ``b(t_N) = hat_b`` the recursion
solves, for ``k = N-1, ..., 0`` and each present side, the algebraic equation

    int_{t_k}^{T} int_{I(u)} p(t_k, +-x, u, y) (nu - mu)(dy) du = 0,
    I(u) = [-b_-(u), b_+(u)],

for x = b_+-(t_k), with the double integral replaced by a quadrature over
the time cells [t_{l-1}, t_l] (see :class:`Scheme`).

The sections matter on the first cell. Evaluating every cell at its later
end ``I(t_l)`` (``Scheme("rectangle", interval_weight=0)``) leaves the first
step k = N-1 with only the mu-null interval (-hat_b_-, hat_b_+), where the
residual is positive for every x, so no root exists. The default
(rectangle, interval_weight=1) evaluates each cell at its earlier end, so
the unknown section at t_k enters the first cell. The ``linear`` scheme
resolves jumps across mu-null gaps in a single step but its discrete
solution can dip below the previous node right after a jump; those nodes are
held at the previous value and listed in ``Diagnostics.projected``.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import MeasureError, NoSignChange, NumericalDomainError, SweepDivergence
from .measures import Measure, SupportInfo, hat_b, stieltjes, support_info
from .kernel import heat_kernel

INF = math.inf
Side = Literal["plus", "minus"]
Mode = Literal["two-sided", "upper-only", "lower-only"]


@dataclass(frozen=True)
class Grid:
    T: float
    N: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("horizon T must be positive")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("N must be an integer >= 2")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(self.T))

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.N + 1) * self.h
        t[-1] = self.T
        return t

    @classmethod
    def from_step(cls, T: float, h: float) -> "Grid":
        N = int(round(T / h))
        if abs(N * h - T) > 1e-9 * T:
            raise ValueError(f"step {h} does not divide horizon {T}")
        return cls(T, N)


@dataclass(frozen=True)
class BarrierProblem:
    mu: Measure
    nu: Measure
    support: SupportInfo
    hat_b_minus: float
    hat_b_plus: float
    mode: Mode

    @classmethod
    def build(cls, mu: Measure, nu: Measure) -> "BarrierProblem":
        if mu.has_atoms:
            raise MeasureError("target measure mu must be atom-less")
        info = support_info(mu, nu)
        hb_minus, hb_plus = hat_b(mu, nu)
        if math.isinf(hb_minus) and math.isinf(hb_plus):
            raise MeasureError("mu has no mass on either side of nu")
        if math.isinf(hb_minus):
            mode: Mode = "upper-only"
        elif math.isinf(hb_plus):
            mode = "lower-only"
        else:
            mode = "two-sided"
        return cls(mu, nu, info, hb_minus, hb_plus, mode)

    def has_side(self, side: Side) -> bool:
        return not math.isinf(self.hat_b_plus if side == "plus" else self.hat_b_minus)

    def default_cap(self, side: Side, T: float) -> float:
        lo, hi = self.mu.effective_hull()
        extent = hi if side == "plus" else -lo
        start = self.hat_b_plus if side == "plus" else self.hat_b_minus
        return max(extent, start) + 6.0 * math.sqrt(T)


@dataclass
class SolverConfig:
    root_abs_tol: float = 1e-10
    residual_tol: float = 1e-9
    max_bisection_iters: int = 200
    newton_polish_iters: int = 5
    bisection_width: float = 1e-6
    fd_step: float = 1e-7
    x_max: float | None = None
    scheme: Scheme = field(default_factory=lambda: Scheme())
    sweeps: bool | None = None
    max_sweeps: int = 50
    monotone_projection: bool = True

    def __post_init__(self) -> None:
        for name in ("root_abs_tol", "residual_tol", "bisection_width", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.x_max is not None and not self.x_max > 0:
            raise ValueError("x_max must be positive")
        if isinstance(self.scheme, dict):
            self.scheme = Scheme(**self.scheme)

    def use_sweeps(self, prob: BarrierProblem) -> bool:
        if self.sweeps is not None:
            return self.sweeps
        return prob.mode == "two-sided" and self.scheme.implicit


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.12g}"


@dataclass(frozen=True)
class BoundaryPair:
    """Reversed-time boundary arrays ``b_+(t_k)``, ``b_-(t_k)``, k = 0..N.

    ``inf`` marks an absent boundary. Node values approximate s(T - t_k)
    without choosing between left and right limits at jump times.
    """

    grid: Grid
    b_plus: np.ndarray
    b_minus: np.ndarray
    scheme: Scheme = field(default_factory=lambda: Scheme())

    def __post_init__(self) -> None:
        for name in ("b_plus", "b_minus"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.N + 1,):
                raise ValueError(f"{name} must have N+1 entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # forward-time views: index j <-> forward time j h
    @property
    def forward_times(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def s_plus(self) -> np.ndarray:
        return self.b_plus[::-1]

    @property
    def s_minus(self) -> np.ndarray:
        return self.b_minus[::-1]

    def s_at(self, side: Side, tau) -> np.ndarray:
        """s_side at forward times ``tau`` (linear between nodes). A cell
        whose right end is ``inf`` keeps its left value until the node."""
        s = self.s_plus if side == "plus" else self.s_minus
        return _interp_with_inf(self.forward_times, s, np.asarray(tau, dtype=float))

    def b_at(self, side: Side, u) -> np.ndarray:
        """b_side at reversed times ``u``: s_side(T - u)."""
        return self.s_at(side, self.grid.T - np.asarray(u, dtype=float))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("t,s_plus,s_minus\n")
        T = self.grid.T
        t = self.grid.nodes
        for j in range(self.grid.N + 1):
            k = self.grid.N - j
            out.write(f"{_fmt(T - t[k])},{_fmt(self.b_plus[k])},{_fmt(self.b_minus[k])}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, T: float | None = None, scheme: Scheme | None = None) -> "BoundaryPair":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "t,s_plus,s_minus":
            raise ValueError("boundary CSV must start with the header 't,s_plus,s_minus'")
        rows = [ln.split(",") for ln in lines[1:]]
        if any(len(r) != 3 for r in rows):
            raise ValueError("boundary CSV rows must have three fields")
        t = np.array([float(r[0]) for r in rows])
        sp = np.array([float(r[1]) for r in rows])
        sm = np.array([float(r[2]) for r in rows])
        N = len(rows) - 1
        if T is None:
            T = float(t[-1])
        grid = Grid(T, N)
        if np.max(np.abs(t - grid.nodes)) > 1e-9 * max(T, 1.0):
            raise ValueError("boundary CSV times do not form the uniform grid on [0, T]")
        return cls(grid, sp[::-1].copy(), sm[::-1].copy(), scheme or Scheme())

    def rounded(self) -> "BoundaryPair":
        """The pair as it reads back from its CSV form."""
        return BoundaryPair.from_csv(self.to_csv(), self.grid.T, self.scheme)


def _interp_with_inf(xp: np.ndarray, fp: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.clip(x, xp[0], xp[-1])
    j = np.clip(np.searchsorted(xp, x, side="right") - 1, 0, len(xp) - 2)
    x0, x1 = xp[j], xp[j + 1]
    f0, f1 = fp[j], fp[j + 1]
    w = (x - x0) / (x1 - x0)
    with np.errstate(invalid="ignore"):
        lin = f0 + w * (f1 - f0)
    out = np.where(np.isinf(f1) & np.isfinite(f0), np.where(x >= x1, f1, f0), lin)
    out = np.where(np.isinf(f0), INF, out)
    return out


@dataclass(frozen=True)
class GeneralizedInverse:
    """phi(x): first forward time at which the barrier section contains x.

    phi is 0 on (-s_-(0), s_+(0)); above it phi(x) = inf{t : s_+(t) > x} and
    below it phi(x) = inf{t : -s_-(t) < x}, with the boundaries read as linear
    between nodes. Levels never reached by time T map to T.
    """

    times: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    T: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        up = x >= self.s_plus[0]
        if np.any(up):
            out[up] = _first_passage(self.times, self.s_plus, x[up], self.T)
        down = x <= -self.s_minus[0]
        if np.any(down):
            out[down] = _first_passage(self.times, self.s_minus, -x[down], self.T)
        return out if out.ndim else float(out)


def _first_passage(times, s, level, T):
    """inf{t : s(t) > level} for a nondecreasing piecewise-linear s."""
    j = np.searchsorted(s, level, side="right")
    out = np.full(level.shape, float(T))
    inside = (j > 0) & (j < len(s))
    jj = j[inside]
    s0, s1 = s[jj - 1], s[jj]
    t0, t1 = times[jj - 1], times[jj]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(np.isinf(s1), 1.0, (level[inside] - s0) / (s1 - s0))
    out[inside] = t0 + frac * (t1 - t0)
    out[j == 0] = 0.0
    return out


def generalized_inverse(bp: BoundaryPair) -> GeneralizedInverse:
    return GeneralizedInverse(bp.forward_times, bp.s_plus.copy(), bp.s_minus.copy(), bp.grid.T)


@dataclass
class Diagnostics:
    residual_plus: np.ndarray
    residual_minus: np.ndarray
    sweeps: np.ndarray
    evaluations: int = 0
    elapsed: float = 0.0
    projected: list[tuple[int, str, float]] = field(default_factory=list)

    @property
    def max_abs_residual(self) -> float:
        r = np.concatenate([self.residual_plus, self.residual_minus])
        r = r[np.isfinite(r)]
        return float(np.max(np.abs(r))) if r.size else 0.0

    def to_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in a]

        return {
            "max_abs_residual": self.max_abs_residual,
            "evaluations": self.evaluations,
            "elapsed_seconds": self.elapsed,
            "max_sweeps": int(np.max(self.sweeps)) if self.sweeps.size else 0,
            "projected": [{"k": k, "side": s, "residual": r} for k, s, r in self.projected],
            "residual_plus": clean(self.residual_plus),
            "residual_minus": clean(self.residual_minus),
        }


# ---------------------------------------------------------------------------
# residual machinery


def section_mass(prob: BarrierProblem, z, var, lo, hi):
    """int p(var, y - z) (nu - mu)(dy) over the section [lo, hi], vectorised.

    mu is atom-less, so only atoms of nu see the endpoints; those on an
    endpoint count as inside (the start point is never a stopping point).
    """
    closed_lo = np.nextafter(lo, -np.inf)
    return prob.nu.gauss_mass(z, var, closed_lo, hi) - prob.mu.gauss_mass(z, var, lo, hi)


def kernel_mass(k: int, x: float, l: int, bp: BoundaryPair, prob: BarrierProblem) -> float:
    """Heat kernel from (t_k, x) to t_l integrated against nu - mu over the
    stored section (-b_-(t_l), b_+(t_l)]."""
    if not l > k:
        raise NumericalDomainError("kernel_mass needs l > k")
    var = (l - k) * bp.grid.h
    return float(section_mass(prob, x, var, -bp.b_minus[l], bp.b_plus[l]))


def kernel_mass_quadrature(k: int, x: float, l: int, bp: BoundaryPair, prob: BarrierProblem) -> float:
    """Same quantity as :func:`kernel_mass` through generic Stieltjes
    quadrature, clipped to the support hull of nu - mu."""
    h = bp.grid.h
    t_k, t_l = k * h, l * h
    lo_n, hi_n = prob.nu.effective_hull()
    lo_m, hi_m = prob.mu.effective_hull()
    lo = max(-bp.b_minus[l], min(lo_n, lo_m) - 1.0)
    hi = min(bp.b_plus[l], max(hi_n, hi_m))
    res = 0.5 * math.sqrt(t_l - t_k)
    f = lambda y: heat_kernel(t_k, x, t_l, y)  # noqa: E731
    # nu atoms on the lower end count as inside, as in section_mass
    return stieltjes(f, prob.nu, math.nextafter(lo, -math.inf), hi, res) - stieltjes(f, prob.mu, lo, hi, res)


@dataclass(frozen=True)
class Scheme:
    """Time discretisation of the integral equation on one level.

    ``linear``: on each cell [t_{l-1}, t_l] the section endpoints move
    linearly between their node values and the time integral is done by
    Gauss-Legendre (with r = h s^2 on the first, singular cell).
    ``rectangle``: one kernel evaluation per cell at lag l - k, with the
    section blended as theta * I(t_{l-1}) + (1 - theta) * I(t_l).
    """

    kind: Literal["linear", "rectangle"] = "rectangle"
    interval_weight: float = 1.0
    first_cell_nodes: int = 10
    cell_nodes: int = 4

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "rectangle"):
            raise ValueError(f"unknown scheme {self.kind!r}")
        if not 0.0 <= self.interval_weight <= 1.0:
            raise ValueError("interval_weight must lie in [0, 1]")
        if self.first_cell_nodes < 1 or self.cell_nodes < 1:
            raise ValueError("quadrature node counts must be positive")

    @property
    def implicit(self) -> bool:
        """Whether the level's own boundary values enter its equation."""
        return self.kind == "linear" or self.interval_weight > 0


def _unit_gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _blend(a: np.ndarray, b: np.ndarray, frac: np.ndarray) -> np.ndarray:
    """frac * a + (1 - frac) * b with sentinel rules: an infinite ``b``
    (absent side) wins, an infinite ``a`` defers to ``b``."""
    with np.errstate(invalid="ignore"):
        out = frac * a + (1.0 - frac) * b
    out = np.where(np.isinf(a), b, out)
    return np.where(np.isinf(b), b, out)


class _Level:
    """Quadrature for the equation at node level k.

    Entries are (variance, weight, section). Static entries do not involve
    b(t_k); dynamic ones have section endpoints ``frac * b(t_k) +
    (1 - frac) * b(t_{k+1})``.
    """

    def __init__(self, k: int, b_plus: np.ndarray, b_minus: np.ndarray, grid: Grid,
                 prob: BarrierProblem, scheme: Scheme, counter: list[int]) -> None:
        self.k, self.prob, self.counter = k, prob, counter
        h, N = grid.h, grid.N
        self.bk = {"plus": float(b_plus[k]), "minus": float(b_minus[k])}
        self.next_hi, self.next_lo = float(b_plus[k + 1]), -float(b_minus[k + 1])
        l = np.arange(k + 1, N + 1)
        if scheme.kind == "rectangle":
            th = scheme.interval_weight
            var_s = [(l[1:] - k) * h, (l - k) * h]
            w_s = [np.full(len(l) - 1, th * h), np.full(len(l), (1.0 - th) * h)]
            hi_s = [b_plus[l[1:] - 1], b_plus[l]]
            lo_s = [-b_minus[l[1:] - 1], -b_minus[l]]
            self.var_d = np.array([h])
            self.w_d = np.array([th * h])
            self.frac_d = np.array([1.0])
        else:
            s1, w1 = _unit_gauss(scheme.first_cell_nodes)
            s2, w2 = _unit_gauss(scheme.cell_nodes)
            j = l[1:] - k - 1  # cells j >= 1 span r in [j h, (j + 1) h]
            var_s = [(h * (j[:, None] + s2[None, :])).ravel()]
            w_s = [np.broadcast_to(h * w2, (len(j), len(s2))).ravel()]
            frac = np.broadcast_to(1.0 - s2, (len(j), len(s2)))
            hi_s = [_blend(b_plus[l[1:] - 1][:, None], b_plus[l[1:]][:, None], frac).ravel()]
            lo_s = [_blend(-b_minus[l[1:] - 1][:, None], -b_minus[l[1:]][:, None], frac).ravel()]
            self.var_d = h * s1 * s1
            self.w_d = 2.0 * h * s1 * w1
            self.frac_d = 1.0 - s1 * s1
        keep = [w != 0 for w in w_s]
        self.var_s = np.concatenate([v[m] for v, m in zip(var_s, keep)])
        self.w_s = np.concatenate([w[m] for w, m in zip(w_s, keep)])
        self.hi_s = np.concatenate([v[m] for v, m in zip(hi_s, keep)])
        self.lo_s = np.concatenate([v[m] for v, m in zip(lo_s, keep)])
        self.var = np.concatenate([self.var_s, self.var_d])
        self.w = np.concatenate([self.w_s, self.w_d])

    def set_value(self, side: Side, value: float) -> None:
        self.bk[side] = float(value)

    def value(self, z: float) -> float:
        """Discrete U(t_k, z) with the currently stored level-k values."""
        self.counter[0] += 1
        hi_d = _blend(self.bk["plus"], self.next_hi, self.frac_d)
        lo_d = _blend(-self.bk["minus"], self.next_lo, self.frac_d)
        lo = np.concatenate([self.lo_s, lo_d])
        hi = np.concatenate([self.hi_s, hi_d])
        return float(np.dot(self.w, section_mass(self.prob, z, self.var, lo, hi)))

    def __call__(self, x: float, side: Side) -> float:
        """Residual with ``x`` as the side's level-k value."""
        self.bk[side] = float(x)
        return self.value(x if side == "plus" else -x)


def residual(k: int, candidate_b: float, side: Side, bp: BoundaryPair, prob: BarrierProblem,
             scheme: Scheme | None = None) -> float:
    """Discrete equation at level k with ``candidate_b`` on ``side``. The other
    side's level-k value and all later nodes are read from ``bp``."""
    lvl = _Level(k, np.asarray(bp.b_plus), np.asarray(bp.b_minus), bp.grid, prob,
                 scheme or bp.scheme, [0])
    return lvl(candidate_b, side)


def discrete_value(k: int, x: float, bp: BoundaryPair, prob: BarrierProblem,
                   scheme: Scheme | None = None) -> float:
    """The solver's approximation of U(t_k, x) with every node value fixed."""
    if not 0 <= k < bp.grid.N:
        raise NumericalDomainError("discrete_value needs 0 <= k < N")
    lvl = _Level(k, np.asarray(bp.b_plus), np.asarray(bp.b_minus), bp.grid, prob,
                 scheme or bp.scheme, [0])
    return lvl.value(x)


def _find_root(f, lo: float, cap: float, step0: float, cfg: SolverConfig, k: int, side: Side,
               mass_beyond) -> tuple[float, float]:
    """Root of a residual that is positive at ``lo`` and negative somewhere
    above it. Returns (root, residual).

    ``inf`` when the residual stays positive up to the (extended) cap and mu
    has no mass left on that side. A residual already negative at ``lo``
    returns ``lo`` itself under ``monotone_projection``.
    """
    f_lo = f(lo)
    if not np.isfinite(f_lo):
        raise NumericalDomainError(f"non-finite residual at k={k}, side={side}")
    if f_lo <= 0.0:
        if abs(f_lo) < cfg.residual_tol or cfg.monotone_projection:
            return lo, f_lo
        raise NoSignChange(k, side, f"residual {f_lo:.3e} <= 0 at the lower bracket end {lo:.6g}")
    # expand geometrically until the residual turns negative
    a, fa = lo, f_lo
    b, fb = None, None
    step = step0
    for extension in (0, 1):
        limit = cap if extension == 0 else cap + 0.5 * (cap - lo)
        x = a
        while x < limit:
            x = min(x + step, limit)
            fx = f(x)
            if fx < 0.0:
                b, fb = x, fx
                break
            a, fa = x, fx
            step *= 2.0
        if b is not None:
            break
    if b is None:
        if mass_beyond(lo) < 1e-12:
            return INF, 0.0
        raise NoSignChange(k, side, f"residual stays positive on [{lo:.6g}, {limit:.6g}]")
    # bisection down to the configured width
    it = 0
    while b - a > cfg.bisection_width and it < cfg.max_bisection_iters:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm > 0:
            a, fa = m, fm
        else:
            b, fb = m, fm
        it += 1
    # Newton polish with a finite-difference slope, falling back to bisection
    x = a - fa * (b - a) / (fb - fa)
    best_x, best_f = (a, fa) if abs(fa) < abs(fb) else (b, fb)
    for i in range(cfg.newton_polish_iters + cfg.max_bisection_iters):
        fx = f(x)
        if abs(fx) < abs(best_f):
            best_x, best_f = x, fx
        if fx > 0:
            a, fa = x, fx
        else:
            b, fb = x, fx
        if i < cfg.newton_polish_iters:
            slope = (f(x + cfg.fd_step) - fx) / cfg.fd_step
            xn = x - fx / slope if slope != 0 else 0.5 * (a + b)
            if not (a < xn < b):
                xn = 0.5 * (a + b)
        else:
            xn = 0.5 * (a + b)
        if abs(fx) < 1e-3 * cfg.residual_tol and abs(xn - x) < cfg.root_abs_tol:
            break
        if b - a < 4 * np.finfo(float).eps * max(1.0, abs(x)):
            break
        x = xn
    return best_x, best_f


def solve_boundaries(prob: BarrierProblem, grid: Grid, cfg: SolverConfig | None = None,
                     progress=None) -> tuple[BoundaryPair, Diagnostics]:
    """Run the backward recursion from t_N = T down to t_0 = 0."""
    cfg = cfg or SolverConfig()
    started = time.perf_counter()
    N, h = grid.N, grid.h
    b_plus = np.full(N + 1, INF)
    b_minus = np.full(N + 1, INF)
    b_plus[N] = prob.hat_b_plus
    b_minus[N] = prob.hat_b_minus
    res_p = np.full(N + 1, np.nan)
    res_m = np.full(N + 1, np.nan)
    sweeps_used = np.zeros(N + 1, dtype=int)
    counter = [0]
    projected: list[tuple[int, str, float]] = []
    sides: list[Side] = [s for s in ("plus", "minus") if prob.has_side(s)]
    caps = {s: cfg.x_max if cfg.x_max is not None else prob.default_cap(s, grid.T) for s in sides}
    use_sweeps = cfg.use_sweeps(prob)
    step_floor = math.sqrt(h) / 8.0

    def mass_beyond(side: Side):
        if side == "plus":
            return lambda x: 1.0 - float(prob.mu.cdf(x))
        return lambda x: float(prob.mu.cdf(-x))

    for k in range(N - 1, -1, -1):
        arrays = {"plus": b_plus, "minus": b_minus}
        # initial iterate for the unknown level: the later-time value
        for s in sides:
            arrays[s][k] = arrays[s][k + 1]
        lvl = _Level(k, b_plus, b_minus, grid, prob, cfg.scheme, counter)
        n_sweeps = 0
        while True:
            n_sweeps += 1
            moved = 0.0
            for s in sides:
                other: Side = "minus" if s == "plus" else "plus"
                lvl.set_value(other, arrays[other][k])
                lo = arrays[s][k + 1]
                if math.isinf(lo):
                    arrays[s][k] = INF
                    continue
                prev_gap = arrays[s][k + 1] - arrays[s][k + 2] if k + 2 <= N else 0.0
                step0 = max(2.0 * prev_gap, step_floor) if np.isfinite(prev_gap) else step_floor
                root, fval = _find_root(lambda x: lvl(x, s), lo, caps[s], step0, cfg, k, s, mass_beyond(s))
                old = arrays[s][k]
                arrays[s][k] = root
                lvl.set_value(s, root)
                (res_p if s == "plus" else res_m)[k] = fval
                if np.isfinite(root) and np.isfinite(old):
                    moved = max(moved, abs(root - old))
                elif np.isfinite(root) != np.isfinite(old):
                    moved = INF
            if not use_sweeps or len(sides) < 2 or moved < cfg.root_abs_tol or n_sweeps == 1 and moved == 0.0:
                break
            if n_sweeps >= cfg.max_sweeps:
                raise SweepDivergence(k, n_sweeps)
        sweeps_used[k] = n_sweeps
        for s in sides:
            r = (res_p if s == "plus" else res_m)[k]
            if abs(r) >= cfg.residual_tol and arrays[s][k] == arrays[s][k + 1]:
                projected.append((k, s, float(r)))
        if progress is not None:
            progress(k)
    diag = Diagnostics(res_p, res_m, sweeps_used, counter[0], time.perf_counter() - started, projected)
    return BoundaryPair(grid, b_plus, b_minus, cfg.scheme), diag
