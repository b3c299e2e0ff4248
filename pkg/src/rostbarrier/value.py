"""The value-type function U(t, x) = V(t, x) - G(x) from solved boundaries,
and a random-walk lattice for the underlying optimal stopping problem.

Two routes to U are provided. :func:`value_U_kernel` integrates the heat
kernel over the continuation region in time; :func:`value_U_localtime`
integrates expected local times over space, using the generalized inverse of
the barrier. Both read the boundaries as linear between grid nodes, so they
describe the same function and must agree to quadrature accuracy.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import NumericalDomainError
from .kernel import expected_local_time
from .solver import (
    BarrierProblem,
    BoundaryPair,
    Grid,
    SolverConfig,
    discrete_value,
    generalized_inverse,
    section_mass,
)


@dataclass(frozen=True)
class ValueQuery:
    t: float
    x: float

    def check(self, T: float) -> None:
        if not (0.0 <= self.t <= T + 1e-12 * max(T, 1.0)):
            raise NumericalDomainError(f"query time {self.t} outside [0, {T}]")


def payoff_G(x, prob: BarrierProblem):
    """G(x) = 2 int_0^x (F_nu - F_mu) via the measures' CDF antiderivatives."""
    x = np.asarray(x, dtype=float)
    nu, mu = prob.nu, prob.mu
    out = 2.0 * ((nu.cdf_integral(x) - nu.cdf_integral(0.0)) - (mu.cdf_integral(x) - mu.cdf_integral(0.0)))
    return out if np.ndim(out) else float(out)


def _first_panel_edges(rho1: float, levels: int = 8) -> np.ndarray:
    return rho1 * 2.0 ** -np.arange(levels, 0, -1)


def value_U_kernel(t: float, x: float, bp: BoundaryPair, prob: BarrierProblem,
                   mode: Literal["continuous", "discrete"] = "continuous", panel_nodes: int = 8) -> float:
    """U(t, x) as a time integral of heat-kernel masses over the sections.

    ``continuous`` integrates over u in (t, T] with r = u - t = rho^2 and
    Gauss-Legendre panels in rho whose edges sit at the grid nodes (plus a
    geometric refinement towards r = 0). ``discrete`` evaluates the solver's
    own quadrature at a grid node, so it vanishes at solved boundary points up
    to the root-finding residual.
    """
    grid = bp.grid
    ValueQuery(t, x).check(grid.T)
    if mode == "discrete":
        k = int(round(t / grid.h))
        if abs(t - k * grid.h) > 1e-9 * grid.T:
            raise NumericalDomainError("discrete mode needs t on a grid node")
        if k >= grid.N:
            return 0.0
        return discrete_value(k, x, bp, prob)
    if mode != "continuous":
        raise ValueError(f"unknown mode {mode!r}")
    T = grid.T
    if t >= T:
        return 0.0
    nodes = grid.nodes
    r_edges = nodes[nodes > t] - t
    rho_edges = np.concatenate([[0.0], _first_panel_edges(math.sqrt(r_edges[0])), np.sqrt(r_edges)])
    rho_edges = np.unique(rho_edges)
    gx, gw = np.polynomial.legendre.leggauss(panel_nodes)
    a, b = rho_edges[:-1], rho_edges[1:]
    rho = (0.5 * (b - a))[:, None] * (gx[None, :] + 1.0) + a[:, None]
    w = (0.5 * (b - a))[:, None] * gw[None, :] * 2.0 * rho
    r = (rho * rho).ravel()
    u = t + r
    hi = bp.b_at("plus", u)
    lo = -bp.b_at("minus", u)
    vals = section_mass(prob, x, r, lo, hi)
    return float(np.dot(w.ravel(), vals))


def value_U_localtime(t: float, x: float, bp: BoundaryPair, prob: BarrierProblem, tol: float = 1e-10) -> float:
    """U(t, x) = int 1{phi(y) < T - t} E_x L^y_{T - t - phi(y)} (nu - mu)(dy)."""
    grid = bp.grid
    ValueQuery(t, x).check(grid.T)
    tau = grid.T - t
    if tau <= 0:
        return 0.0
    phi = generalized_inverse(bp)
    hi = float(bp.s_at("plus", tau))
    lo = -float(bp.s_at("minus", tau))

    def integrand(y):
        rem = tau - phi(y)
        return np.where(rem > 0, expected_local_time(x, y, np.maximum(rem, 0.0)), 0.0)

    lo_m, hi_m = prob.mu.effective_hull()
    lo_n, hi_n = prob.nu.effective_hull()
    lo = max(lo, min(lo_m, lo_n) - 1.0)
    hi = min(hi, max(hi_m, hi_n) + 1.0)
    if hi <= lo:
        return 0.0
    sp, sm = bp.s_plus, bp.s_minus
    kinks = np.concatenate([[x], sp[np.isfinite(sp)], -sm[np.isfinite(sm)]])
    for c in prob.mu.components + prob.nu.components:
        kinks = np.concatenate([kinks, [v for v in c.hull() if np.isfinite(v)]])
    res = (hi - lo) / 64.0
    plus = prob.nu.integrate(integrand, lo, hi, res, kinks)
    minus = prob.mu.integrate(integrand, lo, hi, res, kinks)
    return float(plus - minus)


# ---------------------------------------------------------------------------
# lattice oracle


@dataclass(frozen=True)
class LatticeSpec:
    """Symmetric random walk with dx = sqrt(h) on [-radius, radius]."""

    grid: Grid
    radius: float
    threshold: float = 1e-12

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("lattice radius must be positive")

    @property
    def dx(self) -> float:
        return math.sqrt(self.grid.h)

    @classmethod
    def for_problem(cls, prob: BarrierProblem, grid: Grid, cfg: SolverConfig | None = None) -> "LatticeSpec":
        if cfg is not None and cfg.x_max is not None:
            return cls(grid, cfg.x_max)
        caps = [prob.default_cap(s, grid.T) for s in ("plus", "minus") if prob.has_side(s)]
        return cls(grid, max(caps))


@dataclass(frozen=True)
class LatticeResult:
    spec: LatticeSpec
    x: np.ndarray
    payoff: np.ndarray
    V: np.ndarray  # V[k, j] at reversed time t_k
    b_plus: np.ndarray
    b_minus: np.ndarray
    contiguous: np.ndarray

    @property
    def s_plus(self) -> np.ndarray:
        return self.b_plus[::-1]

    @property
    def s_minus(self) -> np.ndarray:
        return self.b_minus[::-1]


def lattice_value(prob: BarrierProblem, spec: LatticeSpec) -> LatticeResult:
    """Backward induction V[k] = max(G, (V[k+1][j-1] + V[k+1][j+1]) / 2) with
    V[N] = G and reflection at the ends; the boundary at level k is the
    outermost node where V exceeds G by more than ``spec.threshold``."""
    N, dx = spec.grid.N, spec.dx
    J = int(math.ceil(spec.radius / dx))
    x = np.arange(-J, J + 1) * dx
    G = np.asarray(payoff_G(x, prob), dtype=float)
    V = np.empty((N + 1, x.size))
    V[N] = G
    b_plus = np.full(N + 1, math.inf)
    b_minus = np.full(N + 1, math.inf)
    contiguous = np.ones(N + 1, dtype=bool)
    has_plus, has_minus = prob.has_side("plus"), prob.has_side("minus")
    if has_plus:
        b_plus[N] = prob.hat_b_plus
    if has_minus:
        b_minus[N] = prob.hat_b_minus
    cont = np.empty_like(G)
    for k in range(N - 1, -1, -1):
        nxt = V[k + 1]
        cont[1:-1] = 0.5 * (nxt[:-2] + nxt[2:])
        cont[0] = nxt[1]
        cont[-1] = nxt[-2]
        V[k] = np.maximum(G, cont)
        idx = np.flatnonzero(V[k] > G + spec.threshold)
        if idx.size:
            contiguous[k] = idx[-1] - idx[0] + 1 == idx.size
            if has_plus:
                b_plus[k] = max(x[idx[-1]], prob.hat_b_plus)
            if has_minus:
                b_minus[k] = max(-x[idx[0]], prob.hat_b_minus)
        else:
            if has_plus:
                b_plus[k] = prob.hat_b_plus
            if has_minus:
                b_minus[k] = prob.hat_b_minus
    return LatticeResult(spec, x, G, V, b_plus, b_minus, contiguous)


@dataclass(frozen=True)
class OracleReport:
    t: np.ndarray
    solver_s_plus: np.ndarray
    lattice_s_plus: np.ndarray
    solver_s_minus: np.ndarray
    lattice_s_minus: np.ndarray
    window: tuple[float, float]
    tolerance: float

    @staticmethod
    def _diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        both_inf = np.isinf(a) & np.isinf(b)
        with np.errstate(invalid="ignore"):
            d = np.abs(a - b)
        return np.where(both_inf, 0.0, d)

    @property
    def abs_diff_plus(self) -> np.ndarray:
        return self._diff(self.solver_s_plus, self.lattice_s_plus)

    @property
    def abs_diff_minus(self) -> np.ndarray:
        return self._diff(self.solver_s_minus, self.lattice_s_minus)

    def _in_window(self) -> np.ndarray:
        T = self.t[-1]
        return (self.t >= self.window[0] * T - 1e-12) & (self.t <= self.window[1] * T + 1e-12)

    @property
    def sup_plus(self) -> float:
        return float(np.max(self.abs_diff_plus[self._in_window()]))

    @property
    def sup_minus(self) -> float:
        return float(np.max(self.abs_diff_minus[self._in_window()]))

    @property
    def passed(self) -> bool:
        return self.sup_plus <= self.tolerance and self.sup_minus <= self.tolerance

    def to_csv(self) -> str:
        def fmt(v: float) -> str:
            return "inf" if np.isinf(v) else f"{v:.12g}"

        out = io.StringIO()
        out.write("t,solver_s_plus,lattice_s_plus,solver_s_minus,lattice_s_minus,abs_diff_plus,abs_diff_minus\n")
        cols = (self.t, self.solver_s_plus, self.lattice_s_plus, self.solver_s_minus, self.lattice_s_minus,
                self.abs_diff_plus, self.abs_diff_minus)
        for row in zip(*cols):
            out.write(",".join(fmt(v) for v in row) + "\n")
        return out.getvalue()

    def summary(self) -> dict:
        return {
            "sup_abs_diff_plus": self.sup_plus,
            "sup_abs_diff_minus": self.sup_minus,
            "tolerance": self.tolerance,
            "window": list(self.window),
            "passed": self.passed,
        }


def oracle_tolerance(grid: Grid) -> float:
    return max(0.05, 3.0 * math.sqrt(grid.h))


def oracle_report(bp: BoundaryPair, lattice: LatticeResult, window: tuple[float, float] = (0.1, 0.9),
                  tolerance: float | None = None) -> OracleReport:
    """Node-by-node comparison of solver and lattice boundaries in forward time."""
    if lattice.spec.grid != bp.grid:
        raise ValueError("lattice and boundaries must share the time grid")
    tol = oracle_tolerance(bp.grid) if tolerance is None else tolerance
    return OracleReport(bp.forward_times, bp.s_plus.copy(), lattice.s_plus.copy(), bp.s_minus.copy(),
                        lattice.s_minus.copy(), window, tol)
