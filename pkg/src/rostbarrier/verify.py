"""Monte Carlo check that the first exit of W^nu from the barrier embeds mu.

Paths are Euler random walks on a fine grid with a Brownian-bridge crossing
correction against the locally linear boundary. Each path owns a
counter-based stream derived from (seed, path index), and draws are made in
a fixed per-path order, so results do not depend on how paths are batched.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr
from scipy.stats import kstest

from .errors import InsufficientSamples, UnsupportedSampling
from .solver import BarrierProblem, BoundaryPair, Grid, SolverConfig, solve_boundaries

SIDE_UPPER, SIDE_LOWER, SIDE_CENSORED = 1, -1, 0
_SIDE_NAMES = {SIDE_UPPER: "upper", SIDE_LOWER: "lower", SIDE_CENSORED: "censored"}


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings.

    Path ``i`` draws from ``Philox(SeedSequence(seed, spawn_key=(i,)))``: its
    starting point, then for each chunk of ``chunk`` steps the normals
    followed by the uniforms, then one uniform for the crossing time if it
    exits. ``block`` only sets how many paths are vectorised together.
    """

    n_paths: int = 100_000
    dt: float = 1e-4
    seed: int = 0
    chunk: int = 512
    block: int = 4096
    bridge: bool = True
    refine_start: bool = True
    refine_nodes: int = 100
    refine_cells: int = 10
    grading: float = 0.05
    t_min: float = 1e-8

    def __post_init__(self) -> None:
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.chunk < 1 or self.block < 1:
            raise ValueError("chunk and block must be positive")
        if self.refine_nodes < 2 or not 2 <= self.refine_cells < self.refine_nodes:
            raise ValueError("need refine_nodes > refine_cells >= 2")
        if self.grading < 0 or not self.t_min > 0:
            raise ValueError("grading must be >= 0 and t_min > 0")

    def steps(self, T: float) -> int:
        M = int(round(T / self.dt))
        if abs(M * self.dt - T) > 1e-9 * T:
            raise ValueError(f"dt={self.dt} does not divide T={T}")
        return M

    def check(self, bp: BoundaryPair) -> None:
        if self.dt > bp.grid.h * (1 + 1e-12):
            raise ValueError(f"MC step {self.dt} exceeds the boundary grid step {bp.grid.h}")
        self.steps(bp.grid.T)

    def generator(self, i: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(self.seed), spawn_key=(i,))))


@dataclass(frozen=True)
class EmbeddingSample:
    path: int
    sigma: float
    w_stop: float
    side: str


@dataclass(frozen=True)
class EmbeddingSamples:
    """Column store of simulated exits. Censored paths carry sigma = T and
    the walk's value at T."""

    sigma: np.ndarray
    w_stop: np.ndarray
    side: np.ndarray  # +1 upper, -1 lower, 0 censored
    T: float

    def __len__(self) -> int:
        return self.sigma.size

    def __getitem__(self, i: int) -> EmbeddingSample:
        return EmbeddingSample(i, float(self.sigma[i]), float(self.w_stop[i]), _SIDE_NAMES[int(self.side[i])])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def stopped(self) -> np.ndarray:
        return self.side != SIDE_CENSORED

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("path,sigma,w_stop,side\n")
        for i in range(len(self)):
            out.write(f"{i},{self.sigma[i]:.17g},{self.w_stop[i]:.17g},{_SIDE_NAMES[int(self.side[i])]}\n")
        return out.getvalue()


class BoundaryProfile:
    """Boundaries for simulation: the solved pair, refined near t = 0.

    Near the start the boundaries grow faster than sqrt(t), and a single
    solver cell cannot resolve them. The barrier in forward time does not
    depend on the horizon, so nested solves on horizons H_1 = R h,
    H_2 = R H_1 / n, ... (n nodes each) give the same curves at ever finer
    resolution, down to a cell shorter than ``t_min`` that gets a
    sqrt(t) profile. Level l is used on [0, H_{l+1}] and blended linearly into
    level l - 1 over [H_{l+1} / 2, H_{l+1}], which keeps every level away from
    its own first cell, where the rectangle rule is least accurate.
    """

    def __init__(self, bp: BoundaryPair, levels: list[BoundaryPair] | None = None) -> None:
        self.levels = [bp] + list(levels or [])

    @classmethod
    def refined(cls, bp: BoundaryPair, prob: BarrierProblem, *, nodes: int = 100, cells: int = 10,
                t_min: float = 1e-8, solver_cfg: SolverConfig | None = None) -> "BoundaryProfile":
        cfg = solver_cfg or SolverConfig(scheme=bp.scheme)
        levels = []
        H = min(bp.grid.T, cells * bp.grid.h)
        while True:
            fine, _ = solve_boundaries(prob, Grid(H, nodes), cfg)
            levels.append(fine)
            if fine.grid.h < t_min:
                break
            H = cells * H / nodes
        return cls(bp, levels)

    def __call__(self, side: str, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        deepest = self.levels[-1]
        v = np.asarray(deepest.s_at(side, times), dtype=float)
        if len(self.levels) > 1:
            # sqrt(t) on the innermost cell, which is shorter than t_min
            s_all = deepest.s_plus if side == "plus" else deepest.s_minus
            s0, s1, h = float(s_all[0]), float(s_all[1]), deepest.grid.h
            if np.isfinite(s0) and np.isfinite(s1):
                inner = times < h
                v = np.where(inner, s0 + (s1 - s0) * np.sqrt(np.clip(times, 0.0, h) / h), v)
        for l in range(len(self.levels) - 2, -1, -1):
            H = self.levels[l + 1].grid.T
            w = np.clip((times - 0.5 * H) / (0.5 * H), 0.0, 1.0)
            if not np.any(w > 0):
                continue
            coarse = np.asarray(self.levels[l].s_at(side, times), dtype=float)
            both = np.isfinite(v) & np.isfinite(coarse)
            with np.errstate(invalid="ignore"):
                mixed = (1.0 - w) * v + w * coarse
            v = np.where(both, mixed, np.where(w >= 0.5, coarse, v))
        return v


def mc_time_grid(T: float, dt: float, grading: float, t_min: float) -> np.ndarray:
    """Uniform steps of ``dt``, preceded by geometric steps with
    (t_{m+1} - t_m) / t_m = ``grading`` from ``t_min`` up to dt / grading."""
    M = int(round(T / dt))
    uniform = np.arange(M + 1) * dt
    uniform[-1] = T
    if grading <= 0:
        return uniform
    t_star = dt / grading
    if t_star <= t_min:
        return uniform
    n_geo = int(math.ceil(math.log(t_star / t_min) / math.log1p(grading)))
    geo = t_min * (1.0 + grading) ** np.arange(n_geo)
    geo = geo[geo < t_star]
    tail = uniform[uniform >= t_star]
    return np.concatenate([[0.0], geo, tail])


def _bridge_exit_prob(a, b, dt):
    """P(bridge from distance a to distance b > 0 touches 0) = exp(-2ab/dt)."""
    with np.errstate(invalid="ignore", over="ignore"):
        p = np.exp(-2.0 * a * b / dt)
    return np.where(np.isfinite(a) & np.isfinite(b), p, 0.0)


def _crossing_cdf(s, a, b, dt):
    """P(tau <= s) for a bridge from distance a > 0 to signed distance b
    over a step of length dt, tau its first time at distance 0."""
    sig = np.sqrt(s * (dt - s) / dt)
    m1 = (-a * (dt - s) + b * s) / dt
    m2 = (a * (dt - s) + b * s) / dt
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z1 = np.where(sig > 0, m1 / sig, np.where(m1 > 0, np.inf, -np.inf))
        z2 = np.where(sig > 0, m2 / sig, np.where(m2 > 0, np.inf, -np.inf))
        first = np.exp(-2.0 * a * b / dt + log_ndtr(z1))
    return first + ndtr(-z2)


def _sample_crossing(a, b, dt, u, bridge_exit, iters: int = 60):
    """Draw the crossing offset within a step by inverting the conditional
    bridge CDF with bisection."""
    total = np.where(bridge_exit, _bridge_exit_prob(a, np.maximum(b, 0.0), dt), 1.0)
    target = u * total
    lo = np.zeros_like(a)
    hi = np.full_like(a, dt)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = _crossing_cdf(mid, a, b, dt) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    s = 0.5 * (lo + hi)
    # a boundary that appears from +inf within the step: cross at the step end
    return np.where(np.isfinite(a), s, dt)


def simulate_embedding(bp: BoundaryPair, prob: BarrierProblem, cfg: MCConfig | None = None,
                       solver_cfg: SolverConfig | None = None) -> EmbeddingSamples:
    """Simulate sigma* = inf{t > 0 : W^nu_t outside (-s_-(t), s_+(t))}.

    Boundaries are read from a :class:`BoundaryProfile` (linear between
    nodes); ``solver_cfg`` only matters for the nested start-up solves.
    """
    cfg = cfg or MCConfig()
    cfg.check(bp)
    if prob.nu.has_singular:
        raise UnsupportedSampling("nu has a singular component")
    T = bp.grid.T
    if cfg.refine_start:
        profile = BoundaryProfile.refined(bp, prob, nodes=cfg.refine_nodes, cells=cfg.refine_cells,
                                          t_min=cfg.t_min, solver_cfg=solver_cfg)
    else:
        profile = BoundaryProfile(bp)
    times = mc_time_grid(T, cfg.dt, cfg.grading, cfg.t_min)
    steps = np.diff(times)
    M = steps.size
    up = profile("plus", times)
    lo = -profile("minus", times)
    sq = np.sqrt(steps)

    n = int(cfg.n_paths)
    sigma = np.full(n, T)
    w_stop = np.empty(n)
    side = np.zeros(n, dtype=np.int8)
    for first_id in range(0, n, cfg.block):
        ids = np.arange(first_id, min(n, first_id + cfg.block))
        gens = [cfg.generator(int(i)) for i in ids]
        W = np.array([prob.nu.sample(g, 1)[0] for g in gens])
        alive = np.arange(ids.size)
        for c0 in range(0, M, cfg.chunk):
            if alive.size == 0:
                break
            C = min(cfg.chunk, M - c0)
            Z = np.empty((alive.size, C))
            U = np.empty((alive.size, C))
            for r, j in enumerate(alive):
                Z[r] = gens[j].standard_normal(C)
                U[r] = gens[j].random(C)
            m = np.arange(c0 + 1, c0 + C + 1)
            path = W[alive, None] + np.cumsum(Z * sq[m - 1], axis=1)
            prev = np.concatenate([W[alive, None], path[:, :-1]], axis=1)
            up1, lo1, up0, lo0 = up[m], lo[m], up[m - 1], lo[m - 1]
            hit_up = path >= up1
            hit_lo = path <= lo1
            exit_end = hit_up | hit_lo
            if cfg.bridge:
                p_up = _bridge_exit_prob(up0 - prev, up1 - path, steps[m - 1])
                p_lo = _bridge_exit_prob(prev - lo0, path - lo1, steps[m - 1])
                p = 1.0 - (1.0 - p_up) * (1.0 - p_lo)
                if c0 == 0:
                    # the walk starts on the barrier when nu sits at its tip
                    p[:, 0] = 0.0
                exit_bridge = ~exit_end & (U < p)
            else:
                p_up = np.zeros_like(path)
                exit_bridge = np.zeros_like(exit_end)
            exits = exit_end | exit_bridge
            any_exit = exits.any(axis=1)
            rows = np.flatnonzero(any_exit)
            if rows.size:
                col = np.argmax(exits[rows], axis=1)
                via_bridge = exit_bridge[rows, col]
                upper = np.where(via_bridge, U[rows, col] < p_up[rows, col], hit_up[rows, col])
                k = c0 + col  # the exit step runs from times[k] to times[k + 1]
                w0, w1 = prev[rows, col], path[rows, col]
                a = np.where(upper, up[k] - w0, w0 - lo[k])
                b = np.where(upper, up[k + 1] - w1, w1 - lo[k + 1])
                u_cross = np.array([gens[j].random() for j in alive[rows]])
                s = _sample_crossing(a, b, steps[k], u_cross, via_bridge)
                frac = s / steps[k]
                with np.errstate(invalid="ignore"):
                    bnd = np.where(upper, up[k] + frac * (up[k + 1] - up[k]), lo[k] + frac * (lo[k + 1] - lo[k]))
                bnd = np.where(np.isfinite(bnd), bnd, np.where(upper, up[k + 1], lo[k + 1]))
                gid = ids[alive[rows]]
                sigma[gid] = times[k] + s
                w_stop[gid] = bnd
                side[gid] = np.where(upper, SIDE_UPPER, SIDE_LOWER)
            W[alive] = path[:, -1]
            alive = alive[~any_exit]
        gid = ids[alive]
        w_stop[gid] = W[alive]
    return EmbeddingSamples(sigma, w_stop, side, T)


@dataclass(frozen=True)
class EmbeddingDiagnostics:
    ks: float
    ks_pvalue: float
    n_stopped: int
    n_upper: int
    n_lower: int
    n_censored: int
    censor_pred: float
    censor_obs: float
    censor_se: float

    @property
    def censor_ok(self) -> bool:
        return abs(self.censor_obs - self.censor_pred) <= 3.0 * self.censor_se

    def to_dict(self) -> dict:
        return {
            "ks": self.ks,
            "ks_pvalue": self.ks_pvalue,
            "n_stopped": self.n_stopped,
            "n_upper": self.n_upper,
            "n_lower": self.n_lower,
            "n_censored": self.n_censored,
            "censor_pred": self.censor_pred,
            "censor_obs": self.censor_obs,
            "censor_se": self.censor_se,
            "censor_within_3se": self.censor_ok,
        }


def embeddable_region(prob: BarrierProblem, bp: BoundaryPair) -> list[tuple[float, float]]:
    """[hat_b_+, s_+(T)] and [-s_-(T), -hat_b_-] for the sides present."""
    parts = []
    if prob.has_side("minus"):
        parts.append((-float(bp.s_minus[-1]), -prob.hat_b_minus))
    if prob.has_side("plus"):
        parts.append((prob.hat_b_plus, float(bp.s_plus[-1])))
    return parts


def restricted_cdf(prob: BarrierProblem, parts: list[tuple[float, float]]):
    """CDF of mu restricted to a union of closed intervals, renormalised,
    together with the restricted mass."""
    mu = prob.mu

    def mass(a, b):
        return np.maximum(mu.cdf(b) - mu.cdf(np.nextafter(a, -np.inf)), 0.0)

    total = float(sum(mass(a, b) for a, b in parts))

    def F(x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for a, b in parts:
            acc = acc + np.where(x < a, 0.0, mass(a, np.minimum(x, b)))
        return acc / total if total > 0 else acc

    return F, total


def embedding_test(samples: EmbeddingSamples, prob: BarrierProblem, bp: BoundaryPair,
                   min_samples: int = 1000) -> EmbeddingDiagnostics:
    """KS distance between the stopped values and mu restricted to the
    region embeddable by T, plus the censoring fraction against 1 - mu(region)."""
    stopped = samples.stopped
    n_stop = int(stopped.sum())
    if n_stop < min_samples:
        raise InsufficientSamples(f"{n_stop} stopped paths, need at least {min_samples}")
    F, mass = restricted_cdf(prob, embeddable_region(prob, bp))
    res = kstest(samples.w_stop[stopped], F)
    n = len(samples)
    pred = 1.0 - mass
    obs = 1.0 - n_stop / n
    se = math.sqrt(max(pred * (1.0 - pred), 0.0) / n)
    return EmbeddingDiagnostics(
        ks=float(res.statistic),
        ks_pvalue=float(res.pvalue),
        n_stopped=n_stop,
        n_upper=int((samples.side == SIDE_UPPER).sum()),
        n_lower=int((samples.side == SIDE_LOWER).sum()),
        n_censored=n - n_stop,
        censor_pred=pred,
        censor_obs=obs,
        censor_se=se,
    )
