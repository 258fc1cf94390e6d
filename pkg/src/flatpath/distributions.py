"""Monte Carlo estimation of free path length distributions.

Estimates the survivor functions of 2*eps*tau over area-uniform starting
points (directions averaged or fixed), with binomial error bars, plus the
coupled comparison behind the approximation lemma and the epsilon-sweep
behind the limiting-distribution statement.

Sampling is chunked; each chunk draws from a counter-based Philox stream
keyed by (seed, chunk index), so results are bit-identical for a given
SamplePlan regardless of the worker count.  FLATPATH_THREADS caps workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import engine
from .engine import CircleObstacles, get_arrays, sample_states, trace_batch
from .errors import GridMismatch, InvalidEpsilon
from .surface import (TranslationSurface, apply_matrix, renormalization_matrix,
                      separation_exceeds)
from .tracing import HitKind, UnitTangentState, free_path_segment
from .transversal import build_obstacle_batch, build_transversals

CHUNK_SIZE = 32768          # fixed: chunk boundaries are part of determinism
MAX_ABORT_FRACTION = 1e-3   # singular-impact resampling budget


@dataclass(frozen=True)
class SamplePlan:
    """What to sample: count, seed, obstacle radius, direction mode, t-grid."""

    n_samples: int
    seed: int
    epsilon: float
    theta_mode: str = "average"      # "average" or "fixed"
    theta: float | None = None
    grid_max: float = 4.0
    grid_points: int = 401
    prongs: str = "pair"

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if self.theta_mode not in ("average", "fixed"):
            raise ValueError(f"unknown theta_mode {self.theta_mode!r}")
        if self.theta_mode == "fixed" and self.theta is None:
            raise ValueError("fixed theta_mode needs a theta value")

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.grid_max, self.grid_points)

    @property
    def t_max(self) -> float:
        # censored trajectories then scale past the grid and never bias it
        return (self.grid_max + 1.0) / (2.0 * self.epsilon)


@dataclass
class EmpiricalCCDF:
    """Survivor-function estimates of 2*eps*tau on a t-grid."""

    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_samples: int
    n_censored: int
    n_aborted: int
    meta: dict = field(default_factory=dict)


def sample_uniform_state(surface: TranslationSurface,
                         rng: np.random.Generator) -> UnitTangentState:
    """One state with area-uniform point and uniform direction."""
    arr = get_arrays(surface)
    ch, pos, th = sample_states(arr, rng, 1)
    return UnitTangentState(int(ch[0]), (float(pos[0, 0]), float(pos[0, 1])),
                            float(th[0]))


def _workers() -> int:
    env = os.environ.get("FLATPATH_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _chunks(n: int):
    out = []
    idx = 0
    start = 0
    while start < n:
        size = min(CHUNK_SIZE, n - start)
        out.append((idx, size))
        idx += 1
        start += size
    return out


def _run_chunks(n: int, worker):
    chunks = _chunks(n)
    w = _workers()
    if w <= 1 or len(chunks) <= 1:
        return [worker(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(worker, chunks))


def _chunk_rng(seed: int, chunk_idx: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), chunk_idx]))


def _inside_obstacle(arr, charts, pos, epsilon):
    w = arr.edge_origin[charts]
    valid = arr.edge_valid[charts]
    d2 = (w[..., 0] - pos[:, None, 0]) ** 2 + (w[..., 1] - pos[:, None, 1]) ** 2
    return (valid & (d2 <= epsilon * epsilon)).any(axis=1)


def _grid_counts(y: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Number of samples with y strictly above each grid point."""
    ys = np.sort(y)
    return y.size - np.searchsorted(ys, grid, side="right")


def _estimate(surface, plan: SamplePlan, kind: str) -> EmpiricalCCDF:
    arr = get_arrays(surface)
    eps = plan.epsilon
    grid = plan.grid()
    t_max = plan.t_max
    theta_arg = plan.theta if plan.theta_mode == "fixed" else None

    if kind == "circular":
        if eps <= 0 or not separation_exceeds(surface, 2.0 * eps):
            raise InvalidEpsilon(
                f"epsilon {eps:g} is not below half the shortest singularity separation")
        shared_obstacles = CircleObstacles(eps)
    elif plan.theta_mode == "fixed":
        # validates per-direction embeddedness of the obstacle segments
        shared_obstacles = build_transversals(surface, plan.theta, eps,
                                              mode=plan.prongs).obstacles
    else:
        if eps <= 0 or not separation_exceeds(surface, 2.0 * eps):
            raise InvalidEpsilon(
                f"epsilon {eps:g} is not below half the shortest singularity separation "
                f"(required for direction-averaged segment obstacles)")
        shared_obstacles = None

    def worker(chunk):
        chunk_idx, size = chunk
        rng = _chunk_rng(plan.seed, chunk_idx)
        counts = np.zeros(grid.size, dtype=np.int64)
        censored = 0
        aborted = 0
        inside = 0
        need = size
        for _ in range(10_000):
            if need <= 0:
                break
            ch, pos, th = sample_states(arr, rng, need, theta_arg)
            if kind == "circular":
                ins = _inside_obstacle(arr, ch, pos, eps)
                inside += int(ins.sum())
                keep = ~ins
                ch, pos, th = ch[keep], pos[keep], th[keep]
                if ch.size == 0:
                    continue
            if shared_obstacles is None:
                obstacles, ab = build_obstacle_batch(surface, th, eps, plan.prongs)
                aborted += int(ab.sum())
                keep = ~ab
                ch, pos, th = ch[keep], pos[keep], th[keep]
                if ch.size == 0:
                    continue
                ok_rows = np.nonzero(keep)[0]
                obstacles = engine.SegmentObstacles(
                    obstacles.seg_chart[ok_rows], obstacles.seg_a[ok_rows],
                    obstacles.seg_v[ok_rows], obstacles.seg_len[ok_rows])
            else:
                obstacles = shared_obstacles
            dvec = np.stack([np.cos(th), np.sin(th)], axis=1)
            res = trace_batch(surface, ch, pos, dvec,
                              np.full(ch.size, t_max), obstacles)
            ok = res.status != engine.SINGULAR
            aborted += int((~ok).sum())
            y = np.where(res.status == engine.HIT, 2.0 * eps * res.time, np.inf)[ok]
            censored += int((res.status[ok] == engine.CENSORED).sum())
            counts += _grid_counts(y, grid)
            need -= int(y.size)
        else:
            raise RuntimeError("sampling failed to converge; geometry too degenerate")
        return counts, censored, aborted, inside

    results = _run_chunks(plan.n_samples, worker)
    counts = np.sum([r[0] for r in results], axis=0)
    n_censored = int(sum(r[1] for r in results))
    n_aborted = int(sum(r[2] for r in results))
    n_inside = int(sum(r[3] for r in results))
    n = plan.n_samples
    if n_aborted > MAX_ABORT_FRACTION * n:
        raise RuntimeError(
            f"{n_aborted} singular-impact aborts out of {n} samples; geometry bug likely")

    p = counts / n
    if kind == "circular":
        # points inside the obstacle are excluded while sampling and carried
        # analytically as kappa*pi*eps^2 mass at zero
        factor = 1.0 - arr.kappa * math.pi * eps * eps
    else:
        factor = 1.0
    values = factor * p
    stderr = factor * np.sqrt(p * (1.0 - p) / n)
    meta = {
        "surface": surface.name,
        "mode": kind,
        "epsilon": repr(float(eps)),
        "theta_mode": plan.theta_mode,
        "samples": str(n),
        "seed": str(plan.seed),
        "censored": str(n_censored),
        "aborted": str(n_aborted),
    }
    if plan.theta_mode == "fixed":
        meta["theta"] = repr(float(plan.theta))
    if kind == "circular":
        meta["inside_draws"] = str(n_inside)
    return EmpiricalCCDF(grid=grid, values=values, stderr=stderr, n_samples=n,
                         n_censored=n_censored, n_aborted=n_aborted, meta=meta)


def estimate_F(surface: TranslationSurface, plan: SamplePlan) -> EmpiricalCCDF:
    """Direction-averaged survivor function for circular obstacles."""
    return _estimate(surface, plan, "circular")


def estimate_Ftilde(surface: TranslationSurface, plan: SamplePlan) -> EmpiricalCCDF:
    """Direction-averaged survivor function for segment obstacles."""
    return _estimate(surface, plan, "segment")


def estimate_ftilde(surface: TranslationSurface, plan: SamplePlan) -> EmpiricalCCDF:
    """Fixed-direction survivor function for segment obstacles."""
    if plan.theta_mode != "fixed":
        raise ValueError("estimate_ftilde needs a plan with theta_mode='fixed'")
    return _estimate(surface, plan, "segment")


def ks_distance(a: EmpiricalCCDF, b: EmpiricalCCDF) -> float:
    """Supremum absolute difference of two estimates on a common grid."""
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise GridMismatch("estimates use different t-grids")
    return float(np.max(np.abs(a.values - b.values)))


@dataclass
class ApproximationReport:
    """Coupled comparison of the circular and segment estimators."""

    epsilon: float
    kappa: int
    n_samples: int
    sup_gap: float
    sup_gap_t: float
    sup_gap_sigma: float
    bound: float                 # 2 * kappa * pi * eps^2
    r10_violations: int          # must be 0 (pathwise domination)
    r01_sup: float
    r01_sigma: float
    r01_bound: float             # kappa * pi * eps^2
    F: EmpiricalCCDF
    Ftilde: EmpiricalCCDF

    @property
    def passes(self) -> bool:
        return (self.r10_violations == 0
                and self.sup_gap <= self.bound + 3.0 * self.sup_gap_sigma
                and self.r01_sup <= self.r01_bound + 3.0 * self.r01_sigma)


def approximation_check(surface: TranslationSurface, epsilon: float,
                        plan: SamplePlan) -> ApproximationReport:
    """Run both estimators on one sample stream (common random numbers).

    Reports sup_t |F - Ftilde| against the analytic 2*kappa*pi*eps^2 bound,
    the count of pathwise domination violations (the R_{1,0} set, must be
    empty), and the empirical R_{0,1} mass against kappa*pi*eps^2.
    """
    plan = replace(plan, epsilon=epsilon)
    arr = get_arrays(surface)
    eps = plan.epsilon
    grid = plan.grid()
    t_max = plan.t_max
    if eps <= 0 or not separation_exceeds(surface, 2.0 * eps):
        raise InvalidEpsilon(
            f"epsilon {eps:g} is not below half the shortest singularity separation")
    theta_arg = plan.theta if plan.theta_mode == "fixed" else None

    def worker(chunk):
        chunk_idx, size = chunk
        rng = _chunk_rng(plan.seed, chunk_idx)
        counts_c_out = np.zeros(grid.size, dtype=np.int64)
        counts_s_out = np.zeros(grid.size, dtype=np.int64)
        counts_s_all = np.zeros(grid.size, dtype=np.int64)
        n_out = 0
        censored = 0
        aborted = 0
        violations = 0
        need = size
        for _ in range(10_000):
            if need <= 0:
                break
            ch, pos, th = sample_states(arr, rng, need, theta_arg)
            if theta_arg is None:
                obstacles, ab = build_obstacle_batch(surface, th, eps, plan.prongs)
            else:
                obstacles = build_transversals(surface, theta_arg, eps,
                                               mode=plan.prongs).obstacles
                ab = np.zeros(ch.size, dtype=bool)
            keep = ~ab
            aborted += int(ab.sum())
            ch, pos, th = ch[keep], pos[keep], th[keep]
            if ch.size == 0:
                continue
            if theta_arg is None:
                rows = np.nonzero(keep)[0]
                obstacles = engine.SegmentObstacles(
                    obstacles.seg_chart[rows], obstacles.seg_a[rows],
                    obstacles.seg_v[rows], obstacles.seg_len[rows])
            dvec = np.stack([np.cos(th), np.sin(th)], axis=1)
            caps = np.full(ch.size, t_max)

            res_s = trace_batch(surface, ch, pos, dvec, caps, obstacles)
            ins = _inside_obstacle(arr, ch, pos, eps)
            y_c = np.zeros(ch.size)
            ok = res_s.status != engine.SINGULAR
            out = ~ins & ok
            if out.any():
                rows = np.nonzero(out)[0]
                res_c = trace_batch(surface, ch[rows], pos[rows], dvec[rows],
                                    caps[rows], CircleObstacles(eps))
                ok_rows = res_c.status != engine.SINGULAR
                aborted += int((~ok_rows).sum())
                ok[rows[~ok_rows]] = False
                out[rows[~ok_rows]] = False
                y_c[rows[ok_rows]] = np.where(
                    res_c.status[ok_rows] == engine.HIT,
                    2.0 * eps * res_c.time[ok_rows], np.inf)
                censored += int((res_c.status[ok_rows] == engine.CENSORED).sum())
            aborted += int((res_s.status == engine.SINGULAR).sum())

            y_s = np.where(res_s.status == engine.HIT, 2.0 * eps * res_s.time, np.inf)
            violations += int((y_c[out] > y_s[out] + 1e-12).sum())
            counts_s_all += _grid_counts(y_s[ok], grid)
            counts_c_out += _grid_counts(y_c[out], grid)
            counts_s_out += _grid_counts(y_s[out], grid)
            n_out += int(out.sum())
            need -= int(ok.sum())
        else:
            raise RuntimeError("sampling failed to converge; geometry too degenerate")
        return (counts_c_out, counts_s_out, counts_s_all, n_out,
                censored, aborted, violations)

    results = _run_chunks(plan.n_samples, worker)
    counts_c_out = np.sum([r[0] for r in results], axis=0)
    counts_s_out = np.sum([r[1] for r in results], axis=0)
    counts_s_all = np.sum([r[2] for r in results], axis=0)
    n_out = int(sum(r[3] for r in results))
    n_censored = int(sum(r[4] for r in results))
    n_aborted = int(sum(r[5] for r in results))
    violations = int(sum(r[6] for r in results))
    n = plan.n_samples
    if n_aborted > MAX_ABORT_FRACTION * n:
        raise RuntimeError(
            f"{n_aborted} singular-impact aborts out of {n} samples; geometry bug likely")

    kappa = arr.kappa
    mass = kappa * math.pi * eps * eps
    p_c = counts_c_out / max(n_out, 1)
    p_s = counts_s_all / n
    F_vals = (1.0 - mass) * p_c
    Ft_vals = p_s
    F_err = (1.0 - mass) * np.sqrt(p_c * (1.0 - p_c) / max(n_out, 1))
    Ft_err = np.sqrt(p_s * (1.0 - p_s) / n)

    gap = np.abs(F_vals - Ft_vals)
    g = int(np.argmax(gap))
    sup_gap = float(gap[g])
    sup_sigma = float(math.hypot(F_err[g], Ft_err[g]))

    p01 = (counts_s_out - counts_c_out) / max(n_out, 1)
    g01 = int(np.argmax(p01))
    r01_sup = float(p01[g01])
    r01_sigma = float(math.sqrt(max(p01[g01] * (1 - p01[g01]), 0.0) / max(n_out, 1)))

    meta_common = {"surface": surface.name, "epsilon": repr(float(eps)),
                   "theta_mode": plan.theta_mode, "samples": str(n),
                   "seed": str(plan.seed), "censored": str(n_censored),
                   "aborted": str(n_aborted)}
    F = EmpiricalCCDF(grid, F_vals, F_err, n, n_censored, n_aborted,
                      dict(meta_common, mode="circular"))
    Ft = EmpiricalCCDF(grid, Ft_vals, Ft_err, n, n_censored, n_aborted,
                       dict(meta_common, mode="segment"))
    return ApproximationReport(
        epsilon=eps, kappa=kappa, n_samples=n,
        sup_gap=sup_gap, sup_gap_t=float(grid[g]), sup_gap_sigma=sup_sigma,
        bound=2.0 * mass, r10_violations=violations,
        r01_sup=r01_sup, r01_sigma=r01_sigma, r01_bound=mass,
        F=F, Ftilde=Ft)


@dataclass
class RenormCheckReport:
    """Pathwise check of the renormalized-heights identity."""

    epsilon: float
    n_samples: int
    n_compared: int
    n_censored: int
    n_aborted: int
    n_status_mismatch: int
    max_rel_diff: float
    tol: float

    @property
    def passes(self) -> bool:
        return self.n_status_mismatch == 0 and self.max_rel_diff <= self.tol


def renormalization_pathwise_check(surface: TranslationSurface, epsilon: float,
                                   n_samples: int, seed: int, theta=None,
                                   tol: float = 1e-9,
                                   prongs: str = "pair") -> RenormCheckReport:
    """Check 2*eps*tau~_eps(S, p, theta) == tau~_{1/2}(gS, gp, -pi/2) pathwise,
    with g the renormalization matrix for (eps, theta).

    theta=None draws a fresh direction per state.  The two sides are traced
    with independently built obstacle sets on different surfaces; censored
    pairs are counted, mixed hit/censored pairs are mismatches.
    """
    if epsilon <= 0 or not separation_exceeds(surface, 2.0 * epsilon):
        raise InvalidEpsilon(
            f"epsilon {epsilon:g} is not below half the shortest singularity separation")
    rng = _chunk_rng(seed, 0)
    arr = get_arrays(surface)
    cap = 5.0 / (2.0 * epsilon)
    n = int(n_samples)
    ch, pos, th = sample_states(arr, rng, n, theta)
    obstacles, ab = build_obstacle_batch(surface, th, epsilon, prongs)
    dvec = np.stack([np.cos(th), np.sin(th)], axis=1)
    res1 = trace_batch(surface, ch, pos, dvec, np.full(n, cap), obstacles)

    max_rel = 0.0
    compared = censored = aborted = mismatch = 0
    for i in range(n):
        if ab[i] or res1.status[i] == engine.SINGULAR:
            aborted += 1
            continue
        g = renormalization_matrix(epsilon, float(th[i]))
        g_surface = apply_matrix(g, surface)
        gp = g.apply(pos[i])
        g_state = UnitTangentState(int(ch[i]), (float(gp[0]), float(gp[1])),
                                   -math.pi / 2.0)
        r2 = free_path_segment(g_surface, 0.5, g_state,
                               2.0 * epsilon * cap + 1.0, prongs)
        if r2.kind is HitKind.SINGULAR_IMPACT:
            aborted += 1
        elif res1.status[i] == engine.HIT and r2.is_hit:
            a = 2.0 * epsilon * float(res1.time[i])
            b = r2.time
            rel = abs(a - b) / max(abs(a), abs(b), 1e-300)
            max_rel = max(max_rel, rel)
            compared += 1
        elif res1.status[i] == engine.CENSORED and (
                r2.is_censored or r2.time >= 2.0 * epsilon * cap):
            censored += 1
        else:
            mismatch += 1
    return RenormCheckReport(epsilon=epsilon, n_samples=n_samples,
                             n_compared=compared, n_censored=censored,
                             n_aborted=aborted, n_status_mismatch=mismatch,
                             max_rel_diff=max_rel, tol=tol)


@dataclass
class SweepEntry:
    eps_a: float
    eps_b: float
    distance: float
    argmax_t: float
    sigma: float


@dataclass
class SweepReport:
    epsilons: list[float]
    entries: list[SweepEntry]
    ccdfs: list[EmpiricalCCDF]


def convergence_sweep(surface: TranslationSurface, epsilons,
                      plan: SamplePlan) -> SweepReport:
    """Successive KS distances of the segment-obstacle estimates over a
    decreasing epsilon list; the limiting-distribution statement predicts
    they shrink (no rate is available, so this is a reported trend)."""
    epsilons = [float(e) for e in epsilons]
    ccdfs = []
    for i, eps in enumerate(epsilons):
        sub_seed = int(np.random.SeedSequence([plan.seed, i]).generate_state(1)[0])
        ccdfs.append(estimate_Ftilde(surface, replace(plan, epsilon=eps, seed=sub_seed)))
    entries = []
    for i in range(len(epsilons) - 1):
        a, b = ccdfs[i], ccdfs[i + 1]
        diff = np.abs(a.values - b.values)
        g = int(np.argmax(diff))
        entries.append(SweepEntry(
            eps_a=epsilons[i], eps_b=epsilons[i + 1],
            distance=float(diff[g]), argmax_t=float(a.grid[g]),
            sigma=float(math.hypot(a.stderr[g], b.stderr[g]))))
    return SweepReport(epsilons=epsilons, entries=entries, ccdfs=ccdfs)
