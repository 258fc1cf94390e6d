"""Zippered-rectangle decomposition of a surface over horizontal transversals.

The downward vertical flow returns every transversal point to the
transversal union; between the orbits of cone points and transversal
endpoints the return time is constant, and each maximal subinterval spans a
rectangle of the decomposition.  The resulting widths and heights give the
exact distribution of segment-obstacle free path lengths at theta = -pi/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .engine import get_arrays, trace_batch
from .errors import IncompleteDecomposition
from .transversal import TransversalSet, build_transversals, upward_separatrix_seeds

DOWN = -math.pi / 2.0
SNAP_TOL = 1e-12         # landings closer than this merge with a known point
HEIGHT_MERGE_TOL = 1e-9
COVER_TOL = 1e-9


@dataclass(frozen=True)
class Rectangle:
    """One rectangle: a transversal subinterval swept down to first return."""

    width: float
    height: float
    base: tuple[tuple[int, float, float], ...]   # (prong, s_lo, s_hi) parts


@dataclass
class ZipperedDecomposition:
    rectangles: list[Rectangle]
    covered_area: float
    transversal: TransversalSet

    @property
    def heights(self):
        return np.asarray([r.height for r in self.rectangles])

    @property
    def widths(self):
        return np.asarray([r.width for r in self.rectangles])


def compute_decomposition(surface, epsilon: float = 0.5, *, mode: str = "pair",
                          height_bound: float = 1e3) -> ZipperedDecomposition:
    """Exact zippered-rectangle decomposition for the downward vertical flow.

    Raises IncompleteDecomposition when an orbit exceeds the height bound, a
    separatrix lands on a transversal endpoint, or the rectangles fail to
    cover the surface (a vertical cylinder misses the transversal); perturb
    the direction or the surface in that case.
    """
    ts = build_transversals(surface, DOWN, epsilon, mode=mode)
    arr = get_arrays(surface)
    P = len(ts.prongs)
    subdivisions: list[list[float]] = [[] for _ in range(P)]

    def trace_up_from(charts, points):
        n = charts.shape[0]
        dvec = np.tile([[0.0, 1.0]], (n, 1))
        return trace_batch(surface, charts, points, dvec,
                           np.full(n, float(height_bound)), ts.obstacles,
                           min_global_t=engine.T_MIN)

    # upward separatrices from every cone-point prong
    sep_corners = upward_separatrix_seeds(surface)
    if sep_corners.size:
        res = trace_up_from(arr.corner_chart[sep_corners].copy(),
                            arr.corner_xy[sep_corners].copy())
        for i in range(sep_corners.size):
            st = int(res.status[i])
            if st == engine.CENSORED:
                raise IncompleteDecomposition(
                    f"separatrix from corner {int(sep_corners[i])} exceeded height bound "
                    f"{height_bound:g}; raise it or perturb the surface")
            if st == engine.SINGULAR:
                continue  # vertical saddle connection landing at a cone point
            prong, s = ts.landing(int(res.seg_idx[i]), float(res.seg_u[i]))
            if s >= ts.prongs[prong].length - SNAP_TOL:
                raise IncompleteDecomposition(
                    f"separatrix lands within tolerance of a transversal endpoint "
                    f"(prong {prong}, s={s:.17g}); perturb direction or surface")
            if s <= SNAP_TOL:
                continue  # landed at the cone point itself
            subdivisions[prong].append(s)

    # upward orbits of the transversal endpoints (the +/- epsilon tips)
    tip_charts = np.asarray([p.tip_chart for p in ts.prongs], dtype=np.int64)
    tip_xy = np.asarray([p.tip_xy for p in ts.prongs], dtype=float)
    if P:
        res = trace_up_from(tip_charts.copy(), tip_xy.copy())
        for i in range(P):
            st = int(res.status[i])
            if st == engine.CENSORED:
                raise IncompleteDecomposition(
                    f"transversal endpoint orbit (prong {i}) exceeded height bound "
                    f"{height_bound:g}; raise it or perturb the surface")
            if st == engine.SINGULAR:
                continue  # orbit ended at a cone point, already a boundary
            prong, s = ts.landing(int(res.seg_idx[i]), float(res.seg_u[i]))
            L = ts.prongs[prong].length
            if s <= SNAP_TOL or s >= L - SNAP_TOL:
                continue  # lands on an existing boundary point
            subdivisions[prong].append(s)

    # maximal open subintervals and their return heights
    intervals = []  # (prong, s_lo, s_hi)
    for p in range(P):
        vals = sorted(subdivisions[p])
        svals = [0.0]
        for s in vals:
            if s - svals[-1] > SNAP_TOL:
                svals.append(s)
        L = ts.prongs[p].length
        if L - svals[-1] > SNAP_TOL:
            svals.append(L)
        else:
            svals[-1] = L
        for lo, hi in zip(svals[:-1], svals[1:]):
            intervals.append((p, lo, hi))

    mid_charts = np.empty(len(intervals), dtype=np.int64)
    mid_xy = np.empty((len(intervals), 2))
    for i, (p, lo, hi) in enumerate(intervals):
        ch, xy = ts.point_at(p, 0.5 * (lo + hi))
        mid_charts[i] = ch
        mid_xy[i] = xy
    dvec = np.tile([[0.0, -1.0]], (len(intervals), 1))
    res = trace_batch(surface, mid_charts, mid_xy, dvec,
                      np.full(len(intervals), float(height_bound)), ts.obstacles,
                      min_global_t=engine.T_MIN)
    heights = np.empty(len(intervals))
    for i in range(len(intervals)):
        st = int(res.status[i])
        if st == engine.CENSORED:
            raise IncompleteDecomposition(
                f"return orbit over interval {intervals[i]} exceeded height bound "
                f"{height_bound:g}; a vertical cylinder may miss the transversal")
        if st == engine.SINGULAR:
            raise IncompleteDecomposition(
                f"return orbit over interval {intervals[i]} hit a singularity; "
                f"perturb direction or surface")
        heights[i] = res.time[i]

    covered = float(sum((hi - lo) * heights[i] for i, (p, lo, hi) in enumerate(intervals)))
    if abs(covered - 1.0) > COVER_TOL:
        raise IncompleteDecomposition(
            f"rectangles cover area {covered:.12g}, not 1: a vertical cylinder misses "
            f"the transversal; perturb direction or surface", covered_area=covered)

    # merge the two intervals meeting at a shared tip when their heights agree
    # (cone points always stay rectangle boundaries)
    last_of: dict[int, int] = {}
    for i, (p, lo, hi) in enumerate(intervals):
        if abs(hi - ts.prongs[p].length) <= SNAP_TOL:
            last_of[p] = i
    merged_into = {}
    rectangles: list[Rectangle] = []
    for p in range(P):
        q = int(ts.tip_partner[p])
        if q <= p or p not in last_of or q not in last_of:
            continue
        i, j = last_of[p], last_of[q]
        if abs(heights[i] - heights[j]) <= HEIGHT_MERGE_TOL:
            (pi, lo_i, hi_i) = intervals[i]
            (pj, lo_j, hi_j) = intervals[j]
            rectangles.append(Rectangle(
                width=(hi_i - lo_i) + (hi_j - lo_j),
                height=float(heights[i]),
                base=((pi, lo_i, hi_i), (pj, lo_j, hi_j))))
            merged_into[i] = True
            merged_into[j] = True
    for i, (p, lo, hi) in enumerate(intervals):
        if i in merged_into:
            continue
        rectangles.append(Rectangle(width=hi - lo, height=float(heights[i]),
                                    base=((p, lo, hi),)))
    rectangles.sort(key=lambda r: (r.height, -r.width))

    return ZipperedDecomposition(rectangles=rectangles, covered_area=covered,
                                 transversal=ts)


def exact_distribution(decomp: ZipperedDecomposition, t):
    """Exact volume of {p : segment-obstacle free path > t} for the downward
    flow: sum of width * max(height - t, 0) over the rectangles."""
    w = decomp.widths
    h = decomp.heights
    t_arr = np.asarray(t, dtype=float)
    vals = (w[None, :] * np.maximum(h[None, :] - np.atleast_1d(t_arr)[:, None], 0.0)).sum(axis=1)
    return float(vals[0]) if t_arr.ndim == 0 else vals


def heights_histogram(decomp: ZipperedDecomposition):
    """Distinct heights (merged within 1e-9) with aggregated widths, ascending."""
    order = np.argsort(decomp.heights)
    out: list[tuple[float, float]] = []
    for i in order:
        h = float(decomp.heights[i])
        w = float(decomp.widths[i])
        if out and abs(h - out[-1][0]) <= HEIGHT_MERGE_TOL:
            out[-1] = (out[-1][0], out[-1][1] + w)
        else:
            out.append((h, w))
    return out
