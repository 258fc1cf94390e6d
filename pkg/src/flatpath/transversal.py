"""Obstacle segments perpendicular to a flow direction, centered at cone points.

At a cone point of angle 2*pi*(alpha+1) the direction perpendicular to theta
has alpha+1 leftward and alpha+1 rightward prongs.  Mode "pair" attaches one
length-epsilon segment on one prong per side, chosen canonically by chart
order (total embedded length 2*epsilon per cone point); mode "all" covers
every perpendicular prong.  Segments are split into chart-local pieces by
straight continuation across gluings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import SegmentObstacles, exit_step, get_arrays
from .errors import InvalidEpsilon

ALIGN_ATOL = 1e-9        # radians; prongs this close to a wedge boundary are
                         # owned by exactly one of the two corners involved
MAX_SPLIT_STEPS = 64
OVERLAP_TOL = 1e-12


def _membership(arr, psis):
    """Which corners contain each direction in their interior wedge.

    psis has shape (N, S); the result is (N, S, M) boolean.  Directions
    aligned with a corner's outgoing edge belong to that corner; directions
    aligned with the closing edge belong to the identified corner across the
    gluing, so every surface prong is counted exactly once.
    """
    two_pi = 2.0 * math.pi
    delta = (psis[:, :, None] - arr.corner_phi[None, None, :]) % two_pi
    delta = np.where(delta >= two_pi - ALIGN_ATOL, delta - two_pi, delta)
    return (delta >= -ALIGN_ATOL) & (delta < arr.corner_angle[None, None, :] - ALIGN_ATOL)


def prong_seeds(arr, thetas, mode: str):
    """Starting corners for the perpendicular prongs of each sampled theta.

    Returns (sample, corner, psi) arrays, one row per prong.
    """
    thetas = np.asarray(thetas, dtype=float)
    N = thetas.shape[0]
    psis = np.stack([thetas + math.pi / 2.0, thetas - math.pi / 2.0], axis=1)
    member = _membership(arr, psis)
    if mode == "pair":
        samples, corners, psi_out = [], [], []
        big = np.int64(1) << 40
        for ci in range(arr.n_classes):
            cols = np.nonzero(arr.corner_class == ci)[0]
            order = arr.corner_order[cols]
            for s in range(2):
                m = member[:, s, cols]
                ranked = np.where(m, order[None, :], big)
                j = np.argmin(ranked, axis=1)
                if not m[np.arange(N), j].all():
                    bad = int(np.nonzero(~m[np.arange(N), j])[0][0])
                    raise RuntimeError(
                        f"no prong found for class {ci}, sample {bad}; corner data inconsistent")
                samples.append(np.arange(N))
                corners.append(cols[j])
                psi_out.append(psis[:, s])
        return (np.concatenate(samples), np.concatenate(corners),
                np.concatenate(psi_out))
    elif mode == "all":
        sample_idx, side_idx, corner_idx = np.nonzero(member)
        return sample_idx, corner_idx, psis[sample_idx, side_idx]
    raise ValueError(f"unknown prong mode {mode!r}")


@dataclass
class _Emission:
    prong: np.ndarray
    chart: np.ndarray
    a: np.ndarray
    v: np.ndarray
    s0: np.ndarray


def split_prongs(surface, seed_corner, seed_psi, epsilon: float):
    """March each prong across charts, emitting chart-local sub-segments.

    Returns (emissions, aborted, tip_chart, tip_xy) where `aborted` marks
    prongs that ran into a vertex or degenerate corner before reaching their
    full length.
    """
    arr = get_arrays(surface)
    P = seed_corner.shape[0]
    chart = arr.corner_chart[seed_corner].copy()
    pos = arr.corner_xy[seed_corner].copy()
    dvec = np.stack([np.cos(seed_psi), np.sin(seed_psi)], axis=1)
    remaining = np.full(P, float(epsilon))
    s0 = np.zeros(P)
    entry = np.full(P, -1, dtype=np.int64)
    aborted = np.zeros(P, dtype=bool)
    tip_chart = np.full(P, -1, dtype=np.int64)
    tip_xy = np.zeros((P, 2))
    emissions: list[_Emission] = []
    active = np.arange(P)

    for _ in range(MAX_SPLIT_STEPS):
        if active.size == 0:
            break
        t_exit, exit_edge, q, sing = exit_step(
            arr, chart[active], pos[active], dvec[active], entry[active])
        rem = remaining[active]
        no_exit = ~np.isfinite(t_exit)
        finish = np.where(no_exit, True, t_exit >= rem - 1e-15)
        # a tip landing within corner tolerance of a vertex is degenerate
        tip_on_vertex = finish & sing & np.isfinite(t_exit) & (t_exit <= rem + 1e-9)
        bad = (~finish & (sing | no_exit)) | tip_on_vertex
        good = ~bad

        emit_rows = active[good]
        lengths = np.where(finish, rem, t_exit)[good]
        emissions.append(_Emission(
            prong=emit_rows,
            chart=chart[emit_rows],
            a=pos[emit_rows].copy(),
            v=dvec[emit_rows] * lengths[:, None],
            s0=s0[emit_rows].copy(),
        ))
        done_rows = active[good & finish]
        tip_chart[done_rows] = chart[done_rows]
        tip_xy[done_rows] = pos[done_rows] + dvec[done_rows] * remaining[done_rows][:, None]
        aborted[active[bad]] = True

        adv = good & ~finish
        rows = active[adv]
        if rows.size:
            ch_a = chart[rows]
            ee = exit_edge[adv]
            pos[rows] = q[adv] + arr.glue_shift[ch_a, ee]
            chart[rows] = arr.glue_chart[ch_a, ee]
            entry[rows] = arr.glue_edge[ch_a, ee]
            remaining[rows] -= t_exit[adv]
            s0[rows] += t_exit[adv]
        active = rows
    else:
        aborted[active] = True

    return emissions, aborted, tip_chart, tip_xy


def build_obstacle_batch(surface, thetas, epsilon: float, mode: str = "pair"):
    """Per-sample obstacle sets for a batch of directions.

    Returns (SegmentObstacles, aborted) where aborted marks samples whose
    prongs were degenerate (to be resampled by the caller).  No embeddedness
    validation here: callers guarantee epsilon < separation/2.
    """
    arr = get_arrays(surface)
    thetas = np.asarray(thetas, dtype=float)
    N = thetas.shape[0]
    seed_sample, seed_corner, seed_psi = prong_seeds(arr, thetas, mode)
    emissions, prong_aborted, _, _ = split_prongs(surface, seed_corner, seed_psi, epsilon)

    aborted = np.zeros(N, dtype=bool)
    np.logical_or.at(aborted, seed_sample[prong_aborted], True)

    rows = np.concatenate([seed_sample[e.prong] for e in emissions])
    keep = ~aborted[rows]
    rows = rows[keep]
    charts = np.concatenate([e.chart for e in emissions])[keep]
    a = np.concatenate([e.a for e in emissions])[keep]
    v = np.concatenate([e.v for e in emissions])[keep]

    counts = np.bincount(rows, minlength=N)
    K = max(1, int(counts.max()) if counts.size else 1)
    if K > 4 * MAX_SPLIT_STEPS:
        raise RuntimeError(f"obstacle segment count {K} per sample exceeds budget")
    order = np.argsort(rows, kind="stable")
    rows_s = rows[order]
    offsets = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    within = np.arange(rows_s.size) - offsets[rows_s]

    seg_chart = np.full((N, K), -1, dtype=np.int64)
    seg_a = np.zeros((N, K, 2))
    seg_v = np.zeros((N, K, 2))
    seg_chart[rows_s, within] = charts[order]
    seg_a[rows_s, within] = a[order]
    seg_v[rows_s, within] = v[order]
    seg_len = np.hypot(seg_v[..., 0], seg_v[..., 1])
    seg_len[seg_chart < 0] = 1.0
    return SegmentObstacles(seg_chart, seg_a, seg_v, seg_len), aborted


@dataclass(frozen=True)
class Prong:
    """One embedded perpendicular segment attached to a cone point."""

    class_id: int
    corner: int
    psi: float
    length: float
    tip_chart: int
    tip_xy: tuple[float, float]


@dataclass
class TransversalSet:
    """Chart-split obstacle segments for one direction, with bookkeeping."""

    theta: float
    epsilon: float
    mode: str
    prongs: list[Prong]
    obstacles: SegmentObstacles
    seg_prong: np.ndarray    # (K,) prong owning each chart-local segment
    seg_s0: np.ndarray       # (K,) arclength of the segment start from the cone point
    seg_len: np.ndarray      # (K,)
    tip_partner: np.ndarray  # (P,) index of the prong whose tip coincides, or -1

    @property
    def total_length(self) -> float:
        return float(self.seg_len.sum())

    def point_at(self, prong: int, s: float):
        """Chart and coordinates of the point at arclength s along a prong."""
        mask = self.seg_prong == prong
        ks = np.nonzero(mask)[0]
        for k in ks:
            if self.seg_s0[k] - 1e-12 <= s <= self.seg_s0[k] + self.seg_len[k] + 1e-12:
                frac = (s - self.seg_s0[k]) / self.seg_len[k]
                a = self.obstacles.seg_a[0, k]
                v = self.obstacles.seg_v[0, k]
                return int(self.obstacles.seg_chart[0, k]), (float(a[0] + frac * v[0]),
                                                             float(a[1] + frac * v[1]))
        raise ValueError(f"arclength {s} outside prong {prong}")

    def landing(self, seg_idx: int, seg_u: float):
        """Map a tracer hit (segment index, parameter) to (prong, arclength)."""
        p = int(self.seg_prong[seg_idx])
        s = float(self.seg_s0[seg_idx] + seg_u * self.seg_len[seg_idx])
        return p, s


def _segment_representations(surface, arr, chart, a, v):
    """A segment plus its images under gluings of edges it lies on."""
    reps = [(int(chart), np.asarray(a, dtype=float))]
    b = np.asarray(a) + np.asarray(v)
    poly_edges = range(surface.polygons[chart].n)
    for e in poly_edges:
        eo = arr.edge_origin[chart, e]
        ev = arr.edge_vec[chart, e]
        el = arr.edge_len[chart, e]
        n = arr.edge_normal[chart, e]
        da = abs((a[0] - eo[0]) * n[0] + (a[1] - eo[1]) * n[1])
        db = abs((b[0] - eo[0]) * n[0] + (b[1] - eo[1]) * n[1])
        if da <= 1e-9 and db <= 1e-9:
            ta = ((a[0] - eo[0]) * ev[0] + (a[1] - eo[1]) * ev[1]) / (el * el)
            tb = ((b[0] - eo[0]) * ev[0] + (b[1] - eo[1]) * ev[1]) / (el * el)
            if min(ta, tb) >= -1e-9 and max(ta, tb) <= 1 + 1e-9:
                shift = arr.glue_shift[chart, e]
                reps.append((int(arr.glue_chart[chart, e]),
                             np.asarray(a, dtype=float) + shift))
    return reps


def _check_embedded(surface, arr, seg_chart, seg_a, seg_v, seg_prong):
    """Raise InvalidEpsilon when two obstacle segments overlap on the surface."""
    K = seg_chart.shape[0]
    reps = []
    for k in range(K):
        for ch, a in _segment_representations(surface, arr, int(seg_chart[k]),
                                              seg_a[k], seg_v[k]):
            reps.append((k, ch, a, seg_v[k]))
    for i in range(len(reps)):
        ki, ci, ai, vi = reps[i]
        Li = math.hypot(vi[0], vi[1])
        ui = vi / Li
        for j in range(i + 1, len(reps)):
            kj, cj, aj, vj = reps[j]
            if ki == kj or ci != cj:
                continue
            off = abs(ui[0] * (aj[1] - ai[1]) - ui[1] * (aj[0] - ai[0]))
            if off > OVERLAP_TOL:
                continue
            Lj = math.hypot(vj[0], vj[1])
            pa = 0.0
            pb = (aj[0] - ai[0]) * ui[0] + (aj[1] - ai[1]) * ui[1]
            pb2 = pb + (vj[0] * ui[0] + vj[1] * ui[1])
            lo, hi = min(pb, pb2), max(pb, pb2)
            overlap = min(Li, hi) - max(pa, lo)
            if overlap > OVERLAP_TOL:
                raise InvalidEpsilon(
                    f"transversal segments of prongs {seg_prong[ki]} and {seg_prong[kj]} "
                    f"overlap by {overlap:g}; epsilon too large for this direction")


def _match_tips(surface, arr, prongs):
    P = len(prongs)
    partner = np.full(P, -1, dtype=np.int64)
    reps = []
    for i, p in enumerate(prongs):
        pts = [(p.tip_chart, np.asarray(p.tip_xy))]
        ch = p.tip_chart
        for e in range(surface.polygons[ch].n):
            eo = arr.edge_origin[ch, e]
            ev = arr.edge_vec[ch, e]
            el = arr.edge_len[ch, e]
            n = arr.edge_normal[ch, e]
            d = abs((p.tip_xy[0] - eo[0]) * n[0] + (p.tip_xy[1] - eo[1]) * n[1])
            t = ((p.tip_xy[0] - eo[0]) * ev[0] + (p.tip_xy[1] - eo[1]) * ev[1]) / (el * el)
            if d <= 1e-9 and -1e-9 <= t <= 1 + 1e-9:
                shift = arr.glue_shift[ch, e]
                pts.append((int(arr.glue_chart[ch, e]), np.asarray(p.tip_xy) + shift))
        reps.append(pts)
    for i in range(P):
        for j in range(i + 1, P):
            hit = any(ci == cj and np.hypot(*(ai - aj)) <= 1e-12
                      for ci, ai in reps[i] for cj, aj in reps[j])
            if hit:
                partner[i] = j
                partner[j] = i
    return partner


def build_transversals(surface, theta: float, epsilon: float,
                       mode: str = "pair", validate: bool = True) -> TransversalSet:
    """Materialize the perpendicular obstacle set for one direction.

    Validates that the segments are embedded and pairwise disjoint; raises
    InvalidEpsilon otherwise, or when a prong runs into a cone point.
    """
    if epsilon <= 0:
        raise InvalidEpsilon("epsilon must be positive")
    arr = get_arrays(surface)
    seed_sample, seed_corner, seed_psi = prong_seeds(arr, np.asarray([theta]), mode)
    emissions, aborted, tip_chart, tip_xy = split_prongs(surface, seed_corner, seed_psi, epsilon)
    if aborted.any():
        raise InvalidEpsilon(
            f"prong at corner index {int(seed_corner[np.nonzero(aborted)[0][0]])} hit a "
            f"vertex before length {epsilon:g}; epsilon too large or direction degenerate")

    prongs = [Prong(class_id=int(arr.corner_class[c]), corner=int(c),
                    psi=float(psi), length=float(epsilon),
                    tip_chart=int(tc), tip_xy=(float(txy[0]), float(txy[1])))
              for c, psi, tc, txy in zip(seed_corner, seed_psi, tip_chart, tip_xy)]

    prong_rows = np.concatenate([e.prong for e in emissions])
    charts = np.concatenate([e.chart for e in emissions])
    a = np.concatenate([e.a for e in emissions])
    v = np.concatenate([e.v for e in emissions])
    s0 = np.concatenate([e.s0 for e in emissions])
    order = np.lexsort((s0, prong_rows))
    prong_rows, charts, a, v, s0 = (x[order] for x in (prong_rows, charts, a, v, s0))

    if validate:
        _check_embedded(surface, arr, charts, a, v, prong_rows)

    K = charts.shape[0]
    seg_chart = charts.reshape(1, K)
    seg_a = a.reshape(1, K, 2)
    seg_v = v.reshape(1, K, 2)
    seg_len = np.hypot(v[:, 0], v[:, 1])
    obstacles = SegmentObstacles(seg_chart, seg_a, seg_v, seg_len.reshape(1, K))

    partner = _match_tips(surface, arr, prongs)
    return TransversalSet(theta=float(theta), epsilon=float(epsilon), mode=mode,
                          prongs=prongs, obstacles=obstacles,
                          seg_prong=prong_rows, seg_s0=s0, seg_len=seg_len,
                          tip_partner=partner)


def upward_separatrix_seeds(surface):
    """Corners carrying an upward (+pi/2) prong; one per vertical separatrix."""
    arr = get_arrays(surface)
    member = _membership(arr, np.asarray([[math.pi / 2.0]]))[0, 0]
    return np.nonzero(member)[0]
