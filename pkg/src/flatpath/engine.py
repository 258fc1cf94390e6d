"""Vectorized chart-to-chart ray tracing over a translation surface.

Internal module: numpy packings of surface data plus the batched tracer
shared by free-path estimation, transversal construction, and the
zippered-rectangle machinery.  All tolerances are absolute in the
post-normalization (unit area) coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo

CORNER_TOL = 1e-12   # rays passing this close to a vertex abort as singular
T_MIN = 1e-12        # smallest admissible advance along a ray
MAX_TRACE_STEPS = 1_000_000

HIT = 0
CENSORED = 1
SINGULAR = 2


@dataclass
class SurfaceArrays:
    """Numpy view of a surface for batched tracing."""

    n_charts: int
    max_edges: int
    edge_origin: np.ndarray   # (C, E, 2); vertex v of chart c is edge_origin[c, v]
    edge_vec: np.ndarray      # (C, E, 2)
    edge_len: np.ndarray      # (C, E)
    edge_valid: np.ndarray    # (C, E) bool
    edge_normal: np.ndarray   # (C, E, 2) outward unit normals
    glue_chart: np.ndarray    # (C, E) int
    glue_edge: np.ndarray     # (C, E) int
    glue_shift: np.ndarray    # (C, E, 2)
    # corner data, one row per (chart, vertex), grouped by cone class
    corner_chart: np.ndarray  # (M,) int
    corner_vertex: np.ndarray  # (M,) int
    corner_xy: np.ndarray     # (M, 2)
    corner_phi: np.ndarray    # (M,) direction angle of the outgoing edge
    corner_angle: np.ndarray  # (M,) interior angle
    corner_class: np.ndarray  # (M,) int
    corner_order: np.ndarray  # (M,) rank of the corner within its class
    n_classes: int
    kappa: int
    poly_vertices: list
    # area-weighted triangulation for uniform sampling, built on first use
    tri_chart: np.ndarray | None = None    # (T,) int
    tri_pts: np.ndarray | None = None      # (T, 3, 2)
    tri_cum: np.ndarray | None = None      # (T,) cumulative area fractions


def get_arrays(surface) -> SurfaceArrays:
    if surface._engine_arrays is not None:
        return surface._engine_arrays

    polys = surface.polygons
    C = len(polys)
    E = max(p.n for p in polys)
    edge_origin = np.zeros((C, E, 2))
    edge_vec = np.zeros((C, E, 2))
    edge_len = np.ones((C, E))
    edge_valid = np.zeros((C, E), dtype=bool)
    edge_normal = np.zeros((C, E, 2))
    glue_chart = np.full((C, E), -1, dtype=np.int64)
    glue_edge = np.full((C, E), -1, dtype=np.int64)
    glue_shift = np.zeros((C, E, 2))

    for j, p in enumerate(polys):
        vs = np.asarray(p.vertices, dtype=float)
        for e in range(p.n):
            a = vs[e]
            b = vs[(e + 1) % p.n]
            edge_origin[j, e] = a
            edge_vec[j, e] = b - a
            L = float(np.hypot(*(b - a)))
            edge_len[j, e] = L
            edge_valid[j, e] = True
            edge_normal[j, e] = ((b - a)[1] / L, -(b - a)[0] / L)
            k, f = surface.glued_side((j, e))
            glue_chart[j, e] = k
            glue_edge[j, e] = f
            glue_shift[j, e] = surface.gluing_shift((j, e))

    corner_rows = []
    for ci, cls in enumerate(surface.cone_classes):
        for rank, (j, v) in enumerate(cls.members):
            corner_rows.append((j, v, ci, rank))
    corner_chart = np.array([r[0] for r in corner_rows], dtype=np.int64)
    corner_vertex = np.array([r[1] for r in corner_rows], dtype=np.int64)
    corner_class = np.array([r[2] for r in corner_rows], dtype=np.int64)
    corner_order = np.array([r[3] for r in corner_rows], dtype=np.int64)
    corner_xy = edge_origin[corner_chart, corner_vertex]
    out_vec = edge_vec[corner_chart, corner_vertex]
    corner_phi = np.arctan2(out_vec[:, 1], out_vec[:, 0])
    angles = {j: polys[j].interior_angles() for j in range(C)}
    corner_angle = np.array([angles[j][v] for j, v, _, _ in corner_rows])

    arr = SurfaceArrays(
        n_charts=C, max_edges=E,
        edge_origin=edge_origin, edge_vec=edge_vec, edge_len=edge_len,
        edge_valid=edge_valid, edge_normal=edge_normal,
        glue_chart=glue_chart, glue_edge=glue_edge, glue_shift=glue_shift,
        corner_chart=corner_chart, corner_vertex=corner_vertex,
        corner_xy=corner_xy, corner_phi=corner_phi, corner_angle=corner_angle,
        corner_class=corner_class, corner_order=corner_order,
        n_classes=len(surface.cone_classes), kappa=surface.stratum.kappa,
        poly_vertices=[p.vertices for p in polys],
    )
    surface._engine_arrays = arr
    return arr


def _ensure_triangulation(arr: SurfaceArrays):
    if arr.tri_cum is not None:
        return
    tri_chart_list, tri_pts_list, tri_area_list = [], [], []
    for j, vertices in enumerate(arr.poly_vertices):
        for (i0, i1, i2) in geo.triangulate_polygon(vertices):
            tri = np.asarray([vertices[i0], vertices[i1], vertices[i2]])
            tri_chart_list.append(j)
            tri_pts_list.append(tri)
            tri_area_list.append(geo.signed_area(tri))
    tri_area = np.asarray(tri_area_list)
    tri_cum = np.cumsum(tri_area) / tri_area.sum()
    tri_cum[-1] = 1.0
    arr.tri_chart = np.asarray(tri_chart_list, dtype=np.int64)
    arr.tri_pts = np.asarray(tri_pts_list)
    arr.tri_cum = tri_cum


def normalize_starts(arr: SurfaceArrays, chart, pos, dvec):
    """Glue points sitting on an edge and pointing out of their chart.

    Mutates chart/pos in place; needed for flow started on a transversal
    that lies along a chart boundary.
    """
    eo = arr.edge_origin[chart]
    ev = arr.edge_vec[chart]
    en = arr.edge_normal[chart]
    el = arr.edge_len[chart]
    rel = pos[:, None, :] - eo
    # perpendicular offset from the edge line and position along the edge
    perp = rel[..., 0] * en[..., 0] + rel[..., 1] * en[..., 1]
    along = rel[..., 0] * ev[..., 0] + rel[..., 1] * ev[..., 1]
    outward = dvec[:, None, 0] * en[..., 0] + dvec[:, None, 1] * en[..., 1]
    on_edge = (arr.edge_valid[chart]
               & (np.abs(perp) <= CORNER_TOL)
               & (along >= -CORNER_TOL * el) & (along <= el * el + CORNER_TOL * el)
               & (outward > 1e-15))
    rows = np.nonzero(on_edge.any(axis=1))[0]
    if rows.size == 0:
        return
    edges = np.argmax(on_edge[rows], axis=1)
    ch = chart[rows]
    pos[rows] += arr.glue_shift[ch, edges]
    chart[rows] = arr.glue_chart[ch, edges]


def exit_step(arr: SurfaceArrays, chart, pos, dvec, entry_edge):
    """First boundary crossing of each forward ray within its chart.

    Returns (t_exit, exit_edge, exit_point, singular).  t_exit is inf where
    no admissible crossing exists (treated as singular by callers).
    singular marks crossings within CORNER_TOL of a vertex.
    """
    eo = arr.edge_origin[chart]
    ev = arr.edge_vec[chart]
    el = arr.edge_len[chart]
    rel = eo - pos[:, None, :]
    denom = dvec[:, None, 0] * ev[..., 1] - dvec[:, None, 1] * ev[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_e = (rel[..., 0] * ev[..., 1] - rel[..., 1] * ev[..., 0]) / denom
        u_e = (rel[..., 0] * dvec[:, None, 1] - rel[..., 1] * dvec[:, None, 0]) / denom
    dist_along = u_e * el
    ok = (arr.edge_valid[chart]
          & np.isfinite(t_e) & (t_e > T_MIN)
          & (dist_along >= -CORNER_TOL) & (dist_along <= el + CORNER_TOL))
    cols = np.arange(arr.max_edges)
    ok &= cols[None, :] != entry_edge[:, None]
    t_masked = np.where(ok, t_e, np.inf)
    exit_edge = np.argmin(t_masked, axis=1)
    rows = np.arange(chart.shape[0])
    t_exit = t_masked[rows, exit_edge]
    q = pos + t_exit[:, None] * dvec
    e0 = eo[rows, exit_edge]
    e1 = e0 + ev[rows, exit_edge]
    d0 = np.hypot(q[:, 0] - e0[:, 0], q[:, 1] - e0[:, 1])
    d1 = np.hypot(q[:, 0] - e1[:, 0], q[:, 1] - e1[:, 1])
    singular = np.isfinite(t_exit) & ((d0 < CORNER_TOL) | (d1 < CORNER_TOL))
    return t_exit, exit_edge, q, singular


class CircleObstacles:
    """Closed epsilon-balls around every vertex image of each chart."""

    def __init__(self, epsilon: float):
        self.epsilon = float(epsilon)

    def scan(self, arr, orig_rows, chart, pos, dvec, t_exit, t_lo):
        w = arr.edge_origin[chart]          # vertices (A, E, 2)
        valid = arr.edge_valid[chart]
        rel = w - pos[:, None, :]
        b = rel[..., 0] * dvec[:, None, 0] + rel[..., 1] * dvec[:, None, 1]
        c = rel[..., 0] ** 2 + rel[..., 1] ** 2 - self.epsilon ** 2
        disc = b * b - c
        s = np.sqrt(np.maximum(disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            root = np.where(b > 0, c / (b + s), b - s)
        inside = c <= 0.0
        t_cand = np.where(inside, 0.0, np.maximum(root, 0.0))
        hit = valid & (inside | ((disc >= 0.0) & (root >= -CORNER_TOL)
                                 & (root <= t_exit[:, None] + CORNER_TOL)))
        hit &= t_cand >= t_lo[:, None]
        t_masked = np.where(hit, t_cand, np.inf)
        k = np.argmin(t_masked, axis=1)
        rows = np.arange(chart.shape[0])
        return t_masked[rows, k], np.full(rows.shape, -1, dtype=np.int64), np.zeros(rows.shape)


class SegmentObstacles:
    """Chart-local obstacle segments, shared across rays or one set per ray.

    seg_chart is (1, K) for a shared set or (N, K) for per-sample sets,
    indexed by the original sample row.  Padding rows carry chart -1.
    """

    def __init__(self, seg_chart, seg_a, seg_v, seg_len):
        self.seg_chart = seg_chart
        self.seg_a = seg_a
        self.seg_v = seg_v
        self.seg_len = seg_len
        self.shared = seg_chart.shape[0] == 1

    def scan(self, arr, orig_rows, chart, pos, dvec, t_exit, t_lo):
        rows = np.zeros_like(orig_rows) if self.shared else orig_rows
        sc = self.seg_chart[rows]
        sa = self.seg_a[rows]
        sv = self.seg_v[rows]
        sl = self.seg_len[rows]
        rel = sa - pos[:, None, :]
        denom = dvec[:, None, 0] * sv[..., 1] - dvec[:, None, 1] * sv[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            ts = (rel[..., 0] * sv[..., 1] - rel[..., 1] * sv[..., 0]) / denom
            us = (rel[..., 0] * dvec[:, None, 1] - rel[..., 1] * dvec[:, None, 0]) / denom
        dist_along = us * sl
        t_cand = np.maximum(ts, 0.0)
        ok = ((sc == chart[:, None]) & np.isfinite(ts)
              & (ts >= -CORNER_TOL) & (ts <= t_exit[:, None] + CORNER_TOL)
              & (t_cand >= t_lo[:, None])
              & (dist_along >= -CORNER_TOL) & (dist_along <= sl + CORNER_TOL))
        t_masked = np.where(ok, t_cand, np.inf)
        k = np.argmin(t_masked, axis=1)
        r = np.arange(chart.shape[0])
        return t_masked[r, k], k.astype(np.int64), us[r, k]


@dataclass
class TraceResult:
    status: np.ndarray   # (N,) HIT / CENSORED / SINGULAR
    time: np.ndarray     # (N,) hit time, censor cap, or abort time
    seg_idx: np.ndarray  # (N,) obstacle segment hit (-1 for circles/none)
    seg_u: np.ndarray    # (N,) parameter along the hit segment


def trace_batch(surface, chart, pos, dvec, caps, obstacles,
                min_global_t: float = 0.0) -> TraceResult:
    """Trace rays chart to chart until an obstacle hit, the cap, or a corner.

    chart/pos/dvec are consumed (copied internally); caps is a per-ray
    length bound.  min_global_t excludes hits at accumulated time below the
    threshold (used when the start lies on the obstacle set itself).
    """
    arr = get_arrays(surface)
    chart = np.array(chart, dtype=np.int64, copy=True)
    pos = np.array(pos, dtype=float, copy=True)
    dvec = np.array(dvec, dtype=float, copy=True)
    caps = np.asarray(caps, dtype=float)
    N = chart.shape[0]

    status = np.full(N, -1, dtype=np.int64)
    out_t = np.zeros(N)
    out_seg = np.full(N, -1, dtype=np.int64)
    out_u = np.zeros(N)
    t_acc = np.zeros(N)
    entry_edge = np.full(N, -1, dtype=np.int64)

    normalize_starts(arr, chart, pos, dvec)
    active = np.nonzero(np.ones(N, dtype=bool))[0]

    for _ in range(MAX_TRACE_STEPS):
        if active.size == 0:
            break
        ch = chart[active]
        p = pos[active]
        d = dvec[active]
        t_exit, exit_edge, q, sing_exit = exit_step(arr, ch, p, d, entry_edge[active])
        no_exit = ~np.isfinite(t_exit)
        t_exit_safe = np.where(no_exit, 0.0, t_exit)

        # candidates below the global threshold are rejected inside the scan
        # so that a later hit on the same sub-ray still registers
        t_lo = min_global_t - t_acc[active]
        hit_t, hit_k, hit_u = obstacles.scan(arr, active, ch, p, d, t_exit_safe, t_lo)
        glob_hit = t_acc[active] + hit_t
        glob_exit = t_acc[active] + t_exit_safe
        cap = caps[active]

        is_hit = glob_hit <= cap
        is_cens = ~is_hit & (np.isinf(glob_hit) | (glob_hit > cap)) & (glob_exit > cap)
        is_sing = ~is_hit & ~is_cens & (sing_exit | no_exit)

        rows = active[is_hit]
        status[rows] = HIT
        out_t[rows] = glob_hit[is_hit]
        out_seg[rows] = hit_k[is_hit]
        out_u[rows] = hit_u[is_hit]

        rows = active[is_cens]
        status[rows] = CENSORED
        out_t[rows] = caps[rows]

        rows = active[is_sing]
        status[rows] = SINGULAR
        out_t[rows] = glob_exit[is_sing]

        adv = ~is_hit & ~is_cens & ~is_sing
        rows = active[adv]
        if rows.size:
            ch_a = ch[adv]
            ee = exit_edge[adv]
            pos[rows] = q[adv] + arr.glue_shift[ch_a, ee]
            chart[rows] = arr.glue_chart[ch_a, ee]
            entry_edge[rows] = arr.glue_edge[ch_a, ee]
            t_acc[rows] = glob_exit[adv]
        active = rows
    else:
        raise RuntimeError("trace exceeded the step budget; geometry too degenerate")

    return TraceResult(status, out_t, out_seg, out_u)


def sample_states(arr: SurfaceArrays, rng: np.random.Generator, n: int,
                  theta=None):
    """Draw n area-uniform points with directions.

    theta=None draws directions uniformly on [0, 2*pi); a float fixes them.
    Draw order (triangle, u, v, theta) is part of the determinism contract.
    """
    _ensure_triangulation(arr)
    r = rng.random(n)
    tri = np.searchsorted(arr.tri_cum, r, side="right")
    tri = np.minimum(tri, len(arr.tri_cum) - 1)
    u = rng.random(n)
    v = rng.random(n)
    su = np.sqrt(u)
    pts = arr.tri_pts[tri]
    pos = (pts[:, 0] * (1 - su)[:, None]
           + pts[:, 1] * (su * (1 - v))[:, None]
           + pts[:, 2] * (su * v)[:, None])
    if theta is None:
        th = rng.random(n) * (2.0 * np.pi)
    else:
        th = np.full(n, float(theta))
    return arr.tri_chart[tri].copy(), pos, th
