"""Translation surfaces: polygons with sides identified by translations.

Builds validated surfaces, derives cone-point classes and stratum data,
applies SL(2,R) matrices, and searches short saddle connections by
breadth-first chart unfolding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import (AngleNotMultipleOf2Pi, DegenerateMatrix, LengthMismatch,
                     NonParallelEdges, NotFoundWithinBound, SurfaceError,
                     UnpairedEdge)

EDGE_MATCH_RTOL = 1e-9   # relative tolerance for parallel/length validation
ANGLE_TOL = 1e-7         # absolute tolerance on multiples of 2*pi (radians)
ZERO_LENGTH_TOL = 1e-9   # unfolded vertex images closer than this are the same point

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Mat2:
    """Real 2x2 matrix acting on the plane (row-major entries a b / c d)."""

    a: float
    b: float
    c: float
    d: float

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a * other.a + self.b * other.c,
                    self.a * other.b + self.b * other.d,
                    self.c * other.a + self.d * other.c,
                    self.c * other.b + self.d * other.d)

    def apply(self, points):
        """Map an (n, 2) array (or a single point) through the matrix."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.empty_like(pts)
        out[:, 0] = self.a * pts[:, 0] + self.b * pts[:, 1]
        out[:, 1] = self.c * pts[:, 0] + self.d * pts[:, 1]
        return out[0] if single else out

    @staticmethod
    def identity() -> "Mat2":
        return Mat2(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def rotation(theta: float) -> "Mat2":
        c, s = math.cos(theta), math.sin(theta)
        return Mat2(c, -s, s, c)

    @staticmethod
    def scaling(t: float) -> "Mat2":
        """Diagonal matrix diag(e^t, e^-t)."""
        return Mat2(math.exp(t), 0.0, 0.0, math.exp(-t))


def renormalization_matrix(epsilon: float, theta: float) -> Mat2:
    """Matrix turning an epsilon-scale direction-theta question into a
    unit-scale vertical one: diag(1/2eps, 2eps) composed with the rotation
    taking theta to -pi/2."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return Mat2.scaling(math.log(1.0 / (2.0 * epsilon))) @ Mat2.rotation(-math.pi / 2.0 - theta)


@dataclass(frozen=True)
class Polygon:
    """Simple counterclockwise polygon; vertices in surface length units."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise SurfaceError(f"polygon needs at least 3 vertices, got {len(self.vertices)}")

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return geo.signed_area(self.vertices)

    def edge(self, e: int):
        """Endpoints (start, end) of edge e, from vertex e to vertex e+1."""
        return self.vertices[e], self.vertices[(e + 1) % self.n]

    def edge_vector(self, e: int):
        a, b = self.edge(e)
        return (b[0] - a[0], b[1] - a[1])

    def interior_angles(self) -> list[float]:
        return geo.interior_angles(self.vertices)


@dataclass(frozen=True)
class EdgeGluing:
    """Identification of two edges, each given as (polygon index, edge index)."""

    side_a: tuple[int, int]
    side_b: tuple[int, int]


@dataclass(frozen=True)
class ConePointClass:
    """Equivalence class of polygon corners forming one point of the surface."""

    members: tuple[tuple[int, int], ...]   # sorted (polygon, vertex) pairs
    total_angle: float
    alpha: int


def cone_angle(cls: ConePointClass) -> float:
    """Total angle around the cone point (sum of member corner angles)."""
    return cls.total_angle


@dataclass(frozen=True)
class StratumInfo:
    """Cone angle exponents and their sum kappa = sum(alpha_i + 1)."""

    alphas: tuple[int, ...]
    kappa: int


class TranslationSurface:
    """Immutable collection of polygons with translation side identifications.

    Coordinates are normalized at build time so the total area is 1; all
    obstacle radii are interpreted in these normalized units.
    """

    def __init__(self, polygons, gluings, cone_classes, stratum, unit_scale, name=None):
        self.polygons: tuple[Polygon, ...] = tuple(polygons)
        self.gluings: tuple[EdgeGluing, ...] = tuple(gluings)
        self.cone_classes: tuple[ConePointClass, ...] = tuple(cone_classes)
        self.stratum: StratumInfo = stratum
        self.total_area: float = 1.0
        self.unit_scale: float = unit_scale  # factor applied to raw coordinates
        self.name: str = name or "surface"
        self._glue_map = {}
        for g in self.gluings:
            self._glue_map[g.side_a] = g.side_b
            self._glue_map[g.side_b] = g.side_a
        # caches populated lazily by the tracing engine
        self._engine_arrays = None
        self._sep_checked = 0.0
        self._sep_min_found = math.inf

    def __repr__(self):
        return (f"TranslationSurface({self.name!r}, polygons={len(self.polygons)}, "
                f"alphas={list(self.stratum.alphas)}, kappa={self.stratum.kappa})")

    def glued_side(self, side: tuple[int, int]) -> tuple[int, int]:
        return self._glue_map[side]

    def gluing_shift(self, side: tuple[int, int]):
        """Translation taking points on `side` into the glued chart."""
        (j, e) = side
        (k, f) = self._glue_map[side]
        a0 = self.polygons[j].vertices[e]
        pb = self.polygons[k]
        b1 = pb.vertices[(f + 1) % pb.n]
        return (b1[0] - a0[0], b1[1] - a0[1])

    def class_of_corner(self, polygon: int, vertex: int) -> int:
        for i, c in enumerate(self.cone_classes):
            if (polygon, vertex) in c.members:
                return i
        raise KeyError((polygon, vertex))


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[rx] = ry


def _coerce_polygon(p) -> Polygon:
    if isinstance(p, Polygon):
        return p
    return Polygon(tuple((float(v[0]), float(v[1])) for v in p))


def _coerce_gluing(g) -> EdgeGluing:
    if isinstance(g, EdgeGluing):
        return g
    (ja, ea), (jb, eb) = g
    return EdgeGluing((int(ja), int(ea)), (int(jb), int(eb)))


def build_surface(polygons, gluings, name: str | None = None) -> TranslationSurface:
    """Validate polygons and gluings, derive cone classes, normalize to unit area.

    Raises NonParallelEdges, LengthMismatch, UnpairedEdge, or
    AngleNotMultipleOf2Pi naming the offending edge or class.
    """
    polys = [_coerce_polygon(p) for p in polygons]
    glus = [_coerce_gluing(g) for g in gluings]

    for j, p in enumerate(polys):
        if p.area <= 0:
            raise SurfaceError(f"polygon {j} is not counterclockwise (signed area {p.area:g})")
        if not geo.is_simple_polygon(p.vertices):
            raise SurfaceError(f"polygon {j} is self-intersecting")

    # every edge in exactly one gluing, never glued to itself
    seen: dict[tuple[int, int], int] = {}
    for i, g in enumerate(glus):
        if g.side_a == g.side_b:
            raise UnpairedEdge(f"edge {g.side_a} glued to itself in gluing {i}")
        for side in (g.side_a, g.side_b):
            j, e = side
            if not (0 <= j < len(polys)) or not (0 <= e < polys[j].n):
                raise UnpairedEdge(f"gluing {i} references nonexistent edge {side}")
            if side in seen:
                raise UnpairedEdge(f"edge {side} appears in gluings {seen[side]} and {i}")
            seen[side] = i
    for j, p in enumerate(polys):
        for e in range(p.n):
            if (j, e) not in seen:
                raise UnpairedEdge(f"edge {(j, e)} is not glued")

    # glued edges must be antiparallel with equal length
    for g in glus:
        va = polys[g.side_a[0]].edge_vector(g.side_a[1])
        vb = polys[g.side_b[0]].edge_vector(g.side_b[1])
        la, lb = math.hypot(*va), math.hypot(*vb)
        scale = max(la, lb)
        if abs(geo.cross2(*va, *vb)) > EDGE_MATCH_RTOL * scale * scale:
            raise NonParallelEdges(f"edges {g.side_a} and {g.side_b} are not parallel")
        if va[0] * vb[0] + va[1] * vb[1] > 0:
            raise NonParallelEdges(
                f"edges {g.side_a} and {g.side_b} have outward normals on the same side")
        if abs(la - lb) > EDGE_MATCH_RTOL * scale:
            raise LengthMismatch(
                f"edges {g.side_a} ({la:g}) and {g.side_b} ({lb:g}) differ in length")

    # corners identified across gluings: start of a <-> end of b and vice versa
    corners = [(j, v) for j, p in enumerate(polys) for v in range(p.n)]
    uf = _UnionFind(corners)
    for g in glus:
        (j, e), (k, f) = g.side_a, g.side_b
        nj, nk = polys[j].n, polys[k].n
        uf.union((j, e), (k, (f + 1) % nk))
        uf.union((j, (e + 1) % nj), (k, f))

    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for c in corners:
        groups.setdefault(uf.find(c), []).append(c)

    all_angles = {j: polys[j].interior_angles() for j in range(len(polys))}
    classes = []
    for members in groups.values():
        members = tuple(sorted(members))
        total = sum(all_angles[j][v] for j, v in members)
        m = total / TWO_PI
        if abs(total - round(m) * TWO_PI) > ANGLE_TOL or round(m) < 1:
            raise AngleNotMultipleOf2Pi(
                f"cone class {members} has total angle {total:.12g} rad "
                f"({math.degrees(total):.6g} deg), not a positive multiple of 2*pi")
        classes.append(ConePointClass(members, total, int(round(m)) - 1))
    classes.sort(key=lambda c: c.members[0])

    alphas = tuple(sorted((c.alpha for c in classes), reverse=True))
    stratum = StratumInfo(alphas, sum(a + 1 for a in alphas))

    raw_area = sum(p.area for p in polys)
    scale = 1.0 / math.sqrt(raw_area)
    if abs(scale - 1.0) > 1e-15:
        polys = [Polygon(tuple((x * scale, y * scale) for x, y in p.vertices))
                 for p in polys]

    return TranslationSurface(polys, glus, classes, stratum, scale, name)


def apply_matrix(g: Mat2, surface: TranslationSurface) -> TranslationSurface:
    """Act on the surface by a determinant-1 matrix.

    Vertex coordinates are mapped; gluings, cone classes, and stratum data
    are carried over unchanged (linear maps preserve them).
    """
    det = g.det()
    if abs(det - 1.0) > 1e-9:
        raise DegenerateMatrix(f"matrix determinant {det:.12g} is not 1")
    new_polys = []
    for p in surface.polygons:
        pts = g.apply(np.asarray(p.vertices, dtype=float))
        new_polys.append(Polygon(tuple((float(x), float(y)) for x, y in pts)))
    return TranslationSurface(new_polys, surface.gluings, surface.cone_classes,
                              surface.stratum, surface.unit_scale, surface.name)


_SEP_ANGLE_TOL = 1e-9


def _window_intersect(lo, hi, a0, a1):
    """Intersect the angle window [lo, hi] with [a0, a1], unwrapped near lo."""
    a0 = lo + (a0 - lo) % TWO_PI
    a1 = lo + (a1 - lo) % TWO_PI
    if a1 < a0:
        a0 -= TWO_PI
    new_lo = max(lo, a0)
    new_hi = min(hi, a1)
    return new_lo, new_hi


def shortest_singularity_separation(surface: TranslationSurface,
                                    length_bound: float) -> float:
    """Shortest geodesic segment joining cone-point images, searched by
    breadth-first chart unfolding out to `length_bound`.

    Each unfolded copy carries the angular window of directions that stay
    visible from the source corner through the crossed edges; copies with an
    empty window prune, which keeps the search finite on surfaces whose
    translation group is dense (the octagon, say).

    Raises NotFoundWithinBound when nothing shorter than the bound exists;
    raise the bound and retry in that case.
    """
    if length_bound <= 0:
        raise ValueError("length_bound must be positive")
    best = math.inf
    max_nodes = 400_000

    corners = [(j, v) for j, p in enumerate(surface.polygons) for v in range(p.n)]
    all_angles = {j: surface.polygons[j].interior_angles()
                  for j in range(len(surface.polygons))}
    n_nodes = 0
    for (j0, v0) in corners:
        poly0 = surface.polygons[j0]
        w = poly0.vertices[v0]
        out = poly0.edge_vector(v0)
        lo0 = math.atan2(out[1], out[0])
        hi0 = lo0 + all_angles[j0][v0]
        # node: chart, offset, direction window, edge entered through
        stack = [(j0, 0.0, 0.0, lo0, hi0, -1)]
        while stack:
            j, ox, oy, lo, hi, entry = stack.pop()
            n_nodes += 1
            if n_nodes > max_nodes:
                raise RuntimeError("unfolding exceeded node budget; reduce length_bound")
            poly = surface.polygons[j]
            verts = np.asarray(poly.vertices, dtype=float) + (ox, oy)
            rel = verts - w
            dist = np.hypot(rel[:, 0], rel[:, 1])
            ang = np.arctan2(rel[:, 1], rel[:, 0])
            ang = lo + (ang - lo) % TWO_PI
            seen = ((dist > ZERO_LENGTH_TOL) & (dist <= length_bound)
                    & (ang >= lo - _SEP_ANGLE_TOL) & (ang <= hi + _SEP_ANGLE_TOL))
            if seen.any():
                best = min(best, float(dist[seen].min()))
            for e in range(poly.n):
                if e == entry:
                    continue
                E0 = verts[e]
                E1 = verts[(e + 1) % poly.n]
                if geo.point_segment_distance(w, E0, E1) > length_bound:
                    continue
                c = geo.cross2(E0[0] - w[0], E0[1] - w[1], E1[0] - w[0], E1[1] - w[1])
                if abs(c) < 1e-15:
                    continue  # radial edge: no transversal crossing window
                if c > 0:
                    a0 = math.atan2(E0[1] - w[1], E0[0] - w[0])
                    a1 = math.atan2(E1[1] - w[1], E1[0] - w[0])
                else:
                    a0 = math.atan2(E1[1] - w[1], E1[0] - w[0])
                    a1 = math.atan2(E0[1] - w[1], E0[0] - w[0])
                new_lo, new_hi = _window_intersect(lo, hi, a0, a1)
                if new_hi - new_lo <= 1e-13:
                    continue
                k, f = surface.glued_side((j, e))
                sx, sy = surface.gluing_shift((j, e))
                stack.append((k, ox - sx, oy - sy, new_lo, new_hi, f))

    if best > length_bound:
        raise NotFoundWithinBound(
            f"no saddle connection within length {length_bound:g}; raise the bound")
    return best


def separation_exceeds(surface: TranslationSurface, r: float) -> bool:
    """Cached gate: is the shortest singularity separation strictly above r?"""
    if surface._sep_min_found <= r:
        return False
    if surface._sep_checked >= r:
        return True
    try:
        found = shortest_singularity_separation(surface, r * (1.0 + 1e-9))
        surface._sep_min_found = min(surface._sep_min_found, found)
    except NotFoundWithinBound:
        pass
    surface._sep_checked = max(surface._sep_checked, r * (1.0 + 1e-9))
    return surface._sep_min_found > r


def square_torus() -> TranslationSurface:
    """Unit square with opposite sides identified; one marked point."""
    poly = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    gluings = [((0, 0), (0, 2)), ((0, 1), (0, 3))]
    return build_surface([poly], gluings, name="square-torus")


def torus_from_basis(u, v) -> TranslationSurface:
    """Torus R^2 / (Z u + Z v), normalized to unit area. Needs cross(u, v) > 0."""
    ux, uy = float(u[0]), float(u[1])
    vx, vy = float(v[0]), float(v[1])
    if geo.cross2(ux, uy, vx, vy) <= 0:
        raise SurfaceError("basis must be positively oriented: cross(u, v) > 0")
    poly = [(0.0, 0.0), (ux, uy), (ux + vx, uy + vy), (vx, vy)]
    gluings = [((0, 0), (0, 2)), ((0, 1), (0, 3))]
    return build_surface([poly], gluings, name="torus")


def l_surface(a: float = 1.0, b: float = 1.0) -> TranslationSurface:
    """L-shaped surface with one cone point of angle 6*pi (stratum H(2)).

    The outline is an (a+b) x (a+b) square missing a b-wide, a-tall block at
    the top right; flat vertices split the long sides so gluings pair whole
    edges.  Normalized to unit area at build time.
    """
    if a <= 0 or b <= 0:
        raise SurfaceError("l_surface arms must be positive")
    a, b = float(a), float(b)
    poly = [(0.0, 0.0), (a, 0.0), (a + b, 0.0), (a + b, b), (a, b),
            (a, a + b), (0.0, a + b), (0.0, b)]
    gluings = [
        ((0, 0), (0, 5)),  # bottom left <-> top
        ((0, 1), (0, 3)),  # bottom right <-> inner horizontal
        ((0, 2), (0, 7)),  # outer right <-> lower left
        ((0, 4), (0, 6)),  # inner vertical <-> upper left
    ]
    return build_surface([poly], gluings, name="l-surface")


def regular_octagon() -> TranslationSurface:
    """Regular octagon with opposite sides identified (genus 2, one cone point)."""
    verts = []
    for k in range(8):
        ang = math.pi / 8.0 + k * math.pi / 4.0
        verts.append((math.cos(ang), math.sin(ang)))
    gluings = [((0, k), (0, k + 4)) for k in range(4)]
    return build_surface([verts], gluings, name="regular-octagon")


BUILTIN_SURFACES = {
    "square_torus": square_torus,
    "torus_from_basis": torus_from_basis,
    "l_surface": l_surface,
    "regular_octagon": regular_octagon,
}
