"""Small 2D kernel: areas, angles, simplicity tests, triangulation, distances."""
from __future__ import annotations

import math

import numpy as np


def cross2(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def signed_area(vertices) -> float:
    """Shoelace area; positive for counterclockwise polygons."""
    vs = np.asarray(vertices, dtype=float)
    x, y = vs[:, 0], vs[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def interior_angles(vertices) -> list[float]:
    """Interior angle at each vertex of a counterclockwise simple polygon.

    Returns values in (0, 2*pi); flat vertices give pi, reflex corners more.
    """
    vs = np.asarray(vertices, dtype=float)
    n = len(vs)
    out = []
    for i in range(n):
        u_in = vs[i] - vs[i - 1]
        u_out = vs[(i + 1) % n] - vs[i]
        turn = math.atan2(cross2(u_in[0], u_in[1], u_out[0], u_out[1]),
                          float(np.dot(u_in, u_out)))
        out.append(math.pi - turn)
    return out


def _on_segment(px, py, qx, qy, rx, ry, tol):
    # r collinear with p-q assumed; is r within the box spanned by p,q?
    return (min(px, qx) - tol <= rx <= max(px, qx) + tol
            and min(py, qy) - tol <= ry <= max(py, qy) + tol)


def segments_intersect(p1, p2, q1, q2, tol: float = 1e-12) -> bool:
    """True if closed segments p1-p2 and q1-q2 share any point."""
    d1 = cross2(q2[0] - q1[0], q2[1] - q1[1], p1[0] - q1[0], p1[1] - q1[1])
    d2 = cross2(q2[0] - q1[0], q2[1] - q1[1], p2[0] - q1[0], p2[1] - q1[1])
    d3 = cross2(p2[0] - p1[0], p2[1] - p1[1], q1[0] - p1[0], q1[1] - p1[1])
    d4 = cross2(p2[0] - p1[0], p2[1] - p1[1], q2[0] - p1[0], q2[1] - p1[1])
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and \
       ((d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)):
        return True
    if abs(d1) <= tol and _on_segment(*q1, *q2, *p1, tol):
        return True
    if abs(d2) <= tol and _on_segment(*q1, *q2, *p2, tol):
        return True
    if abs(d3) <= tol and _on_segment(*p1, *p2, *q1, tol):
        return True
    if abs(d4) <= tol and _on_segment(*p1, *p2, *q2, tol):
        return True
    return False


def is_simple_polygon(vertices, tol: float = 1e-12) -> bool:
    """Check that no two non-adjacent edges touch or cross."""
    n = len(vertices)
    for i in range(n):
        a1, a2 = vertices[i], vertices[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex by construction
            b1, b2 = vertices[j], vertices[(j + 1) % n]
            if segments_intersect(a1, a2, b1, b2, tol):
                return False
    return True


def point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * vx + (py - ay) * vy) / L2
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy))


def point_in_polygon(p, vertices) -> bool:
    """Crossing-number test; points on the boundary count as inside."""
    n = len(vertices)
    px, py = p
    for i in range(n):
        if point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) < 1e-12:
            return True
    inside = False
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if (ay > py) != (by > py):
            x_int = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_int:
                inside = not inside
    return inside


def point_polygon_distance(p, vertices) -> float:
    if point_in_polygon(p, vertices):
        return 0.0
    n = len(vertices)
    return min(point_segment_distance(p, vertices[i], vertices[(i + 1) % n])
               for i in range(n))


def _point_in_triangle(p, a, b, c, tol):
    d1 = cross2(b[0] - a[0], b[1] - a[1], p[0] - a[0], p[1] - a[1])
    d2 = cross2(c[0] - b[0], c[1] - b[1], p[0] - b[0], p[1] - b[1])
    d3 = cross2(a[0] - c[0], a[1] - c[1], p[0] - c[0], p[1] - c[1])
    return d1 > tol and d2 > tol and d3 > tol


def triangulate_polygon(vertices) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation of a simple CCW polygon (flat vertices ok)."""
    n = len(vertices)
    idx = list(range(n))
    tris: list[tuple[int, int, int]] = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * n * n:
            raise ValueError("ear clipping failed; polygon may be degenerate")
        clipped = False
        for k in range(len(idx)):
            i0 = idx[k - 1]
            i1 = idx[k]
            i2 = idx[(k + 1) % len(idx)]
            a, b, c = vertices[i0], vertices[i1], vertices[i2]
            if cross2(b[0] - a[0], b[1] - a[1], c[0] - b[0], c[1] - b[1]) <= 1e-14:
                continue  # reflex or flat corner, not an ear
            if any(_point_in_triangle(vertices[j], a, b, c, -1e-14)
                   for j in idx if j not in (i0, i1, i2)):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            clipped = True
            break
        if not clipped:
            raise ValueError("ear clipping failed; polygon may be non-simple")
    tris.append((idx[0], idx[1], idx[2]))
    return tris
