"""Exact 2-D convex polygon toolkit for rate regions.

Polygons are stored as counter-clockwise vertex arrays starting at the
lowest (then leftmost) vertex. Points and segments are valid polygons.
"""

from __future__ import annotations

import io
import json
import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConvexPolygon",
    "convex_hull",
    "scale",
    "minkowski_sum",
    "minkowski_sum_all",
    "contains",
    "hausdorff_distance",
    "point_distance",
    "DEDUP_TOL",
]

DEDUP_TOL = 1e-12
_SNAP = 1e12  # exact in binary, so representable decimals survive snapping


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


class ConvexPolygon:
    """Convex polygon with CCW vertices; may be a point or a segment."""

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) == 0:
            raise ValueError("polygon needs at least one vertex")
        v.setflags(write=False)
        self.vertices = v

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        pts = ", ".join(f"({x:.6g}, {y:.6g})" for x, y in self.vertices)
        return f"ConvexPolygon([{pts}])"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConvexPolygon):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.all(self.vertices == other.vertices))

    __hash__ = None

    @property
    def is_point(self) -> bool:
        return len(self.vertices) == 1

    @property
    def is_segment(self) -> bool:
        return len(self.vertices) == 2

    def area(self) -> float:
        if len(self.vertices) < 3:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def support(self, direction) -> float:
        """max <d, v> over the polygon."""
        return float(np.max(self.vertices @ np.asarray(direction, dtype=float)))

    def edges(self):
        v = self.vertices
        if len(v) == 1:
            return []
        if len(v) == 2:
            return [(v[0], v[1])]
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def almost_equal(self, other: "ConvexPolygon", tol: float) -> bool:
        return hausdorff_distance(self, other) <= tol

    # serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,y\n")
        for x, y in self.vertices:
            buf.write(f"{_fmt(x)},{_fmt(y)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConvexPolygon":
        rows = [ln.split(",") for ln in text.strip().splitlines()]
        if rows and rows[0][0].strip() == "x":
            rows = rows[1:]
        return cls([[float(a), float(b)] for a, b in rows])

    def to_dict(self) -> dict:
        return {"vertices": [[_round9(x), _round9(y)] for x, y in self.vertices]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text) -> "ConvexPolygon":
        obj = json.loads(text) if isinstance(text, str) else text
        return cls(obj["vertices"])


def _fmt(v: float) -> str:
    s = f"{v:.9g}"
    return "0" if s == "-0" else s


def _round9(v: float) -> float:
    return float(_fmt(v))


def convex_hull(points: Iterable[Sequence[float]]) -> ConvexPolygon:
    """Monotone-chain hull; collinear and near-duplicate points are dropped."""
    pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points,
                     dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("convex hull of an empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    # snapping keeps the lexicographic order consistent with the geometry
    pts = np.round(pts * _SNAP) / _SNAP + 0.0
    pts = np.unique(pts, axis=0)
    if len(pts) <= 2:
        return ConvexPolygon(_rotate_lowest(pts))

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _turn(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    hull = _dedup_cyclic(hull)
    return ConvexPolygon(_rotate_lowest(hull))


def _turn(o, a, b) -> float:
    """Cross product with near-collinear turns rounded to zero."""
    c = _cross(o, a, b)
    mag = math.hypot(a[0] - o[0], a[1] - o[1]) * math.hypot(b[0] - o[0], b[1] - o[1])
    return 0.0 if abs(c) <= DEDUP_TOL * max(mag, DEDUP_TOL) else c


def _dedup_cyclic(v: np.ndarray) -> np.ndarray:
    keep = [v[0]]
    for p in v[1:]:
        if np.max(np.abs(p - keep[-1])) > DEDUP_TOL:
            keep.append(p)
    while len(keep) > 1 and np.max(np.abs(keep[-1] - keep[0])) <= DEDUP_TOL:
        keep.pop()
    return np.array(keep)


def _rotate_lowest(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1, 2)
    if len(v) <= 1:
        return v
    k = min(range(len(v)), key=lambda i: (v[i, 1], v[i, 0]))
    return np.roll(v, -k, axis=0)


def scale(poly: ConvexPolygon, a: float) -> ConvexPolygon:
    """Multiply every vertex by ``a`` >= 0."""
    if a < 0:
        raise ValueError("scale factor must be nonnegative")
    if a == 0:
        return ConvexPolygon([[0.0, 0.0]])
    return convex_hull(poly.vertices * a)


def _edge_angles(v: np.ndarray) -> np.ndarray:
    e = np.roll(v, -1, axis=0) - v
    ang = np.arctan2(e[:, 1], e[:, 0])
    return np.where(ang < 0, ang + 2 * np.pi, ang)


def minkowski_sum(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon:
    """Minkowski sum by merging the two edge sequences in angular order."""
    P, Q = p.vertices, q.vertices
    if len(P) == 1:
        return convex_hull(Q + P[0])
    if len(Q) == 1:
        return convex_hull(P + Q[0])
    aP, aQ = _edge_angles(P), _edge_angles(Q)
    out = [P[0] + Q[0]]
    i = j = 0
    while i < len(P) or j < len(Q):
        if j == len(Q) or (i < len(P) and aP[i] <= aQ[j]):
            i += 1
        else:
            j += 1
        out.append(P[i % len(P)] + Q[j % len(Q)])
    return convex_hull(np.array(out[:-1]))


def minkowski_sum_all(polys: Iterable[ConvexPolygon]) -> ConvexPolygon:
    acc = ConvexPolygon([[0.0, 0.0]])
    for poly in polys:
        acc = minkowski_sum(acc, poly)
    return acc


def _segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(1.0, max(0.0, float((p - a) @ ab) / denom))
    d = p - (a + t * ab)
    return math.hypot(d[0], d[1])


def point_distance(poly: ConvexPolygon, point) -> float:
    """Euclidean distance from ``point`` to the (filled) polygon."""
    p = np.asarray(point, dtype=float)
    v = poly.vertices
    if len(v) == 1:
        d = p - v[0]
        return math.hypot(d[0], d[1])
    if len(v) >= 3 and all(_cross(v[i], v[(i + 1) % len(v)], p) >= 0
                           for i in range(len(v))):
        return 0.0
    return min(_segment_distance(p, a, b) for a, b in poly.edges())


def contains(outer: ConvexPolygon, inner: ConvexPolygon, tol: float = 0.0) -> bool:
    """True iff every vertex of ``inner`` lies within ``tol`` of ``outer``."""
    return all(point_distance(outer, v) <= tol for v in inner.vertices)


def hausdorff_distance(p: ConvexPolygon, q: ConvexPolygon) -> float:
    """Hausdorff distance between two convex regions.

    Distance to a convex set is convex along segments, so the supremum is
    attained at vertices.
    """
    d_pq = max(point_distance(q, v) for v in p.vertices)
    d_qp = max(point_distance(p, v) for v in q.vertices)
    return max(d_pq, d_qp)
