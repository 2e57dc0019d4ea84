"""Boundary curves, conforming 1D boundary meshes and bisection refinement.

Every element keeps a reference to the piece of the initial mesh it was
cut from (its *root*) together with the interval ``[a, b]`` it occupies in
the root's normalized arclength chart.  Points are always evaluated from
the root, so meshes stay exactly nested under refinement.

Elements are ordered counterclockwise.  Node ``i`` is the start point of
element ``i``; element ``i`` ends at node ``(i + 1) % N``.  The outward
normal is ``nu = (t_y, -t_x)`` for the unit tangent ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

SEGMENT = 0
ARC = 1

_RATIO_TOL = 1e-9


class MeshError(ValueError):
    """Invalid geometry, mesh, or mesh query."""


@dataclass(frozen=True)
class BoundaryGeometry:
    """Closed counterclockwise boundary curve: a circle or a simple polygon."""

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    vertices: tuple = ()

    def __post_init__(self):
        if self.kind == "circle":
            if not (math.isfinite(self.radius) and self.radius > 0.0):
                raise MeshError("circle radius must be positive")
        elif self.kind == "lshape":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise MeshError("polygon needs at least three 2D vertices")
            _check_simple_ccw(v)
        else:
            raise MeshError(f"unknown geometry kind {self.kind!r}")

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius: float = 0.1) -> "BoundaryGeometry":
        return cls("circle", center=tuple(float(c) for c in center), radius=float(radius))

    @classmethod
    def lshape(cls, vertices=None) -> "BoundaryGeometry":
        """Rotated L-shaped hexagon (default) or any simple ccw polygon."""
        if vertices is None:
            vertices = LSHAPE_VERTICES
        return cls("lshape", vertices=tuple(tuple(float(c) for c in p) for p in vertices))

    @property
    def length(self) -> float:
        if self.kind == "circle":
            return 2.0 * math.pi * self.radius
        v = np.asarray(self.vertices)
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    @property
    def diameter(self) -> float:
        if self.kind == "circle":
            return 2.0 * self.radius
        v = np.asarray(self.vertices)
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))

    def contains(self, point) -> bool:
        """Strict interior test."""
        x, y = float(point[0]), float(point[1])
        if self.kind == "circle":
            cx, cy = self.center
            return math.hypot(x - cx, y - cy) < self.radius
        v = np.asarray(self.vertices)
        inside = False
        n = len(v)
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            # on-boundary points are not interior
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            if abs(cross) < 1e-15 and min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2):
                return False
            if (y1 > y) != (y2 > y):
                xs = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < xs:
                    inside = not inside
        return inside


# Hexagon with a reentrant corner at the origin.  Its interior is the union
# of three squares of side sqrt(2)/20, so 20*pi is a Dirichlet eigenvalue.
LSHAPE_VERTICES = (
    (0.1, 0.0),
    (0.0, 0.1),
    (-0.05, 0.05),
    (0.0, 0.0),
    (-0.05, -0.05),
    (0.0, -0.1),
)


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _check_simple_ccw(v: np.ndarray) -> None:
    n = len(v)
    edges = np.roll(v, -1, axis=0) - v
    if np.any(np.linalg.norm(edges, axis=1) <= 0.0):
        raise MeshError("consecutive polygon vertices must be distinct")
    area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    if area <= 0.0:
        raise MeshError("polygon must be counterclockwise with positive area")
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                raise MeshError("polygon is not simple")


@njit(cache=True)
def curve_point(row, t):
    """Point, unit tangent and curvature of element ``row`` at local ``t``.

    ``row`` is one line of :attr:`Mesh.geo`: ``[kind, p0, p1, p2, p3, h]``.
    Segments store ``(start_x, start_y, t_x, t_y)``, arcs store
    ``(center_x, center_y, radius, start_angle)``.
    """
    h = row[5]
    if row[0] == 0.0:
        tx = row[3]
        ty = row[4]
        return row[1] + t * h * tx, row[2] + t * h * ty, tx, ty, 0.0
    r = row[3]
    ang = row[4] + t * h / r
    c = math.cos(ang)
    s = math.sin(ang)
    return row[1] + r * c, row[2] + r * s, -s, c, 1.0 / r


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming mesh of a closed curve; immutable.

    Attributes
    ----------
    geometry : BoundaryGeometry
    roots : ndarray, shape (R, 6)
        Initial-mesh pieces in the ``geo`` row layout.
    root : ndarray of int
        Root piece of each element.
    a, b : ndarray
        Element interval in the root's normalized chart.
    generation : ndarray of int
        Number of bisections since the initial mesh.
    """

    geometry: BoundaryGeometry
    roots: np.ndarray
    root: np.ndarray
    a: np.ndarray
    b: np.ndarray
    generation: np.ndarray
    geo: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        roots = self.roots
        rr = roots[self.root]
        n = len(self.root)
        geo = np.empty((n, 6))
        geo[:, 0] = rr[:, 0]
        h_root = rr[:, 5]
        seg = rr[:, 0] == SEGMENT
        geo[:, 5] = (self.b - self.a) * h_root
        # segments: shift start point along the tangent
        geo[seg, 1] = rr[seg, 1] + self.a[seg] * h_root[seg] * rr[seg, 3]
        geo[seg, 2] = rr[seg, 2] + self.a[seg] * h_root[seg] * rr[seg, 4]
        geo[seg, 3] = rr[seg, 3]
        geo[seg, 4] = rr[seg, 4]
        arc = ~seg
        geo[arc, 1:4] = rr[arc, 1:4]
        geo[arc, 4] = rr[arc, 4] + self.a[arc] * h_root[arc] / rr[arc, 3]
        geo.setflags(write=False)
        object.__setattr__(self, "geo", geo)
        nodes = np.array([curve_point(geo[e], 0.0)[:2] for e in range(n)]).reshape(n, 2)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elements(self) -> int:
        return len(self.root)

    @property
    def n_nodes(self) -> int:
        return len(self.root)

    @property
    def h(self) -> np.ndarray:
        return self.geo[:, 5]

    @property
    def length(self) -> float:
        return float(np.sum(self.h))

    def element_nodes(self, e: int) -> tuple[int, int]:
        n = self.n_elements
        return e % n, (e + 1) % n

    def points(self, e: int, t) -> np.ndarray:
        """Points on element ``e`` at local parameters ``t`` in [0, 1]."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([curve_point(self.geo[e], float(s))[:2] for s in t])

    def frames(self, e: int, t):
        """Points, tangents, normals and curvature at local parameters."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        vals = np.array([curve_point(self.geo[e], float(s)) for s in t])
        pts = vals[:, 0:2]
        tan = vals[:, 2:4]
        nrm = np.column_stack([tan[:, 1], -tan[:, 0]])
        return pts, tan, nrm, vals[:, 4]

    def neighbors(self, e: int) -> tuple[int, int]:
        n = self.n_elements
        return (e - 1) % n, (e + 1) % n

    def chart_start(self) -> np.ndarray:
        return self.root + self.a

    def dump(self) -> str:
        """Plain-text listing, one element per line."""
        lines = []
        n = self.n_elements
        for e in range(n):
            x0, y0 = self.nodes[e]
            x1, y1 = self.nodes[(e + 1) % n]
            lines.append(
                f"{e}, ({x0:.12e},{y0:.12e}), ({x1:.12e},{y1:.12e}), "
                f"{self.h[e]:.12e}, {int(self.generation[e])}"
            )
        return "\n".join(lines) + "\n"


def build_initial_mesh(geometry: BoundaryGeometry) -> Mesh:
    """Four quarter arcs for a circle, one affine element per polygon edge."""
    if not isinstance(geometry, BoundaryGeometry):
        raise MeshError("expected a BoundaryGeometry")
    if geometry.kind == "circle":
        cx, cy = geometry.center
        r = geometry.radius
        roots = np.array(
            [[ARC, cx, cy, r, 0.5 * math.pi * j, 0.5 * math.pi * r] for j in range(4)]
        )
    else:
        v = np.asarray(geometry.vertices, dtype=float)
        w = np.roll(v, -1, axis=0)
        d = w - v
        ln = np.linalg.norm(d, axis=1)
        roots = np.column_stack(
            [np.full(len(v), SEGMENT), v[:, 0], v[:, 1], d[:, 0] / ln, d[:, 1] / ln, ln]
        )
    roots.setflags(write=False)
    n = len(roots)
    return Mesh(
        geometry=geometry,
        roots=roots,
        root=np.arange(n),
        a=np.zeros(n),
        b=np.ones(n),
        generation=np.zeros(n, dtype=int),
    )


def _closure(h: np.ndarray, marked: np.ndarray) -> np.ndarray:
    """Smallest superset of ``marked`` keeping the 2:1 neighbor ratio."""
    n = len(h)
    flag = np.zeros(n, dtype=bool)
    flag[marked] = True
    stack = list(np.flatnonzero(flag))
    while stack:
        e = stack.pop()
        child = 0.5 * h[e]
        for nb in ((e - 1) % n, (e + 1) % n):
            if not flag[nb] and h[nb] > 2.0 * child * (1.0 + _RATIO_TOL):
                flag[nb] = True
                stack.append(nb)
    return flag


def refine(mesh: Mesh, marked) -> Mesh:
    """Bisect marked elements plus the closure needed for the 2:1 ratio."""
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked, dtype=int))
    if marked.size == 0:
        return mesh
    n = mesh.n_elements
    if marked.min() < 0 or marked.max() >= n:
        raise MeshError("marked element id out of range")
    flag = _closure(mesh.h, marked)
    reps = np.where(flag, 2, 1)
    root = np.repeat(mesh.root, reps)
    gen = np.repeat(mesh.generation + flag, reps)
    a = np.repeat(mesh.a, reps)
    b = np.repeat(mesh.b, reps)
    mid = 0.5 * (mesh.a + mesh.b)
    first = np.cumsum(reps) - reps
    split = first[flag]
    b[split] = mid[flag]
    a[split + 1] = mid[flag]
    return Mesh(mesh.geometry, mesh.roots, root, a, b, gen)


def node_patch(mesh: Mesh, node: int) -> set[int]:
    """The two elements sharing ``node``."""
    n = mesh.n_elements
    if not (isinstance(node, (int, np.integer)) and 0 <= node < n):
        raise MeshError(f"unknown node id {node!r}")
    return {int((node - 1) % n), int(node)}


def parent_map(coarse: Mesh, fine: Mesh) -> np.ndarray:
    """Index of the coarse element containing each fine element."""
    if coarse.geometry != fine.geometry or coarse.roots.shape != fine.roots.shape or not np.array_equal(
        coarse.roots, fine.roots
    ):
        raise MeshError("meshes do not share an initial mesh")
    cs = coarse.chart_start()
    ce = coarse.root + coarse.b
    fs = fine.chart_start()
    fe = fine.root + fine.b
    idx = np.searchsorted(cs, fs + 1e-14, side="right") - 1
    tol = 1e-12
    if np.any(idx < 0) or np.any(fs < cs[idx] - tol) or np.any(fe > ce[idx] + tol) or np.any(
        fine.root != coarse.root[idx]
    ):
        raise MeshError("fine mesh is not a refinement of coarse mesh")
    return idx


def refined_region(coarse: Mesh, fine: Mesh) -> set[int]:
    """Refined coarse elements together with their immediate neighbors."""
    idx = parent_map(coarse, fine)
    counts = np.bincount(idx, minlength=coarse.n_elements)
    if np.any(counts == 0):
        raise MeshError("fine mesh is not a refinement of coarse mesh")
    refined = np.flatnonzero(counts > 1)
    n = coarse.n_elements
    out: set[int] = set()
    for e in refined:
        out.update((int(e), int((e - 1) % n), int((e + 1) % n)))
    return out
