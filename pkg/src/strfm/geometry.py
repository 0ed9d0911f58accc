"""Spatial domains, space-time decomposition and collocation sampling."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

BOUNDARY_TOL = 1e-12


class GeometryError(ValueError):
    pass


class CoverageError(GeometryError):
    """A spatial cell of a composite domain received no interior collocation points."""


# ---------------------------------------------------------------------------
# boundary segments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    def point(self, s):
        s = np.asarray(s, dtype=float)[:, None]
        p0 = np.asarray(self.start)
        p1 = np.asarray(self.end)
        return p0 + s * (p1 - p0)

    def tangent(self, s):
        d = np.asarray(self.end) - np.asarray(self.start)
        d = d / np.linalg.norm(d)
        return np.broadcast_to(d, (len(np.atleast_1d(s)), 2)).copy()

    def distance(self, P) -> np.ndarray:
        p0 = np.asarray(self.start)
        d = np.asarray(self.end) - p0
        s = np.clip(((P - p0) @ d) / (d @ d), 0.0, 1.0)
        return np.linalg.norm(P - (p0 + s[:, None] * d), axis=1)

    def angle_swept(self, P) -> np.ndarray:
        a = np.asarray(self.start) - P
        b = np.asarray(self.end) - P
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        dot = np.einsum("ij,ij->i", a, b)
        return np.arctan2(cross, dot)

    def extent_points(self) -> np.ndarray:
        return np.array([self.start, self.end], dtype=float)


@dataclass(frozen=True)
class Arc:
    """Circular arc traversed from ``start_angle`` to ``end_angle`` (radians)."""

    center: tuple[float, float]
    radius: float
    start_angle: float
    end_angle: float

    @property
    def sweep(self) -> float:
        return self.end_angle - self.start_angle

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    def point(self, s):
        th = self.start_angle + np.asarray(s, dtype=float) * self.sweep
        c = np.asarray(self.center)
        return c + self.radius * np.stack([np.cos(th), np.sin(th)], axis=1)

    def tangent(self, s):
        th = self.start_angle + np.asarray(s, dtype=float) * self.sweep
        sign = 1.0 if self.sweep > 0 else -1.0
        return sign * np.stack([-np.sin(th), np.cos(th)], axis=1)

    def distance(self, P) -> np.ndarray:
        c = np.asarray(self.center)
        v = P - c
        th = np.arctan2(v[:, 1], v[:, 0])
        lo = min(self.start_angle, self.end_angle)
        span = abs(self.sweep)
        on_arc = np.mod(th - lo, 2.0 * np.pi) <= span + 1e-15
        radial = np.abs(np.linalg.norm(v, axis=1) - self.radius)
        ends = self.point(np.array([0.0, 1.0]))
        end_dist = np.minimum(np.linalg.norm(P - ends[0], axis=1), np.linalg.norm(P - ends[1], axis=1))
        return np.where(on_arc, radial, end_dist)

    def angle_swept(self, P) -> np.ndarray:
        ends = self.point(np.array([0.0, 1.0]))
        a = ends[0] - P
        b = ends[1] - P
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        dot = np.einsum("ij,ij->i", a, b)
        principal = np.arctan2(cross, dot)
        inside = np.linalg.norm(P - np.asarray(self.center), axis=1) < self.radius
        two_pi = 2.0 * np.pi
        if self.sweep > 0:
            wrapped = np.mod(principal, two_pi)
            if abs(self.sweep) >= two_pi - 1e-14:
                wrapped = np.full_like(principal, two_pi)
        else:
            wrapped = -np.mod(-principal, two_pi)
            if abs(self.sweep) >= two_pi - 1e-14:
                wrapped = np.full_like(principal, -two_pi)
        return np.where(inside, wrapped, principal)

    def extent_points(self) -> np.ndarray:
        pts = [self.point(np.array([0.0, 1.0]))]
        lo = min(self.start_angle, self.end_angle)
        span = abs(self.sweep)
        c = np.asarray(self.center)
        for k in range(8):
            th = k * np.pi / 2.0
            if np.mod(th - lo, 2.0 * np.pi) <= span:
                pts.append((c + self.radius * np.array([np.cos(th), np.sin(th)]))[None, :])
        return np.concatenate(pts)


Segment = Line | Arc


@dataclass(frozen=True)
class Loop:
    segments: tuple

    def winding(self, P) -> np.ndarray:
        total = np.zeros(len(P))
        for seg in self.segments:
            total += seg.angle_swept(P)
        return np.rint(total / (2.0 * np.pi)).astype(int)

    def distance(self, P) -> np.ndarray:
        return np.min([seg.distance(P) for seg in self.segments], axis=0)

    def orientation(self) -> float:
        """+1 for counter-clockwise loops, -1 for clockwise ones."""
        pts = np.concatenate([seg.point(np.linspace(0, 1, 65)[:-1]) for seg in self.segments])
        x, y = pts[:, 0], pts[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        return 1.0 if area > 0 else -1.0

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise GeometryError("box bounds must have equal, nonzero length")
        if any(not a < b for a, b in zip(lo, hi)):
            raise GeometryError(f"box requires lo < hi per axis, got {lo} and {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d_x(self) -> int:
        return len(self.lo)

    def bounding_box(self):
        return np.array(self.lo), np.array(self.hi)

    def contains(self, X) -> np.ndarray:
        X = _as_points(X, self.d_x)
        lo, hi = self.bounding_box()
        return np.all((X > lo + BOUNDARY_TOL) & (X < hi - BOUNDARY_TOL), axis=1)

    def boundary_distance(self, X) -> np.ndarray:
        X = _as_points(X, self.d_x)
        lo, hi = self.bounding_box()
        inside = np.all((X >= lo) & (X <= hi), axis=1)
        d_in = np.min(np.minimum(X - lo, hi - X), axis=1)
        d_out = np.linalg.norm(np.maximum(np.maximum(lo - X, X - hi), 0.0), axis=1)
        return np.where(inside, d_in, d_out)

    def in_closure(self, X, tol: float = 1e-9) -> np.ndarray:
        X = _as_points(X, self.d_x)
        lo, hi = self.bounding_box()
        return np.all((X >= lo - tol) & (X <= hi + tol), axis=1)

    def face_tag(self, axis: int, side: int) -> str:
        return f"x{axis}{'-' if side < 0 else '+'}"


@dataclass(frozen=True)
class Composite:
    """Planar domain bounded by an outer loop with optional holes."""

    outer: Loop
    holes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "holes", tuple(self.holes))
        for k, hole in enumerate(self.holes):
            probe = hole.segments[0].point(np.array([0.5]))
            if self.outer.winding(probe)[0] == 0:
                raise GeometryError(f"hole {k} is not inside the outer boundary")

    @property
    def d_x(self) -> int:
        return 2

    def loops(self):
        return (self.outer,) + self.holes

    def bounding_box(self):
        pts = np.concatenate([seg.extent_points() for seg in self.outer.segments])
        return pts.min(axis=0), pts.max(axis=0)

    def boundary_distance(self, X) -> np.ndarray:
        X = _as_points(X, 2)
        return np.min([loop.distance(X) for loop in self.loops()], axis=0)

    def contains(self, X) -> np.ndarray:
        X = _as_points(X, 2)
        inside = self.outer.winding(X) != 0
        for hole in self.holes:
            inside &= hole.winding(X) == 0
        return inside & (self.boundary_distance(X) > BOUNDARY_TOL)

    def in_closure(self, X, tol: float = 1e-9) -> np.ndarray:
        X = _as_points(X, 2)
        return self.contains(X) | (self.boundary_distance(X) <= tol)


SpatialDomain = Box | Composite


def contains(domain, x) -> bool | np.ndarray:
    """Open-interior membership; boundary points return False."""
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1 and (x.ndim == 0 or x.shape[0] == domain.d_x):
        return bool(domain.contains(x.reshape(1, -1))[0])
    return domain.contains(x)


def _as_points(X, d_x: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, d_x) if d_x > 1 else X.reshape(-1, 1)
    if X.shape[1] != d_x:
        raise GeometryError(f"expected points of dimension {d_x}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise GeometryError("points must be finite")
    return X


def _segment_from_dict(d: dict):
    kind = d.get("type", "line")
    if kind == "line":
        return Line(tuple(map(float, d["start"])), tuple(map(float, d["end"])))
    if kind == "arc":
        return Arc(tuple(map(float, d["center"])), float(d["radius"]),
                   float(d["start_angle"]), float(d["end_angle"]))
    raise GeometryError(f"unknown segment type {kind!r}")


def _loop_from_dict(d: dict) -> Loop:
    if "circle" in d:
        c = d["circle"]
        return Loop((Arc(tuple(map(float, c["center"])), float(c["radius"]), 0.0, 2.0 * np.pi),))
    if "rectangle" in d:
        r = d["rectangle"]
        (x0, y0), (x1, y1) = r["lo"], r["hi"]
        return polygon_loop([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    if "polygon" in d:
        return polygon_loop(d["polygon"])
    return Loop(tuple(_segment_from_dict(s) for s in d["segments"]))


def polygon_loop(vertices) -> Loop:
    vs = [tuple(map(float, v)) for v in vertices]
    return Loop(tuple(Line(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))))


def composite_from_dict(d: dict) -> Composite:
    outer = _loop_from_dict(d["outer"])
    holes = tuple(_loop_from_dict(h) for h in d.get("holes", []))
    return Composite(outer, holes)


def load_composite(path) -> Composite:
    """Load a composite domain from a TOML or JSON file (see README for the schema)."""
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    return composite_from_dict(data.get("domain", data))


def standin_complex_domain() -> Composite:
    """Rectangle [0,5]x[0,4] with a notch in the top edge and two circular holes."""
    outer = polygon_loop([(0, 0), (5, 0), (5, 4), (3.0, 4), (3.0, 3.0), (2.0, 3.0), (2.0, 4), (0, 4)])
    holes = (
        Loop((Arc((1.2, 1.3), 0.5, 0.0, 2.0 * np.pi),)),
        Loop((Arc((3.7, 1.5), 0.45, 0.0, 2.0 * np.pi),)),
    )
    return Composite(outer, holes)


def domain_to_dict(domain) -> dict:
    if isinstance(domain, Box):
        return {"kind": "box", "lo": list(domain.lo), "hi": list(domain.hi)}

    def seg(s):
        if isinstance(s, Line):
            return {"type": "line", "start": list(s.start), "end": list(s.end)}
        return {"type": "arc", "center": list(s.center), "radius": s.radius,
                "start_angle": s.start_angle, "end_angle": s.end_angle}

    return {
        "kind": "composite",
        "outer": {"segments": [seg(s) for s in domain.outer.segments]},
        "holes": [{"segments": [seg(s) for s in h.segments]} for h in domain.holes],
    }


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubdomainDecomposition:
    """Uniform tensor decomposition of the bounding box times a time interval.

    Spatial cells are indexed row-major over ``n_x``; space-time cell ``(ix, it)``
    has flat index ``ix * n_t + it``.
    """

    lo: np.ndarray
    hi: np.ndarray
    n_x: tuple
    t_start: float
    t_end: float
    n_t: int

    @property
    def d_x(self) -> int:
        return len(self.n_x)

    @property
    def T(self) -> float:
        return self.t_end - self.t_start

    @property
    def n_space_cells(self) -> int:
        return int(np.prod(self.n_x))

    @property
    def n_cells(self) -> int:
        return self.n_space_cells * self.n_t

    @property
    def cell_width(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.n_x)

    @property
    def time_width(self) -> float:
        return self.T / self.n_t

    @property
    def time_edges(self) -> np.ndarray:
        edges = self.t_start + self.time_width * np.arange(self.n_t + 1)
        edges[-1] = self.t_end
        return edges

    def space_multi_index(self, ix: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(ix, self.n_x))

    def space_flat_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.n_x))

    def cell_index(self, ix: int, it: int) -> int:
        return ix * self.n_t + it

    def cell_pair(self, c: int) -> tuple[int, int]:
        return divmod(c, self.n_t)

    def space_bounds(self, ix: int):
        m = np.asarray(self.space_multi_index(ix))
        w = self.cell_width
        a = self.lo + m * w
        b = np.where(m == np.asarray(self.n_x) - 1, self.hi, a + w)
        return a, b

    def time_bounds(self, it: int):
        e = self.time_edges
        return float(e[it]), float(e[it + 1])

    def space_center(self, ix: int) -> np.ndarray:
        a, b = self.space_bounds(ix)
        return 0.5 * (a + b)

    def time_center(self, it: int) -> float:
        a, b = self.time_bounds(it)
        return 0.5 * (a + b)

    def space_scale(self, ix: int) -> np.ndarray:
        a, b = self.space_bounds(ix)
        return 2.0 / (b - a)

    def time_scale(self, it: int) -> float:
        # uniform cells share one scale exactly, so shifted blocks assemble identically
        return 2.0 / self.time_width

    def map_space(self, ix: int, X) -> np.ndarray:
        a, b = self.space_bounds(ix)
        return (2.0 * np.asarray(X, dtype=float) - (a + b)) / (b - a)

    def unmap_space(self, ix: int, Z) -> np.ndarray:
        a, b = self.space_bounds(ix)
        return 0.5 * (np.asarray(Z, dtype=float) * (b - a) + (a + b))

    def map_time(self, it: int, t) -> np.ndarray:
        a, b = self.time_bounds(it)
        return (2.0 * np.asarray(t, dtype=float) - (a + b)) / (b - a)

    def unmap_time(self, it: int, z) -> np.ndarray:
        a, b = self.time_bounds(it)
        return 0.5 * (np.asarray(z, dtype=float) * (b - a) + (a + b))

    def locate_space(self, X) -> np.ndarray:
        """Flat spatial cell index owning each point (half-open cells, last cell closed)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = np.floor((X - self.lo) / self.cell_width).astype(int)
        m = np.clip(m, 0, np.asarray(self.n_x) - 1)
        return np.ravel_multi_index(tuple(m.T), self.n_x)

    def locate_time(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        it = np.floor((t - self.t_start) / self.time_width).astype(int)
        return np.clip(it, 0, self.n_t - 1)

    def space_neighbors(self):
        """Pairs ``(ix_a, ix_b, axis)`` of spatial cells sharing a face, ix_a on the low side."""
        pairs = []
        for ix in range(self.n_space_cells):
            m = list(self.space_multi_index(ix))
            for axis in range(self.d_x):
                if m[axis] + 1 < self.n_x[axis]:
                    mb = list(m)
                    mb[axis] += 1
                    pairs.append((ix, self.space_flat_index(mb), axis))
        return pairs

    def time_block(self, it: int) -> "SubdomainDecomposition":
        """Decomposition of the single time cell ``it`` (same spatial cells)."""
        a, b = self.time_bounds(it)
        return SubdomainDecomposition(self.lo, self.hi, self.n_x, a, b, 1)


def decompose(domain, T: float, n_x_per_dim: Sequence[int] | int, n_t: int,
              t_start: float = 0.0) -> SubdomainDecomposition:
    """Uniform partition of the bounding box of ``domain`` and of ``[t_start, t_start + T]``."""
    if np.isscalar(n_x_per_dim):
        n_x_per_dim = (int(n_x_per_dim),) * domain.d_x
    n_x = tuple(int(v) for v in n_x_per_dim)
    if len(n_x) != domain.d_x:
        raise GeometryError(f"need {domain.d_x} spatial cell counts, got {len(n_x)}")
    if any(v < 1 for v in n_x):
        raise GeometryError(f"spatial cell counts must be >= 1, got {n_x}")
    if int(n_t) < 1:
        raise GeometryError(f"n_t must be >= 1, got {n_t}")
    if not T > 0:
        raise GeometryError(f"T must be positive, got {T}")
    lo, hi = domain.bounding_box()
    return SubdomainDecomposition(np.asarray(lo, float), np.asarray(hi, float), n_x,
                                  float(t_start), float(t_start + T), int(n_t))


# ---------------------------------------------------------------------------
# collocation
# ---------------------------------------------------------------------------


@dataclass
class BoundaryPoints:
    x: np.ndarray
    normal: np.ndarray
    tag: np.ndarray  # array of str

    def __len__(self):
        return len(self.x)

    def select(self, mask) -> "BoundaryPoints":
        return BoundaryPoints(self.x[mask], self.normal[mask], self.tag[mask])


@dataclass
class SpaceFace:
    cell_a: int
    cell_b: int
    axis: int
    x: np.ndarray


@dataclass
class CollocationSet:
    """Tensor-structured collocation points.

    Interior points of space-time cell ``(ix, it)`` are ``interior_x[ix] x
    time_nodes[it]``; initial points are ``interior_x[ix]`` at the start time.
    Time faces sit at ``time_nodes[it][0]`` for ``it >= 1`` over the spatial grid
    of every spatial cell.
    """

    decomp: SubdomainDecomposition
    interior_x: list
    time_nodes: list
    boundary: list
    space_faces: list = field(default_factory=list)

    @property
    def initial_x(self) -> list:
        return self.interior_x

    @property
    def time_faces(self) -> list:
        return [(it - 1, it, float(self.time_nodes[it][0])) for it in range(1, self.decomp.n_t)]

    def interior_points(self, pde_nodes_only: bool = True) -> np.ndarray:
        """Rows ``(x..., t, ix, it)`` of all interior space-time collocation points."""
        rows = []
        for ix, X in enumerate(self.interior_x):
            for it, tn in enumerate(self.time_nodes):
                ts = tn[:-1] if pde_nodes_only else tn
                for t in ts:
                    rows.append(np.column_stack([X, np.full(len(X), t), np.full(len(X), ix),
                                                 np.full(len(X), it)]))
        return np.concatenate(rows) if rows else np.empty((0, self.decomp.d_x + 3))

    def boundary_points(self) -> np.ndarray:
        rows = []
        for ix, bp in enumerate(self.boundary):
            for it, tn in enumerate(self.time_nodes):
                for t in tn:
                    rows.append(np.column_stack([bp.x, np.full(len(bp), t), np.full(len(bp), ix),
                                                 np.full(len(bp), it)]))
        return np.concatenate(rows) if rows else np.empty((0, self.decomp.d_x + 3))


def _centered(a: float, b: float, q: int) -> np.ndarray:
    return a + (np.arange(q) + 0.5) / q * (b - a)


def _tensor_grid(axes: list) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _sample_boundary(domain, decomp, q_x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(domain, Box):
        xs, ns, tags = [], [], []
        lo, hi = domain.bounding_box()
        for axis in range(domain.d_x):
            others = [k for k in range(domain.d_x) if k != axis]
            axes_pts = []
            for k in others:
                pts = np.concatenate([_centered(decomp.lo[k] + i * decomp.cell_width[k],
                                                decomp.lo[k] + (i + 1) * decomp.cell_width[k], q_x[k])
                                      for i in range(decomp.n_x[k])])
                axes_pts.append(pts)
            base = _tensor_grid(axes_pts) if others else np.zeros((1, 0))
            for side, value in ((-1, lo[axis]), (1, hi[axis])):
                P = np.zeros((len(base), domain.d_x))
                P[:, others] = base
                P[:, axis] = value
                N = np.zeros_like(P)
                N[:, axis] = side
                xs.append(P)
                ns.append(N)
                tags.append(np.full(len(P), domain.face_tag(axis, side), dtype=object))
        return np.concatenate(xs), np.concatenate(ns), np.concatenate(tags)

    h = float(np.min(decomp.cell_width / np.asarray(q_x)))
    xs, ns, tags = [], [], []
    for li, loop in enumerate(domain.loops()):
        orient = loop.orientation()
        sign = 1.0 if li == 0 else -1.0
        name = "outer" if li == 0 else f"hole{li - 1}"
        for seg in loop.segments:
            n = max(1, int(math.ceil(seg.length / h - 1e-9)))
            s = (np.arange(n) + 0.5) / n
            P = seg.point(s)
            tg = seg.tangent(s)
            normal = sign * orient * np.stack([tg[:, 1], -tg[:, 0]], axis=1)
            xs.append(P)
            ns.append(normal)
            tags.append(np.full(n, name, dtype=object))
    return np.concatenate(xs), np.concatenate(ns), np.concatenate(tags)


def sample_collocation(decomp: SubdomainDecomposition, domain, q_x_per_dim, q_t: int) -> CollocationSet:
    """Cell-centred spatial grids, endpoint-inclusive time grids, boundary and face points."""
    if np.isscalar(q_x_per_dim):
        q_x_per_dim = (int(q_x_per_dim),) * decomp.d_x
    q_x = tuple(int(v) for v in q_x_per_dim)
    if any(v < 1 for v in q_x) or int(q_t) < 1:
        raise GeometryError(f"collocation counts must be >= 1, got Q_x={q_x}, Q_t={q_t}")
    composite = isinstance(domain, Composite)

    interior = []
    for ix in range(decomp.n_space_cells):
        a, b = decomp.space_bounds(ix)
        X = _tensor_grid([_centered(a[k], b[k], q_x[k]) for k in range(decomp.d_x)])
        X = X[domain.contains(X)]
        if composite and len(X) == 0:
            raise CoverageError(f"spatial cell {ix} has no interior collocation points")
        interior.append(X)

    time_nodes = [np.linspace(*decomp.time_bounds(it), int(q_t) + 1) for it in range(decomp.n_t)]

    bx, bn, btag = _sample_boundary(domain, decomp, q_x)
    owner = decomp.locate_space(bx)
    boundary = [BoundaryPoints(bx[owner == ix], bn[owner == ix], btag[owner == ix])
                for ix in range(decomp.n_space_cells)]

    faces = []
    for ia, ib, axis in decomp.space_neighbors():
        a, b = decomp.space_bounds(ia)
        axes = [_centered(a[k], b[k], q_x[k]) if k != axis else np.array([b[axis]])
                for k in range(decomp.d_x)]
        X = _tensor_grid(axes)
        X = X[domain.contains(X)]
        if len(X):
            faces.append(SpaceFace(ia, ib, axis, X))
    return CollocationSet(decomp, interior, time_nodes, boundary, faces)


def eval_grid(domain, n_per_axis: Sequence[int]) -> tuple[np.ndarray, list]:
    """Uniform closed grid over the bounding box restricted to the domain closure.

    Returns the points and the per-axis coordinate vectors.
    """
    lo, hi = domain.bounding_box()
    axes = [np.linspace(lo[k], hi[k], int(n)) for k, n in enumerate(n_per_axis)]
    X = _tensor_grid(axes)
    return X, axes
