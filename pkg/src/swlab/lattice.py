"""Finite boxes of Z^d, vertex/edge regions, sub-cubes and their point reflection.

Vertices are indexed lexicographically by absolute coordinates (last axis
fastest).  Edges are indexed by ``(lower endpoint index, axis)`` where the
lower endpoint is the one with the smaller coordinate along ``axis``.  Both
orders are part of the reproducibility contract: the dynamics consumes random
draws in edge order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ParameterError, PlacementError, ReflectionDomainError

Coord = tuple[int, ...]


@dataclass(frozen=True)
class LatticeBox:
    """The box ``anchor + [0, side)^dim`` with nearest-neighbour edges inside it."""

    dim: int
    side: int
    anchor: Coord = field(default=())

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if self.side < 1:
            raise ParameterError(f"side must be >= 1, got {self.side}")
        anchor = tuple(int(a) for a in self.anchor) if self.anchor else (0,) * self.dim
        if len(anchor) != self.dim:
            raise ParameterError(f"anchor {anchor} does not have {self.dim} coordinates")
        object.__setattr__(self, "anchor", anchor)

    @property
    def n_vertices(self) -> int:
        return self.side**self.dim

    @property
    def n_edges(self) -> int:
        return self.dim * self.side ** (self.dim - 1) * (self.side - 1)

    @cached_property
    def _strides(self) -> np.ndarray:
        return self.side ** np.arange(self.dim - 1, -1, -1, dtype=np.int64)

    @cached_property
    def coords(self) -> np.ndarray:
        """Absolute coordinates, shape ``(n_vertices, dim)``, row ``i`` is vertex ``i``."""
        grid = np.indices((self.side,) * self.dim, dtype=np.int64).reshape(self.dim, -1).T
        out = grid + np.asarray(self.anchor, dtype=np.int64)
        out.setflags(write=False)
        return out

    @cached_property
    def _edge_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, d = self.n_vertices, self.dim
        local = self.coords - np.asarray(self.anchor)
        lower = np.repeat(np.arange(n, dtype=np.int64), d)
        axis = np.tile(np.arange(d, dtype=np.int64), n)
        ok = local[lower, axis] < self.side - 1
        lower, axis = lower[ok], axis[ok]
        upper = lower + self._strides[axis]
        ids = np.full((n, d), -1, dtype=np.int64)
        ids[lower, axis] = np.arange(lower.size)
        edges = np.stack([lower, upper], axis=1)
        for arr in (edges, axis, ids):
            arr.setflags(write=False)
        return edges, axis, ids

    @property
    def edges(self) -> np.ndarray:
        """Edge endpoints, shape ``(n_edges, 2)``; column 0 is the lower endpoint."""
        return self._edge_tables[0]

    @property
    def edge_axis(self) -> np.ndarray:
        return self._edge_tables[1]

    def contains(self, coord: Sequence[int]) -> bool:
        c = np.asarray(coord) - np.asarray(self.anchor)
        return bool(np.all((c >= 0) & (c < self.side)))

    def index_of(self, coord: Sequence[int]) -> int:
        if len(coord) != self.dim or not self.contains(coord):
            raise ParameterError(f"{tuple(coord)} is not a vertex of {self}")
        return int((np.asarray(coord) - np.asarray(self.anchor)) @ self._strides)

    def indices_of(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`index_of` for an ``(k, dim)`` array (no bounds check)."""
        return (np.asarray(coords, dtype=np.int64) - np.asarray(self.anchor)) @ self._strides

    def coord_of(self, index: int) -> Coord:
        return tuple(int(c) for c in self.coords[index])

    def edge_index(self, u: int, v: int) -> int:
        """Index of the edge ``{u, v}``; raises if the two vertices are not adjacent."""
        a, b = (u, v) if u < v else (v, u)
        diff = self.coords[b] - self.coords[a]
        axes = np.flatnonzero(diff)
        if axes.size != 1 or diff[axes[0]] != 1:
            raise ParameterError(f"vertices {u} and {v} are not nearest neighbours")
        return int(self._edge_tables[2][a, axes[0]])

    def vertex_region(self, items: Iterable[int]) -> Region:
        return Region(self, "vertex", frozenset(int(i) for i in items))

    def edge_region(self, items: Iterable[int]) -> Region:
        return Region(self, "edge", frozenset(int(i) for i in items))

    def all_vertices(self) -> Region:
        return self.vertex_region(range(self.n_vertices))

    def all_edges(self) -> Region:
        return self.edge_region(range(self.n_edges))


@dataclass(frozen=True)
class Region:
    """A set of vertex indices or edge indices of one :class:`LatticeBox`."""

    box: LatticeBox
    kind: Literal["vertex", "edge"]
    items: frozenset[int]

    def __post_init__(self):
        if self.kind not in ("vertex", "edge"):
            raise ParameterError(f"unknown region kind {self.kind!r}")
        limit = self.box.n_vertices if self.kind == "vertex" else self.box.n_edges
        if self.items and (min(self.items) < 0 or max(self.items) >= limit):
            raise ParameterError(f"{self.kind} index out of range for {self.box}")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(sorted(self.items))

    def __contains__(self, item: int) -> bool:
        return item in self.items

    @property
    def array(self) -> np.ndarray:
        """Sorted index array."""
        return np.fromiter(sorted(self.items), dtype=np.int64, count=len(self.items))

    def mask(self) -> np.ndarray:
        n = self.box.n_vertices if self.kind == "vertex" else self.box.n_edges
        out = np.zeros(n, dtype=bool)
        out[self.array] = True
        return out

    def _same_kind(self, other: Region) -> None:
        if other.box != self.box or other.kind != self.kind:
            raise ParameterError("set operation between regions of different kind or box")

    def __or__(self, other: Region) -> Region:
        self._same_kind(other)
        return Region(self.box, self.kind, self.items | other.items)

    def __and__(self, other: Region) -> Region:
        self._same_kind(other)
        return Region(self.box, self.kind, self.items & other.items)

    def __sub__(self, other: Region) -> Region:
        self._same_kind(other)
        return Region(self.box, self.kind, self.items - other.items)


def _require(region: Region, kind: str) -> None:
    if region.kind != kind:
        raise ParameterError(f"expected a {kind} region, got a {region.kind} region")


def vertex_boundary(region: Region) -> Region:
    """Vertices of ``region`` with at least one Z^d neighbour outside it.

    Neighbours are taken in Z^d, so a vertex on the face of the box is always a
    boundary vertex of any region containing it.
    """
    _require(region, "vertex")
    box = region.box
    if not region.items:
        return box.vertex_region(())
    idx = region.array
    inside = region.mask()
    coords = box.coords[idx]
    local = coords - np.asarray(box.anchor)
    on_boundary = np.zeros(idx.size, dtype=bool)
    for axis in range(box.dim):
        step = box._strides[axis]
        for sign in (-1, 1):
            nb_local = local[:, axis] + sign
            in_box = (nb_local >= 0) & (nb_local < box.side)
            nb = np.where(in_box, idx + sign * step, 0)
            on_boundary |= ~in_box | ~inside[nb]
    return box.vertex_region(idx[on_boundary])


def edge_boundary(region: Region) -> Region:
    """Edges of the box with exactly one endpoint in ``region``."""
    _require(region, "vertex")
    box = region.box
    inside = region.mask()
    e = box.edges
    crossing = inside[e[:, 0]] != inside[e[:, 1]]
    return box.edge_region(np.flatnonzero(crossing))


def vertices_of(region: Region) -> Region:
    """All endpoints of the edges in an edge region."""
    _require(region, "edge")
    ends = region.box.edges[region.array].ravel()
    return region.box.vertex_region(np.unique(ends))


def edges_within(region: Region) -> Region:
    """Edges with both endpoints in a vertex region."""
    _require(region, "vertex")
    inside = region.mask()
    e = region.box.edges
    return region.box.edge_region(np.flatnonzero(inside[e[:, 0]] & inside[e[:, 1]]))


@dataclass(frozen=True)
class CubeSpec:
    """The cube ``B_m(center)`` with ``side`` vertices per axis.

    For even ``side`` the block is ``center - side/2 + [0, side)^d``, so its
    geometric centre sits at ``center - 1/2`` on every axis.  For odd ``side``
    the cube is centred on ``center`` itself.
    """

    center: Coord
    side: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))
        if self.side < 1:
            raise ParameterError(f"cube side must be >= 1, got {self.side}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def anchor(self) -> Coord:
        return tuple(c - self.side // 2 for c in self.center)

    @property
    def top(self) -> Coord:
        return tuple(a + self.side - 1 for a in self.anchor)

    def contains(self, coord: Sequence[int]) -> bool:
        return all(a <= c <= t for a, c, t in zip(self.anchor, coord, self.top))

    def vertices(self) -> np.ndarray:
        """Absolute coordinates of the cube's vertices in lexicographic order."""
        return LatticeBox(self.dim, self.side, self.anchor).coords

    def fits_in(self, box: LatticeBox) -> bool:
        return box.contains(self.anchor) and box.contains(self.top)

    def region(self, box: LatticeBox) -> Region:
        if len(self.center) != box.dim:
            raise PlacementError(f"cube of dimension {self.dim} in a {box.dim}-dimensional box")
        if not self.fits_in(box):
            raise PlacementError(f"cube {self} does not fit inside {box}")
        return box.vertex_region(box.indices_of(self.vertices()))

    def reflect(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised point reflection of an ``(k, dim)`` coordinate array (no domain check)."""
        pivot = 2 * np.asarray(self.anchor, dtype=np.int64) + (self.side - 1)
        return pivot - np.asarray(coords, dtype=np.int64)


def central_reflection(cube: CubeSpec, item):
    """Point reflection of a vertex or an edge through the centre of ``cube``.

    A vertex is a coordinate tuple; an edge is a pair of coordinate tuples.
    The map is ``x -> 2*anchor + (side - 1) - x`` on every axis.
    """
    item = tuple(item)
    is_edge = len(item) == 2 and all(isinstance(x, (tuple, list, np.ndarray)) for x in item)
    points = [tuple(x) for x in item] if is_edge else [item]
    for p in points:
        if len(p) != cube.dim or not cube.contains(p):
            raise ReflectionDomainError(f"{p} is not inside {cube}")
    images = [tuple(int(c) for c in cube.reflect(np.asarray([p]))[0]) for p in points]
    return (images[0], images[1]) if is_edge else images[0]


def positive_faces(cube: CubeSpec) -> list[np.ndarray]:
    """The ``d`` faces with outward normal ``+e_i``, as coordinate arrays.

    The reflection sends each of them to the opposite (``-e_i``) face, so no
    returned face is the image of another.
    """
    if cube.side < 2:
        raise ParameterError("faces need a cube side of at least 2")
    verts = cube.vertices()
    top = np.asarray(cube.top)
    return [verts[verts[:, i] == top[i]] for i in range(cube.dim)]


def coordinate_parity(v: Sequence[int]) -> Literal["even", "odd"]:
    return "even" if abs(int(sum(v))) % 2 == 0 else "odd"
