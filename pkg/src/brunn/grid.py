"""Array encodings of tree x R^n points for the compiled kernels.

A :class:`Frame` numbers a prefix-closed set of tree vertices.  A
:class:`Grid` is a dense box of cells of pitch ``1/M`` over a subtree of a
frame times a Euclidean bounding box; snapped clouds live on grids as
sorted arrays of flat cell indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .freegroup import Word
from .productspace import ProductPoint
from .treespace import TreePoint

# dense masks larger than this many cells are refused
MAX_GRID_CELLS = 600_000_000


class GridTooLarge(MemoryError):
    pass


class Frame:
    """Prefix closure of a set of words, ordered by (length, word)."""

    def __init__(self, words: Iterable[Word]):
        closure: set[Word] = {()}
        for w in words:
            for i in range(len(w), -1, -1):
                if w[:i] in closure:
                    break
                closure.add(w[:i])
        self.words: list[Word] = sorted(closure, key=lambda w: (len(w), w))
        self.index: dict[Word, int] = {w: i for i, w in enumerate(self.words)}
        nv = len(self.words)
        parent = np.full(nv, -1, np.int64)
        depth = np.zeros(nv, np.int64)
        for i, w in enumerate(self.words[1:], 1):
            parent[i] = self.index[w[:-1]]
            depth[i] = len(w)
        counts = np.bincount(parent[1:], minlength=nv)
        cptr = np.zeros(nv + 1, np.int64)
        np.cumsum(counts, out=cptr[1:])
        # children come out grouped by parent because the order is stable
        cidx = np.argsort(parent[1:], kind="stable").astype(np.int64) + 1
        self.parent = parent
        self.depth = depth
        self.arrays = (parent, depth, cptr, cidx)

    def __len__(self) -> int:
        return len(self.words)

    def encode(self, p: TreePoint) -> tuple[int, Fraction]:
        if p.dir is None:
            return self.index[p.base], Fraction(0)
        return self.index[p.child], p.offset

    def decode(self, v: int, t: Fraction) -> TreePoint:
        w = self.words[v]
        if t == 0:
            return TreePoint(w)
        return TreePoint(w[:-1], w[-1], t)

    def remap_from(self, other: "Frame") -> np.ndarray:
        """Vertex ids of ``other``'s words in this frame."""
        return np.array([self.index[w] for w in other.words], np.int64)


def point_words(points: Iterable[ProductPoint]) -> list[Word]:
    return [p.tree.child for p in points]


def float_arrays(frame: Frame, points: Sequence[ProductPoint], n: int):
    """``(tv, tj, e)`` with unit edges and float coordinates."""
    k = len(points)
    tv = np.empty(k, np.int64)
    tj = np.empty(k, np.float64)
    e = np.empty((k, n), np.float64)
    for i, p in enumerate(points):
        v, t = frame.encode(p.tree)
        tv[i] = v
        tj[i] = float(t)
        e[i] = [float(x) for x in p.euclid]
    return tv, tj, e


def common_units(points: Iterable[ProductPoint], limit: int = 10**6) -> int | None:
    """Least M making every coordinate an integer multiple of 1/M, or None."""
    M = 1
    for p in points:
        for x in (p.tree.offset, *p.euclid):
            M = math.lcm(M, x.denominator)
            if M > limit:
                return None
    return M


def int_arrays(frame: Frame, points: Sequence[ProductPoint], n: int, M: int):
    """Exact integer encoding in units of 1/M; coordinates must be multiples."""
    k = len(points)
    tv = np.empty(k, np.int64)
    tj = np.empty(k, np.int64)
    e = np.empty((k, n), np.int64)
    for i, p in enumerate(points):
        v, t = frame.encode(p.tree)
        tv[i] = v
        x = t * M
        if x.denominator != 1:
            raise ValueError("coordinate not on the unit lattice")
        tj[i] = int(x)
        for c, y in enumerate(p.euclid):
            y = y * M
            if y.denominator != 1:
                raise ValueError("coordinate not on the unit lattice")
            e[i, c] = int(y)
    return tv, tj, e


def snap_units(x: Fraction, M: int) -> int:
    """Nearest multiple of 1/M, halves rounded up."""
    y = x * M + Fraction(1, 2)
    return y.numerator // y.denominator


def make_target(frame: Frame, tv: np.ndarray, tj: np.ndarray, e: np.ndarray):
    """Vertex buckets for nearest-point search; ``tj`` in unit-edge floats."""
    on_edge = tj > 0
    verts = np.concatenate([tv, frame.parent[tv[on_edge]]])
    owners = np.concatenate([np.arange(len(tv), dtype=np.int64), np.flatnonzero(on_edge).astype(np.int64)])
    order = np.argsort(verts, kind="stable")
    bidx = owners[order]
    counts = np.bincount(verts, minlength=len(frame))
    bptr = np.zeros(len(frame) + 1, np.int64)
    np.cumsum(counts, out=bptr[1:])
    return (bptr, bidx, tv.astype(np.int64), tj.astype(np.float64), np.ascontiguousarray(e, np.float64))


def steiner_vertices(frame: Frame, anchors: np.ndarray) -> np.ndarray:
    """Vertex ids of the smallest subtree containing ``anchors``."""
    anchors = np.unique(anchors)
    parent, depth = frame.parent, frame.depth
    top = int(anchors[0])
    for a in anchors[1:]:
        a = int(a)
        while depth[a] > depth[top]:
            a = parent[a]
        while depth[top] > depth[a]:
            top = parent[top]
        while a != top:
            a, top = parent[a], parent[top]
    seen = {top}
    for a in anchors:
        a = int(a)
        while a not in seen:
            seen.add(a)
            a = int(parent[a])
    return np.array(sorted(seen), np.int64)


@dataclass
class Grid:
    """Cells ``(slot * tstride + t) * E + sum(e_c * strides_c)``.

    ``t`` is the offset in units from the parent of the slot's vertex
    (0 = the vertex itself); ``e`` is measured from ``lo``.
    """

    frame: Frame
    M: int
    n: int
    slot: np.ndarray
    slot_vertex: np.ndarray
    tstride: int
    lo: np.ndarray
    ext: np.ndarray
    strides: np.ndarray
    E: int

    @property
    def size(self) -> int:
        return len(self.slot_vertex) * self.tstride * self.E

    @classmethod
    def around(cls, frame: Frame, M: int, tv: np.ndarray, tj: np.ndarray, e: np.ndarray) -> "Grid":
        """Smallest grid holding the hull of the integer-encoded points."""
        anchors = np.concatenate([tv, frame.parent[tv[tj > 0]]])
        verts = steiner_vertices(frame, anchors)
        slot = np.full(len(frame), -1, np.int64)
        slot[verts] = np.arange(len(verts))
        n = e.shape[1]
        lo = e.min(axis=0) if len(e) else np.zeros(n, np.int64)
        hi = e.max(axis=0) if len(e) else np.zeros(n, np.int64)
        ext = (hi - lo + 1).astype(np.int64)
        strides = np.ones(n, np.int64)
        for c in range(n - 2, -1, -1):
            strides[c] = strides[c + 1] * ext[c + 1]
        E = int(np.prod(ext)) if n else 1
        tstride = M if len(verts) > 1 else 1
        grid = cls(frame, M, n, slot, verts, tstride, lo.astype(np.int64), ext, strides, E)
        if grid.size > MAX_GRID_CELLS:
            raise GridTooLarge(f"grid of {grid.size} cells exceeds {MAX_GRID_CELLS}")
        return grid

    def encode(self, tv, tj, e) -> np.ndarray:
        cell = (self.slot[tv] * self.tstride + tj) * self.E
        if self.n:
            cell = cell + ((e - self.lo) * self.strides).sum(axis=1)
        return cell.astype(np.int64)

    def decode(self, cells: np.ndarray):
        tcell, rem = np.divmod(cells, self.E)
        s, tj = np.divmod(tcell, self.tstride)
        tv = self.slot_vertex[s]
        e = np.empty((len(cells), self.n), np.int64)
        for c in range(self.n):
            q, rem = np.divmod(rem, self.strides[c])
            e[:, c] = q + self.lo[c]
        return tv, tj.astype(np.int64), e

    def float_arrays(self, cells: np.ndarray, frame: Frame | None = None):
        tv, tj, e = self.decode(cells)
        if frame is not None and frame is not self.frame:
            tv = frame.remap_from(self.frame)[tv]
        return tv, tj / self.M, e / self.M

    def points(self, cells: np.ndarray) -> list[ProductPoint]:
        tv, tj, e = self.decode(cells)
        M = self.M
        return [
            ProductPoint(self.frame.decode(int(v), Fraction(int(t), M)), tuple(Fraction(int(x), M) for x in row))
            for v, t, row in zip(tv, tj, e)
        ]

    def thin(self, cells: np.ndarray, g: int) -> tuple[np.ndarray, float]:
        """One representative (the smallest index) per block of ``g`` units.

        Returns the representatives and the largest distance from a cell to
        its representative.
        """
        tv, tj, e = self.decode(cells)
        M = self.M
        if g <= M:
            # a vertex sits at the far end of its own slot's edge
            tkey = np.column_stack([self.slot[tv], np.where(tj == 0, M, tj) // g])
            tree_span = (g - 1) / M
        else:
            # blocks of h levels: everything below one ancestor at a multiple of h
            h = -(-g // M)
            depth = self.frame.depth
            anc = tv.copy()
            target = (depth[tv] // h) * h
            for _ in range(h):
                up = depth[anc] > target
                if not up.any():
                    break
                anc[up] = self.frame.parent[anc[up]]
            tkey = anc[:, None]
            tree_span = 2.0 * h
        keys = np.column_stack([tkey, np.floor_divide(e, g)])
        _, first = np.unique(keys, axis=0, return_index=True)
        reps = np.sort(cells[first])
        return reps, math.sqrt(tree_span**2 + self.n * ((g - 1) / M) ** 2)
