"""Exact metric geometry of the regular 2m-valent tree.

Vertices of the tree are reduced words; the edge between ``w`` and ``w*x``
has unit length.  Points on edges are recorded from the shorter endpoint
(the parent, which is also the lexicographically smaller word), so two
canonical points are equal iff their fields are equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .freegroup import Word, common_prefix_length, format_word, multiply, parse_word, word_distance


@dataclass(frozen=True)
class TreePoint:
    base: Word
    dir: int | None = None
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        if self.dir is None:
            if self.offset != 0:
                raise ValueError("vertex points carry offset 0")
            return
        if not 0 < self.offset < 1:
            raise ValueError(f"edge offset {self.offset} not in (0, 1)")
        if self.base and self.base[-1] == -self.dir:
            raise ValueError("edge points must be recorded from the parent endpoint")

    @property
    def is_vertex(self) -> bool:
        return self.dir is None

    @property
    def child(self) -> Word:
        """Far endpoint of the edge; the vertex itself for vertex points."""
        if self.dir is None:
            return self.base
        return self.base + (self.dir,)

    def endpoints(self) -> list[tuple[Word, Fraction]]:
        """Edge endpoints with their distance from this point."""
        if self.dir is None:
            return [(self.base, Fraction(0))]
        return [(self.base, self.offset), (self.child, 1 - self.offset)]

    def sort_key(self) -> tuple:
        return (self.base, self.dir or 0, self.offset)

    def __lt__(self, other: "TreePoint") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return format_tree_point(self)


def vertex(w: Word) -> TreePoint:
    return TreePoint(tuple(w))


def on_edge(u: Word, v: Word, t) -> TreePoint:
    """Canonical point at fraction ``t`` of the way from ``u`` to the
    adjacent vertex ``v``."""
    t = Fraction(t)
    if word_distance(u, v) != 1:
        raise ValueError(f"{format_word(u)} and {format_word(v)} are not adjacent")
    if t == 0:
        return TreePoint(u)
    if t == 1:
        return TreePoint(v)
    if len(v) > len(u):
        return TreePoint(u, v[-1], t)
    return TreePoint(v, u[-1], 1 - t)


def make_point(base: Word, dir: int | None = None, offset=0) -> TreePoint:
    """Canonicalize an arbitrary (base, dir, offset) description."""
    base = tuple(base)
    offset = Fraction(offset)
    if dir is None or offset == 0:
        if offset != 0:
            raise ValueError("offset without a direction")
        return TreePoint(base)
    if not 0 <= offset <= 1:
        raise ValueError(f"offset {offset} not in [0, 1]")
    return on_edge(base, multiply(base, (dir,)), offset)


def tree_distance(p: TreePoint, q: TreePoint) -> Fraction:
    if p.dir is not None and p.base == q.base and p.dir == q.dir:
        return abs(p.offset - q.offset)
    return min(cp + word_distance(x, y) + cq for x, cp in p.endpoints() for y, cq in q.endpoints())


def _vertex_path(x: Word, y: Word) -> list[Word]:
    k = common_prefix_length(x, y)
    up = [x[:i] for i in range(len(x), k - 1, -1)]
    down = [y[:i] for i in range(k + 1, len(y) + 1)]
    return up + down


def _route(p: TreePoint, q: TreePoint):
    """Cheapest (exit cost, vertex path, entry cost) from ``p`` to ``q``."""
    best = None
    for x, cp in p.endpoints():
        for y, cq in q.endpoints():
            c = cp + word_distance(x, y) + cq
            if best is None or c < best[0]:
                best = (c, cp, x, y, cq)
    _, cp, x, y, cq = best
    return cp, _vertex_path(x, y), cq


def tree_geodesic_eval(p: TreePoint, q: TreePoint, s) -> TreePoint:
    """Point at fraction ``s`` of the way along the arc from ``p`` to ``q``."""
    s = Fraction(s)
    if not 0 <= s <= 1:
        raise ValueError(f"parameter {s} not in [0, 1]")
    if s == 0:
        return p
    if s == 1:
        return q
    if p.dir is not None and p.base == q.base and p.dir == q.dir:
        off = p.offset + s * (q.offset - p.offset)
        return make_point(p.base, p.dir, off)
    cp, path, cq = _route(p, q)
    a = s * (cp + len(path) - 1 + cq)
    if a <= cp:
        # still on p's own edge, heading to path[0]
        if p.dir is None:
            return p
        if path[0] == p.base:
            return make_point(p.base, p.dir, p.offset - a)
        return make_point(p.base, p.dir, p.offset + a)
    a -= cp
    if a >= len(path) - 1:
        r = a - (len(path) - 1)
        y = path[-1]
        if r == 0 or q.dir is None:
            return TreePoint(y)
        other = q.child if y == q.base else q.base
        return on_edge(y, other, r)
    idx = int(a)
    r = a - idx
    if r == 0:
        return TreePoint(path[idx])
    return on_edge(path[idx], path[idx + 1], r)


# --- finite hulls --------------------------------------------------------


@dataclass(frozen=True)
class TreeHull:
    """A finite subtree with rational partial-edge ends.

    ``edges`` maps ``(parent, letter)`` to the covered offset interval
    ``(lo, hi)`` measured from the parent; full edges are ``(0, 1)``.  A hull
    that is a single interior point has ``lo == hi``.
    """

    vertices: frozenset[Word]
    edges: dict[tuple[Word, int], tuple[Fraction, Fraction]]

    def full_edges(self) -> list[tuple[Word, Word]]:
        return sorted((u, u + (x,)) for (u, x), (lo, hi) in self.edges.items() if lo == 0 and hi == 1)

    def partial_edges(self) -> list[tuple[Word, int, Fraction, Fraction]]:
        return sorted((u, x, lo, hi) for (u, x), (lo, hi) in self.edges.items() if not (lo == 0 and hi == 1))

    def __contains__(self, p: TreePoint) -> bool:
        if p.dir is None:
            return p.base in self.vertices
        span = self.edges.get((p.base, p.dir))
        return span is not None and span[0] <= p.offset <= span[1]

    def length(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.edges.values()), Fraction(0))

    def sample(self, eps) -> list[TreePoint]:
        """Vertices plus points on every covered edge piece at spacing <= eps."""
        eps = Fraction(eps)
        pts = {TreePoint(v) for v in self.vertices}
        for (u, x), (lo, hi) in self.edges.items():
            n = max(1, -(-(hi - lo) // eps))
            for k in range(n + 1):
                t = lo + (hi - lo) * Fraction(k, n)
                pts.add(make_point(u, x, t))
        return sorted(pts)


def _cover(edges: dict, key: tuple[Word, int], lo: Fraction, hi: Fraction) -> None:
    if lo > hi:
        lo, hi = hi, lo
    cur = edges.get(key)
    if cur is not None:
        lo, hi = min(lo, cur[0]), max(hi, cur[1])
    edges[key] = (lo, hi)


def _edge_key(u: Word, v: Word) -> tuple[tuple[Word, int], bool]:
    """Key of the edge {u, v} and whether u is its parent."""
    if len(v) > len(u):
        return (u, v[-1]), True
    return (v, u[-1]), False


def _add_path(p: TreePoint, q: TreePoint, verts: set, edges: dict) -> None:
    if p.dir is not None and p.base == q.base and p.dir == q.dir:
        _cover(edges, (p.base, p.dir), p.offset, q.offset)
        return
    cp, path, cq = _route(p, q)
    verts.update(path)
    for pt, end in ((p, path[0]), (q, path[-1])):
        if pt.dir is None:
            continue
        if end == pt.base:
            _cover(edges, (pt.base, pt.dir), Fraction(0), pt.offset)
        else:
            _cover(edges, (pt.base, pt.dir), pt.offset, Fraction(1))
    for u, v in zip(path, path[1:]):
        key, _ = _edge_key(u, v)
        edges[key] = (Fraction(0), Fraction(1))


def tree_hull(points: Iterable[TreePoint]) -> TreeHull:
    """Exact convex hull of a finite set of tree points.

    Uses that the hull of a finite set in a tree is the union of the arcs
    from any one of its points to all the others.
    """
    pts = sorted(set(points))
    verts: set[Word] = set()
    edges: dict = {}
    if not pts:
        return TreeHull(frozenset(), {})
    p0 = pts[0]
    if p0.dir is None:
        verts.add(p0.base)
    else:
        _cover(edges, (p0.base, p0.dir), p0.offset, p0.offset)
    for q in pts[1:]:
        _add_path(p0, q, verts, edges)
    return TreeHull(frozenset(verts), edges)


# --- serialization -------------------------------------------------------

_POINT_RE = re.compile(r"^([A-Za-z]*)(?:\+([A-Za-z])@(-?\d+)(?:/(\d+))?)?$")


def format_tree_point(p: TreePoint) -> str:
    """``"ab"`` for a vertex, ``"ab+a@1/2"`` for an edge point."""
    s = format_word(p.base)
    if p.dir is None:
        return s
    return f"{s}+{format_word((p.dir,))}@{p.offset.numerator}/{p.offset.denominator}"


def parse_tree_point(s: str, m: int | None = None) -> TreePoint:
    match = _POINT_RE.match(s.strip())
    if not match:
        raise ValueError(f"cannot parse tree point {s!r}")
    word, g, num, den = match.groups()
    base = parse_word(word, m)
    if g is None:
        return TreePoint(base)
    (letter,) = parse_word(g, m)
    return make_point(base, letter, Fraction(int(num), int(den or 1)))


def iter_ball(m: int, radius: int) -> Iterator[Word]:
    """All reduced words over ``m`` generators of length <= radius."""
    frontier: list[Word] = [()]
    yield ()
    letters = [x for i in range(1, m + 1) for x in (i, -i)]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for x in letters:
                if w and w[-1] == -x:
                    continue
                nxt.append(w + (x,))
        yield from nxt
        frontier = nxt
