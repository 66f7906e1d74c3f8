"""Exact rational convex hulls in R^1, R^2 and R^3.

Hulls of lower affine dimension are computed in a coordinate projection of
their affine span and lifted back; the span itself is recorded as pairs of
opposite inequalities, so membership is always "all facet inequalities hold".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .convexify import MAX_PAIRS, PointCloud, conv_iter, directed_hausdorff, hausdorff
from .productspace import ProductPoint
from .treespace import TreePoint

Vec = tuple[Fraction, ...]


def _vec(p) -> Vec:
    return tuple(Fraction(x) for x in p)


def _sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _cross(a: Vec, b: Vec) -> Vec:
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _primitive(v: Sequence[Fraction]) -> tuple[int, ...]:
    den = 1
    for x in v:
        den = math.lcm(den, Fraction(x).denominator)
    ints = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    return tuple(x // g for x in ints) if g else tuple(ints)


@dataclass(frozen=True)
class RationalPolytope:
    """``vertices`` plus facets ``normal . x <= offset`` with primitive
    integer normals.  For lower-dimensional hulls the affine span appears
    as opposite pairs of inequalities."""

    vertices: tuple[Vec, ...]
    facets: tuple[tuple[tuple[int, ...], Fraction], ...]
    n: int
    affine_dim: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "affine_dim": self.affine_dim,
            "vertices": [[_fmt(x) for x in v] for v in self.vertices],
            "facets": [{"normal": list(a), "offset": _fmt(b)} for a, b in self.facets],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RationalPolytope":
        verts = tuple(tuple(Fraction(x) for x in v) for v in obj["vertices"])
        facets = tuple((tuple(int(a) for a in f["normal"]), Fraction(f["offset"])) for f in obj["facets"])
        return cls(verts, facets, int(obj["n"]), int(obj["affine_dim"]))


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dumps_polytope(P: RationalPolytope) -> str:
    return json.dumps(P.to_json(), separators=(",", ":"))


# --- affine structure ------------------------------------------------------


def _affine_frame(pts: list[Vec]) -> tuple[int, list[int], list[Vec]]:
    """Affine dimension, pivot coordinates, and a basis of the annihilator
    of the direction space."""
    n = len(pts[0])
    rows = [list(_sub(p, pts[0])) for p in pts[1:]]
    pivots: list[int] = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        rows[r] = [x / rows[r][col] for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    ann = []
    for free in (c for c in range(n) if c not in pivots):
        vec = [Fraction(0)] * n
        vec[free] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -rows[i][free]
        ann.append(tuple(vec))
    return len(pivots), pivots, ann


# --- low-dimensional hulls --------------------------------------------------


def _turn(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull2d(pts: Sequence[tuple]) -> list[int]:
    """Indices of the strict convex hull vertices, counter-clockwise."""
    order = sorted(set(range(len(pts))), key=lambda i: pts[i])
    uniq: list[int] = []
    for i in order:
        if not uniq or pts[uniq[-1]] != pts[i]:
            uniq.append(i)
    if len(uniq) <= 2:
        return uniq
    lower: list[int] = []
    for i in uniq:
        while len(lower) >= 2 and _turn(pts[lower[-2]], pts[lower[-1]], pts[i]) <= 0:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(uniq):
        while len(upper) >= 2 and _turn(pts[upper[-2]], pts[upper[-1]], pts[i]) <= 0:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def _facets2d(poly: list[tuple]) -> list[tuple[tuple, Fraction]]:
    out = []
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        # outward normal of a counter-clockwise edge
        normal = (b[1] - a[1], a[0] - b[0])
        out.append((normal, _dot(normal, a)))
    return out


def hull3d(pts: list[Vec]) -> list[tuple[int, int, int]]:
    """Beneath-beyond hull of full-dimensional points; outward triangles."""
    idx = list(range(len(pts)))
    i0 = 0
    i1 = next(i for i in idx if pts[i] != pts[i0])
    d1 = _sub(pts[i1], pts[i0])
    i2 = next(i for i in idx if any(_cross(d1, _sub(pts[i], pts[i0]))))
    nrm = _cross(d1, _sub(pts[i2], pts[i0]))
    i3 = next(i for i in idx if _dot(nrm, _sub(pts[i], pts[i0])) != 0)
    inner = tuple(sum((pts[i][c] for i in (i0, i1, i2, i3)), Fraction(0)) / 4 for c in range(3))

    faces: dict[tuple[int, int, int], tuple[Vec, Fraction]] = {}

    def add(a: int, b: int, c: int) -> None:
        normal = _cross(_sub(pts[b], pts[a]), _sub(pts[c], pts[a]))
        off = _dot(normal, pts[a])
        if _dot(normal, inner) > off:
            a, b = b, a
            normal = tuple(-x for x in normal)
            off = -off
        faces[(a, b, c)] = (normal, off)

    for tri in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
        add(*tri)
    for p in idx:
        if p in (i0, i1, i2, i3):
            continue
        x = pts[p]
        visible = [f for f, (nr, off) in faces.items() if _dot(nr, x) > off]
        if not visible:
            continue
        edges = set()
        for a, b, c in visible:
            edges.update(((a, b), (b, c), (c, a)))
        horizon = [(a, b) for a, b in edges if (b, a) not in edges]
        for f in visible:
            del faces[f]
        for a, b in sorted(horizon):
            normal = _cross(_sub(pts[b], pts[a]), _sub(x, pts[a]))
            faces[(a, b, p)] = (normal, _dot(normal, pts[a]))
    return sorted(faces)


def exact_hull(points: Sequence[Sequence]) -> RationalPolytope:
    """Exact V- and H-representation of conv(points), n <= 3."""
    pts = sorted(set(_vec(p) for p in points))
    if not pts:
        raise ValueError("exact_hull needs at least one point")
    n = len(pts[0])
    if not 1 <= n <= 3:
        raise ValueError(f"exact hulls are supported for n in 1..3, got {n}")
    if any(len(p) != n for p in pts):
        raise ValueError("points of mixed dimension")
    d, pivots, ann = _affine_frame(pts)
    facets: set[tuple[tuple[int, ...], Fraction]] = set()
    for a in ann:
        a = _primitive(a)
        off = _dot(a, pts[0])
        facets.add((a, off))
        facets.add((tuple(-x for x in a), -off))

    def lift(normal_piv: Sequence[Fraction]) -> tuple[int, ...]:
        full = [Fraction(0)] * n
        for c, x in zip(pivots, normal_piv):
            full[c] = Fraction(x)
        return _primitive(full)

    proj = [tuple(p[c] for c in pivots) for p in pts]
    if d == 0:
        verts = [pts[0]]
    elif d == 1:
        lo = min(range(len(pts)), key=lambda i: proj[i])
        hi = max(range(len(pts)), key=lambda i: proj[i])
        verts = [pts[lo], pts[hi]]
        facets.add((lift([-1]), None))
        facets.add((lift([1]), None))
    elif d == 2:
        ring = hull2d(proj)
        verts = [pts[i] for i in ring]
        for normal, _ in _facets2d([proj[i] for i in ring]):
            facets.add((lift(normal), None))
    else:
        tris = hull3d(pts)
        used = sorted({i for t in tris for i in t})
        planes: dict[tuple[int, ...], list[int]] = {}
        for a, b, c in tris:
            normal = _primitive(_cross(_sub(pts[b], pts[a]), _sub(pts[c], pts[a])))
            planes.setdefault(normal, [])
        keep: set[int] = set()
        for normal in planes:
            off = max(_dot(normal, pts[i]) for i in used)
            on = [i for i in used if _dot(normal, pts[i]) == off]
            drop = max(range(3), key=lambda c: abs(normal[c]))
            flat = [tuple(pts[i][c] for c in range(3) if c != drop) for i in on]
            keep.update(on[j] for j in hull2d(flat))
            facets.add((normal, None))
        verts = [pts[i] for i in sorted(keep)]
    resolved = set()
    for normal, off in facets:
        if off is None:
            off = max(_dot(normal, v) for v in verts)
        resolved.add((normal, off))
    return RationalPolytope(tuple(sorted(verts)), tuple(sorted(resolved)), n, d)


def contains(P: RationalPolytope, x: Sequence) -> bool:
    x = _vec(x)
    if len(x) != P.n:
        raise ValueError(f"dimension mismatch: {len(x)} vs {P.n}")
    return all(_dot(a, x) <= b for a, b in P.facets)


# --- Caratheodory ------------------------------------------------------------


def _solve(cols: list[Vec], rhs: Vec) -> list[Fraction] | None:
    """Solve sum_j w_j cols[j] = rhs for square systems; None if singular."""
    k = len(cols)
    A = [[cols[j][i] for j in range(k)] + [rhs[i]] for i in range(k)]
    for c in range(k):
        piv = next((r for r in range(c, k) if A[r][c] != 0), None)
        if piv is None:
            return None
        A[c], A[piv] = A[piv], A[c]
        for r in range(k):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return [A[i][k] / A[i][i] for i in range(k)]


def _barycentric(simplex: list[Vec], x: Vec) -> list[Fraction] | None:
    base = simplex[0]
    cols = [_sub(v, base) for v in simplex[1:]]
    w = _solve(cols, _sub(x, base))
    if w is None:
        return None
    return [1 - sum(w, Fraction(0))] + w


def _simplices(P: RationalPolytope, pivots: list[int]) -> list[list[Vec]]:
    verts = list(P.vertices)
    d = P.affine_dim
    if d == 0:
        return [[verts[0]]]
    proj = [tuple(v[c] for c in pivots) for v in verts]
    if d == 1:
        return [[verts[0], verts[1]]]
    if d == 2:
        ring = hull2d(proj)
        return [[verts[ring[0]], verts[ring[i]], verts[ring[i + 1]]] for i in range(1, len(ring) - 1)]
    v0 = verts[0]
    out = []
    for normal, off in P.facets:
        if _dot(normal, v0) == off:
            continue
        on = [v for v in verts if _dot(normal, v) == off]
        drop = max(range(3), key=lambda c: abs(normal[c]))
        ring = hull2d([tuple(v[c] for c in range(3) if c != drop) for v in on])
        for i in range(1, len(ring) - 1):
            out.append([v0, on[ring[0]], on[ring[i]], on[ring[i + 1]]])
    return out


def caratheodory_decompose(points: Sequence[Sequence], x: Sequence) -> list[tuple[Vec, Fraction]]:
    """At most n+1 input points with nonnegative rational weights summing
    to 1 whose combination is exactly ``x``."""
    pts = [_vec(p) for p in points]
    x = _vec(x)
    if x in pts:
        return [(x, Fraction(1))]
    P = exact_hull(pts)
    if not contains(P, x):
        raise ValueError("point is outside the hull")
    _, pivots, _ = _affine_frame(sorted(set(pts)))
    for simplex in _simplices(P, pivots):
        proj = [tuple(v[c] for c in pivots) for v in simplex]
        w = _barycentric(proj, tuple(x[c] for c in pivots))
        if w is not None and all(t >= 0 for t in w):
            return [(v, t) for v, t in zip(simplex, w) if t != 0]
    raise AssertionError("no simplex of the triangulation contains the point")


# --- sampling and the Brunn bound in R^n ---------------------------------------


def _segment(a: Vec, b: Vec, eps: Fraction) -> list[Vec]:
    d2 = sum(((x - y) ** 2 for x, y in zip(a, b)), Fraction(0))
    k = max(1, math.ceil(math.sqrt(d2) / eps))
    return [tuple(x + (y - x) * Fraction(i, k) for x, y in zip(a, b)) for i in range(k + 1)]


def _triangle(a: Vec, b: Vec, c: Vec, eps: Fraction) -> list[Vec]:
    side = max(math.sqrt(sum(((x - y) ** 2 for x, y in zip(u, v)), Fraction(0))) for u, v in ((a, b), (b, c), (a, c)))
    k = max(1, math.ceil(side / eps))
    out = []
    for i in range(k + 1):
        for j in range(k + 1 - i):
            out.append(tuple(a[t] + (b[t] - a[t]) * Fraction(i, k) + (c[t] - a[t]) * Fraction(j, k) for t in range(len(a))))
    return out


def hull_sample(P: RationalPolytope, eps) -> list[Vec]:
    """eps-dense exact sample of the polytope: an interior lattice of pitch
    eps plus vertices, edge samples and (in R^3) facet samples."""
    eps = Fraction(eps)
    n = P.n
    out: set[Vec] = set(P.vertices)
    lo = [min(v[c] for v in P.vertices) for c in range(n)]
    hi = [max(v[c] for v in P.vertices) for c in range(n)]
    ranges = [range(math.floor(lo[c] / eps), math.ceil(hi[c] / eps) + 1) for c in range(n)]
    grid = np.array(np.meshgrid(*[np.array(r, dtype=np.int64) for r in ranges], indexing="ij")).reshape(n, -1).T
    ok = np.ones(len(grid), bool)
    kmax = max((max(abs(r.start), abs(r.stop)) for r in ranges), default=0)
    for normal, off in P.facets:
        # normal . (k eps) <= off  <=>  normal . k * p * off_den <= off_num * q
        scale = eps.numerator * off.denominator
        bound = n * kmax * max(map(abs, normal)) * scale + abs(off.numerator * eps.denominator)
        if bound < 2**62:
            lhs = (grid @ np.array(normal, dtype=np.int64)) * scale
        else:
            lhs = (grid.astype(object) @ np.array(normal, dtype=object)) * scale
        ok &= lhs <= off.numerator * eps.denominator
    for row in grid[ok]:
        out.add(tuple(Fraction(int(k)) * eps for k in row))
    if P.affine_dim >= 1:
        faces = _boundary_faces(P)
        for a, b in faces["edges"]:
            out.update(_segment(a, b, eps))
        for a, b, c in faces["triangles"]:
            out.update(_triangle(a, b, c, eps))
    return sorted(out)


def _boundary_faces(P: RationalPolytope) -> dict:
    verts = list(P.vertices)
    edges, tris = set(), []
    d = P.affine_dim
    if d == 1:
        edges.add((verts[0], verts[1]))
        return {"edges": edges, "triangles": tris}
    _, pivots, _ = _affine_frame(verts)
    if d == 2:
        ring = hull2d([tuple(v[c] for c in pivots) for v in verts])
        k = len(ring)
        for i in range(k):
            edges.add((verts[ring[i]], verts[ring[(i + 1) % k]]))
        if P.n == 3:
            for i in range(1, k - 1):
                tris.append((verts[ring[0]], verts[ring[i]], verts[ring[i + 1]]))
        return {"edges": edges, "triangles": tris}
    for normal, off in P.facets:
        on = [v for v in verts if _dot(normal, v) == off]
        drop = max(range(3), key=lambda c: abs(normal[c]))
        ring = hull2d([tuple(v[c] for c in range(3) if c != drop) for v in on])
        k = len(ring)
        for i in range(k):
            a, b = on[ring[i]], on[ring[(i + 1) % k]]
            edges.add((min(a, b), max(a, b)))
        for i in range(1, k - 1):
            tris.append((on[ring[0]], on[ring[i]], on[ring[i + 1]]))
    return {"edges": edges, "triangles": tris}


def euclid_cloud(points: Sequence[Sequence], generation: int = 0) -> PointCloud:
    """Points of R^n as a cloud over the root vertex of the tree factor."""
    root = TreePoint(())
    return PointCloud([ProductPoint(root, _vec(p)) for p in points], generation=generation)


@dataclass
class BrunnReport:
    n: int
    affine_dim: int
    epsilon: Fraction
    hausdorff: float
    bound: float
    ok: bool
    witness: Vec | None
    witness_margin: float
    cloud_size: int
    sample_size: int
    error_budget: float
    vertices: list[Vec] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "affine_dim": self.affine_dim,
            "epsilon": _fmt(self.epsilon),
            "hausdorff": self.hausdorff,
            "bound": self.bound,
            "ok": self.ok,
            "witness": None if self.witness is None else [_fmt(x) for x in self.witness],
            "witness_margin": self.witness_margin,
            "cloud_size": self.cloud_size,
            "sample_size": self.sample_size,
            "error_budget": self.error_budget,
            "vertices": [[_fmt(x) for x in v] for v in self.vertices],
        }


def brunn_verify_rn(points: Sequence[Sequence], eps, cap: int = 10**7, max_pairs: int = MAX_PAIRS) -> BrunnReport:
    """Compare conv^n of the points with their exact hull, and look for a hull
    point that the (n-1)-st stage misses by more than 3 eps."""
    eps = Fraction(eps)
    pts = [_vec(p) for p in points]
    n = len(pts[0])
    if n not in (2, 3):
        raise ValueError("brunn_verify_rn supports n = 2 or 3")
    P = exact_hull(pts)
    seed = euclid_cloud(pts)
    prev = conv_iter(seed, n - 1, eps, cap, max_pairs=max_pairs)
    full = conv_iter(prev, 1, eps, cap, max_pairs=max_pairs)
    sample = hull_sample(P, eps)
    sample_cloud = euclid_cloud(sample)
    h = hausdorff(full, sample_cloud)
    centroid = tuple(sum((v[c] for v in P.vertices), Fraction(0)) / len(P.vertices) for c in range(n))
    candidates = euclid_cloud([centroid] + sample)
    margin, idx = directed_hausdorff(candidates, prev)
    witness = candidates.points[idx].euclid if margin > 3 * float(eps) else None
    return BrunnReport(
        n=n,
        affine_dim=P.affine_dim,
        epsilon=eps,
        hausdorff=h,
        bound=3 * float(eps),
        ok=h <= 3 * float(eps),
        witness=witness,
        witness_margin=margin,
        cloud_size=len(full),
        sample_size=len(sample),
        error_budget=full.error_budget,
        vertices=list(P.vertices),
    )
