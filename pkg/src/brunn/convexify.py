"""Sampled sequential convexification in T_{2m} x R^n.

conv^1 of a finite cloud is approximated by sampling every pairwise geodesic
at the exact fractions k/N, N = ceil(d/eps).  While the number of raw samples
stays small this is done with exact rationals.  Larger clouds are snapped to
a grid of pitch 1/ceil(4/eps) and handled by the compiled kernels; from then
on the cloud stays on that grid and every further point is a rounded sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .grid import Frame, Grid, common_units, float_arrays, int_arrays, make_target, point_words, snap_units
from .productspace import ProductPoint, distance_sq, geodesic_eval

EXACT_LIMIT = 10_000
MAX_PAIRS = 20_000_000


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class GridCells:
    grid: Grid
    cells: np.ndarray


@dataclass
class PointCloud:
    """A finite point set with its convexification metadata.

    Either ``points`` is given directly, or ``backing`` holds sorted grid
    cells and the points are produced on first access.  ``error_budget``
    bounds how far snapping and thinning may have moved the cloud away from
    the exact sample.
    """

    _points: list[ProductPoint] | None = None
    generation: int = 0
    epsilon: Fraction | None = None
    n: int = 0
    m: int = 0
    backing: GridCells | None = None
    error_budget: float = 0.0
    thinned: bool = False

    def __post_init__(self):
        if self._points is not None:
            pts = sorted(set(self._points))
            self._points = pts
            if pts:
                self.n = pts[0].n
                if any(p.n != self.n for p in pts):
                    raise ValueError("mixed dimensions in cloud")
                self.m = max(self.m, _rank_of(pts))

    @property
    def points(self) -> list[ProductPoint]:
        if self._points is None:
            self._points = self.backing.grid.points(self.backing.cells)
        return self._points

    @property
    def snapped(self) -> bool:
        return self.backing is not None

    def __len__(self) -> int:
        if self._points is None:
            return len(self.backing.cells)
        return len(self._points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p: ProductPoint) -> bool:
        return p in self.point_set()

    def point_set(self) -> set[ProductPoint]:
        return set(self.points)


def _rank_of(points: Iterable[ProductPoint]) -> int:
    m = 0
    for p in points:
        for x in p.tree.child:
            m = max(m, abs(x))
    return m


def cloud(points: Iterable[ProductPoint], epsilon=None, generation: int = 0, m: int = 0) -> PointCloud:
    eps = None if epsilon is None else Fraction(epsilon)
    return PointCloud(list(points), generation=generation, epsilon=eps, m=m)


def n_samples(d2: Fraction, eps: Fraction) -> int:
    """ceil(sqrt(d2) / eps), computed exactly."""
    r = d2 / (eps * eps)
    n = max(1, math.isqrt(r.numerator // r.denominator))
    while n * n < r:
        n += 1
    while n > 1 and (n - 1) * (n - 1) >= r:
        n -= 1
    return n


def conv1_sample(c: PointCloud, eps) -> PointCloud:
    """Exact conv^1 sample: every pair's geodesic at fractions k/N."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    pts = c.points
    out = set(pts)
    for a in range(len(pts)):
        p = pts[a]
        for b in range(a + 1, len(pts)):
            q = pts[b]
            N = n_samples(distance_sq(p, q), eps)
            for k in range(1, N):
                out.add(geodesic_eval(p, q, Fraction(k, N)))
    return PointCloud(list(out), generation=c.generation + 1, epsilon=eps, m=c.m, error_budget=c.error_budget)


def _raw_count(pts: Sequence[ProductPoint], eps: Fraction, limit: int) -> int | None:
    k = len(pts)
    if k * (k - 1) // 2 > limit:
        return None
    total = k
    for a in range(k):
        for b in range(a + 1, k):
            total += n_samples(distance_sq(pts[a], pts[b]), eps) - 1
            if total > limit:
                return None
    return total


def grid_units(eps: Fraction) -> int:
    return math.ceil(4 / eps)


def _snap_error(M: int, n: int) -> float:
    return math.sqrt(1 + n) / (2 * M)


def snap(c: PointCloud, eps) -> PointCloud:
    """Move every point to the nearest cell of pitch 1/ceil(4/eps)."""
    if c.backing is not None:
        return c
    eps = Fraction(eps)
    M = grid_units(eps)
    pts = c.points
    frame = Frame(point_words(pts))
    k = len(pts)
    tv = np.empty(k, np.int64)
    tj = np.empty(k, np.int64)
    e = np.empty((k, c.n), np.int64)
    for i, p in enumerate(pts):
        v, t = frame.encode(p.tree)
        u = snap_units(t, M)
        if u == M:
            u = 0
        elif u == 0 and t > 0:
            v = int(frame.parent[v])
        tv[i], tj[i] = v, u
        e[i] = [snap_units(x, M) for x in p.euclid]
    grid = Grid.around(frame, M, tv, tj, e)
    cells = np.unique(grid.encode(tv, tj, e))
    return PointCloud(
        None,
        generation=c.generation,
        epsilon=eps,
        n=c.n,
        m=c.m,
        backing=GridCells(grid, cells),
        error_budget=c.error_budget + _snap_error(M, c.n),
        thinned=c.thinned,
    )


def net(c: PointCloud, max_pairs: int) -> tuple[np.ndarray, float]:
    """Grid cells of a snapped cloud, thinned until the pair count fits."""
    grid, cells = c.backing.grid, c.backing.cells
    g = 1
    reps, err = cells, 0.0
    while len(reps) * (len(reps) - 1) // 2 > max_pairs:
        g = g + 1 if g < 8 else g + g // 4
        reps, err = grid.thin(cells, g)
    return reps, err


def _grid_step(c: PointCloud, eps: Fraction, max_pairs: int) -> PointCloud:
    grid, cells = c.backing.grid, c.backing.cells
    reps, thin_err = net(c, max_pairs)
    tv, tj, e = grid.decode(reps)
    mask = np.zeros(grid.size, np.uint8)
    mask[cells] = 1
    added = K.mark_pairs(
        tv, tj, e, grid.M, eps.numerator, eps.denominator, grid.frame.arrays,
        grid.slot, grid.tstride, grid.lo, grid.ext, grid.strides, grid.E, mask,
    )
    if added < 0:
        raise RuntimeError("sample left the grid region")
    new_cells = np.flatnonzero(mask).astype(np.int64)
    return PointCloud(
        None,
        generation=c.generation + 1,
        epsilon=eps,
        n=c.n,
        m=c.m,
        backing=GridCells(grid, new_cells),
        error_budget=c.error_budget + thin_err + _snap_error(grid.M, c.n),
        thinned=c.thinned or thin_err > 0,
    )


def conv_step(c: PointCloud, eps, cap: int, exact_limit: int = EXACT_LIMIT, max_pairs: int = MAX_PAIRS) -> PointCloud:
    """One conv^1 application with the size policy of :func:`conv_iter`."""
    eps = Fraction(eps)
    if c.backing is None:
        if _raw_count(c.points, eps, exact_limit) is not None:
            out = conv1_sample(c, eps)
            if len(out) > cap:
                out = snap(out, eps)
        else:
            out = _grid_step(snap(c, eps), eps, max_pairs)
    else:
        out = _grid_step(c, eps, max_pairs)
    if len(out) > cap:
        raise CapExceeded(f"conv^{out.generation} has {len(out)} cells after snapping; cap is {cap}")
    return out


def conv_iter(
    seed: PointCloud,
    i: int,
    eps,
    cap: int = 10**7,
    exact_limit: int = EXACT_LIMIT,
    max_pairs: int = MAX_PAIRS,
) -> PointCloud:
    """conv^i of ``seed`` by repeated sampling.

    Exact rational sampling is used while a step's raw sample count is at
    most ``min(cap, exact_limit)``; otherwise the cloud is snapped to the
    grid.  A snapped step whose pair count exceeds ``max_pairs`` samples the
    pairs of a coarser net of the cloud; the cloud still only gains points,
    and ``error_budget`` records the extra distance.
    """
    if i < 0:
        raise ValueError("iteration count must be nonnegative")
    if cap < len(seed):
        raise ValueError("cap is smaller than the seed")
    out = seed
    for _ in range(i):
        out = conv_step(out, eps, cap, exact_limit, max_pairs)
    if i == 0:
        return seed
    return out


# --- distances -----------------------------------------------------------


def _frame_for(*clouds: PointCloud) -> Frame:
    words: list = []
    for c in clouds:
        if c.backing is not None:
            words.extend(c.backing.grid.frame.words)
        else:
            words.extend(point_words(c.points))
    return Frame(words)


def _float_arrays(c: PointCloud, frame: Frame):
    if c.backing is not None:
        return c.backing.grid.float_arrays(c.backing.cells, frame)
    return float_arrays(frame, c.points, c.n)


def directed_hausdorff(A: PointCloud, B: PointCloud, frame: Frame | None = None) -> tuple[float, int]:
    """``max_a min_b d(a, b)`` and the index in ``A`` attaining it."""
    if not len(A) or not len(B):
        raise ValueError("hausdorff distance of an empty cloud")
    if A.n != B.n:
        raise ValueError("dimension mismatch")
    frame = frame or _frame_for(A, B)
    target = make_target(frame, *_float_arrays(B, frame))
    tv, tj, e = _float_arrays(A, frame)
    best, arg = K.directed_max(tv, tj, e, frame.arrays, target, 0.0)
    return float(best), int(max(arg, 0))


def hausdorff(A: PointCloud, B: PointCloud) -> float:
    frame = _frame_for(A, B)
    return max(directed_hausdorff(A, B, frame)[0], directed_hausdorff(B, A, frame)[0])


def distances_to(A: PointCloud, B: PointCloud) -> np.ndarray:
    """Distance from each point of ``A`` (in cell or point order) to ``B``."""
    frame = _frame_for(A, B)
    target = make_target(frame, *_float_arrays(B, frame))
    return K.point_dists(*_float_arrays(A, frame), frame.arrays, target)


@dataclass
class SampleWitness:
    """Where the largest sampled distance to a target set was attained."""

    value: float
    pair: tuple[ProductPoint, ProductPoint] | None = None
    fraction: Fraction | None = None

    @property
    def point(self) -> ProductPoint | None:
        if self.pair is None:
            return None
        return geodesic_eval(self.pair[0], self.pair[1], self.fraction)


def _pair_arrays(c: PointCloud, frame: Frame, max_pairs: int | None):
    """Integer encoding of the pair sources, thinning snapped clouds if asked."""
    if c.backing is not None:
        grid = c.backing.grid
        reps, err = net(c, max_pairs) if max_pairs else (c.backing.cells, 0.0)
        tv, tj, e = grid.decode(reps)
        if frame is not grid.frame:
            tv = frame.remap_from(grid.frame)[tv]
        return tv, tj, e, grid.M, err, grid.points(reps)
    M = common_units(c.points)
    if M is None:
        return None
    tv, tj, e = int_arrays(frame, c.points, c.n, M)
    return tv, tj, e, M, 0.0, c.points


def max_sample_distance(
    sources: PointCloud,
    target: PointCloud,
    eps,
    max_pairs: int | None = None,
) -> tuple[SampleWitness, float]:
    """Max over conv1_sample(sources, eps) of the distance to ``target``.

    The sample cloud is never built.  Returns the witness and the thinning
    error (0 unless ``max_pairs`` forced a net of a snapped cloud).
    """
    eps = Fraction(eps)
    frame = _frame_for(sources, target)
    tgt = make_target(frame, *_float_arrays(target, frame))
    enc = _pair_arrays(sources, frame, max_pairs)
    if enc is None:
        return _max_sample_distance_exact(sources, target, eps), 0.0
    tv, tj, e, M, err, pts = enc
    ftv, ftj, fe = tv, tj / M, e / M
    r0 = K.point_dists(ftv, ftj, fe, frame.arrays, tgt)
    floor = float(r0.max()) if len(r0) else 0.0
    start = int(np.argmax(r0)) if len(r0) else -1
    best, i, j, k, N = K.max_pair_dist(tv, tj, e, r0, M, eps.numerator, eps.denominator, frame.arrays, tgt, floor)
    if i < 0:
        if start < 0:
            return SampleWitness(0.0), err
        p = pts[start]
        return SampleWitness(float(best), (p, p), Fraction(0)), err
    return SampleWitness(float(best), (pts[i], pts[j]), Fraction(int(k), int(N))), err


def _max_sample_distance_exact(sources: PointCloud, target: PointCloud, eps: Fraction) -> SampleWitness:
    # fallback for clouds whose coordinates share no small denominator
    samples = conv1_sample(sources, eps)
    d, idx = directed_hausdorff(samples, target)
    p = samples.points[idx]
    return SampleWitness(d, (p, p), Fraction(0))


def nu_estimate(Y: PointCloud, eps) -> float:
    """Sampled least nu with conv^1(Y) inside the nu-neighbourhood of Y."""
    return nu_witness(Y, eps).value


def nu_witness(Y: PointCloud, eps) -> SampleWitness:
    if len(Y) < 2:
        raise ValueError("nu_estimate needs at least two points")
    return max_sample_distance(Y, Y, eps)[0]


@dataclass
class GrowthReport:
    ok: bool
    i: int
    nu: float
    epsilon: Fraction
    bound: float
    max_distance: float
    excess: float
    worst: ProductPoint | None
    cloud_size: int
    error_budget: float
    meta: dict = field(default_factory=dict)


def growth_check(Y: PointCloud, i: int, nu: float, eps, cap: int = 10**7, max_pairs: int = MAX_PAIRS) -> GrowthReport:
    """Check conv^i(Y) within i*nu + i*eps of Y on the sampled cloud."""
    eps = Fraction(eps)
    c = conv_iter(Y, i, eps, cap, max_pairs=max_pairs)
    bound = i * nu + i * float(eps)
    d, idx = directed_hausdorff(c, Y)
    worst = None
    if c.backing is not None:
        worst = c.backing.grid.points(c.backing.cells[idx : idx + 1])[0]
    else:
        worst = c.points[idx]
    return GrowthReport(
        ok=d <= bound,
        i=i,
        nu=nu,
        epsilon=eps,
        bound=bound,
        max_distance=d,
        excess=d - bound,
        worst=worst,
        cloud_size=len(c),
        error_budget=c.error_budget,
    )


# --- persistence ---------------------------------------------------------


def _fmt(x: Fraction | None) -> str | None:
    if x is None:
        return None
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dump_cloud(c: PointCloud, fh) -> None:
    header = {"n": c.n, "m": c.m, "epsilon": _fmt(c.epsilon), "generation": c.generation}
    fh.write(json.dumps(header, separators=(",", ":")) + "\n")
    for p in c.points:
        fh.write(json.dumps(p.to_json(), separators=(",", ":")) + "\n")


def load_cloud(fh) -> PointCloud:
    lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ValueError("empty cloud file")
    header = json.loads(lines[0])
    m = int(header.get("m", 0)) or None
    pts = [ProductPoint.from_json(json.loads(ln), m) for ln in lines[1:]]
    eps = header.get("epsilon")
    c = PointCloud(
        pts,
        generation=int(header.get("generation", 0)),
        epsilon=None if eps is None else Fraction(eps),
        m=int(header.get("m", 0)),
    )
    n = int(header.get("n", c.n))
    if pts and c.n != n:
        raise ValueError(f"header says n={n} but points have n={c.n}")
    c.n = n
    return c
