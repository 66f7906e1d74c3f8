"""Finitely generated subgroups of F_m x Z^n acting on T_{2m} x R^n.

Everything here is a bounded search: results hold for products of at most
``L`` generators and say "no witness at L" rather than "false".
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import freegroup as fg
from .convexify import (
    MAX_PAIRS,
    PointCloud,
    SampleWitness,
    conv_iter,
    directed_hausdorff,
    max_sample_distance,
)
from .productspace import GroupElement, ProductPoint, apply, basepoint, identity
from .treespace import tree_hull

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

GenWord = tuple[int, ...]  # signed 1-based generator indices

# pairs sampled by the on-the-fly last step of cocompactness_radius
FINAL_PAIRS = 4_000_000


@dataclass(frozen=True)
class SubgroupGens:
    gens: tuple[GroupElement, ...]
    m: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "gens", tuple(self.gens))
        if not self.gens:
            raise ValueError("gens: at least one generator is required")
        for i, g in enumerate(self.gens):
            if len(g.trans) != self.n:
                raise ValueError(f"gens[{i}].trans: expected {self.n} entries, got {len(g.trans)}")
            if any(abs(x) > self.m for x in g.free):
                raise ValueError(f"gens[{i}].word: letter outside F_{self.m}")

    def evaluate(self, word: GenWord) -> GroupElement:
        out = identity(self.n)
        for x in word:
            g = self.gens[abs(x) - 1]
            out = out * (g if x > 0 else g.inverse())
        return out

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "gens": [{"word": fg.format_word(g.free), "trans": list(g.trans)} for g in self.gens],
        }


def subgroup(m: int, n: int, gens: Sequence[tuple[str | Sequence[int], Sequence[int]]]) -> SubgroupGens:
    """``subgroup(2, 1, [("a", [0]), ("b", [1])])``."""
    out = []
    for word, trans in gens:
        w = fg.parse_word(word, m) if isinstance(word, str) else fg.reduce(word, m)
        out.append(GroupElement(w, tuple(trans)))
    return SubgroupGens(tuple(out), m, n)


def subgroup_from_dict(obj: dict) -> SubgroupGens:
    for key in ("m", "n", "gens"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    try:
        m, n = int(obj["m"]), int(obj["n"])
    except (TypeError, ValueError):
        raise ValueError("fields 'm' and 'n' must be integers") from None
    if not isinstance(obj["gens"], list):
        raise ValueError("field 'gens' must be a list")
    gens = []
    for i, g in enumerate(obj["gens"]):
        if not isinstance(g, dict) or "word" not in g:
            raise ValueError(f"gens[{i}].word is missing")
        try:
            w = fg.parse_word(str(g["word"]), m)
        except ValueError as exc:
            raise ValueError(f"gens[{i}].word: {exc}") from None
        trans = g.get("trans", [0] * n)
        if not isinstance(trans, list) or not all(isinstance(x, int) for x in trans):
            raise ValueError(f"gens[{i}].trans must be a list of integers")
        gens.append(GroupElement(w, tuple(trans)))
    return SubgroupGens(tuple(gens), m, n)


def load_subgroup(path: str | Path) -> SubgroupGens:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        obj = tomllib.loads(text)
    else:
        obj = json.loads(text)
    return subgroup_from_dict(obj)


# --- enumeration -----------------------------------------------------------


@dataclass
class Ball:
    """Elements of H reachable by at most ``L`` generators, in BFS order."""

    elements: list[GroupElement]
    words: list[GenWord]
    L: int


def element_ball(H: SubgroupGens, L: int) -> Ball:
    if L < 0:
        raise ValueError("L must be nonnegative")
    letters = [i for k in range(1, len(H.gens) + 1) for i in (k, -k)]
    steps = {x: (H.gens[abs(x) - 1] if x > 0 else H.gens[abs(x) - 1].inverse()) for x in letters}
    e = identity(H.n)
    seen = {e: ()}
    elements, words = [e], [()]
    frontier = [e]
    for _ in range(L):
        nxt = []
        for h in frontier:
            w = seen[h]
            for x in letters:
                g = h * steps[x]
                if g not in seen:
                    seen[g] = w + (x,)
                    elements.append(g)
                    words.append(w + (x,))
                    nxt.append(g)
        frontier = nxt
    return Ball(elements, words, L)


@dataclass
class OrbitBall:
    cloud: PointCloud
    labels: dict[ProductPoint, GroupElement]
    words: dict[ProductPoint, GenWord]


def orbit_ball(H: SubgroupGens, x0: ProductPoint | None = None, L: int = 1) -> OrbitBall:
    """Points h.x0 for h a product of at most L generators and inverses."""
    x0 = x0 or basepoint(H.n)
    ball = element_ball(H, L)
    labels, words = {}, {}
    for g, w in zip(ball.elements, ball.words):
        p = apply(g, x0)
        labels.setdefault(p, g)
        words.setdefault(p, w)
    c = PointCloud(list(labels), m=H.m)
    c.n = H.n
    return OrbitBall(c, labels, words)


# --- integer lattices --------------------------------------------------------


def echelon(vectors: Sequence[Sequence[int]]) -> list[list[int]]:
    """Integer row echelon basis (Hermite-style) of the lattice spanned."""
    rows = [list(v) for v in vectors if any(v)]
    if not rows:
        return []
    n = len(rows[0])
    basis: list[list[int]] = []
    col = 0
    while rows and col < n:
        nz = [r for r in rows if r[col] != 0]
        rest = [r for r in rows if r[col] == 0]
        if not nz:
            col += 1
            continue
        # Euclid on the pivot column
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            new = [piv]
            for r in nz[1:]:
                q = r[col] // piv[col]
                r = [a - q * b for a, b in zip(r, piv)]
                (new if r[col] != 0 else rest).append(r)
            nz = new
        piv = nz[0]
        if piv[col] < 0:
            piv = [-a for a in piv]
        basis.append(piv)
        rows = [r for r in rest if any(r)]
        col += 1
    return basis


def in_lattice(basis: list[list[int]], v: Sequence[int]) -> bool:
    v = list(v)
    for row in basis:
        col = next(i for i, a in enumerate(row) if a)
        if v[col] % row[col]:
            return False
        q = v[col] // row[col]
        v = [a - q * b for a, b in zip(v, row)]
    return not any(v)


def rational_rank(vectors: Sequence[Sequence]) -> int:
    rows = [[Fraction(x) for x in v] for v in vectors]
    rank = 0
    ncol = len(rows[0]) if rows else 0
    for col in range(ncol):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


@dataclass
class VSubspace:
    """Real span of the recovered translations."""

    basis: list[tuple[Fraction, ...]]
    n: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    def complement(self) -> list[list[int]]:
        """Integer rows spanning the annihilator of V."""
        n = self.n
        if not self.basis:
            return [[int(i == j) for j in range(n)] for i in range(n)]
        # reduced row echelon form, then read the null space
        rows = [list(v) for v in self.basis]
        pivots = []
        r = 0
        for col in range(n):
            piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
            if piv is None:
                continue
            rows[r], rows[piv] = rows[piv], rows[r]
            rows[r] = [a / rows[r][col] for a in rows[r]]
            for i in range(len(rows)):
                if i != r and rows[i][col] != 0:
                    f = rows[i][col]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
            pivots.append(col)
            r += 1
        out = []
        for free in (c for c in range(n) if c not in pivots):
            vec = [Fraction(0)] * n
            vec[free] = Fraction(1)
            for i, pc in enumerate(pivots):
                vec[pc] = -rows[i][free]
            den = 1
            for x in vec:
                den = den * x.denominator // np.gcd(den, x.denominator)
            out.append([int(x * den) for x in vec])
        return out

    def contains(self, v: Sequence) -> bool:
        return all(sum(Fraction(a) * b for a, b in zip(v, row)) == 0 for row in self.complement())


def span_of(vectors: Sequence[Sequence[int]], n: int) -> VSubspace:
    basis: list[tuple[Fraction, ...]] = []
    for v in vectors:
        cand = basis + [tuple(Fraction(x) for x in v)]
        if rational_rank(cand) > len(basis):
            basis = cand
    return VSubspace(basis, n)


# --- pure translation searches ---------------------------------------------


@dataclass(frozen=True)
class TranslationWitness:
    """A pure translation ``(1, trans)`` in H; ``index``/``k`` are set when
    ``trans = k * z_index`` for a generator's translation part."""

    index: int | None
    k: int | None
    trans: tuple[int, ...]
    word: GenWord

    def to_json(self) -> dict:
        return {"index": self.index, "k": self.k, "trans": list(self.trans), "word": format_genword(self.word)}


def format_genword(w: GenWord) -> str:
    return " ".join(f"g{x}" if x > 0 else f"g{-x}^-1" for x in w) or "1"


def _multiple_of(t: tuple[int, ...], z: tuple[int, ...]) -> int | None:
    if not any(z):
        return None
    k = None
    for a, b in zip(t, z):
        if b == 0:
            if a != 0:
                return None
            continue
        if a % b:
            return None
        q = a // b
        if k is None:
            k = q
        elif k != q:
            return None
    return k if k and k > 0 else None


def _verify(H: SubgroupGens, w: GenWord, expect: GroupElement) -> None:
    if H.evaluate(w) != expect:
        raise AssertionError(f"witness {format_genword(w)} does not evaluate to {expect}")


def pure_translations(H: SubgroupGens, L: int, ball: Ball | None = None) -> list[TranslationWitness]:
    """All nonzero pure translations within the ball, shortest witness each."""
    ball = ball or element_ball(H, L)
    out = []
    for g, w in zip(ball.elements, ball.words):
        if not g.free and any(g.trans):
            _verify(H, w, g)
            out.append(TranslationWitness(None, None, g.trans, w))
    return out


def find_translation_powers(H: SubgroupGens, L: int, ball: Ball | None = None) -> list[TranslationWitness]:
    """Least k_i with (1, k_i z_i) in H for each generator direction, followed
    by the remaining pure translations found.  Empty means no witness at L."""
    if L < 1:
        raise ValueError("L must be at least 1")
    found = pure_translations(H, L, ball)
    best: dict[int, TranslationWitness] = {}
    for t in found:
        for i, g in enumerate(H.gens, 1):
            k = _multiple_of(t.trans, g.trans)
            if k is not None and (i not in best or k < best[i].k):
                best[i] = TranslationWitness(i, k, t.trans, t.word)
    used = {b.trans for b in best.values()}
    return [best[i] for i in sorted(best)] + [t for t in found if t.trans not in used]


def distinct_axes(H: SubgroupGens) -> bool:
    frees = [g.free for g in H.gens if g.free]
    if not frees:
        raise ValueError("all free parts are trivial (pure translation subgroup)")
    return any(not fg.same_axis(f, g) for i, f in enumerate(frees) for g in frees[i + 1 :])


VERDICTS = ("virtually-product", "graph-like-no-witness", "single-axis", "pure-free", "pure-abelian")


@dataclass
class ClassificationReport:
    verdict: str
    A_gens: list[fg.Word]
    B_gens: list[list[int]]
    powers: list[tuple[int, int]]
    L: int
    translations: list[TranslationWitness] = field(default_factory=list)
    image_rank: int = 0
    missing: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "A_gens": [fg.format_word(w) for w in self.A_gens],
            "B_gens": self.B_gens,
            "powers": [{"index": i, "s": s} for i, s in self.powers],
            "L": self.L,
            "image_rank": self.image_rank,
            "translations": [t.to_json() for t in self.translations],
            "no_power_found_for": self.missing,
        }


def classify(H: SubgroupGens, L: int) -> ClassificationReport:
    if L < 1:
        raise ValueError("L must be at least 1")
    frees = [g.free for g in H.gens if g.free]
    image = fg.fold(frees)
    rank = image.rank()
    if not frees:
        B = echelon([g.trans for g in H.gens])
        return ClassificationReport("pure-abelian", [], B, [], L, image_rank=0)
    if not any(any(g.trans) for g in H.gens):
        return ClassificationReport("pure-free", image.free_basis(), [], [], L, image_rank=rank)
    if rank <= 1:
        return ClassificationReport("single-axis", image.free_basis(), [], [], L, image_rank=rank)

    ball = element_ball(H, L)
    found = find_translation_powers(H, L, ball)
    lattice = echelon([t.trans for t in found])
    kernel_words = [g.free for g in ball.elements if g.free and not any(g.trans)]
    F = fg.fold(kernel_words)
    powers, missing = [], []
    for i, g in enumerate(H.gens, 1):
        for s in range(1, L + 1):
            gs = g**s
            if fg.member(F, gs.free) and in_lattice(lattice, gs.trans):
                powers.append((i, s))
                break
        else:
            missing.append(i)
    # re-check the emitted witnesses from scratch
    for i, s in powers:
        gs = H.gens[i - 1] ** s
        assert fg.member(F, gs.free) and in_lattice(lattice, gs.trans)
    verdict = "virtually-product" if not missing else "graph-like-no-witness"
    return ClassificationReport(verdict, F.free_basis(), lattice, powers, L, found, rank, missing)


# --- hull structure and cocompactness -----------------------------------------


def translation_span(H: SubgroupGens, L: int) -> VSubspace:
    return span_of([t.trans for t in pure_translations(H, L)], H.n)


@dataclass
class HullCheckReport:
    ok: bool
    L: int
    epsilon: Fraction
    depth: int
    V: VSubspace
    cloud_size: int
    violations: int
    examples: list[ProductPoint]
    snap_drift: int
    error_budget: float
    thinned: bool

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "L": self.L,
            "epsilon": str(self.epsilon),
            "depth": self.depth,
            "V_basis": [[str(x) for x in v] for v in self.V.basis],
            "dim_V": self.V.dim,
            "cloud_size": self.cloud_size,
            "violations": self.violations,
            "examples": [p.to_json() for p in self.examples],
            "snap_drift": self.snap_drift,
            "error_budget": self.error_budget,
            "thinned": self.thinned,
        }


def hull_product_check(
    H: SubgroupGens,
    x0: ProductPoint | None = None,
    L: int = 2,
    eps=Fraction(1, 8),
    cap: int = 10**8,
    max_pairs: int = MAX_PAIRS,
) -> HullCheckReport:
    """Every point of conv^{1+dim V} of the orbit ball should lie in
    tree_hull(p(orbit)) x (x0 + V)."""
    eps = Fraction(eps)
    x0 = x0 or basepoint(H.n)
    if not distinct_axes(H):
        raise ValueError("free parts share one axis; the product structure needs two")
    V = translation_span(H, L)
    depth = 1 + V.dim
    ob = orbit_ball(H, x0, L)
    hull = tree_hull(p.tree for p in ob.cloud.points)
    c = conv_iter(ob.cloud, depth, eps, cap, max_pairs=max_pairs)
    comp = V.complement()
    base = [Fraction(x) for x in x0.euclid]
    bad: list[ProductPoint] = []
    drift = 0
    if c.backing is None:
        for p in c.points:
            if p.tree not in hull or not _in_affine(p.euclid, base, comp):
                bad.append(p)
        violations = len(bad)
    else:
        violations, drift, bad = _grid_hull_check(c, hull, base, comp)
    return HullCheckReport(
        ok=violations == 0,
        L=L,
        epsilon=eps,
        depth=depth,
        V=V,
        cloud_size=len(c),
        violations=violations,
        examples=bad[:5],
        snap_drift=drift,
        error_budget=c.error_budget,
        thinned=c.thinned,
    )


def _in_affine(e, base, comp) -> bool:
    return all(sum((a - b) * r for a, b, r in zip(e, base, row)) == 0 for row in comp)


def _grid_hull_check(c: PointCloud, hull, base, comp):
    grid, cells = c.backing.grid, c.backing.cells
    tv, tj, e = grid.decode(cells)
    M = grid.M
    # tree parts: check each distinct tree cell once
    tcells, inverse = np.unique(np.column_stack([tv, tj]), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    tree_ok = np.array([grid.frame.decode(int(v), Fraction(int(t), M)) in hull for v, t in tcells])
    bad_tree = ~tree_ok[inverse]
    # Euclidean parts: N (e/M - base) == 0, scaled to integers
    bad_euclid = np.zeros(len(cells), bool)
    dist = np.zeros(len(cells))
    if comp:
        den = 1
        for b in base:
            den = int(np.lcm(den, b.denominator))
        scale = den
        A = np.array(comp, dtype=np.int64)
        shifted = e * scale - np.array([int(b * M * scale) for b in base], dtype=np.int64)
        resid = shifted @ A.T
        bad_euclid = np.any(resid != 0, axis=1)
        norms = np.sqrt((A.astype(float) ** 2).sum(axis=1))
        dist = np.max(np.abs(resid) / (norms * M * scale), axis=1)
    # snapped samples of points on x0+V may round off it by at most the budget
    drift_mask = bad_euclid & (dist <= c.error_budget + 1e-12)
    bad = bad_tree | (bad_euclid & ~drift_mask)
    idx = np.flatnonzero(bad)
    examples = grid.points(cells[idx[:5]])
    return int(bad.sum()), int((drift_mask & ~bad_tree).sum()), examples


@dataclass
class RadiusReport:
    R: float
    L: int
    epsilon: Fraction
    depth: int
    dim_V: int
    orbit_size: int
    target_size: int
    cloud_size: int
    witness: SampleWitness
    error_budget: float
    thinned: bool

    def to_json(self) -> dict:
        pair = self.witness.pair
        return {
            "R": self.R,
            "L": self.L,
            "epsilon": str(self.epsilon),
            "depth": self.depth,
            "dim_V": self.dim_V,
            "orbit_size": self.orbit_size,
            "target_size": self.target_size,
            "cloud_size": self.cloud_size,
            "witness": None
            if pair is None
            else {"from": pair[0].to_json(), "to": pair[1].to_json(), "s": str(self.witness.fraction)},
            "error_budget": self.error_budget,
            "thinned": self.thinned,
        }


def cocompactness_radius(
    H: SubgroupGens,
    x0: ProductPoint | None = None,
    L: int = 1,
    eps=Fraction(1, 8),
    cap: int = 10**8,
    max_pairs: int = MAX_PAIRS,
    depth: int | None = None,
    final_pairs: int = FINAL_PAIRS,
) -> RadiusReport:
    """Largest distance from conv^{1+dim V}(orbit ball at L) to the orbit ball at L+2.

    The last conv^1 step is evaluated on the fly without building its cloud;
    if the previous stage is snapped and has more than ``final_pairs`` pairs,
    the pairs of a net are sampled and every cloud point is still measured.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    eps = Fraction(eps)
    x0 = x0 or basepoint(H.n)
    dim_v = translation_span(H, L).dim
    depth = depth if depth is not None else 1 + dim_v
    Y = orbit_ball(H, x0, L).cloud
    Z = orbit_ball(H, x0, L + 2).cloud
    c = conv_iter(Y, depth - 1, eps, cap, max_pairs=max_pairs)
    w, thin_err = max_sample_distance(c, Z, eps, max_pairs=final_pairs)
    R = w.value
    if thin_err > 0:
        # the net skipped some cloud points; they still count
        full, idx = directed_hausdorff(c, Z)
        if full > R:
            p = c.backing.grid.points(c.backing.cells[idx : idx + 1])[0]
            R, w = full, SampleWitness(full, (p, p), Fraction(0))
    return RadiusReport(
        R=R,
        L=L,
        epsilon=eps,
        depth=depth,
        dim_V=dim_v,
        orbit_size=len(Y),
        target_size=len(Z),
        cloud_size=len(c),
        witness=w,
        error_budget=c.error_budget + thin_err,
        thinned=c.thinned or thin_err > 0,
    )
