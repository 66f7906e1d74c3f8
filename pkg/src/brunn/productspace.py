"""The CAT(0) space T_{2m} x R^n and the action of F_m x Z^n on it."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import freegroup as fg
from .freegroup import Word
from .treespace import (
    TreePoint,
    format_tree_point,
    make_point,
    parse_tree_point,
    tree_distance,
    tree_geodesic_eval,
)


def _vec(xs) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


@dataclass(frozen=True)
class ProductPoint:
    tree: TreePoint
    euclid: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "euclid", _vec(self.euclid))

    @property
    def n(self) -> int:
        return len(self.euclid)

    def sort_key(self) -> tuple:
        return (self.tree.sort_key(), self.euclid)

    def __lt__(self, other: "ProductPoint") -> bool:
        return self.sort_key() < other.sort_key()

    def to_json(self) -> dict:
        return {"tree": format_tree_point(self.tree), "euclid": [_fmt_frac(x) for x in self.euclid]}

    @classmethod
    def from_json(cls, obj: dict, m: int | None = None) -> "ProductPoint":
        return cls(parse_tree_point(obj["tree"], m), tuple(Fraction(x) for x in obj.get("euclid", [])))


def point(word: Word | str = (), euclid: Sequence = ()) -> ProductPoint:
    """Convenience constructor for a point over a tree vertex."""
    if isinstance(word, str):
        word = fg.parse_word(word)
    return ProductPoint(TreePoint(tuple(word)), _vec(euclid))


def basepoint(n: int) -> ProductPoint:
    return ProductPoint(TreePoint(()), (Fraction(0),) * n)


def _fmt_frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class GroupElement:
    """An element ``(free, trans)`` of F_m x Z^n."""

    free: Word = ()
    trans: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "free", fg.reduce(self.free))
        object.__setattr__(self, "trans", tuple(int(z) for z in self.trans))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        if len(self.trans) != len(other.trans):
            raise ValueError("dimension mismatch")
        return GroupElement(fg.multiply(self.free, other.free), tuple(a + b for a, b in zip(self.trans, other.trans)))

    def inverse(self) -> "GroupElement":
        return GroupElement(fg.invert(self.free), tuple(-z for z in self.trans))

    def __pow__(self, k: int) -> "GroupElement":
        return GroupElement(fg.power(self.free, k), tuple(k * z for z in self.trans))

    def is_identity(self) -> bool:
        return not self.free and not any(self.trans)

    def __str__(self) -> str:
        return f"({fg.format_word(self.free) or '1'}, {list(self.trans)})"


def identity(n: int) -> GroupElement:
    return GroupElement((), (0,) * n)


def _check_dims(p: ProductPoint, q: ProductPoint) -> None:
    if len(p.euclid) != len(q.euclid):
        raise ValueError(f"dimension mismatch: {len(p.euclid)} vs {len(q.euclid)}")


def distance_sq(p: ProductPoint, q: ProductPoint) -> Fraction:
    _check_dims(p, q)
    t = tree_distance(p.tree, q.tree)
    return t * t + sum(((a - b) ** 2 for a, b in zip(p.euclid, q.euclid)), Fraction(0))


def distance(p: ProductPoint, q: ProductPoint) -> float:
    d2 = distance_sq(p, q)
    return math.sqrt(d2.numerator) / math.sqrt(d2.denominator)


def geodesic_eval(p: ProductPoint, q: ProductPoint, s) -> ProductPoint:
    """Product geodesics move affinely in both factors."""
    _check_dims(p, q)
    s = Fraction(s)
    tree = tree_geodesic_eval(p.tree, q.tree, s)
    return ProductPoint(tree, tuple((1 - s) * a + s * b for a, b in zip(p.euclid, q.euclid)))


def apply(g: GroupElement, p: ProductPoint) -> ProductPoint:
    if len(g.trans) != len(p.euclid):
        raise ValueError(f"dimension mismatch: {len(g.trans)} vs {len(p.euclid)}")
    base = fg.multiply(g.free, p.tree.base)
    tree = make_point(base, p.tree.dir, p.tree.offset)
    return ProductPoint(tree, tuple(a + z for a, z in zip(p.euclid, g.trans)))


def dumps_point(p: ProductPoint) -> str:
    return json.dumps(p.to_json(), separators=(",", ":"))


def loads_point(s: str, m: int | None = None) -> ProductPoint:
    return ProductPoint.from_json(json.loads(s), m)
