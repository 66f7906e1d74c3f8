"""Exact arithmetic in the free group F_m.

Words are tuples of nonzero ints: generator ``i`` is ``i`` and its inverse is
``-i``.  The empty tuple is the identity.  Every function here returns freely
reduced words.
"""

from __future__ import annotations

import string
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

Word = tuple[int, ...]

IDENTITY: Word = ()


def reduce(raw: Iterable[int], m: int | None = None) -> Word:
    """Freely reduce a letter sequence.

    If ``m`` is given, letters must lie in ``{±1, ..., ±m}``.
    """
    out: list[int] = []
    for x in raw:
        x = int(x)
        if x == 0 or (m is not None and abs(x) > m):
            raise ValueError(f"letter {x} out of range for F_{m}")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def multiply(u: Word, v: Word) -> Word:
    # only the junction can cancel when both inputs are reduced
    k = 0
    while k < len(u) and k < len(v) and u[-1 - k] == -v[k]:
        k += 1
    return u[: len(u) - k] + v[k:]


def invert(u: Word) -> Word:
    return tuple(-x for x in reversed(u))


def power(u: Word, k: int) -> Word:
    if k < 0:
        u, k = invert(u), -k
    out: Word = ()
    for _ in range(k):
        out = multiply(out, u)
    return out


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1)) and 0 not in w


def common_prefix_length(u: Word, v: Word) -> int:
    k = 0
    for x, y in zip(u, v):
        if x != y:
            break
        k += 1
    return k


def word_distance(u: Word, v: Word) -> int:
    """Path distance between the tree vertices ``u`` and ``v``."""
    return len(u) + len(v) - 2 * common_prefix_length(u, v)


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Split ``w`` as ``conjugator * core * conjugator^-1`` with ``core``
    cyclically reduced.

    ``len(core)`` is the translation length of ``w`` acting on the tree.
    """
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return w[:i], w[i : j + 1]


def translation_length(w: Word) -> int:
    return len(cyclic_reduce(w)[1])


def commutator(f: Word, g: Word) -> Word:
    return multiply(multiply(f, g), multiply(invert(f), invert(g)))


def same_axis(f: Word, g: Word) -> bool:
    """True iff the hyperbolic tree isometries ``f`` and ``g`` share an axis.

    For free groups this is the same as commuting.
    """
    if not f or not g:
        raise ValueError("same_axis is undefined for the identity")
    return commutator(f, g) == ()


# --- serialization -------------------------------------------------------

_LOWER = string.ascii_lowercase


def format_word(w: Word) -> str:
    """``(1, 2, -1)`` -> ``"abA"``."""
    chars = []
    for x in w:
        c = _LOWER[abs(x) - 1]
        chars.append(c if x > 0 else c.upper())
    return "".join(chars)


def parse_word(s: str, m: int | None = None) -> Word:
    """Inverse of :func:`format_word`; the result is freely reduced.

    The empty string is the identity.
    """
    letters = []
    for ch in s.strip():
        if ch.islower():
            letters.append(ord(ch) - ord("a") + 1)
        elif ch.isupper():
            letters.append(-(ord(ch) - ord("A") + 1))
        else:
            raise ValueError(f"bad letter {ch!r} in word {s!r}")
    return reduce(letters, m)


# --- Stallings graphs ----------------------------------------------------


@dataclass(frozen=True)
class StallingsGraph:
    """Folded labelled graph; ``edges[(state, letter)] = state``.

    Both orientations are stored, so ``(s, x) -> t`` implies ``(t, -x) -> s``.
    The base state is always ``0``.
    """

    n_states: int
    edges: dict[tuple[int, int], int]
    base: int = 0

    def rank(self) -> int:
        """Rank of the subgroup read off the graph: E - V + 1."""
        positive = sum(1 for (_, x) in self.edges if x > 0)
        return positive - self.n_states + 1

    def free_basis(self) -> list[Word]:
        """Loop words for the edges outside a BFS spanning tree."""
        label: dict[int, Word] = {self.base: ()}
        tree_edges = set()
        queue = deque([self.base])
        out_edges: dict[int, list[tuple[int, int]]] = {}
        for (s, x), t in sorted(self.edges.items()):
            out_edges.setdefault(s, []).append((x, t))
        while queue:
            s = queue.popleft()
            for x, t in out_edges.get(s, []):
                if t not in label:
                    label[t] = label[s] + (x,)
                    tree_edges.add((s, x))
                    tree_edges.add((t, -x))
                    queue.append(t)
        basis = []
        for (s, x), t in sorted(self.edges.items()):
            if x > 0 and (s, x) not in tree_edges:
                basis.append(multiply(multiply(label[s], (x,)), invert(label[t])))
        return basis


def fold(generators: Iterable[Word]) -> StallingsGraph:
    """Stallings folding of the petal graph of ``generators``."""
    pending: list[tuple[int, int, int]] = []
    n = 1
    for g in generators:
        g = reduce(g)
        if not g:
            continue
        cur = 0
        for idx, x in enumerate(g):
            if idx == len(g) - 1:
                nxt = 0
            else:
                nxt = n
                n += 1
            pending.append((cur, x, nxt))
            pending.append((nxt, -x, cur))
            cur = nxt

    parent = list(range(n))

    def find(s: int) -> int:
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    adj: list[dict[int, int]] = [{} for _ in range(n)]
    # reversed so that pop() handles edges in construction order
    pending.reverse()
    while pending:
        s, x, t = pending.pop()
        s, t = find(s), find(t)
        cur = adj[s].get(x)
        if cur is None:
            adj[s][x] = t
            continue
        cur = find(cur)
        if cur == t:
            adj[s][x] = t
            continue
        keep, gone = min(cur, t), max(cur, t)
        parent[gone] = keep
        adj[s][x] = keep
        for y, u in adj[gone].items():
            pending.append((keep, y, u))
        adj[gone] = {}

    # renumber reachable roots in BFS order from the base
    base = find(0)
    order = {base: 0}
    queue = deque([base])
    edges: dict[tuple[int, int], int] = {}
    while queue:
        s = queue.popleft()
        for x in sorted(adj[s]):
            t = find(adj[s][x])
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    for s, idx in order.items():
        for x, t in adj[s].items():
            edges[(idx, x)] = order[find(t)]
    return StallingsGraph(n_states=len(order), edges=edges, base=0)


def member(graph: StallingsGraph, w: Word) -> bool:
    """True iff ``w`` is in the subgroup presented by ``graph``."""
    s = graph.base
    for x in reduce(w):
        nxt = graph.edges.get((s, x))
        if nxt is None:
            return False
        s = nxt
    return s == graph.base
