import itertools
import json
from fractions import Fraction as F

import pytest

from brunn import freegroup as fg
from brunn.productspace import GroupElement, basepoint, point
from brunn.subgroups import (
    classify,
    cocompactness_radius,
    distinct_axes,
    echelon,
    element_ball,
    find_translation_powers,
    hull_product_check,
    in_lattice,
    load_subgroup,
    orbit_ball,
    rational_rank,
    span_of,
    subgroup,
    subgroup_from_dict,
)

PRODUCT = [("a", [0]), ("b", [0]), ("", [2])]


def test_orbit_ball_examples():
    H = subgroup(2, 1, PRODUCT)
    assert orbit_ball(H, None, 0).cloud.points == [basepoint(1)]
    A = subgroup(1, 0, [("a", [])])
    pts = {fg.format_word(p.tree.base) for p in orbit_ball(A, point("", ()), 2).cloud.points}
    assert pts == {"", "a", "aa", "A", "AA"}


def test_orbit_ball_matches_brute_force():
    H = subgroup(2, 1, [("a", [1]), ("b", [1])])
    gens = list(H.gens) + [g.inverse() for g in H.gens]
    seen = {GroupElement((), (0,))}
    frontier = set(seen)
    for _ in range(3):
        frontier = {g * x for g in frontier for x in gens} - seen
        seen |= frontier
    ob = orbit_ball(H, None, 3)
    assert len(ob.cloud) == len(seen) == 53


def test_words_evaluate_to_labels():
    H = subgroup(2, 1, PRODUCT)
    ob = orbit_ball(H, None, 2)
    for p, w in ob.words.items():
        assert H.evaluate(w) == ob.labels[p]


def test_translation_powers_examples():
    H = subgroup(2, 1, PRODUCT)
    found = find_translation_powers(H, 1)
    assert any(t.index == 3 and t.k == 1 for t in found)
    graph = subgroup(2, 2, [("a", [1, 0]), ("b", [0, 1])])
    for L in range(1, 7):
        assert find_translation_powers(graph, L) == []
    mixed = subgroup(2, 2, [("a", [1, 0]), ("b", [0, 1]), ("ab", [0, 0])])
    found = find_translation_powers(mixed, 3)
    assert any(t.trans == (1, 1) for t in found)
    for t in found:
        e = mixed.evaluate(t.word)
        assert e.free == () and e.trans == t.trans


def test_translation_powers_monotone_in_L():
    H = subgroup(2, 2, [("a", [1, 0]), ("b", [0, 1]), ("ab", [0, 0])])
    prev = {}
    for L in range(1, 5):
        cur = {t.trans for t in find_translation_powers(H, L)}
        assert set(prev) <= cur
        prev = {t: None for t in cur}


def test_distinct_axes():
    assert distinct_axes(subgroup(2, 0, [("a", []), ("b", [])]))
    assert not distinct_axes(subgroup(2, 0, [("a", []), ("aa", [])]))
    assert distinct_axes(subgroup(2, 0, [("abA", []), ("b", [])]))
    with pytest.raises(ValueError):
        distinct_axes(subgroup(2, 1, [("", [1])]))


def test_classify_examples():
    rep = classify(subgroup(2, 1, PRODUCT), 2)
    assert rep.verdict == "virtually-product"
    assert sorted(rep.A_gens) == sorted([fg.parse_word("a"), fg.parse_word("b")])
    assert rep.B_gens == [[2]]
    assert all(s == 1 for _, s in rep.powers)
    assert classify(subgroup(2, 2, [("a", [1, 0]), ("b", [0, 1])]), 5).verdict == "graph-like-no-witness"
    assert classify(subgroup(2, 1, [("aa", [1]), ("aaa", [1])]), 3).verdict == "single-axis"
    assert classify(subgroup(2, 1, [("a", [0]), ("b", [0])]), 2).verdict == "pure-free"
    assert classify(subgroup(2, 2, [("", [1, 0]), ("", [0, 1])]), 2).verdict == "pure-abelian"


def test_classify_invariant_under_relabeling():
    gens = [("a", [1]), ("b", [0]), ("A", [1])]
    base = classify(subgroup(2, 1, gens), 3).verdict
    for perm in itertools.permutations(gens):
        assert classify(subgroup(2, 1, list(perm)), 3).verdict == base
    inv = [(fg.format_word(fg.invert(fg.parse_word(w))), [-x for x in t]) for w, t in gens]
    assert classify(subgroup(2, 1, inv), 3).verdict == base


def test_lattice_helpers():
    B = echelon([[2, 4], [1, 1], [3, 5]])
    assert in_lattice(B, [1, 1]) and in_lattice(B, [0, 2]) and not in_lattice(B, [0, 1])
    assert rational_rank([[1, 2], [2, 4]]) == 1
    V = span_of([[2, 0, 0]], 3)
    assert V.dim == 1 and V.contains([F(1, 3), 0, 0]) and not V.contains([0, 1, 0])


def test_hull_product_check_examples():
    rep = hull_product_check(subgroup(2, 1, PRODUCT), None, 2, F(1, 4))
    assert rep.ok and rep.violations == 0 and rep.V.dim == 1
    free = hull_product_check(subgroup(2, 1, [("a", [0]), ("b", [0])]), None, 2, F(1, 4))
    assert free.ok and free.V.dim == 0
    with pytest.raises(ValueError):
        hull_product_check(subgroup(2, 1, [("a", [0]), ("aa", [1])]), None, 2, F(1, 4))


def test_cocompactness_full_group():
    rep = cocompactness_radius(subgroup(2, 0, [("a", []), ("b", [])]), None, 2, F(1, 8))
    assert rep.R <= 0.5 + 1 / 8


def test_cocompactness_grows_for_graph_subgroup():
    K = subgroup(2, 1, [("a", [0]), ("b", [1])])
    r1 = cocompactness_radius(K, None, 1, F(1, 8)).R
    r3 = cocompactness_radius(K, None, 3, F(1, 8)).R
    assert r3 > r1


def test_subgroup_file_loading(tmp_path):
    p = tmp_path / "h.toml"
    p.write_text('m = 2\nn = 1\n[[gens]]\nword = "a"\ntrans = [0]\n[[gens]]\nword = "bA"\ntrans = [3]\n')
    H = load_subgroup(p)
    assert H.gens[1].free == fg.parse_word("bA") and H.gens[1].trans == (3,)
    q = tmp_path / "h.json"
    q.write_text(json.dumps(H.to_json()))
    assert load_subgroup(q) == H


@pytest.mark.parametrize(
    "obj, field",
    [
        ({"m": 2, "gens": []}, "n"),
        ({"m": 2, "n": 1, "gens": [{"trans": [0]}]}, "gens[0].word"),
        ({"m": 2, "n": 1, "gens": [{"word": "c", "trans": [0]}]}, "gens[0].word"),
        ({"m": 2, "n": 1, "gens": [{"word": "a", "trans": [0, 1]}]}, "gens[0].trans"),
        ({"m": 2, "n": 1, "gens": [{"word": "a", "trans": "x"}]}, "gens[0].trans"),
    ],
)
def test_malformed_subgroup_names_field(obj, field):
    with pytest.raises(ValueError, match=field.replace("[", r"\[").replace("]", r"\]")):
        subgroup_from_dict(obj)


def test_element_ball_rejects_negative():
    with pytest.raises(ValueError):
        element_ball(subgroup(2, 0, [("a", [])]), -1)
