import pytest

from brunn import freegroup as fg
from oracles import conjugation_length, free_reduce, is_nielsen_reduced, subgroup_ball

W = fg.parse_word


def test_reduce_examples():
    assert fg.reduce([1, -1, 2]) == (2,)
    assert fg.reduce([]) == ()
    assert fg.reduce([1, 2, -2, 1]) == (1, 1)


def test_reduce_rejects_bad_letters():
    with pytest.raises(ValueError):
        fg.reduce([3], m=2)
    with pytest.raises(ValueError):
        fg.reduce([0])


def test_multiply_and_invert():
    assert fg.multiply(W("a"), W("A")) == ()
    assert fg.invert(W("ab")) == W("BA")
    assert fg.multiply(W("ab"), W("Ba")) == W("aa")
    assert fg.power(W("ab"), -2) == W("BABA")
    assert fg.power(W("ab"), 0) == ()


def test_word_format_roundtrip():
    for s in ["", "a", "abAB", "bbbA"]:
        assert fg.format_word(W(s)) == s
    with pytest.raises(ValueError):
        W("ac", 2)


def test_cyclic_reduce_examples():
    assert fg.cyclic_reduce(W("abA")) == (W("a"), W("b"))
    assert fg.cyclic_reduce(W("ab")) == ((), W("ab"))
    assert fg.cyclic_reduce(()) == ((), ())
    # b a b A B = (ba) b (ba)^-1: the core is a single letter
    conj, core = fg.cyclic_reduce(W("babAB"))
    assert (conj, core) == (W("ba"), W("b"))
    assert fg.translation_length(W("babAB")) == 1 == conjugation_length(W("babAB"), 2)


def test_cyclic_reduce_reconstructs():
    for w in [W("abaBA"), W("aabAA"), W("bab"), W("abAB")]:
        conj, core = fg.cyclic_reduce(w)
        assert fg.multiply(fg.multiply(conj, core), fg.invert(conj)) == w
        assert len(core) == conjugation_length(w, 2)


def test_same_axis():
    assert fg.same_axis(W("a"), W("aa"))
    assert not fg.same_axis(W("a"), W("b"))
    assert not fg.same_axis(W("ab"), W("ba"))
    assert fg.same_axis(W("abA"), W("abbA"))
    with pytest.raises(ValueError):
        fg.same_axis((), W("a"))


def test_fold_membership_examples():
    assert fg.member(fg.fold([W("a"), W("b")]), W("abA"))
    assert not fg.member(fg.fold([W("aa")]), W("a"))
    G = fg.fold([W("aa"), W("b"), W("abA")])
    # aba = (a b a^-1)(a^2); the oracle ball finds the same product
    ball = subgroup_ball([W("aa"), W("b"), W("abA")], 6)
    assert fg.member(G, W("aba")) and W("aba") in ball
    assert not fg.member(G, W("ab")) and W("ab") not in ball
    assert fg.member(G, W("abbA"))


def test_stallings_rank_and_basis():
    G = fg.fold([W("a"), W("b"), W("ab")])
    assert G.rank() == 2
    basis = G.free_basis()
    assert len(basis) == 2
    H = fg.fold(basis)
    for w in [W("a"), W("b"), W("ab")]:
        assert fg.member(H, w)
    assert fg.fold([W("aa"), W("aaa")]).rank() == 1


def test_membership_matches_ball_enumeration():
    gens = [W("ab"), W("bbA")]
    assert is_nielsen_reduced(gens)
    G = fg.fold(gens)
    ball = subgroup_ball(gens, 6)
    from oracles import all_words

    for w in all_words(2, 5):
        assert fg.member(G, w) == (w in ball), fg.format_word(w)


def test_oracle_reduce_agrees():
    for raw in [[1, -1, 2], [2, 1, -1, -2, 1], [1, 2, -2, -1]]:
        assert fg.reduce(raw) == free_reduce(raw)
