from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mtree import NewickError, parse_newick, random_tree, splits_of, write_newick
from mtree.scalar import ScalarMode
from mtree.tree_core import Split, WeightedTree

from conftest import T5_NEWICK, brute_splits


def test_t5_adjacency(t5):
    assert t5.n == 5 and len(t5.edges()) == 7
    assert all(w == 1 for _, _, w in t5.edges())
    a = t5.neighbors(t5.leaf("1"))[0]
    b = t5.neighbors(t5.leaf("3"))[0]
    c = t5.neighbors(t5.leaf("4"))[0]
    assert t5.neighbors(t5.leaf("2")) == (a,)
    assert t5.neighbors(t5.leaf("5")) == (c,)
    assert set(t5.neighbors(b)) == {a, c, t5.leaf("3")}


def test_degree_two_root_suppressed():
    t = parse_newick("((1:1,2:1):0.5,3:0.5);")
    assert t.n == 3 and len(t.edges()) == 3
    assert sorted(w for _, _, w in t.edges()) == [1, 1, 1]


@pytest.mark.parametrize(
    "text, needle",
    [
        ("(1:1,2:1);", "at least 3"),
        ("(1:1,2:1,1:1);", "duplicate"),
        ("(1:1,2:1,3);", "length"),
        ("(1:1,2:0,3:1);", "positive"),
        ("(1:1,2:-1,3:1);", ""),
        ("((1:1):1,2:1,3:1);", ""),
        ("(1:1,2:1,3:1)", ";"),
        ("(1:1,2:1,3:1):2;", ""),
        ("(1:1,:1,3:1);", ""),
        ("(1:1,2:1,3:1);x", ""),
    ],
)
def test_parse_errors(text, needle):
    with pytest.raises(NewickError) as info:
        parse_newick(text)
    assert needle in str(info.value)


def test_error_reports_position():
    with pytest.raises(NewickError) as info:
        parse_newick("(1:1,2:1,3:x);")
    assert info.value.position is not None


def test_star_written_canonically():
    assert write_newick(parse_newick("(3:1,1:1,2:1);")) == "(1:1,2:1,3:1);"


def test_t5_round_trip(t5):
    again = parse_newick(write_newick(t5))
    assert splits_of(again) == splits_of(t5)


def test_one_third_exact():
    t = WeightedTree([("c", "x", Fraction(1, 3)), ("c", "y", 1), ("c", "z", 2)], {"x": "x", "y": "y", "z": "z"})
    text = write_newick(t)
    back = parse_newick(text)
    assert Fraction(1, 3) in {w for _, _, w in back.edges()}


def test_quoted_labels_and_comments():
    t = parse_newick("('a b':1,'it''s':2[note],c:3);")
    assert set(t.labels) == {"a b", "it's", "c"}
    assert splits_of(parse_newick(write_newick(t))) == splits_of(t)


def test_float_mode():
    t = parse_newick(T5_NEWICK, ScalarMode(False))
    assert all(isinstance(w, float) for _, _, w in t.edges())


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 14), st.integers(0, 10**6))
def test_random_round_trip(n, seed):
    t = random_tree(n, seed=seed)
    back = parse_newick(write_newick(t))
    assert splits_of(back) == splits_of(t)
    assert {Split.of(s, t.labels): w for s, w in brute_splits(back).items()} == splits_of(t)
