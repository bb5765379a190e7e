import random

import pytest

from corpus import leaf_count, omega_tbox, random_abox, random_tbox, random_tree_query
from omqrewrite.bench import example_ontology, example_query, linear_query
from omqrewrite.chase import certain_answers
from omqrewrite.dl import Role, h_complete, parse_abox, parse_cq
from omqrewrite.errors import InconsistentInput, InfiniteDepth, NotTreeShaped, OutOfRange
from omqrewrite.evaluate import all_answers, eval_seminaive
from omqrewrite.ndl import lift_linear, validate
from omqrewrite.rewrite_slice import locally_compatible, pair_compatible, rewrite_slice, slice_query

P, Q = Role("P"), Role("Q")

LIN_COUNTS = [2, 5, 8, 11, 14, 17, 20, 23, 26, 29, 32, 35, 38, 41, 44]


def test_chain_slices():
    dec = slice_query(example_query(), "x0")
    assert dec.slices == [(f"x{i}",) for i in range(8)]
    assert dec.depth == 7
    assert dec.answers(0) == ("x0", "x7") and dec.answers(3) == ("x7",)
    assert dec.existential(0) == () and dec.existential(3) == ("x3",)


def test_single_variable_slice():
    dec = slice_query(parse_cq("q(x) :- A(x)"))
    assert dec.slices == [("x",)] and dec.depth == 0


def test_star_slices():
    dec = slice_query(parse_cq("q() :- R(c,a), R(c,b), S(d,c)"), "c")
    assert dec.slices[0] == ("c",) and set(dec.slices[1]) == {"a", "b", "d"}


def test_slice_errors():
    with pytest.raises(NotTreeShaped):
        slice_query(parse_cq("q() :- R(x,y), R(y,z), R(z,x)"))
    with pytest.raises(OutOfRange):
        slice_query(example_query(), "nope")


def test_local_compatibility():
    t = example_ontology()
    q = parse_cq("q() :- A(z), R(y,z)")
    assert locally_compatible(t, {"z": ()}, ("z",), q)
    assert not locally_compatible(t, {"z": (P,)}, ("z",), q)
    assert not locally_compatible(t, {"x0": (P,)}, ("x0",), example_query())
    assert locally_compatible(t, {"y": ()}, ("y",), parse_cq("q() :- R(y,z)"))


def test_pair_compatibility():
    t = example_ontology()
    q = example_query()
    assert pair_compatible(t, {"x3": ()}, {"x4": ()}, ("x3",), ("x4",), q)
    assert pair_compatible(t, {"x3": (P,)}, {"x4": ()}, ("x3",), ("x4",), q)
    assert pair_compatible(t, {"x3": ()}, {"x4": (Q,)}, ("x3",), ("x4",), q)
    assert not pair_compatible(t, {"x3": (P,)}, {"x4": (Q,)}, ("x3",), ("x4",), q)


def test_single_atom_gives_two_clauses():
    p = rewrite_slice(example_ontology(), parse_cq("q(x) :- A(x)"))
    assert len(p) == 2
    assert sorted(str(c) for c in p.clauses) == ["G(x) :- P0<x:e>(x).", "P0<x:e>(x) :- A(x)."]


@pytest.mark.parametrize("n", range(1, 16))
def test_clause_counts_on_first_sequence(n):
    assert len(rewrite_slice(example_ontology(), linear_query(1, n))) == LIN_COUNTS[n - 1]


def test_counts_grow_linearly_on_all_sequences():
    t = example_ontology()
    for seq in (1, 2, 3):
        counts = [len(rewrite_slice(t, linear_query(seq, n))) for n in range(1, 16)]
        diffs = {b - a for a, b in zip(counts, counts[1:])}
        assert max(diffs) <= 4


def test_program_is_linear_and_narrow():
    rng = random.Random(60)
    for _ in range(60):
        t = random_tbox(rng, max_depth=2)
        q = random_tree_query(rng)
        p = rewrite_slice(t, q)
        r = validate(p)
        assert r.linear and r.ordered
        widest = max(len(s) for s in slice_query(q).slices)
        assert r.width <= 2 * widest
        assert r.width <= 2 * leaf_count(q)


def test_root_override_keeps_answers():
    t = example_ontology()
    q = example_query()
    abox = h_complete(t, parse_abox("R(a,b)\nS(b,c)\nR(c,d)\nR(d,e)\nS(e,f)\nR(f,g)\nR(g,h)"))
    for root in q.variables:
        assert eval_seminaive(rewrite_slice(t, q, root), abox) == [("a", "h")]


def test_infinite_depth_rejected():
    with pytest.raises(InfiniteDepth):
        rewrite_slice(omega_tbox(), parse_cq("q(x) :- A(x)"))


def test_lifted_program_matches_oracle_and_linear_engine():
    rng = random.Random(61)
    for _ in range(40):
        t = random_tbox(rng, max_depth=2)
        q = random_tree_query(rng)
        abox = random_abox(rng, t, q)
        try:
            expected = certain_answers(t, q, abox)
        except InconsistentInput:
            continue
        lifted = lift_linear(rewrite_slice(t, q), None, t)
        assert set(eval_seminaive(lifted, abox)) == expected
        assert set(all_answers(lifted, abox, "linear")) == expected
