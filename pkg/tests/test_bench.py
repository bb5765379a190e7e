import csv

import pytest

from omqrewrite.bench import (
    EXAMPLE_CHAIN,
    SEQUENCES,
    chain_query,
    example_ontology,
    example_query,
    expected_counts,
    format_dataset,
    gen_er_abox,
    linear_query,
    stats_table,
    write_table,
)
from omqrewrite.dl import parse_abox
from omqrewrite.errors import OutOfRange


def test_example_ontology_shape():
    t = example_ontology()
    # A and B each generate one anonymous successor and nothing further
    assert t.depth == 1
    assert {"A", "B"} <= set(t.concept_names)


def test_example_query_is_the_worked_chain():
    q = example_query()
    assert [a.pred for a in q.atoms] == list(EXAMPLE_CHAIN)
    assert list(q.answer_vars) == ["x0", "x7"]


def test_linear_query_prefixes():
    q = linear_query(1, 3)
    assert [a.pred for a in q.atoms] == list(SEQUENCES[1][:3])
    assert list(q.answer_vars) == ["x0", "x3"]
    assert len(linear_query(3, 16).atoms) == 16


def test_out_of_range():
    for args in ((4, 1), (1, 0), (1, 16)):
        with pytest.raises(OutOfRange):
            linear_query(*args)
    with pytest.raises(OutOfRange):
        chain_query("")
    with pytest.raises(OutOfRange):
        gen_er_abox(0, 0.1, 0.1, 0)
    with pytest.raises(OutOfRange):
        gen_er_abox(5, 1.5, 0.1, 0)


def test_zero_probabilities_give_empty_abox():
    abox = gen_er_abox(50, 0, 0, 1)
    assert not abox.role_facts and not abox.concept_facts


def test_generator_is_deterministic():
    a = format_dataset(gen_er_abox(80, 0.1, 0.2, 5), 80, 0.1, 0.2, 5)
    b = format_dataset(gen_er_abox(80, 0.1, 0.2, 5), 80, 0.1, 0.2, 5)
    assert a == b
    assert a != format_dataset(gen_er_abox(80, 0.1, 0.2, 6), 80, 0.1, 0.2, 6)


def test_no_self_loops_and_counts_near_expectation():
    abox = gen_er_abox(300, 0.05, 0.1, 3)
    assert all(a != b for _, a, b in abox.role_facts)
    exp = expected_counts(300, 0.05, 0.1)
    mean, sd = exp["roles"]
    assert abs(len(abox.role_facts) - mean) <= 4 * sd
    mean, sd = exp["concepts"]
    assert abs(len(abox.concept_facts) - mean) <= 4 * sd


def test_dataset_round_trips_through_the_parser():
    abox = gen_er_abox(30, 0.2, 0.3, 9)
    again = parse_abox(format_dataset(abox, 30, 0.2, 0.3, 9))
    assert set(again.role_facts) == set(abox.role_facts)
    assert set(again.concept_facts) == set(abox.concept_facts)


def test_stats_table_rows():
    rows = list(csv.reader(stats_table(["td", "slice"], 1, 3).splitlines()))
    assert rows[0] == ["n", "td", "slice"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    assert rows[1] == ["1", "1", "2"]


def test_stats_table_header_only_and_unknown_method():
    assert stats_table(["tw"], 1, 0) == "n,tw\n"
    with pytest.raises(ValueError):
        stats_table(["magic"], 1, 2)


def test_write_table_produces_png(tmp_path):
    png = write_table(tmp_path / "t.csv", ["slice", "tw"], 2, 4)
    assert png == tmp_path / "t.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert (tmp_path / "t.csv").read_text().startswith("n,slice,tw\n")
