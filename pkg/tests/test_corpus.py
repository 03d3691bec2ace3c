import networkx as nx
import pandas as pd
import pytest

from src.corpus import (
    VERDICT_COLUMNS,
    atlas_graphs,
    check_properties,
    exhaustive_pairs,
    parse_algorithms,
    random_pairs,
    run_corpus,
    srg_pair,
)
from src.refinement import Variant

ALL_ALGORITHMS = [("cr1", 1), ("wl", 2), ("wl", 3), ("fwl", 2)]


def _algorithms(pairs):
    return [(Variant(v), k) for v, k in pairs]


def test_atlas_counts():
    assert [len(atlas_graphs(n)) for n in range(1, 7)] == [1, 2, 4, 11, 34, 156]
    with pytest.raises(ValueError):
        atlas_graphs(8)


def test_exhaustive_pairs_count():
    assert sum(1 for _ in exhaustive_pairs(6, 2)) == 1 + 6 + 55 + 561 + 12090


def test_random_pairs_are_seeded_and_non_isomorphic():
    first = random_pairs(10, 7, seed=4)
    assert [(G, H) for G, H in first] == random_pairs(10, 7, seed=4)
    for G, H in first:
        assert G.n == H.n and 4 <= G.n <= 7
        assert not nx.is_isomorphic(G.to_networkx(), H.to_networkx())


def test_parse_algorithms_keeps_valid_combinations():
    assert parse_algorithms([1, 2], ["cr1", "wl", "fwl"]) == _algorithms([("cr1", 1), ("wl", 2), ("fwl", 2)])
    with pytest.raises(ValueError):
        parse_algorithms([1], ["wl"])
    with pytest.raises(ValueError):
        parse_algorithms([2], ["kwl"])


def test_run_corpus_table_shape(c6, two_triangles):
    df = run_corpus([(c6, two_triangles)], _algorithms(ALL_ALGORITHMS))
    assert list(df.columns) == VERDICT_COLUMNS
    assert len(df) == len(ALL_ALGORITHMS)
    outcomes = dict(zip(zip(df["variant"], df["k"]), df["outcome"]))
    assert outcomes[("cr1", 1)] == "Indistinguishable"
    assert outcomes[("fwl", 2)] == "Distinguished"
    assert outcomes[("wl", 3)] == "Distinguished"


def test_run_corpus_without_pairs_is_empty():
    df = run_corpus([], _algorithms(ALL_ALGORITHMS))
    assert df.empty and list(df.columns) == VERDICT_COLUMNS


def test_check_properties_flags_violations():
    df = pd.DataFrame(
        [
            (0, "A", "B", 4, "cr1", 1, "Indistinguishable", 1),
            (0, "A", "B", 4, "wl", 2, "Distinguished", 1),
            (0, "A", "B", 4, "wl", 3, "Indistinguishable", 2),
        ],
        columns=VERDICT_COLUMNS,
    )
    violations = check_properties(df)
    assert set(violations["relation"]) == {"cr11 equal wl2", "wl2 implies wl3"}


def test_srg_pair_is_cr1_indistinguishable():
    df = run_corpus([srg_pair()], _algorithms([("cr1", 1)]))
    assert df["outcome"].tolist() == ["Indistinguishable"]


def test_known_relations_on_small_graphs():
    pairs = list(exhaustive_pairs(5, 2)) + random_pairs(20, 7, seed=0)
    df = run_corpus(pairs, _algorithms(ALL_ALGORITHMS))
    assert check_properties(df).empty


@pytest.mark.slow
def test_color_refinement_matches_2wl_up_to_six_vertices():
    pairs = list(exhaustive_pairs(6, 2)) + random_pairs(500, 8, seed=1)
    df = run_corpus(pairs, _algorithms([("cr1", 1), ("wl", 2)]))
    assert check_properties(df).empty


@pytest.mark.slow
def test_fwl2_matches_wl3_up_to_seven_vertices():
    pairs = random_pairs(500, 7, seed=2) + [srg_pair()]
    df = run_corpus(pairs, _algorithms([("wl", 2), ("wl", 3), ("fwl", 2)]))
    assert check_properties(df).empty


@pytest.mark.parametrize("n_max, p", [(1, 0.5), (0, 0.5), (5, 0.0), (5, 1.0)])
def test_random_pairs_rejects_settings_without_distinct_graphs(n_max, p):
    with pytest.raises(ValueError):
        random_pairs(1, n_max, seed=0, p=p)
    assert random_pairs(0, n_max, seed=0, p=p) == []


def test_random_pairs_on_two_vertices():
    for G, H in random_pairs(3, 2, seed=5):
        assert G.n == 2 and len(G.edges()) != len(H.edges())
