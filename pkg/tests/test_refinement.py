import numpy as np
import pytest

from src.corpus import atlas_graphs
from src.graphs import Graph, Permutation, complete, cycle, permute_graph, random_gnp, rook_4x4, shrikhande, star
from src.refinement import (
    ColorInterner,
    InternerExhausted,
    TupleColoring,
    Variant,
    color_refinement_1wl,
    compare_graphs,
    fwl_step,
    initial_coloring,
    neighborhood_fwl,
    neighborhood_wl,
    refine,
    wl_step,
)


def test_neighborhood_wl_replaces_one_position():
    assert neighborhood_wl((2, 1), 0, 3) == [(0, 1), (1, 1), (2, 1)]
    assert neighborhood_wl((2, 1), 1, 3) == [(2, 0), (2, 1), (2, 2)]
    assert neighborhood_wl((0, 0), 1, 1) == [(0, 0)]


def test_neighborhood_fwl_is_ordered():
    assert neighborhood_fwl((2, 1), 4, 5) == ((4, 1), (2, 4))
    assert neighborhood_fwl((0, 1, 2), 3, 4) == ((3, 1, 2), (0, 3, 2), (0, 1, 3))
    assert neighborhood_fwl((1,), 2, 3) == ((2,),)


def test_neighborhoods_reject_out_of_range():
    with pytest.raises(ValueError):
        neighborhood_wl((3, 0), 0, 3)
    with pytest.raises(ValueError):
        neighborhood_fwl((0, 0), 3, 3)


def test_interner_is_a_bijection():
    interner = ColorInterner()
    assert interner.intern(b"a") == 0
    assert interner.intern(b"b") == 1
    assert interner.intern(b"a") == 0
    assert len(interner) == 2


def test_interner_exhaustion():
    interner = ColorInterner(max_ids=1)
    interner.intern(b"a")
    with pytest.raises(InternerExhausted):
        interner.intern(b"b")


def test_intern_rows_does_not_depend_on_row_order():
    rows = np.array([[3, 1], [0, 2], [3, 1], [1, 1]])
    (first,) = ColorInterner().intern_rows(b"t", [rows])
    (second,) = ColorInterner().intern_rows(b"t", [rows[::-1]])
    np.testing.assert_array_equal(first, second[::-1])


def test_initial_coloring_of_c6_has_three_classes(c6):
    C = initial_coloring(c6, 2, ColorInterner())
    assert C.num_colors() == 3
    assert sorted(count for _, count in C.histogram()) == [6, 12, 18]


def test_initial_coloring_k1_counts_vertex_colors():
    G = Graph(cycle(4).adjacency, [[0.0], [1.0], [0.0], [2.0]])
    assert initial_coloring(G, 1, ColorInterner()).num_colors() == 3


def test_isomorphic_graphs_share_initial_histogram(rng):
    G = random_gnp(6, 0.5, 1)
    H = permute_graph(G, Permutation.random(6, rng))
    interner = ColorInterner()
    assert initial_coloring(G, 3, interner).histogram() == initial_coloring(H, 3, interner).histogram()


@pytest.mark.parametrize("step", [wl_step, fwl_step])
def test_steps_keep_stable_partition(step):
    interner = ColorInterner()
    history = refine(complete(4), 2, Variant.WL if step is wl_step else Variant.FWL, interner)
    stable = history[-1]
    assert step(stable, interner).same_partition(stable)


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("step", [wl_step, fwl_step])
def test_steps_are_equivariant(rng, step, k):
    for trial in range(100 // 4):
        n = int(rng.integers(2, 7))
        G = random_gnp(n, 0.5, int(rng.integers(10_000)))
        g = Permutation.random(n, rng)
        interner = ColorInterner()
        C = step(initial_coloring(G, k, interner), interner)
        lhs = step(C.permuted(g), interner)
        rhs = step(C, interner).permuted(g)
        assert lhs.same_partition(rhs)


def test_refinement_is_monotone(rng):
    for variant, k in [(Variant.WL, 2), (Variant.FWL, 2), (Variant.CR1, 1)]:
        G = random_gnp(7, 0.4, int(rng.integers(1000)))
        counts = [C.num_colors() for C in refine(G, k, variant)]
        assert counts == sorted(counts)
        assert counts[-1] == counts[-2]
        assert len(counts) <= 7**k + 2


def _assert_terminates_within_bound(graphs, algorithms):
    for G in graphs:
        for variant, k in algorithms:
            history = refine(G, k, variant)
            assert len(history) - 1 <= G.n**k
            assert history[-1].same_partition(history[-2])


@pytest.mark.parametrize("n", range(1, 7))
def test_refinement_terminates_on_all_small_graphs(n):
    algorithms = [("cr1", 1), ("wl", 2), ("fwl", 2)]
    if n <= 5:
        algorithms += [("wl", 3), ("fwl", 3)]
    _assert_terminates_within_bound(atlas_graphs(n), algorithms)


@pytest.mark.slow
def test_refinement_terminates_on_all_seven_vertex_graphs():
    _assert_terminates_within_bound(atlas_graphs(7), [("cr1", 1), ("wl", 2), ("fwl", 2)])


def test_wl_step_needs_pairs(c6):
    with pytest.raises(ValueError):
        wl_step(initial_coloring(c6, 1, ColorInterner()), ColorInterner())


def test_color_refinement_regular_graph_single_color(c6):
    history = color_refinement_1wl(c6)
    assert len(history) == 2
    assert history[-1].num_colors() == 1


def test_color_refinement_star_two_colors():
    assert color_refinement_1wl(star(3))[-1].num_colors() == 2


def test_figure_pair_needs_more_than_color_refinement(c6, two_triangles):
    assert not compare_graphs(c6, two_triangles, 1, "cr1").distinguished
    assert not compare_graphs(c6, two_triangles, 2, "wl").distinguished
    verdict = compare_graphs(c6, two_triangles, 2, "fwl")
    assert verdict.distinguished
    assert verdict.round >= 1


def test_wl2_histograms_equal_every_round(c6, two_triangles):
    verdict = compare_graphs(c6, two_triangles, 2, Variant.WL)
    assert all(a == b for a, b in verdict.histograms)


def test_isomorphic_inputs_are_indistinguishable(rng):
    for variant, k in [("cr1", 1), ("wl", 2), ("fwl", 2), ("wl", 3)]:
        G = random_gnp(6, 0.5, int(rng.integers(1000)))
        H = permute_graph(G, Permutation.random(6, rng))
        assert not compare_graphs(G, H, k, variant).distinguished


def test_different_sizes_are_distinguished_at_round_zero():
    verdict = compare_graphs(cycle(5), cycle(6), 2, "fwl")
    assert verdict.distinguished and verdict.round == 0


def test_colors_separate_otherwise_equal_graphs():
    # same color histogram; in H every edge joins different colors
    G = Graph(cycle(4).adjacency, [[0.0], [0.0], [1.0], [1.0]])
    H = Graph(cycle(4).adjacency, [[0.0], [1.0], [0.0], [1.0]])
    assert compare_graphs(G, H, 1, "cr1").distinguished
    assert compare_graphs(G, H, 2, "fwl").distinguished
    assert compare_graphs(G, G.uncolored(), 1, "cr1").round == 0


def test_strongly_regular_pair():
    rook, shri = rook_4x4(), shrikhande()
    assert not compare_graphs(rook, shri, 1, "cr1").distinguished
    assert not compare_graphs(rook, shri, 2, "fwl").distinguished


def test_threaded_comparison_matches_sequential(c6, two_triangles):
    sequential = compare_graphs(c6, two_triangles, 2, "fwl")
    threaded = compare_graphs(c6, two_triangles, 2, "fwl", threads=2)
    assert sequential.to_dict() == threaded.to_dict()


def test_verdict_json_shape(c6, two_triangles):
    doc = compare_graphs(c6, two_triangles, 1, "cr1").to_dict()
    assert doc["variant"] == "cr1"
    assert doc["verdict"]["outcome"] == "Indistinguishable"
    assert "stable_round" in doc["verdict"]
    assert doc["rounds"] == len(doc["histograms"])


@pytest.mark.parametrize("k, variant", [(2, "cr1"), (1, "wl"), (0, "fwl")])
def test_invalid_variant_and_k(c6, k, variant):
    with pytest.raises(ValueError):
        compare_graphs(c6, c6, k, variant)


def test_tuple_coloring_partition_labels():
    C = TupleColoring(1, 4, np.array([7, 3, 7, 5]))
    np.testing.assert_array_equal(C.partition(), [0, 1, 0, 2])
