import numpy as np
import pytest

from src.graphs import (
    DenseTensor3,
    Graph,
    Permutation,
    complete,
    cycle,
    disjoint_union,
    empty,
    fwl_initial_colors,
    graph_to_fwl_tensor,
    graph_to_tensor,
    permute_graph,
    permute_tensor,
    random_gnp,
    rook_4x4,
    shrikhande,
    star,
    strongly_regular_parameters,
    triangle_trace,
)


def test_graph_rejects_asymmetric_adjacency():
    with pytest.raises(ValueError, match="symmetric"):
        Graph(np.array([[0, 1], [0, 0]], dtype=bool), np.zeros((2, 0)))


def test_graph_rejects_self_loop():
    with pytest.raises(ValueError, match="self-loops"):
        Graph(np.array([[1, 0], [0, 0]], dtype=bool), np.zeros((2, 0)))


def test_graph_rejects_color_row_mismatch():
    with pytest.raises(ValueError, match="rows"):
        Graph(np.zeros((3, 3), dtype=bool), np.zeros((2, 1)))


def test_graph_is_immutable(c6):
    with pytest.raises(ValueError):
        c6.adjacency[0, 1] = False


def test_from_edges_and_edges_agree():
    G = Graph.from_edges(4, [(0, 1), (2, 3), (1, 2)])
    assert G.edges() == [(0, 1), (1, 2), (2, 3)]
    assert G.degrees().tolist() == [1, 2, 2, 1]


def test_graph_to_tensor_uncolored_is_adjacency(c6):
    T = graph_to_tensor(c6)
    assert T.data.shape == (6, 6, 1)
    np.testing.assert_array_equal(T.channel(0), c6.adjacency.astype(float))


def test_graph_to_tensor_single_colored_vertex():
    T = graph_to_tensor(Graph(np.zeros((1, 1), dtype=bool), [[0.5]]))
    np.testing.assert_array_equal(T.data, [[[0.5, 0.0]]])


def test_graph_to_tensor_two_colored_vertices():
    T = graph_to_tensor(Graph.from_edges(2, [(0, 1)], colors=[[1.0], [2.0]]))
    np.testing.assert_array_equal(T.channel(0), np.diag([1.0, 2.0]))
    np.testing.assert_array_equal(T.channel(1), [[0, 1], [1, 0]])


def test_graph_to_tensor_is_equivariant(rng):
    for _ in range(10):
        G = random_gnp(7, 0.4, int(rng.integers(1000)))
        G = Graph(G.adjacency, rng.integers(0, 3, size=(7, 2)).astype(float))
        g = Permutation.random(7, rng)
        assert graph_to_tensor(permute_graph(G, g)) == permute_tensor(graph_to_tensor(G), g)


def test_graph_to_fwl_tensor_appends_identity():
    T = graph_to_fwl_tensor(Graph.from_edges(2, [(0, 1)]))
    np.testing.assert_array_equal(T.channel(0), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(T.channel(1), np.eye(2))
    single = graph_to_fwl_tensor(Graph(np.zeros((1, 1), dtype=bool), [[3.0]]))
    assert single.data.shape == (1, 1, 3)
    assert single.data[0, 0, -1] == 1.0


def test_fwl_initial_colors_uncolored_edge():
    T = fwl_initial_colors(graph_to_fwl_tensor(Graph.from_edges(2, [(0, 1)])))
    np.testing.assert_array_equal(T.channel(0), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(T.channel(1), np.zeros((2, 2)))
    np.testing.assert_array_equal(T.channel(2), np.eye(2))


def test_fwl_initial_colors_separates_adjacent_from_distant(c6):
    T = fwl_initial_colors(graph_to_fwl_tensor(c6))
    assert not np.array_equal(T.data[1, 2], T.data[1, 4])


def test_fwl_initial_colors_colored_channel_count(rng):
    G = Graph(cycle(5).adjacency, rng.random((5, 2)))
    assert fwl_initial_colors(graph_to_fwl_tensor(G)).c == 4 * 2 + 1


def test_fwl_initial_colors_is_equivariant(rng):
    G = Graph(random_gnp(6, 0.5, 3).adjacency, rng.integers(0, 2, size=(6, 1)).astype(float))
    g = Permutation.random(6, rng)
    lhs = fwl_initial_colors(graph_to_fwl_tensor(permute_graph(G, g)))
    rhs = permute_tensor(fwl_initial_colors(graph_to_fwl_tensor(G)), g)
    np.testing.assert_allclose(lhs.data, rhs.data, atol=1e-12)


def test_fwl_initial_colors_requires_identity_channel(c6):
    with pytest.raises(ValueError, match="identity"):
        fwl_initial_colors(DenseTensor3(np.zeros((6, 6, 2))))


def test_tensor_bytes_layout(c6):
    T = graph_to_fwl_tensor(c6)
    payload = T.to_bytes()
    assert payload[:4] == b"WLT3"
    assert len(payload) == 16 + 8 * 6 * 6 * 2
    assert DenseTensor3.from_bytes(payload) == T


def test_permutation_inverse_and_compose(rng):
    g = Permutation.random(8, rng)
    assert g.compose(g.inverse()) == Permutation.identity(8)
    h = Permutation.random(8, rng)
    G = random_gnp(8, 0.5, 11)
    assert permute_graph(permute_graph(G, h), g) == permute_graph(G, g.compose(h))


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))


def test_cycle_and_union_triangle_traces(c6, two_triangles, k4):
    assert c6.degrees().tolist() == [2] * 6
    assert triangle_trace(c6) == 0
    assert triangle_trace(two_triangles) == 12
    assert triangle_trace(k4) == 24
    assert triangle_trace(empty(5)) == 0


def test_cycle_needs_three_vertices():
    with pytest.raises(ValueError):
        cycle(2)


def test_star_and_complete_sizes():
    assert star(3).degrees().tolist() == [3, 1, 1, 1]
    assert len(complete(5).edges()) == 10


def test_disjoint_union_rejects_mixed_color_widths():
    with pytest.raises(ValueError):
        disjoint_union(cycle(3), Graph(cycle(3).adjacency, np.ones((3, 1))))


def test_random_gnp_is_seeded():
    assert random_gnp(10, 0.5, 7) == random_gnp(10, 0.5, 7)
    assert random_gnp(10, 0.0, 7) == empty(10)
    assert random_gnp(10, 1.0, 7) == complete(10)


def test_rook_and_shrikhande_are_strongly_regular():
    assert strongly_regular_parameters(rook_4x4()) == (16, 6, 2, 2)
    assert strongly_regular_parameters(shrikhande()) == (16, 6, 2, 2)
    assert strongly_regular_parameters(star(3)) is None
