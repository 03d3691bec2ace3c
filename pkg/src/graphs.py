import struct
from dataclasses import dataclass
from itertools import product

import networkx as nx
import numpy as np

TENSOR_MAGIC = b"WLT3"
TENSOR_VERSION = 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Colored simple undirected graph.

    Args:
        adjacency (np.ndarray): Symmetric boolean n x n matrix with zero diagonal.
        colors (np.ndarray): n x e matrix of real vertex features, e = 0 means uncolored.
    """

    adjacency: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        adjacency = np.asarray(self.adjacency, dtype=bool)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adjacency.shape}")
        if not np.array_equal(adjacency, adjacency.T):
            raise ValueError("adjacency must be symmetric")
        if adjacency.diagonal().any():
            raise ValueError("adjacency must have a zero diagonal (no self-loops)")
        n = adjacency.shape[0]
        colors = np.asarray(self.colors, dtype=np.float64)
        if colors.size == 0:
            colors = np.zeros((n, 0))
        if colors.ndim != 2 or colors.shape[0] != n:
            raise ValueError(f"colors must have {n} rows of equal width, got shape {colors.shape}")
        object.__setattr__(self, "adjacency", _frozen(adjacency))
        object.__setattr__(self, "colors", _frozen(colors))

    @classmethod
    def from_edges(cls, n: int, edges, colors=None) -> "Graph":
        adjacency = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            adjacency[i, j] = adjacency[j, i] = True
        return cls(adjacency, np.zeros((n, 0)) if colors is None else colors)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def e(self) -> int:
        return self.colors.shape[1]

    def edges(self) -> list:
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return list(zip(rows.tolist(), cols.tolist()))

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def uncolored(self) -> "Graph":
        return Graph(self.adjacency, np.zeros((self.n, 0)))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges())
        return graph

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        # bit equality on colors, matching how refinement compares them
        return (
            np.array_equal(self.adjacency, other.adjacency)
            and self.colors.shape == other.colors.shape
            and self.colors.tobytes() == other.colors.tobytes()
        )

    def __hash__(self) -> int:
        return hash((self.adjacency.tobytes(), self.colors.tobytes(), self.colors.shape))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={len(self.edges())}, e={self.e})"


@dataclass(frozen=True, eq=False)
class DenseTensor3:
    """n x n x c float64 tensor, row-major over (i1, i2, channel)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] != data.shape[1]:
            raise ValueError(f"expected an n x n x c tensor, got shape {data.shape}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def c(self) -> int:
        return self.data.shape[2]

    def channel(self, j: int) -> np.ndarray:
        return self.data[:, :, j]

    def to_bytes(self) -> bytes:
        header = TENSOR_MAGIC + struct.pack("<III", TENSOR_VERSION, self.n, self.c)
        return header + self.data.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes) -> "DenseTensor3":
        if len(payload) < 16 or payload[:4] != TENSOR_MAGIC:
            raise ValueError("not a serialized DenseTensor3")
        version, n, c = struct.unpack("<III", payload[4:16])
        if version != TENSOR_VERSION:
            raise ValueError(f"unsupported tensor version {version}")
        if len(payload) != 16 + 8 * n * n * c:
            raise ValueError(f"payload length does not match header n={n}, c={c}")
        return cls(np.frombuffer(payload, dtype="<f8", offset=16).reshape(n, n, c))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseTensor3):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True)
class Permutation:
    """
    Bijection on [n]. Acting on a graph, vertex i is moved to position mapping[i].
    """

    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(x) for x in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError(f"not a permutation: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(rng.permutation(n).tolist()))

    @property
    def n(self) -> int:
        return len(self.mapping)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, target in enumerate(self.mapping):
            inv[target] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """Returns self after other, i.e. i -> self(other(i))."""
        if other.n != self.n:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.mapping[other.mapping[i]] for i in range(self.n)))


def permute_array(array: np.ndarray, g: Permutation, axes: int) -> np.ndarray:
    """
    Applies g to the first `axes` index positions of an array: out[g(i1), ..., g(ik), ...] = array[i1, ..., ik, ...].
    """
    inv = np.array(g.inverse().mapping, dtype=np.intp)
    out = array
    for axis in range(axes):
        out = np.take(out, inv, axis=axis)
    return out


def permute_graph(G: Graph, g: Permutation) -> Graph:
    if g.n != G.n:
        raise ValueError(f"permutation on {g.n} points applied to graph with {G.n} vertices")
    return Graph(permute_array(G.adjacency, g, 2), permute_array(G.colors, g, 1))


def permute_tensor(T: DenseTensor3, g: Permutation) -> DenseTensor3:
    return DenseTensor3(permute_array(T.data, g, 2))


def graph_to_tensor(G: Graph) -> DenseTensor3:
    """
    Encodes G as an n x n x (e+1) tensor: vertex colors on the diagonal of the
    first e channels and the adjacency matrix in the last channel.
    """
    data = np.zeros((G.n, G.n, G.e + 1))
    idx = np.arange(G.n)
    data[idx, idx, : G.e] = G.colors
    data[:, :, G.e] = G.adjacency
    return DenseTensor3(data)


def graph_to_fwl_tensor(G: Graph) -> DenseTensor3:
    """graph_to_tensor followed by an identity-matrix channel (e+2 channels)."""
    base = graph_to_tensor(G).data
    return DenseTensor3(np.concatenate([base, np.eye(G.n)[:, :, None]], axis=2))


def fwl_initial_colors(T: DenseTensor3) -> DenseTensor3:
    """
    Initial 2-tuple colors built from a graph_to_fwl_tensor output.

    For e >= 1 the channels are A Y_j, (J - A) Y_j, Y_j A, Y_j (J - A) for every
    color channel Y_j, followed by the identity; for e = 0 the stack is
    (A, J - A - I, I).

    Args:
        T (DenseTensor3): Tensor with e+2 channels, the last one the identity.

    Returns:
        DenseTensor3: Tensor with 4e+1 channels (3 when e = 0).
    """
    if T.c < 2:
        raise ValueError(f"expected at least 2 channels (adjacency and identity), got {T.c}")
    n, e = T.n, T.c - 2
    identity = T.channel(e + 1)
    if not np.array_equal(identity, np.eye(n)):
        raise ValueError(f"channel {e + 1} must be the identity matrix")
    A = T.channel(e)
    complement = np.ones((n, n)) - A
    if e == 0:
        return DenseTensor3(np.stack([A, complement - identity, identity], axis=2))
    channels = []
    for j in range(e):
        Y = T.channel(j)
        channels += [A @ Y, complement @ Y, Y @ A, Y @ complement]
    channels.append(identity)
    return DenseTensor3(np.stack(channels, axis=2))


def triangle_trace(G: Graph) -> int:
    """tr(A^3), computed in integer arithmetic."""
    A = G.adjacency.astype(np.int64)
    return int(np.trace(A @ A @ A))


# Generators


def graph_from_networkx(graph: nx.Graph) -> Graph:
    nodes = sorted(graph.nodes())
    if not nodes:
        return empty(0)
    return Graph(nx.to_numpy_array(graph, nodelist=nodes, dtype=bool, weight=None), np.zeros((len(nodes), 0)))


def cycle(m: int) -> Graph:
    if m < 3:
        raise ValueError(f"cycle needs at least 3 vertices, got {m}")
    return graph_from_networkx(nx.cycle_graph(m))


def complete(m: int) -> Graph:
    if m < 1:
        raise ValueError(f"complete graph needs at least 1 vertex, got {m}")
    return graph_from_networkx(nx.complete_graph(m))


def star(m: int) -> Graph:
    """K_{1,m}, center is vertex 0."""
    return graph_from_networkx(nx.star_graph(m))


def empty(n: int) -> Graph:
    return Graph(np.zeros((n, n), dtype=bool), np.zeros((n, 0)))


def disjoint_union(G: Graph, H: Graph) -> Graph:
    if G.e != H.e:
        raise ValueError(f"cannot join graphs with color widths {G.e} and {H.e}")
    n = G.n + H.n
    adjacency = np.zeros((n, n), dtype=bool)
    adjacency[: G.n, : G.n] = G.adjacency
    adjacency[G.n :, G.n :] = H.adjacency
    return Graph(adjacency, np.vstack([G.colors, H.colors]))


def random_gnp(n: int, p: float, seed: int) -> Graph:
    """
    G(n, p) graph from a PCG64 generator seeded with `seed`.

    One uniform double is drawn per vertex pair (i < j) in row-major order of
    the upper triangle; the edge is present iff the draw is below p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(rows.size) < p
    adjacency = np.zeros((n, n), dtype=bool)
    adjacency[rows[keep], cols[keep]] = True
    return Graph(adjacency | adjacency.T, np.zeros((n, 0)))


def rook_4x4() -> Graph:
    """Cells of a 4x4 board, adjacent when they share a row or column."""
    rook = nx.cartesian_product(nx.complete_graph(4), nx.complete_graph(4))
    return graph_from_networkx(rook)


def shrikhande() -> Graph:
    """Cayley graph on Z4 x Z4 with connection set {±(1,0), ±(0,1), ±(1,1)}."""
    connection = [(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)]
    adjacency = np.zeros((16, 16), dtype=bool)
    for (a, b), (da, db) in product(product(range(4), repeat=2), connection):
        adjacency[4 * a + b, 4 * ((a + da) % 4) + (b + db) % 4] = True
    return Graph(adjacency, np.zeros((16, 0)))


def strongly_regular_parameters(G: Graph):
    """
    Brute-force check for strong regularity.

    Returns:
        tuple | None: (v, k, lambda, mu) if G is strongly regular, else None.
    """
    A = G.adjacency.astype(np.int64)
    degrees = A.sum(axis=1)
    if G.n == 0 or (degrees != degrees[0]).any():
        return None
    common = A @ A
    off = ~np.eye(G.n, dtype=bool)
    adjacent = common[G.adjacency]
    non_adjacent = common[~G.adjacency & off]
    if np.unique(adjacent).size > 1 or np.unique(non_adjacent).size > 1:
        return None
    lam = int(adjacent[0]) if adjacent.size else 0
    mu = int(non_adjacent[0]) if non_adjacent.size else 0
    return G.n, int(degrees[0]), lam, mu
