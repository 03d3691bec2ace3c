"""
Color refinement (1-WL), k-WL and k-FWL over colorings of vertex k-tuples.

Colorings of two graphs are refined against one shared ColorInterner so that
their color histograms can be compared round by round.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.graphs import Graph, Permutation, permute_array

logger = logging.getLogger(__name__)

MAX_COLOR_ID = 2**62


class Variant(str, Enum):
    WL = "wl"
    FWL = "fwl"
    CR1 = "cr1"


class InternerExhausted(OverflowError):
    pass


class ColorInterner:
    """
    Bijection between color signatures (canonical byte strings) and dense integer ids.

    Within one call to intern_rows, the new signatures are numbered in sorted
    order, so ids never depend on the order in which tuples were visited.
    """

    def __init__(self, max_ids: int = MAX_COLOR_ID):
        self.table = {}
        self.next_id = 0
        self.max_ids = max_ids

    def __len__(self) -> int:
        return len(self.table)

    def intern(self, signature: bytes) -> int:
        color = self.table.get(signature)
        if color is None:
            if self.next_id >= self.max_ids:
                raise InternerExhausted(f"color interner exhausted after {self.next_id} ids")
            color = self.table[signature] = self.next_id
            self.next_id += 1
        return color

    def intern_rows(self, tag: bytes, blocks: list) -> list:
        """
        Interns integer signature rows of one or more graphs at a single synchronization point.

        Args:
            tag (bytes): Signature kind, keeps signatures of different update rules apart.
            blocks (list): One (N_i, L) int64 array of signature rows per graph.

        Returns:
            list: One length-N_i int64 array of color ids per block.
        """
        rows = np.concatenate([np.asarray(b, dtype=np.int64) for b in blocks], axis=0)
        if rows.shape[0] == 0:
            return [np.zeros(0, dtype=np.int64) for _ in blocks]
        unique, inverse = np.unique(rows, axis=0, return_inverse=True)
        ids = np.fromiter(
            (self.intern(tag + row.astype("<i8").tobytes()) for row in unique),
            dtype=np.int64,
            count=unique.shape[0],
        )
        colors = ids[inverse.reshape(-1)]
        bounds = np.cumsum([len(b) for b in blocks])[:-1]
        return np.split(colors, bounds)


@dataclass(frozen=True, eq=False)
class TupleColoring:
    """Color ids of all k-tuples of an n-vertex graph, stored as an (n,)*k array."""

    k: int
    n: int
    colors: np.ndarray

    def __post_init__(self):
        colors = np.asarray(self.colors, dtype=np.int64).reshape((self.n,) * self.k)
        colors.setflags(write=False)
        object.__setattr__(self, "colors", colors)

    def histogram(self) -> list:
        ids, counts = np.unique(self.colors, return_counts=True)
        return [[int(i), int(c)] for i, c in zip(ids, counts)]

    def num_colors(self) -> int:
        return int(np.unique(self.colors).size)

    def partition(self) -> np.ndarray:
        """Class labels numbered by first occurrence in row-major order; equal iff partitions are equal."""
        flat = self.colors.reshape(-1)
        if flat.size == 0:
            return flat
        _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
        rank = np.argsort(np.argsort(first))
        return rank[inverse.reshape(-1)]

    def same_partition(self, other: "TupleColoring") -> bool:
        return self.colors.shape == other.colors.shape and np.array_equal(self.partition(), other.partition())

    def permuted(self, g: Permutation) -> "TupleColoring":
        return TupleColoring(self.k, self.n, permute_array(self.colors, g, self.k))


@dataclass(frozen=True)
class Verdict:
    variant: Variant
    k: int
    distinguished: bool
    round: int
    histograms: list = field(default_factory=list, compare=False)

    @property
    def outcome(self) -> str:
        return "Distinguished" if self.distinguished else "Indistinguishable"

    def to_dict(self) -> dict:
        key = "round" if self.distinguished else "stable_round"
        return {
            "variant": self.variant.value,
            "k": self.k,
            "rounds": len(self.histograms),
            "verdict": {"outcome": self.outcome, key: self.round},
            "histograms": self.histograms,
        }


def _check_tuple(i, n: int) -> tuple:
    i = tuple(int(x) for x in i)
    if any(not 0 <= x < n for x in i):
        raise ValueError(f"tuple {i} has entries outside [0, {n})")
    return i


def neighborhood_wl(i, j: int, n: int) -> list:
    """The n tuples obtained by replacing position j of i with every vertex (0-based)."""
    i = _check_tuple(i, n)
    if not 0 <= j < len(i):
        raise ValueError(f"position {j} out of range for a {len(i)}-tuple")
    return [i[:j] + (v,) + i[j + 1 :] for v in range(n)]


def neighborhood_fwl(i, j: int, n: int) -> tuple:
    """Ordered k tuples: i with vertex j substituted at position 0, then 1, ..., then k-1."""
    i = _check_tuple(i, n)
    if not 0 <= j < n:
        raise ValueError(f"vertex {j} out of range [0, {n})")
    return tuple(i[:q] + (j,) + i[q + 1 :] for q in range(len(i)))


def _initial_rows(G: Graph, k: int) -> np.ndarray:
    # isomorphism type: equality pattern, adjacency pattern, vertex colors (bitwise)
    n = G.n
    idx = np.indices((n,) * k).reshape(k, -1).T
    equal = idx[:, :, None] == idx[:, None, :]
    adjacent = G.adjacency[idx[:, :, None], idx[:, None, :]]
    color_bits = np.ascontiguousarray(G.colors[idx]).view(np.int64).reshape(len(idx), k * G.e)
    return np.hstack(
        [equal.reshape(len(idx), k * k), adjacent.reshape(len(idx), k * k), color_bits]
    ).astype(np.int64)


def _wl_rows(C: np.ndarray) -> np.ndarray:
    n, k = C.shape[0], C.ndim
    parts = [C.reshape(-1, 1)]
    for j in range(k):
        multiset = np.expand_dims(np.moveaxis(np.sort(C, axis=j), j, -1), j)
        parts.append(np.broadcast_to(multiset, C.shape + (n,)).reshape(-1, n))
    return np.hstack(parts)


def _fwl_rows(C: np.ndarray) -> np.ndarray:
    n, k = C.shape[0], C.ndim
    N = C.size
    # Q[t, j, q] = color of tuple t with position q replaced by vertex j
    Q = np.stack(
        [np.broadcast_to(np.expand_dims(np.moveaxis(C, q, -1), q), C.shape + (n,)) for q in range(k)],
        axis=-1,
    ).reshape(N, n, k)
    _, rank = np.unique(Q.reshape(-1, k), axis=0, return_inverse=True)
    order = np.argsort(rank.reshape(N, n), axis=1, kind="stable")
    Q = np.take_along_axis(Q, order[:, :, None], axis=1)
    return np.hstack([C.reshape(-1, 1), Q.reshape(N, n * k)])


def _vertex_rows(G: Graph) -> np.ndarray:
    color_bits = np.ascontiguousarray(G.colors).view(np.int64).reshape(G.n, G.e)
    return np.hstack([np.zeros((G.n, 1), dtype=np.int64), color_bits])


def _cr_rows(G: Graph, colors: np.ndarray) -> np.ndarray:
    # neighbor multiset, padded with -1 up to n entries
    neighbors = np.sort(np.where(G.adjacency, colors[None, :], -1), axis=1)
    return np.hstack([colors.reshape(-1, 1), neighbors])


def initial_coloring(G: Graph, k: int, interner: ColorInterner) -> TupleColoring:
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    (colors,) = interner.intern_rows(b"init%d" % k, [_initial_rows(G, k)])
    return TupleColoring(k, G.n, colors)


def wl_step(C: TupleColoring, interner: ColorInterner) -> TupleColoring:
    """One k-WL update: own color plus, per position, the sorted colors along that position."""
    if C.k < 2:
        raise ValueError("the k-WL update needs k >= 2; use color_refinement_1wl for vertices")
    (colors,) = interner.intern_rows(b"wl", [_wl_rows(C.colors)])
    return TupleColoring(C.k, C.n, colors)


def fwl_step(C: TupleColoring, interner: ColorInterner) -> TupleColoring:
    """One k-FWL update: own color plus the sorted multiset over vertices j of the ordered color k-tuples."""
    if C.k < 2:
        raise ValueError("the k-FWL update needs k >= 2")
    (colors,) = interner.intern_rows(b"fwl", [_fwl_rows(C.colors)])
    return TupleColoring(C.k, C.n, colors)


def _check_variant(k: int, variant) -> Variant:
    variant = Variant(variant)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if variant is Variant.CR1 and k != 1:
        raise ValueError(f"color refinement works on vertices, k must be 1 (got {k})")
    if variant is not Variant.CR1 and k < 2:
        raise ValueError(f"{variant.value} needs k >= 2; use variant cr1 for k = 1")
    return variant


def _start_rows(G: Graph, k: int, variant: Variant) -> np.ndarray:
    return _vertex_rows(G) if variant is Variant.CR1 else _initial_rows(G, k)


def _update_rows(G: Graph, colors: np.ndarray, variant: Variant) -> np.ndarray:
    if G.n == 0:
        return np.zeros((0, 1), dtype=np.int64)
    if variant is Variant.CR1:
        return _cr_rows(G, colors.reshape(-1))
    if variant is Variant.WL:
        return _wl_rows(colors)
    return _fwl_rows(colors)


def _start_tag(k: int, variant: Variant) -> bytes:
    return b"cr0" if variant is Variant.CR1 else b"init%d" % k


def _update_tag(variant: Variant) -> bytes:
    return {Variant.CR1: b"cr", Variant.WL: b"wl", Variant.FWL: b"fwl"}[variant]


def _joint_rounds(graphs: list, k: int, variant: Variant, interner: ColorInterner, threads: int = 1):
    """
    Yields the joint colorings round by round (round 0 first), one TupleColoring per graph.
    """
    n = graphs[0].n

    def wrap(blocks):
        return [TupleColoring(k, n, colors) for colors in blocks]

    def compute(fn, args):
        if threads > 1 and len(args) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(lambda a: fn(*a), args))
        return [fn(*a) for a in args]

    rows = compute(_start_rows, [(G, k, variant) for G in graphs])
    current = wrap(interner.intern_rows(_start_tag(k, variant), rows))
    while True:
        yield current
        rows = compute(_update_rows, [(G, C.colors, variant) for G, C in zip(graphs, current)])
        current = wrap(interner.intern_rows(_update_tag(variant), rows))


def refine(G: Graph, k: int, variant, interner: ColorInterner | None = None) -> list:
    """
    Refines a single graph until its partition is stable.

    Returns:
        list: TupleColorings for rounds 0..r, where round r has the same partition as round r-1.
    """
    variant = _check_variant(k, variant)
    interner = interner or ColorInterner()
    history = []
    for (C,) in _joint_rounds([G], k, variant, interner):
        if history and C.num_colors() == history[-1].num_colors():
            history.append(C)
            return history
        history.append(C)
        if len(history) > G.n**k + 2:
            raise RuntimeError(f"no stable coloring after {len(history)} rounds")


def color_refinement_1wl(G: Graph, interner: ColorInterner | None = None) -> list:
    """Classic vertex color refinement; the per-vertex colorings of every round up to stability."""
    return refine(G, 1, Variant.CR1, interner)


def compare_graphs(G: Graph, H: Graph, k: int, variant, interner: ColorInterner | None = None, threads: int = 1) -> Verdict:
    """
    Joint refinement of G and H with histogram comparison after every round.

    Args:
        G (Graph): First graph.
        H (Graph): Second graph.
        k (int): Tuple order (1 for cr1, at least 2 for wl and fwl).
        variant (Variant | str): "wl", "fwl" or "cr1".
        interner (ColorInterner): Shared interner, a fresh one if None.
        threads (int): Worker threads for computing the two graphs' signatures.

    Returns:
        Verdict: Distinguished at the first round whose histograms differ, otherwise
        Indistinguishable at the first round where both partitions are stable.
    """
    variant = _check_variant(k, variant)
    if G.n != H.n or G.e != H.e:
        logger.debug("sizes differ (n=%d/%d, e=%d/%d)", G.n, H.n, G.e, H.e)
        return Verdict(variant, k, True, 0, [])
    interner = interner or ColorInterner()
    histograms = []
    previous = None
    max_rounds = G.n**k + 1
    for rnd, (CG, CH) in enumerate(_joint_rounds([G, H], k, variant, interner, threads)):
        hist_g, hist_h = CG.histogram(), CH.histogram()
        histograms.append([hist_g, hist_h])
        logger.debug("%s k=%d round %d: %d / %d colors", variant.value, k, rnd, len(hist_g), len(hist_h))
        if hist_g != hist_h:
            return Verdict(variant, k, True, rnd, histograms)
        if previous is not None and all(
            cur.num_colors() == prev.num_colors() for cur, prev in zip((CG, CH), previous)
        ):
            return Verdict(variant, k, False, rnd, histograms)
        if rnd >= max_rounds:
            raise RuntimeError(f"refinement did not stabilize within {max_rounds} rounds")
        previous = (CG, CH)
