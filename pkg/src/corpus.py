"""
Graph-pair corpora and verdict tables for checking known relations between the
refinement algorithms.
"""

import logging
from itertools import combinations

import networkx as nx
import numpy as np
import pandas as pd
from tqdm import tqdm

from src.graphio import write_graph6
from src.graphs import graph_from_networkx, random_gnp, rook_4x4, shrikhande
from src.refinement import Variant, _check_variant, compare_graphs

logger = logging.getLogger(__name__)

ATLAS_MAX_N = 7
CORPUS_MAX_N = 8
VERDICT_COLUMNS = ["pair", "graph_a", "graph_b", "n", "variant", "k", "outcome", "round"]


def atlas_graphs(n: int) -> list:
    """Every graph on exactly n vertices up to isomorphism (n <= 7), in atlas order."""
    if not 0 <= n <= ATLAS_MAX_N:
        raise ValueError(f"the graph atlas covers n <= {ATLAS_MAX_N}, got {n}")
    return [graph_from_networkx(g) for g in nx.graph_atlas_g() if g.number_of_nodes() == n]


def exhaustive_pairs(n_max: int, n_min: int = 1):
    """Yields (G, H) for all pairs of non-isomorphic graphs with equal vertex count n_min..n_max."""
    for n in range(n_min, n_max + 1):
        yield from combinations(atlas_graphs(n), 2)


def random_pairs(count: int, n_max: int, seed: int, p: float = 0.5) -> list:
    """
    `count` seeded pairs of non-isomorphic G(n, p) graphs with n drawn uniformly from [min(4, n_max), n_max].
    """
    if count > 0 and n_max < 2:
        raise ValueError(f"non-isomorphic pairs need n_max >= 2, got {n_max}")
    if count > 0 and not 0 < p < 1:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        n = int(rng.integers(min(4, n_max), n_max + 1))
        G = random_gnp(n, p, int(rng.integers(2**32)))
        H = random_gnp(n, p, int(rng.integers(2**32)))
        if not nx.is_isomorphic(G.to_networkx(), H.to_networkx()):
            pairs.append((G, H))
    return pairs


def srg_pair() -> tuple:
    return rook_4x4(), shrikhande()


def parse_algorithms(k_list, variant_list) -> list:
    """Valid (variant, k) combinations: cr1 only with k = 1, wl and fwl with k >= 2."""
    algorithms = []
    for variant in variant_list:
        variant = Variant(variant)
        for k in k_list:
            if (variant == Variant.CR1) == (k == 1):
                algorithms.append((_check_variant(k, variant), k))
    if not algorithms:
        raise ValueError(f"no valid algorithm among k={list(k_list)} and variants={list(variant_list)}")
    return algorithms


def run_corpus(pairs, algorithms: list, threads: int = 1) -> pd.DataFrame:
    """
    Compares every pair with every algorithm.

    Args:
        pairs (iterable): (G, H) graph pairs.
        algorithms (list): (Variant, k) tuples, see parse_algorithms.
        threads (int): Worker threads per comparison.

    Returns:
        pd.DataFrame: One row per (pair, algorithm) with VERDICT_COLUMNS.
    """
    rows = []
    for index, (G, H) in enumerate(tqdm(pairs, desc="pairs", unit="pair", disable=None)):
        a, b = write_graph6(G), write_graph6(H)
        for variant, k in algorithms:
            verdict = compare_graphs(G, H, k, variant, threads=threads)
            rows.append((index, a, b, G.n, variant.value, k, verdict.outcome, verdict.round))
    df = pd.DataFrame(rows, columns=VERDICT_COLUMNS)
    logger.info("compared %d pairs with %d algorithms", len(df) // max(len(algorithms), 1), len(algorithms))
    return df


def _distinguished(df: pd.DataFrame, variant: str, k: int) -> pd.Series:
    subset = df[(df["variant"] == variant) & (df["k"] == k)]
    return subset.set_index("pair")["outcome"] == "Distinguished"


def check_properties(df: pd.DataFrame) -> pd.DataFrame:
    """
    Checks, on every pair where both algorithms ran: CR1 and 2-WL agree, k-FWL and
    (k+1)-WL agree, and whatever k-WL or k-FWL distinguishes is distinguished at k+1.

    Returns:
        pd.DataFrame: One row per violation (pair, relation, left, right); empty if none.
    """
    relations = [("cr1", 1, "wl", 2, "equal")]
    ks = sorted(set(df["k"]))
    for k in ks:
        relations.append(("fwl", k, "wl", k + 1, "equal"))
        relations.append(("wl", k, "wl", k + 1, "implies"))
        relations.append(("fwl", k, "fwl", k + 1, "implies"))

    violations = []
    for left_v, left_k, right_v, right_k, kind in relations:
        left, right = _distinguished(df, left_v, left_k), _distinguished(df, right_v, right_k)
        common = left.index.intersection(right.index)
        if common.empty:
            continue
        left, right = left[common], right[common]
        bad = left != right if kind == "equal" else left & ~right
        for pair in common[bad.to_numpy()]:
            violations.append((pair, f"{left_v}{left_k} {kind} {right_v}{right_k}", bool(left[pair]), bool(right[pair])))
    if violations:
        logger.warning("%d property violations", len(violations))
    return pd.DataFrame(violations, columns=["pair", "relation", "left_distinguished", "right_distinguished"])
