import json
from pathlib import Path

import pandas as pd
import streamlit as st

from src.cli import GENERATORS, named_graph
from src.common import Settings, configure_logging, reset_directory, show_table, v_space
from src.corpus import check_properties, parse_algorithms, random_pairs, run_corpus, srg_pair
from src.graphio import GraphFormatError, parse_graph6, parse_graph_json, write_graph6
from src.graphs import triangle_trace
from src.refinement import compare_graphs, refine
from src.tensornet import BLOCK_MODES, handcrafted_triangle_model, model_forward, save_model
from src.training import TrainConfig, make_cycle_union_dataset, train, training_model

settings = Settings.from_env()
configure_logging(settings.log_level)

st.set_page_config(layout="wide")
st.title("Weisfeiler-Lehman Explorer")


def graph_input(label: str, default: str, key: str):
    """Text box accepting graph6, a JSON object or a generator such as gen:cycle:6."""
    text = st.text_input(label, default, key=key, help=f"graph6, JSON or gen:<{'|'.join(GENERATORS)}>[:size]").strip()
    try:
        if text.startswith("gen:"):
            return named_graph(text)
        if text.startswith("{"):
            return parse_graph_json(text)
        return parse_graph6(text)
    except (GraphFormatError, ValueError) as err:
        st.error(f"{label}: {err}")
        return None


t1, t2, t3, t4 = st.tabs(["Compare", "Triangle Network", "Corpus Check", "Training"])

with t1:
    c1, c2 = st.columns(2)
    with c1:
        G = graph_input("graph A", "gen:cycle:6", "compare_a")
    with c2:
        H = graph_input("graph B", "gen:two-cycles:3", "compare_b")
    c1, c2 = st.columns(2)
    variant = c1.selectbox("algorithm", ["cr1", "wl", "fwl"], index=2, key="compare_variant")
    k = c2.number_input("k", 1, 3, 1 if variant == "cr1" else 2, disabled=variant == "cr1", key="compare_k")
    _, c2, _ = st.columns(3)
    if G is not None and H is not None and c2.button("Compare", type="primary"):
        try:
            verdict = compare_graphs(G, H, k, variant, threads=settings.threads)
        except ValueError as err:
            st.error(str(err))
        else:
            st.session_state.verdict = verdict.to_dict()
            history = refine(G, k, variant)
            st.session_state.refinement = pd.DataFrame(
                {"round": range(len(history)), "colors": [C.num_colors() for C in history]}
            )
    if "verdict" in st.session_state:
        st.subheader(st.session_state.verdict["verdict"]["outcome"])
        st.json(st.session_state.verdict["verdict"])
        st.markdown("color classes of graph A per round")
        show_table(st.session_state.refinement, "refinement-rounds")

with t2:
    c1, c2 = st.columns(2)
    with c1:
        A = graph_input("graph A", "gen:cycle:6", "triangles_a")
    with c2:
        B = graph_input("graph B", "gen:two-cycles:3", "triangles_b")
    spec, params = handcrafted_triangle_model()
    rows = []
    for name, graph in (("A", A), ("B", B)):
        if graph is not None:
            graph = graph.uncolored()
            rows.append(
                {
                    "graph": name,
                    "graph6": write_graph6(graph),
                    "tr(A^3)": triangle_trace(graph),
                    "model output": float(model_forward(graph, spec, params)[0]),
                    "triangles": triangle_trace(graph) // 6,
                }
            )
    show_table(pd.DataFrame(rows), "triangle-network")

with t3:
    c1, c2, c3 = st.columns(3)
    n_max = c1.number_input("largest n", 4, 8, 6, key="corpus_n_max")
    pairs = c2.number_input("random pairs", 0, 500, 50, key="corpus_pairs")
    seed = c3.number_input("seed", 0, 2**31 - 1, 0, key="corpus_seed")
    include_srg = c1.checkbox("include rook 4x4 vs. Shrikhande", False)
    v_space(1, c2)
    _, c2, _ = st.columns(3)
    if c2.button("Run Corpus", type="primary"):
        corpus = random_pairs(pairs, n_max, seed) + ([srg_pair()] if include_srg else [])
        with st.spinner("refining..."):
            st.session_state.corpus_df = run_corpus(corpus, parse_algorithms([1, 2, 3], ["cr1", "wl", "fwl"]), settings.threads)
    if "corpus_df" in st.session_state:
        violations = check_properties(st.session_state.corpus_df)
        if violations.empty:
            st.success("CR1 and 2-WL agree, k-FWL and (k+1)-WL agree, and the hierarchy is monotone on every pair.")
        else:
            show_table(violations, "corpus-violations")
        show_table(st.session_state.corpus_df, "corpus-verdicts")

with t4:
    c1, c2, c3 = st.columns(3)
    m_list = c1.multiselect("cycle lengths m", [3, 4, 5, 6], [3, 4, 5])
    epochs = c2.number_input("epochs", 0, 2000, 200, 50)
    learning_rate = c3.number_input("learning rate", 0.0, 1.0, 0.05, 0.01, format="%.3f")
    width = c1.number_input("features per block", 1, 64, 16)
    decay = c2.number_input("learning rate decay", 0.5, 1.0, 0.95, 0.01)
    mode = c3.selectbox(
        "block type",
        BLOCK_MODES,
        format_func={"mp": "matrix product", "mp+lin": "matrix product + linear basis", "lin": "linear basis", "mlp": "feature-wise MLP"}.get,
    )
    _, c2, _ = st.columns(3)
    if m_list and c2.button("Train", type="primary"):
        dataset = make_cycle_union_dataset(m_list, 0)
        model = training_model(width=width, mode=mode)
        config = TrainConfig(learning_rate=learning_rate, decay=decay, epochs=epochs)
        with st.spinner("training..."):
            params, st.session_state.history = train(model, dataset, config)
        out = Path("results")
        reset_directory(out)
        save_model(out / "model", model, params)
        (out / "model.config.json").write_text(json.dumps(config.to_dict(), indent=2), encoding="utf-8")
    if "history" in st.session_state:
        final = st.session_state.history.iloc[-1]
        st.metric("final training accuracy", f"{final['accuracy']:.2f}")
        show_table(st.session_state.history, "training-history")
