import json
import logging
from pathlib import Path

import networkx as nx
import numpy as np

from src.graphs import Graph, graph_from_networkx

logger = logging.getLogger(__name__)

GRAPH6_HEADER = b">>graph6<<"


class GraphFormatError(ValueError):
    """Malformed graph input. `offset` is the byte offset of the problem for graph6 input."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")


def _graph6_size(data: bytes, start: int) -> tuple:
    """Vertex count and length of the size field in `data` (values minus 63); `start` offsets errors."""
    if not data:
        raise GraphFormatError("missing size header", start)
    if data[0] < 63:
        return data[0], 1
    width = 6 if len(data) > 1 and data[1] == 63 else 3
    skip = 2 if width == 6 else 1
    field = data[skip : skip + width]
    if len(field) < width:
        raise GraphFormatError("truncated size header", start + len(data))
    n = 0
    for value in field:
        n = (n << 6) | value
    return n, skip + width


def _check_graph6(raw: bytes) -> bytes:
    """Validates one graph6 record and returns it without header or line ending."""
    start = len(GRAPH6_HEADER) if raw.startswith(GRAPH6_HEADER) else 0
    raw = raw.rstrip(b"\r\n")
    for offset in range(start, len(raw)):
        if not 63 <= raw[offset] <= 126:
            raise GraphFormatError(f"byte {raw[offset]} outside the graph6 alphabet", offset)
    data = bytes(value - 63 for value in raw[start:])
    n, header = _graph6_size(data, start)
    pairs = n * (n - 1) // 2
    groups = -(-pairs // 6)
    body = data[header:]
    if len(body) < groups:
        raise GraphFormatError(f"truncated: expected {groups} data bytes for n={n}, got {len(body)}", len(raw))
    if len(body) > groups:
        raise GraphFormatError(f"trailing data after {groups} data bytes", start + header + groups)
    padding = groups * 6 - pairs
    if groups and body[-1] & ((1 << padding) - 1):
        raise GraphFormatError("non-zero padding bits", len(raw) - 1)
    return raw[start:]


def parse_graph6(record: str | bytes) -> Graph:
    """
    Parses one graph6 record.

    Args:
        record (str | bytes): graph6 record, optionally prefixed with ">>graph6<<" and
            followed by a newline. Text is encoded as UTF-8, so error offsets count bytes.

    Returns:
        Graph: The uncolored graph.
    """
    raw = record.encode("utf-8") if isinstance(record, str) else bytes(record)
    return graph_from_networkx(nx.from_graph6_bytes(_check_graph6(raw)))


def write_graph6(G: Graph) -> str:
    if G.e:
        logger.warning("graph6 has no vertex colors, dropping %d color channels", G.e)
    return nx.to_graph6_bytes(G.to_networkx(), header=False).decode("ascii").rstrip("\n")


def parse_graph_json(text: str) -> Graph:
    """
    Parses {"n": int, "edges": [[i, j], ...], "colors": [[...], ...]} with 0-based vertex indices.
    An empty colors list means the graph is uncolored.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise GraphFormatError(f"invalid JSON: {err}") from err
    if not isinstance(doc, dict) or not isinstance(doc.get("n"), int) or doc["n"] < 0:
        raise GraphFormatError('expected an object with a non-negative integer "n"')
    n = doc["n"]
    adjacency = np.zeros((n, n), dtype=bool)
    for edge in doc.get("edges", []):
        if not (isinstance(edge, list) and len(edge) == 2 and all(isinstance(v, int) for v in edge)):
            raise GraphFormatError(f"edge must be a pair of integers, got {edge!r}")
        i, j = edge
        if not (0 <= i < n and 0 <= j < n):
            raise GraphFormatError(f"edge {edge} has an index outside [0, {n})")
        if i == j:
            raise GraphFormatError(f"self-loop at vertex {i}")
        if adjacency[i, j]:
            raise GraphFormatError(f"duplicate edge {edge}")
        adjacency[i, j] = adjacency[j, i] = True

    rows = doc.get("colors", [])
    if not isinstance(rows, list):
        raise GraphFormatError('"colors" must be a list of rows')
    if rows:
        if len(rows) != n:
            raise GraphFormatError(f"colors has {len(rows)} rows, expected {n}")
        widths = {len(row) if isinstance(row, list) else -1 for row in rows}
        if len(widths) != 1 or -1 in widths:
            raise GraphFormatError("ragged color rows")
        try:
            colors = np.array(rows, dtype=np.float64)
        except (TypeError, ValueError) as err:
            raise GraphFormatError(f"colors must be numbers: {err}") from err
    else:
        colors = np.zeros((n, 0))
    return Graph(adjacency, colors)


def write_graph_json(G: Graph) -> str:
    # float repr is the shortest string that round-trips the double exactly
    return json.dumps(
        {
            "n": G.n,
            "edges": [list(edge) for edge in G.edges()],
            "colors": G.colors.tolist() if G.e else [],
        }
    )


def _infer_format(path: Path) -> str:
    return "graph6" if path.suffix in (".g6", ".graph6", ".txt") else "json"


def load_graph(path, fmt: str | None = None) -> Graph:
    path = Path(path)
    fmt = fmt or _infer_format(path)
    if fmt == "graph6":
        return parse_graph6(path.read_bytes().strip())
    return parse_graph_json(path.read_text(encoding="utf-8"))


def read_graphs(path, fmt: str | None = None) -> list:
    """
    Reads a corpus file: one graph6 string or one JSON object per line.

    Args:
        path (Path): Corpus file.
        fmt (str): "graph6" or "json"; inferred from the suffix if None.

    Returns:
        list: The graphs in file order.
    """
    path = Path(path)
    fmt = fmt or _infer_format(path)
    parse = parse_graph6 if fmt == "graph6" else parse_graph_json
    graphs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            graphs.append(parse(line.strip()))
        except GraphFormatError as err:
            raise GraphFormatError(f"{path}:{lineno}: {err}") from err
    logger.info("read %d graphs from %s", len(graphs), path)
    return graphs


def write_graphs(path, graphs, fmt: str = "graph6") -> None:
    write = write_graph6 if fmt == "graph6" else write_graph_json
    Path(path).write_text("".join(write(G) + "\n" for G in graphs), encoding="utf-8")
