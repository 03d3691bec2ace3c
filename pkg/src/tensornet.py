"""
Dense float64 runtime for matrix-product graph networks.

A model is a chain of blocks followed by an invariant pooling head. Every block
applies feature-wise MLPs to an n x n x a tensor and multiplies matching
channels as n x n matrices, which keeps the whole model permutation invariant.

Forward operations are written as `vjp` functions returning the output and a
backward closure; `model_forward` runs them either plainly or on a tape (see
src.training.Tape), so the training code never re-implements the forward pass.
"""

import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from string import ascii_lowercase

import numpy as np

from src.graphs import DenseTensor3, Graph, graph_to_fwl_tensor, graph_to_tensor

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "identity")
BLOCK_MODES = ("mp", "mp+lin", "lin", "mlp")
POOLINGS = ("max", "sum", "mean")
SUFFIXES = ("i", "ii")
NUM_BASIS = 15
SPEC_VERSION = 1
PARAMS_MAGIC = b"WLNETPRM"
PARAMS_VERSION = 1


class NumericError(FloatingPointError):
    pass


def _array(T) -> np.ndarray:
    return T.data if isinstance(T, DenseTensor3) else np.asarray(T, dtype=np.float64)


def _check_finite(values: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite values in {where}")


# Specs


@dataclass(frozen=True)
class MLPSpec:
    """
    Fully connected stack applied to the last axis. One activation per layer;
    by default every layer uses the rectifier.
    """

    input_width: int
    hidden_widths: tuple = ()
    output_width: int = 1
    activations: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        if self.activations is None:
            object.__setattr__(self, "activations", ("relu",) * (len(self.hidden_widths) + 1))
        object.__setattr__(self, "activations", tuple(self.activations))
        if min(self.widths) < 1:
            raise ValueError(f"MLP widths must be >= 1, got {self.widths}")
        if len(self.activations) != len(self.layers):
            raise ValueError(f"{len(self.layers)} layers but {len(self.activations)} activations")
        if any(a not in ACTIVATIONS for a in self.activations):
            raise ValueError(f"activations must be among {ACTIVATIONS}, got {self.activations}")

    @property
    def widths(self) -> tuple:
        return (self.input_width, *self.hidden_widths, self.output_width)

    @property
    def layers(self) -> list:
        return list(zip(self.widths[:-1], self.widths[1:]))

    @property
    def parameter_count(self) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in self.layers)

    @classmethod
    def from_dict(cls, doc: dict) -> "MLPSpec":
        return cls(doc["input_width"], tuple(doc["hidden_widths"]), doc["output_width"], tuple(doc["activations"]))


@dataclass(frozen=True)
class BlockSpec:
    """
    m1, m2: a -> b feature-wise MLPs multiplied channel by channel; m3: skip branch
    (None is the identity); m4: optional MLP applied to the concatenated output.
    `mode` selects the branch set: "mp" (matrix product), "mp+lin" (matrix product
    and the equivariant linear basis), "lin" (linear basis only), "mlp" (m1 only,
    no matrix product).
    """

    input_width: int
    m1: MLPSpec = None
    m2: MLPSpec = None
    m3: MLPSpec = None
    m4: MLPSpec = None
    mode: str = "mp"
    lin_width: int = 0

    def __post_init__(self):
        if self.mode not in BLOCK_MODES:
            raise ValueError(f"mode must be one of {BLOCK_MODES}, got {self.mode!r}")
        needed = {"mp": ("m1", "m2"), "mp+lin": ("m1", "m2"), "lin": (), "mlp": ("m1",)}[self.mode]
        for name in needed:
            mlp = getattr(self, name)
            if mlp is None:
                raise ValueError(f"mode {self.mode} needs {name}")
            if mlp.input_width != self.input_width:
                raise ValueError(f"{name} input width {mlp.input_width} != block input width {self.input_width}")
        if "m2" in needed and self.m1.output_width != self.m2.output_width:
            raise ValueError("m1 and m2 must have the same output width")
        if self.m3 is not None and self.m3.input_width != self.input_width:
            raise ValueError("m3 input width must equal the block input width")
        if self.mode in ("lin", "mp+lin") and self.lin_width < 1:
            raise ValueError(f"mode {self.mode} needs lin_width >= 1")
        if self.m4 is not None and self.m4.input_width != self.concat_width:
            raise ValueError(f"m4 input width {self.m4.input_width} != concatenated width {self.concat_width}")

    @property
    def concat_width(self) -> int:
        width = self.input_width if self.m3 is None else self.m3.output_width
        if self.mode in ("mp", "mp+lin", "mlp"):
            width += self.m1.output_width
        if self.mode in ("lin", "mp+lin"):
            width += self.lin_width
        return width

    @property
    def output_width(self) -> int:
        return self.concat_width if self.m4 is None else self.m4.output_width

    @classmethod
    def standard(cls, input_width: int, width: int, depth: int = 2, mode: str = "mp", m4: bool = False) -> "BlockSpec":
        """m1, m2 with `depth` weight layers and hidden width `width`; m3 the identity."""
        mlp = MLPSpec(input_width, (width,) * (depth - 1), width) if mode != "lin" else None
        block = cls(
            input_width,
            m1=mlp,
            m2=mlp if mode in ("mp", "mp+lin") else None,
            mode=mode,
            lin_width=width if mode in ("lin", "mp+lin") else 0,
        )
        if m4:
            block = cls(**{**block.__dict__, "m4": MLPSpec(block.concat_width, (), width)})
        return block

    def to_dict(self) -> dict:
        doc = {"input_width": self.input_width, "mode": self.mode, "lin_width": self.lin_width}
        for name in ("m1", "m2", "m3", "m4"):
            mlp = getattr(self, name)
            doc[name] = None if mlp is None else asdict(mlp)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "BlockSpec":
        mlps = {name: None if doc[name] is None else MLPSpec.from_dict(doc[name]) for name in ("m1", "m2", "m3", "m4")}
        return cls(doc["input_width"], mode=doc["mode"], lin_width=doc["lin_width"], **mlps)


@dataclass(frozen=True)
class HeadSpec:
    """Suffix "i": pool the last block, then an FC stack. Suffix "ii": pool every block, one FC layer each, summed."""

    suffix: str = "i"
    hidden_widths: tuple = ()
    pooling: str = "max"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        if self.suffix not in SUFFIXES:
            raise ValueError(f"suffix must be one of {SUFFIXES}, got {self.suffix!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")


@dataclass(frozen=True)
class ModelSpec:
    input_channels: int
    blocks: tuple
    head: HeadSpec = field(default_factory=HeadSpec)
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        width = self.input_channels
        for i, block in enumerate(self.blocks):
            if block.input_width != width:
                raise ValueError(f"block {i} expects {block.input_width} channels, previous stage gives {width}")
            width = block.output_width
        if not self.blocks:
            raise ValueError("a model needs at least one block")
        if self.output_dim < 1:
            raise ValueError("output_dim must be >= 1")

    def head_mlps(self) -> dict:
        """Name -> MLPSpec for the head layers; the last layer of each is linear."""
        if self.head.suffix == "i":
            hidden = self.head.hidden_widths
            acts = ("relu",) * len(hidden) + ("identity",)
            return {"head.fc": MLPSpec(2 * self.blocks[-1].output_width, hidden, self.output_dim, acts)}
        return {
            f"head.block{i}": MLPSpec(2 * block.output_width, (), self.output_dim, ("identity",))
            for i, block in enumerate(self.blocks)
        }

    def layout(self) -> list:
        """Ordered (name, shape) list of every parameter array."""
        entries = []

        def add_mlp(prefix, mlp):
            for l, (fan_in, fan_out) in enumerate(mlp.layers):
                entries.append((f"{prefix}.layer{l}.weight", (fan_in, fan_out)))
                entries.append((f"{prefix}.layer{l}.bias", (fan_out,)))

        for i, block in enumerate(self.blocks):
            for name in ("m1", "m2", "m3", "m4"):
                mlp = getattr(block, name)
                if mlp is not None and not (name == "m2" and block.mode == "mlp"):
                    add_mlp(f"block{i}.{name}", mlp)
            if block.mode in ("lin", "mp+lin"):
                entries.append((f"block{i}.lin.coeff", (NUM_BASIS, block.input_width, block.lin_width)))
                entries.append((f"block{i}.lin.bias", (2, block.lin_width)))
        for prefix, mlp in self.head_mlps().items():
            add_mlp(prefix, mlp)
        return entries

    @property
    def parameter_count(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.layout())

    def to_dict(self) -> dict:
        return {
            "format_version": SPEC_VERSION,
            "input_channels": self.input_channels,
            "blocks": [block.to_dict() for block in self.blocks],
            "head": asdict(self.head),
            "output_dim": self.output_dim,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        if doc.get("format_version") != SPEC_VERSION:
            raise ValueError(f"unsupported model spec version {doc.get('format_version')}")
        head = doc["head"]
        return cls(
            doc["input_channels"],
            tuple(BlockSpec.from_dict(b) for b in doc["blocks"]),
            HeadSpec(head["suffix"], tuple(head["hidden_widths"]), head["pooling"]),
            doc["output_dim"],
        )


class Params:
    """Flat float64 parameter vector with a named offset map derived from a ModelSpec."""

    def __init__(self, spec: ModelSpec, values=None):
        self.spec = spec
        self.offsets = {}
        start = 0
        for name, shape in spec.layout():
            size = int(np.prod(shape))
            self.offsets[name] = (slice(start, start + size), shape)
            start += size
        self.values = np.zeros(start) if values is None else np.array(values, dtype=np.float64)
        if self.values.shape != (start,):
            raise ValueError(f"expected {start} parameters, got {self.values.shape}")

    @classmethod
    def zeros(cls, spec: ModelSpec) -> "Params":
        return cls(spec)

    @classmethod
    def init(cls, spec: ModelSpec, seed: int) -> "Params":
        """Zero-mean uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases included."""
        rng = np.random.default_rng(seed)
        params = cls(spec)
        for name, shape in spec.layout():
            if name.endswith(".coeff"):
                fan_in = shape[0] * shape[1]
            elif name.endswith("lin.bias"):
                fan_in = NUM_BASIS * params.offsets[name[: -len("bias")] + "coeff"][1][1]
            else:
                fan_in = params.offsets[name.replace(".bias", ".weight")][1][0]
            bound = 1.0 / np.sqrt(fan_in)
            params.view(name)[...] = rng.uniform(-bound, bound, size=shape)
        return params

    def view(self, name: str) -> np.ndarray:
        where, shape = self.offsets[name]
        return self.values[where].reshape(shape)

    def mlp_weights(self, prefix: str, mlp: MLPSpec) -> list:
        return [
            (self.view(f"{prefix}.layer{l}.weight"), self.view(f"{prefix}.layer{l}.bias"))
            for l in range(len(mlp.layers))
        ]

    def copy(self) -> "Params":
        return Params(self.spec, self.values.copy())

    def __len__(self) -> int:
        return self.values.size


def save_model(prefix, spec: ModelSpec, params: Params) -> tuple:
    """
    Writes `<prefix>.json` (versioned spec) and `<prefix>.params` (16-byte header, little-endian float64).

    Returns:
        tuple: The two written paths.
    """
    prefix = Path(prefix)
    spec_path, params_path = prefix.with_suffix(".json"), prefix.with_suffix(".params")
    spec_path.write_text(json.dumps(spec.to_dict(), indent=2), encoding="utf-8")
    header = PARAMS_MAGIC + struct.pack("<II", PARAMS_VERSION, len(params) & 0xFFFFFFFF)
    params_path.write_bytes(header + params.values.astype("<f8").tobytes())
    return spec_path, params_path


def load_model(prefix) -> tuple:
    prefix = Path(prefix)
    spec = ModelSpec.from_dict(json.loads(prefix.with_suffix(".json").read_text(encoding="utf-8")))
    payload = prefix.with_suffix(".params").read_bytes()
    if payload[:8] != PARAMS_MAGIC:
        raise ValueError("not a parameter file")
    version, count = struct.unpack("<II", payload[8:16])
    if version != PARAMS_VERSION:
        raise ValueError(f"unsupported parameter file version {version}")
    values = np.frombuffer(payload, dtype="<f8", offset=16)
    if values.size != spec.parameter_count or (values.size & 0xFFFFFFFF) != count:
        raise ValueError(f"parameter file holds {values.size} values, spec needs {spec.parameter_count}")
    return spec, Params(spec, values)


# Forward operations with backward closures


def _mlp_vjp(mlp: MLPSpec, weights: list, names: str | None = None):
    """Feature-wise MLP over the last axis; parameter gradients are reported under `names` if given."""

    def vjp(X):
        if X.shape[-1] != mlp.input_width:
            raise ValueError(f"MLP expects {mlp.input_width} features, got {X.shape[-1]}")
        H = X.reshape(-1, X.shape[-1])
        cache = []
        for (W, b), act in zip(weights, mlp.activations):
            Z = H @ W + b
            cache.append((H, Z, act))
            H = np.maximum(Z, 0.0) if act == "relu" else Z
        out = H.reshape(X.shape[:-1] + (mlp.output_width,))

        def back(g):
            G = g.reshape(-1, mlp.output_width)
            grads = {}
            for l in reversed(range(len(cache))):
                H, Z, act = cache[l]
                if act == "relu":
                    G = G * (Z > 0)
                if names is not None:
                    grads[f"{names}.layer{l}.weight"] = H.T @ G
                    grads[f"{names}.layer{l}.bias"] = G.sum(axis=0)
                G = G @ weights[l][0].T
            return (G.reshape(X.shape),), grads

        return out, back

    return vjp


def _feature_matmul(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.matmul(U.transpose(2, 0, 1), V.transpose(2, 0, 1)).transpose(1, 2, 0))


def _matmul_vjp(U, V):
    if U.shape != V.shape:
        raise ValueError(f"feature_matmul needs equal shapes, got {U.shape} and {V.shape}")
    out = _feature_matmul(U, V)

    def back(g):
        return (_feature_matmul(g, V.transpose(1, 0, 2)), _feature_matmul(U.transpose(1, 0, 2), g)), {}

    return out, back


def _concat_vjp(*parts):
    out = np.concatenate(parts, axis=-1)
    bounds = np.cumsum([p.shape[-1] for p in parts])[:-1]

    def back(g):
        return tuple(np.split(g, bounds, axis=-1)), {}

    return out, back


def _sum_vjp(*parts):
    def back(g):
        return tuple(g for _ in parts), {}

    return sum(parts[1:], parts[0].copy()), back


def _pool_indices(n: int):
    diagonal = np.arange(n) * (n + 1)
    off_diagonal = np.flatnonzero(~np.eye(n, dtype=bool).reshape(-1))
    return diagonal, off_diagonal


def _pool_vjp(reduction: str):
    if reduction not in POOLINGS:
        raise ValueError(f"pooling must be one of {POOLINGS}, got {reduction!r}")

    def vjp(X):
        n, c = X.shape[0], X.shape[-1]
        flat = X.reshape(n * n, c)
        groups = _pool_indices(n)
        values, argmax = [], []
        for idx in groups:
            part = flat[idx]
            if part.shape[0] == 0:
                values.append(np.zeros(c))
                argmax.append(None)
            elif reduction == "max":
                pick = part.argmax(axis=0)  # first index on ties
                values.append(part[pick, np.arange(c)])
                argmax.append(idx[pick])
            elif reduction == "sum":
                values.append(part.sum(axis=0))
            else:
                values.append(part.mean(axis=0))
        out = np.concatenate(values)

        def back(g):
            grad = np.zeros_like(flat)
            for half, idx in enumerate(groups):
                gh = g[half * c : (half + 1) * c]
                if idx.size == 0:
                    continue
                if reduction == "max":
                    np.add.at(grad, (argmax[half], np.arange(c)), gh)
                elif reduction == "sum":
                    grad[idx] += gh
                else:
                    grad[idx] += gh / idx.size
            return (grad.reshape(X.shape),), {}

        return out, back

    return vjp


def _outer(vectors: np.ndarray, n: int, rows: bool) -> np.ndarray:
    return np.broadcast_to(vectors[:, None, :] if rows else vectors[None, :, :], (n, n, vectors.shape[-1]))


# Linear permutation-equivariant maps R^{n x n} -> R^{n x n}, applied per channel:
# identity, transpose, row/column sums and the diagonal broadcast along rows or
# columns, total sum and trace broadcast to all entries, and the diagonal
# embeddings of the diagonal, row sums, column sums, total sum and trace.
_BASIS_OPS = (
    lambda X: X,
    lambda X: X.transpose(1, 0, 2),
    lambda X: _outer(X.sum(axis=1), X.shape[0], True),
    lambda X: _outer(X.sum(axis=1), X.shape[0], False),
    lambda X: _outer(X.sum(axis=0), X.shape[0], True),
    lambda X: _outer(X.sum(axis=0), X.shape[0], False),
    lambda X: _outer(np.einsum("iic->ic", X), X.shape[0], True),
    lambda X: _outer(np.einsum("iic->ic", X), X.shape[0], False),
    lambda X: np.broadcast_to(X.sum(axis=(0, 1)), X.shape),
    lambda X: np.broadcast_to(np.einsum("iic->c", X), X.shape),
    lambda X: np.eye(X.shape[0])[:, :, None] * np.einsum("iic->ic", X)[:, None, :],
    lambda X: np.eye(X.shape[0])[:, :, None] * X.sum(axis=1)[:, None, :],
    lambda X: np.eye(X.shape[0])[:, :, None] * X.sum(axis=0)[:, None, :],
    lambda X: np.eye(X.shape[0])[:, :, None] * X.sum(axis=(0, 1)),
    lambda X: np.eye(X.shape[0])[:, :, None] * np.einsum("iic->c", X),
)
# index of the adjoint of each basis operation
_BASIS_ADJOINT = (0, 1, 2, 4, 3, 5, 11, 12, 8, 13, 10, 6, 7, 9, 14)


def linear_basis(T) -> np.ndarray:
    """All 15 basis maps applied to every channel: array of shape (15, n, n, c)."""
    X = _array(T)
    return np.stack([op(X) for op in _BASIS_OPS])


def _linear_vjp(coeff: np.ndarray, bias: np.ndarray, names: str | None = None):
    def vjp(X):
        if coeff.shape[:2] != (NUM_BASIS, X.shape[-1]):
            raise ValueError(f"expected coefficients of shape ({NUM_BASIS}, {X.shape[-1]}, c_out), got {coeff.shape}")
        n = X.shape[0]
        basis = linear_basis(X)
        out = np.einsum("bijc,bco->ijo", basis, coeff) + bias[0] + np.eye(n)[:, :, None] * bias[1]

        def back(g):
            mixed = np.einsum("ijo,bco->bijc", g, coeff)
            grad = sum(_BASIS_OPS[_BASIS_ADJOINT[b]](mixed[b]) for b in range(NUM_BASIS))
            grads = {}
            if names is not None:
                grads[f"{names}.coeff"] = np.einsum("bijc,ijo->bco", basis, g)
                grads[f"{names}.bias"] = np.stack([g.sum(axis=(0, 1)), np.einsum("iio->o", g)])
            return (np.asarray(grad),), grads

        return out, back

    return vjp


# Public operations


def apply_mlp_featurewise(T, mlp: MLPSpec, weights: list) -> DenseTensor3:
    """
    Applies an MLP to the feature vector at every position independently.

    Args:
        T (DenseTensor3): Input with mlp.input_width channels.
        mlp (MLPSpec): The layer structure.
        weights (list): One (W, b) pair per layer, W of shape (fan_in, fan_out).

    Returns:
        DenseTensor3: Output with mlp.output_width channels.
    """
    return DenseTensor3(_mlp_vjp(mlp, weights)(_array(T))[0])


def feature_matmul(U, V) -> DenseTensor3:
    """Channel-wise n x n matrix product: W[:, :, j] = U[:, :, j] @ V[:, :, j]."""
    return DenseTensor3(_matmul_vjp(_array(U), _array(V))[0])


def invariant_pool(T, reduction: str = "max") -> np.ndarray:
    """
    Reduces the diagonal and the off-diagonal entries of every channel.

    Returns:
        np.ndarray: 2c values, the c diagonal reductions followed by the c off-diagonal ones.
        An empty off-diagonal (n = 1) reduces to 0.
    """
    return _pool_vjp(reduction)(_array(T))[0]


def equivariant_linear_basis_apply(T, coefficients, bias=None) -> DenseTensor3:
    """
    Linear equivariant layer: sum over basis maps and input channels of coefficient-weighted
    basis outputs, plus the two equivariant bias patterns (all-ones and identity).

    Args:
        T: n x n x c_in tensor.
        coefficients: array of shape (15, c_in, c_out).
        bias: array of shape (2, c_out), zeros if None.
    """
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.ndim != 3:
        raise ValueError(f"expected coefficients of shape (15, c_in, c_out), got {coefficients.shape}")
    bias = np.zeros((2, coefficients.shape[2])) if bias is None else np.asarray(bias, dtype=np.float64)
    if bias.shape != (2, coefficients.shape[2]):
        raise ValueError(f"expected bias of shape (2, {coefficients.shape[2]}), got {bias.shape}")
    return DenseTensor3(_linear_vjp(coefficients, bias)(_array(T))[0])


def generalized_matmul(*tensors) -> np.ndarray:
    """
    k-fold product of order-k tensors: out[i] = sum_j prod_q A_q[i with position q replaced by j].
    For k = 2 this is A_2 @ A_1.
    """
    k = len(tensors)
    arrays = [np.asarray(t, dtype=np.float64) for t in tensors]
    if k < 2 or k > 12:
        raise ValueError(f"generalized_matmul supports 2 <= k <= 12 tensors, got {k}")
    n = arrays[0].shape[0]
    for a in arrays:
        if a.shape != (n,) * k:
            raise ValueError(f"every tensor must have shape {(n,) * k}, got {a.shape}")
    index = ascii_lowercase[:k]
    operands = [index[:q] + "z" + index[q + 1 :] for q in range(k)]
    return np.einsum(",".join(operands) + "->" + index, *arrays)


def _run(tape, vjp, *inputs):
    if tape is None:
        return vjp(*inputs)[0]
    out, back = vjp(*[tape.value(h) for h in inputs])
    return tape.record(out, inputs, back)


def _block(tape, h, block: BlockSpec, params: Params, index: int):
    prefix = f"block{index}"

    def mlp(name):
        spec = getattr(block, name)
        return _mlp_vjp(spec, params.mlp_weights(f"{prefix}.{name}", spec), f"{prefix}.{name}")

    parts = [h if block.m3 is None else _run(tape, mlp("m3"), h)]
    if block.mode in ("mp", "mp+lin"):
        parts.append(_run(tape, _matmul_vjp, _run(tape, mlp("m1"), h), _run(tape, mlp("m2"), h)))
    if block.mode in ("lin", "mp+lin"):
        lin = _linear_vjp(params.view(f"{prefix}.lin.coeff"), params.view(f"{prefix}.lin.bias"), f"{prefix}.lin")
        parts.append(_run(tape, lin, h))
    if block.mode == "mlp":
        parts.append(_run(tape, mlp("m1"), h))
    out = _run(tape, _concat_vjp, *parts)
    if block.m4 is not None:
        out = _run(tape, mlp("m4"), out)
    return out


def block_forward(T, block: BlockSpec, params: Params, index: int = 0) -> DenseTensor3:
    """Output of block `index` of params.spec: (m3(T), m1(T) * m2(T) channel-wise), then m4 if present."""
    X = _array(T)
    if X.shape[-1] != block.input_width:
        raise ValueError(f"block expects {block.input_width} channels, got {X.shape[-1]}")
    return DenseTensor3(_block(None, X, block, params, index))


def model_input(x, model: ModelSpec) -> np.ndarray:
    """Graphs are encoded with graph_to_tensor or graph_to_fwl_tensor, whichever matches the input width."""
    if isinstance(x, Graph):
        if model.input_channels == x.e + 1:
            x = graph_to_tensor(x)
        elif model.input_channels == x.e + 2:
            x = graph_to_fwl_tensor(x)
        else:
            raise ValueError(f"model expects {model.input_channels} channels, graph has e={x.e}")
    X = _array(x)
    if X.ndim != 3 or X.shape[-1] != model.input_channels:
        raise ValueError(f"model expects {model.input_channels} input channels, got shape {X.shape}")
    return X


def model_forward(x, model: ModelSpec, params: Params, tape=None):
    """
    Runs blocks then the head. Without a tape, returns the output vector; with a
    tape, records every operation on it and returns the handle of the output.
    """
    X = model_input(x, model)
    h = X if tape is None else tape.constant(X)
    outputs = []
    for i, block in enumerate(model.blocks):
        h = _block(tape, h, block, params, i)
        outputs.append(h)
    pool = _pool_vjp(model.head.pooling)
    heads = model.head_mlps()
    if model.head.suffix == "i":
        ((name, mlp),) = heads.items()
        y = _run(tape, _mlp_vjp(mlp, params.mlp_weights(name, mlp), name), _run(tape, pool, outputs[-1]))
    else:
        terms = [
            _run(tape, _mlp_vjp(mlp, params.mlp_weights(name, mlp), name), _run(tape, pool, out))
            for (name, mlp), out in zip(heads.items(), outputs)
        ]
        y = _run(tape, _sum_vjp, *terms)
    _check_finite(y if tape is None else tape.value(y), "model output")
    return y


def handcrafted_triangle_model() -> tuple:
    """
    Two hand-set blocks computing A^2 and then A^3 from an uncolored graph tensor, read out
    by summing the diagonal: the output is tr(A^3), six times the number of triangles.
    """
    linear = ("identity",)
    block1 = BlockSpec(
        1,
        m1=MLPSpec(1, (), 1, linear),
        m2=MLPSpec(1, (), 1, linear),
    )
    block2 = BlockSpec(
        2,
        m1=MLPSpec(2, (), 1, linear),
        m2=MLPSpec(2, (), 1, linear),
    )
    spec = ModelSpec(1, (block1, block2), HeadSpec("i", (), "sum"), 1)
    params = Params.zeros(spec)
    params.view("block0.m1.layer0.weight")[:] = [[1.0]]
    params.view("block0.m2.layer0.weight")[:] = [[1.0]]
    # block 2 input channels: (A, A^2); multiply A^2 by A
    params.view("block1.m1.layer0.weight")[:] = [[0.0], [1.0]]
    params.view("block1.m2.layer0.weight")[:] = [[1.0], [0.0]]
    # pooled vector: diagonal sums of (A, A^2, A^3), then off-diagonal sums
    params.view("head.fc.layer0.weight")[:, 0] = [0, 0, 1, 0, 0, 0]
    return spec, params


def reference_architecture(
    input_channels: int,
    output_dim: int,
    width: int = 400,
    depth: int = 2,
    suffix: str = "i",
    pooling: str = "max",
    blocks: int = 3,
    mode: str = "mp",
    m4: bool = True,
    fc_widths: tuple = (512, 256),
) -> ModelSpec:
    """
    Identical blocks with identity skip (m3), m1 and m2 of `depth` layers and `width`
    features, an optional single-layer m4 after each block, and head suffix (i) or (ii).
    """
    specs = []
    a = input_channels
    for _ in range(blocks):
        block = BlockSpec.standard(a, width, depth, mode, m4)
        specs.append(block)
        a = block.output_width
    head = HeadSpec(suffix, fc_widths if suffix == "i" else (), pooling)
    return ModelSpec(input_channels, tuple(specs), head, output_dim)
