"""
Reverse-mode gradients, losses and a gradient-descent loop for tensornet models,
plus the small synthetic datasets used to compare the matrix-product model with
its feature-wise-MLP baseline.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from src.graphs import Permutation, cycle, disjoint_union, permute_graph, random_gnp, triangle_trace
from src.tensornet import ModelSpec, NumericError, Params, model_forward, reference_architecture

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "loss", "accuracy", "learning_rate"]


class TrainingDiverged(NumericError):
    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")


class Tape:
    """
    Operation record of a single forward pass. Nodes are appended in evaluation
    order, so walking them backwards is a reverse topological sweep.
    """

    def __init__(self, params: Params):
        self.params = params
        self._values = []
        self._parents = []
        self._backs = []
        self._consumed = False

    def __len__(self) -> int:
        return len(self._values)

    def constant(self, value) -> int:
        return self.record(np.asarray(value, dtype=np.float64), (), None)

    def value(self, handle: int) -> np.ndarray:
        return self._values[handle]

    def record(self, value, parents, back) -> int:
        if self._consumed:
            raise RuntimeError("tape was already consumed by backward()")
        self._values.append(value)
        self._parents.append(tuple(parents))
        self._backs.append(back)
        return len(self._values) - 1

    def backward(self, output: int | None = None) -> np.ndarray:
        """
        Gradient of the scalar node `output` (the last node by default) with respect to
        every entry of params.values.
        """
        if self._consumed:
            raise RuntimeError("tape was already consumed by backward()")
        self._consumed = True
        output = len(self._values) - 1 if output is None else output
        if np.size(self._values[output]) != 1:
            raise ValueError("backward() needs a scalar output node")
        pending = {output: np.ones_like(self._values[output])}
        gradient = np.zeros_like(self.params.values)
        for node in range(output, -1, -1):
            g = pending.pop(node, None)
            if g is None or self._backs[node] is None:
                continue
            input_grads, param_grads = self._backs[node](g)
            for parent, grad in zip(self._parents[node], input_grads):
                pending[parent] = grad if parent not in pending else pending[parent] + grad
            for name, grad in param_grads.items():
                where, _ = self.params.offsets[name]
                gradient[where] += np.ravel(grad)
        return gradient


def backward(tape: Tape) -> np.ndarray:
    return tape.backward()


# Losses


def _require_finite(values, name):
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite {name}")


def _cross_entropy_vjp(label: int):
    def vjp(logits):
        if not 0 <= label < logits.size:
            raise ValueError(f"class label {label} outside [0, {logits.size})")
        shifted = logits - logits.max()
        log_probs = shifted - np.log(np.exp(shifted).sum())

        def back(g):
            probs = np.exp(log_probs)
            probs[label] -= 1.0
            return (g * probs,), {}

        return np.asarray(-log_probs[label]), back

    return vjp


def _abs_error_vjp(target):
    def vjp(prediction):
        diff = prediction - target

        def back(g):
            return (g * np.sign(diff),), {}

        return np.asarray(np.abs(diff).sum()), back

    return vjp


LOSSES = {"cross_entropy": _cross_entropy_vjp, "abs_error": _abs_error_vjp}


def loss_cross_entropy(logits, class_label: int) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    _require_finite(logits, "logits")
    return float(_cross_entropy_vjp(class_label)(logits)[0])


def loss_abs_error(prediction, target) -> float:
    prediction = np.asarray(prediction, dtype=np.float64)
    _require_finite(prediction, "prediction")
    _require_finite(target, "target")
    return float(_abs_error_vjp(target)(prediction)[0])


def loss_and_gradient(model: ModelSpec, params: Params, x, target, loss: str = "cross_entropy") -> tuple:
    """
    One forward and backward pass.

    Returns:
        tuple: (loss value, gradient with the shape of params.values)
    """
    tape = Tape(params)
    y = model_forward(x, model, params, tape)
    out, back = LOSSES[loss](target)(tape.value(y))
    tape.record(out, (y,), back)
    return float(out), tape.backward()


def _loss_value(model, params, x, target, loss):
    return float(LOSSES[loss](target)(model_forward(x, model, params))[0])


def grad_check(
    model: ModelSpec,
    params: Params,
    x,
    target,
    loss: str = "cross_entropy",
    samples: int = 200,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """
    Compares analytic gradients with central differences on a seeded subsample of
    coordinates (all of them when there are fewer than `samples`).

    The relative error of a coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6),
    taken over coordinates where either gradient exceeds 1e-8.

    Returns:
        float: Largest relative error over the checked coordinates.
    """
    _, analytic = loss_and_gradient(model, params, x, target, loss)
    rng = np.random.default_rng(seed)
    coordinates = rng.choice(len(params), size=min(samples, len(params)), replace=False)
    shifted = params.copy()
    worst = 0.0
    for i in coordinates:
        original = shifted.values[i]
        shifted.values[i] = original + h
        upper = _loss_value(model, shifted, x, target, loss)
        shifted.values[i] = original - h
        lower = _loss_value(model, shifted, x, target, loss)
        shifted.values[i] = original
        numeric = (upper - lower) / (2 * h)
        scale = max(abs(analytic[i]), abs(numeric))
        if scale > 1e-8:
            worst = max(worst, abs(analytic[i] - numeric) / max(scale, 1e-6))
    return worst


# Datasets


@dataclass(frozen=True)
class SyntheticDataset:
    samples: tuple
    seed: int
    family: str
    task: str = "classification"

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def default_loss(self) -> str:
        return "cross_entropy" if self.task == "classification" else "abs_error"


def make_cycle_union_dataset(m_values, seed: int) -> SyntheticDataset:
    """
    For every m: (C_2m, 0) and (C_m + C_m, 1), vertex labels shuffled with the seed.
    Both graphs of a pair are 2-regular on 2m vertices.
    """
    m_values = [int(m) for m in m_values]
    if any(m < 3 for m in m_values):
        raise ValueError(f"every m must be >= 3, got {m_values}")
    rng = np.random.default_rng(seed)
    samples = []
    for m in m_values:
        for G, label in ((cycle(2 * m), 0), (disjoint_union(cycle(m), cycle(m)), 1)):
            samples.append((permute_graph(G, Permutation.random(G.n, rng)), label))
    return SyntheticDataset(tuple(samples), seed, f"cycle-union m={','.join(map(str, m_values))}")


def make_triangle_count_dataset(n: int, count: int, seed: int, p: float = 0.5) -> SyntheticDataset:
    """G(n, p) graphs labelled with their triangle count tr(A^3) / 6."""
    seeds = np.random.default_rng(seed).integers(0, 2**32, size=count)
    samples = []
    for s in seeds:
        G = random_gnp(n, p, int(s))
        samples.append((G, np.array([triangle_trace(G) / 6.0])))
    return SyntheticDataset(tuple(samples), seed, f"triangle-count n={n} p={p}", task="regression")


# Training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    decay: float = 0.9
    decay_every: int = 20
    epochs: int = 500
    seed: int = 0
    batch_size: int | None = None
    momentum: float = 0.0
    loss: str | None = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.5 <= self.decay <= 1.0:
            raise ValueError(f"decay must lie in [0.5, 1], got {self.decay}")
        if self.decay_every < 1 or self.epochs < 0:
            raise ValueError("decay_every must be >= 1 and epochs >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.loss is not None and self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {sorted(LOSSES)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        return cls(**doc)


def training_model(
    input_channels: int = 2,
    output_dim: int = 2,
    blocks: int = 2,
    width: int = 16,
    mode: str = "mp",
    suffix: str = "i",
    pooling: str = "mean",
) -> ModelSpec:
    """Desk-scale model for the synthetic tasks; `mode` picks the block type, "mlp" is the baseline without matrix products."""
    return reference_architecture(
        input_channels,
        output_dim,
        width=width,
        depth=2,
        suffix=suffix,
        pooling=pooling,
        blocks=blocks,
        mode=mode,
        m4=True,
        fc_widths=(width,),
    )


def _correct(output, target, task) -> bool:
    if task == "classification":
        return int(np.argmax(output)) == int(target)
    return bool(np.all(np.abs(np.rint(output) - target) < 0.5))


def evaluate(model: ModelSpec, params: Params, dataset: SyntheticDataset, loss: str | None = None) -> tuple:
    """
    Returns:
        tuple: (mean loss, accuracy). Regression predictions count as correct when they round to the target.
    """
    loss = loss or dataset.default_loss
    losses, hits = [], 0
    for x, target in dataset:
        output = model_forward(x, model, params)
        losses.append(float(LOSSES[loss](target)(output)[0]))
        hits += _correct(output, target, dataset.task)
    return float(np.mean(losses)), hits / len(dataset)


def train(model: ModelSpec, dataset: SyntheticDataset, config: TrainConfig, params: Params | None = None) -> tuple:
    """
    Gradient descent with step decay (learning rate times `decay` every `decay_every` epochs)
    and optional momentum. Full-batch unless config.batch_size is set.

    Args:
        model (ModelSpec): Architecture.
        dataset (SyntheticDataset): Training samples.
        config (TrainConfig): Optimizer settings; config.seed also seeds the initialization.
        params (Params): Starting point; Params.init(model, config.seed) if None.

    Returns:
        tuple: (trained Params, history DataFrame with HISTORY_COLUMNS; row 0 is before training)
    """
    if not len(dataset):
        raise ValueError("cannot train on an empty dataset")
    loss = config.loss or dataset.default_loss
    params = Params.init(model, config.seed) if params is None else params.copy()
    rng = np.random.default_rng(config.seed)
    velocity = np.zeros_like(params.values)
    learning_rate = config.learning_rate
    samples = list(dataset)

    history = [(0, *evaluate(model, params, dataset, loss), learning_rate)]
    for epoch in range(1, config.epochs + 1):
        if config.batch_size is None:
            batches = [np.arange(len(samples))]
        else:
            order = rng.permutation(len(samples))
            batches = [order[i : i + config.batch_size] for i in range(0, len(order), config.batch_size)]
        for batch in batches:
            gradient = np.zeros_like(params.values)
            total = 0.0
            try:
                for i in batch:
                    value, grad = loss_and_gradient(model, params, samples[i][0], samples[i][1], loss)
                    total += value
                    gradient += grad
            except NumericError as err:
                logger.error("non-finite values at epoch %d: %s", epoch, err)
                raise TrainingDiverged(epoch, float("nan")) from err
            if not (np.isfinite(total) and np.all(np.isfinite(gradient))):
                logger.error("loss %.6g at epoch %d is not finite", total, epoch)
                raise TrainingDiverged(epoch, total)
            velocity = config.momentum * velocity - learning_rate * gradient / len(batch)
            params.values += velocity

        try:
            mean_loss, accuracy = evaluate(model, params, dataset, loss)
        except NumericError as err:
            logger.error("non-finite model output after epoch %d: %s", epoch, err)
            raise TrainingDiverged(epoch, float("nan")) from err
        history.append((epoch, mean_loss, accuracy, learning_rate))
        logger.debug("epoch %d loss %.6f accuracy %.3f", epoch, mean_loss, accuracy)
        if epoch % config.decay_every == 0:
            learning_rate *= config.decay
            logger.info("epoch %d: loss %.6f accuracy %.3f, learning rate now %.3g", epoch, mean_loss, accuracy, learning_rate)

    return params, pd.DataFrame(history, columns=HISTORY_COLUMNS)
