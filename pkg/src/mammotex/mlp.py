"""Single-hidden-layer perceptron with bipolar sigmoid units, trained by batch
backpropagation with momentum."""

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .descriptors import DescriptorVector, Scaler, apply_scaler
from .errors import DimensionMismatch, EmptyDataset, LengthMismatch, NonFiniteLoss

log = logging.getLogger(__name__)

FORMAT_TAG = "mammotex-mlp/1"


def hidden_units_rule1(n: int) -> int:
    """floor((n + 1) * 2 / 3), computed in integers."""
    if n < 1:
        raise ValueError("input count must be >= 1")
    return (2 * (n + 1)) // 3


def hidden_units_rule2(n_i: int, n_o: int = 1) -> int:
    """ceil(sqrt(n_i * n_o)), computed in integers."""
    if n_i < 1 or n_o < 1:
        raise ValueError("node counts must be >= 1")
    prod = n_i * n_o
    root = math.isqrt(prod)
    return root if root * root == prod else root + 1


HIDDEN_RULES = {1: hidden_units_rule1, 2: lambda n: hidden_units_rule2(n, 1)}


@dataclass(frozen=True)
class LayerSizes:
    input: int
    hidden: int
    output: int = 1

    def __post_init__(self):
        if min(self.input, self.hidden, self.output) < 1:
            raise ValueError(f"layer sizes must be >= 1: {self}")
        if self.output != 1:
            raise ValueError("only a single output node is supported")

    @classmethod
    def for_rule(cls, n_inputs: int, rule: int) -> "LayerSizes":
        return cls(n_inputs, HIDDEN_RULES[rule](n_inputs), 1)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.3
    momentum: float = 0.9
    error_goal: float = 1e-4
    max_epochs: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.error_goal <= 0:
            raise ValueError("error_goal must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass(frozen=True)
class TrainOutcome:
    epochs_used: int
    final_mse: float
    converged: bool
    regression_train: float
    regression_test: float = float("nan")


def bipolar_sigmoid(z):
    # 2/(1+e^-z) - 1 == tanh(z/2), which stays accurate for large |z|
    return np.tanh(0.5 * np.asarray(z, dtype=np.float64))


class MlpModel:
    """Weights W1 (hidden x input), b1 (hidden), W2 (1 x hidden), b2 (1)."""

    def __init__(self, sizes: LayerSizes, W1, b1, W2, b2, scaler: Scaler | None = None,
                 config: TrainConfig | None = None):
        self.sizes = sizes
        self.W1 = np.array(W1, dtype=np.float64).reshape(sizes.hidden, sizes.input)
        self.b1 = np.array(b1, dtype=np.float64).reshape(sizes.hidden)
        self.W2 = np.array(W2, dtype=np.float64).reshape(sizes.output, sizes.hidden)
        self.b2 = np.array(b2, dtype=np.float64).reshape(sizes.output)
        self.scaler = scaler
        self.config = config

    @classmethod
    def initialize(cls, sizes: LayerSizes, seed: int, scaler=None, config=None) -> "MlpModel":
        rng = np.random.default_rng(seed)
        u = lambda *shape: rng.uniform(-0.5, 0.5, size=shape)
        return cls(sizes, u(sizes.hidden, sizes.input), u(sizes.hidden), u(sizes.output, sizes.hidden),
                   u(sizes.output), scaler, config)

    @property
    def params(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def copy(self) -> "MlpModel":
        return MlpModel(self.sizes, *[p.copy() for p in self.params], self.scaler, self.config)

    def forward_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.sizes.input:
            raise DimensionMismatch(f"network expects {self.sizes.input} inputs, got {X.shape[1]}")
        H = bipolar_sigmoid(X @ self.W1.T + self.b1)
        return bipolar_sigmoid(H @ self.W2.T + self.b2)[:, 0]

    def save(self, path) -> None:
        Path(path).write_text(dumps_model(self))

    @classmethod
    def load(cls, path) -> "MlpModel":
        return loads_model(Path(path).read_text())


def forward(model: MlpModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("forward takes a single input vector")
    return float(model.forward_batch(x[None, :])[0])


def loss_and_gradients(model: MlpModel, X, t):
    """MSE = sum((y - t)^2) / (2 m) and its gradients w.r.t. (W1, b1, W2, b2)."""
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    m = X.shape[0]
    H = bipolar_sigmoid(X @ model.W1.T + model.b1)
    y = bipolar_sigmoid(H @ model.W2.T + model.b2)[:, 0]
    err = y - t
    loss = float(err @ err) / (2 * m)
    # sigma'(z) = (1 - sigma(z)^2) / 2
    delta_out = (err / m) * 0.5 * (1.0 - y * y)
    gW2 = delta_out[None, :] @ H
    gb2 = np.array([delta_out.sum()])
    delta_hid = (delta_out[:, None] * model.W2) * 0.5 * (1.0 - H * H)
    gW1 = delta_hid.T @ X
    gb1 = delta_hid.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2], y


def regression_value(outputs, targets) -> float:
    """Pearson correlation between network outputs and targets (0 when either is constant)."""
    a = np.asarray(outputs, dtype=np.float64)
    b = np.asarray(targets, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise LengthMismatch("need at least two points")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0.0 or sb == 0.0:
        log.warning("regression value undefined for a constant vector; reporting 0")
        return 0.0
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))


def train(X, t, sizes: LayerSizes, config: TrainConfig = TrainConfig(), scaler: Scaler | None = None,
          X_test=None, t_test=None):
    """Full-batch gradient descent with momentum until MSE <= error_goal or max_epochs.

    ``X`` must already be scaled. ``epochs_used`` counts weight updates.
    Returns ``(model, outcome)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    t = np.asarray(t, dtype=np.float64)
    if X.shape[0] == 0 or X.size == 0:
        raise EmptyDataset("training set is empty")
    if X.shape[1] != sizes.input:
        raise DimensionMismatch(f"rows have {X.shape[1]} features, network expects {sizes.input}")
    if t.shape != (X.shape[0],):
        raise LengthMismatch(f"{X.shape[0]} rows but {t.size} targets")

    model = MlpModel.initialize(sizes, config.seed, scaler, config)
    velocity = [np.zeros_like(p) for p in model.params]
    epochs = 0
    while True:
        loss, grads, y = loss_and_gradients(model, X, t)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} after {epochs} epochs")
        if loss <= config.error_goal or epochs >= config.max_epochs:
            break
        for p, v, g in zip(model.params, velocity, grads):
            v *= config.momentum
            v -= config.learning_rate * g
            p += v
        epochs += 1

    r_train = regression_value(y, t) if t.size >= 2 else float("nan")
    r_test = float("nan")
    if X_test is not None and len(X_test) >= 2:
        r_test = regression_value(model.forward_batch(X_test), np.asarray(t_test, dtype=np.float64))
    outcome = TrainOutcome(epochs, loss, loss <= config.error_goal, r_train, r_test)
    return model, outcome


def classify(model: MlpModel, row) -> str:
    """``malignant`` when the network output is strictly positive, else ``benign``."""
    if isinstance(row, DescriptorVector):
        x = apply_scaler(model.scaler, row) if model.scaler is not None else row.values
    else:
        x = np.asarray(row, dtype=np.float64)
    return "malignant" if forward(model, x) > 0 else "benign"


def _floats(a):
    return [format(float(v), ".17g") for v in np.ravel(a)]


def dumps_model(model: MlpModel) -> str:
    """Self-describing JSON text; floats are written with 17 significant digits."""
    doc = {
        "format": FORMAT_TAG,
        "sizes": asdict(model.sizes),
        "activation": "bipolar_sigmoid",
        "W1": _floats(model.W1),
        "b1": _floats(model.b1),
        "W2": _floats(model.W2),
        "b2": _floats(model.b2),
        "scaler": None if model.scaler is None else
        {"mins": _floats(model.scaler.mins), "maxs": _floats(model.scaler.maxs)},
        "train_config": None if model.config is None else asdict(model.config),
    }
    return json.dumps(doc, indent=1) + "\n"


def loads_model(text: str) -> MlpModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"not a model file (format={doc.get('format')!r})")
    sizes = LayerSizes(**doc["sizes"])
    arr = lambda key: np.array([float(v) for v in doc[key]])
    scaler = None
    if doc.get("scaler"):
        scaler = Scaler([float(v) for v in doc["scaler"]["mins"]], [float(v) for v in doc["scaler"]["maxs"]])
    config = TrainConfig(**doc["train_config"]) if doc.get("train_config") else None
    return MlpModel(sizes, arr("W1"), arr("b1"), arr("W2"), arr("b2"), scaler, config)
