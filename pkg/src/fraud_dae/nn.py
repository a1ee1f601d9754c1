"""Small dense feed-forward network engine written directly on numpy.

Weights are stored ``out_dim x in_dim`` so a layer computes
``act(a @ W.T + b)`` on a batch ``a`` whose rows are samples.
Everything runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "linear")
LOSSES = ("mse", "softmax_xent")
LOG_EPS = 1e-12

FORMAT_MAGIC = "fraud-dae-network"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")


@dataclass
class Layer:
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str

    @property
    def spec(self) -> LayerSpec:
        out_dim, in_dim = self.weight.shape
        return LayerSpec(in_dim, out_dim, self.activation)


@dataclass
class NetworkParams:
    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        for idx, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.weight.shape[0],):
                raise ValueError(f"layer {idx}: bias shape {layer.bias.shape} does not match weight {layer.weight.shape}")
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"layer {idx}: unknown activation {layer.activation!r}")
        for idx in range(1, len(self.layers)):
            prev, cur = self.layers[idx - 1], self.layers[idx]
            if prev.weight.shape[0] != cur.weight.shape[1]:
                raise ValueError(
                    f"layer {idx}: in_dim {cur.weight.shape[1]} does not chain with previous out_dim {prev.weight.shape[0]}"
                )

    @property
    def specs(self) -> list[LayerSpec]:
        return [layer.spec for layer in self.layers]

    @property
    def widths(self) -> tuple[int, ...]:
        if not self.layers:
            return ()
        return (self.layers[0].weight.shape[1],) + tuple(l.weight.shape[0] for l in self.layers)

    @property
    def n_params(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def copy(self) -> "NetworkParams":
        return NetworkParams([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams(
            [Layer(np.zeros_like(l.weight), np.zeros_like(l.bias), l.activation) for l in self.layers]
        )

    def arrays(self) -> list[np.ndarray]:
        """Flat list of parameter arrays in layer order (weight, bias, weight, bias, ...)."""
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def equals(self, other: "NetworkParams") -> bool:
        if self.specs != other.specs:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 128
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


def init_network(specs: Sequence[LayerSpec], seed: int) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    if not specs:
        raise ValueError("need at least one layer")
    for idx in range(1, len(specs)):
        if specs[idx].in_dim != specs[idx - 1].out_dim:
            raise ValueError(
                f"layer {idx}: in_dim {specs[idx].in_dim} does not chain with previous out_dim {specs[idx - 1].out_dim}"
            )
    rng = np.random.default_rng(seed)
    layers = []
    for spec in specs:
        limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        weight = rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim))
        layers.append(Layer(weight, np.zeros(spec.out_dim), spec.activation))
    return NetworkParams(layers)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return z


def _activation_grad(a: np.ndarray, kind: str) -> np.ndarray:
    """Derivative of the activation expressed through its output ``a``."""
    if kind == "relu":
        return (a > 0).astype(a.dtype)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(a)


def _as_batch(batch, in_dim: int) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != in_dim:
        raise ValueError(f"batch shape {x.shape} incompatible with input width {in_dim}")
    return x


def forward(net: NetworkParams, batch) -> list[np.ndarray]:
    """Run the network and return ``[input, a_1, ..., a_L]``; the last entry is the output."""
    if not net.layers:
        raise ValueError("network has no layers")
    a = _as_batch(batch, net.layers[0].weight.shape[1])
    acts = [a]
    for layer in net.layers:
        a = _activate(a @ layer.weight.T + layer.bias, layer.activation)
        acts.append(a)
    return acts


def predict(net: NetworkParams, batch) -> np.ndarray:
    return forward(net, batch)[-1]


def mse_loss(pred, target) -> float:
    """Mean over rows of half the squared Euclidean reconstruction error."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.ndim != 2 or pred.shape[0] < 1:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(0.5 * np.sum(diff * diff) / pred.shape[0])


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"expected a 2-D logit matrix, got shape {z.shape}")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_labels(labels, m: int, k: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (m,):
        raise ValueError(f"labels shape {y.shape} does not match {m} rows")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= k):
        raise ValueError(f"labels must lie in 0..{k - 1}")
    return y


def cross_entropy_loss(probs, labels) -> float:
    """Mean negative log-probability of the true class, log clamped at ``LOG_EPS``."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValueError(f"expected an (m, k) probability matrix, got shape {p.shape}")
    y = _check_labels(labels, p.shape[0], p.shape[1])
    picked = p[np.arange(p.shape[0]), y]
    return float(-np.mean(np.log(np.maximum(picked, LOG_EPS))))


def loss_value(net: NetworkParams, batch, target, loss: str) -> float:
    out = predict(net, batch)
    if loss == "mse":
        return mse_loss(out, target)
    if loss == "softmax_xent":
        return cross_entropy_loss(softmax(out), target)
    raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")


def _output_delta(out: np.ndarray, target, loss: str) -> tuple[float, np.ndarray]:
    """Loss value and dLoss/d(output) for a batch."""
    m = out.shape[0]
    if loss == "mse":
        t = np.asarray(target, dtype=np.float64)
        if t.shape != out.shape:
            raise ValueError(f"target shape {t.shape} does not match output {out.shape}")
        diff = out - t
        return float(0.5 * np.sum(diff * diff) / m), diff / m
    if loss == "softmax_xent":
        y = _check_labels(target, m, out.shape[1])
        probs = softmax(out)
        rows = np.arange(m)
        picked = probs[rows, y]
        value = float(-np.mean(np.log(np.maximum(picked, LOG_EPS))))
        # gradient of softmax+xent w.r.t. its input; zero for rows where the clamp is active
        delta = probs.copy()
        delta[rows, y] -= 1.0
        delta[picked < LOG_EPS] = 0.0
        return value, delta / m
    raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")


def _backprop(net: NetworkParams, acts: list[np.ndarray], grad_out: np.ndarray) -> NetworkParams:
    grads = []
    delta = grad_out
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        dz = delta * _activation_grad(acts[idx + 1], layer.activation)
        grads.append(Layer(dz.T @ acts[idx], dz.sum(axis=0), layer.activation))
        if idx:
            delta = dz @ layer.weight
    return NetworkParams(grads[::-1])


def backward(net: NetworkParams, batch, target, loss: str) -> NetworkParams:
    """Analytic gradient of the selected loss w.r.t. every weight and bias."""
    return value_and_grad(net, batch, target, loss)[1]


def value_and_grad(net: NetworkParams, batch, target, loss: str) -> tuple[float, NetworkParams]:
    acts = forward(net, batch)
    value, grad_out = _output_delta(acts[-1], target, loss)
    return value, _backprop(net, acts, grad_out)


def sgd_step(net: NetworkParams, grads: NetworkParams, learning_rate: float) -> NetworkParams:
    if net.specs != grads.specs:
        raise ValueError("gradient shapes do not match network")
    return NetworkParams(
        [
            Layer(l.weight - learning_rate * g.weight, l.bias - learning_rate * g.bias, l.activation)
            for l, g in zip(net.layers, grads.layers)
        ]
    )


def train(
    net: NetworkParams,
    inputs,
    targets,
    loss: str,
    cfg: TrainConfig,
    epoch_inputs: Callable[[int], np.ndarray] | None = None,
) -> tuple[NetworkParams, list[float]]:
    """Mini-batch SGD over shuffled batches.

    Args:
        net: starting parameters (not modified).
        inputs: (n, d) training matrix.
        targets: (n, k) regression targets for ``mse`` or n class labels for ``softmax_xent``.
        loss: ``"mse"`` or ``"softmax_xent"``.
        cfg: epochs, batch size, learning rate and shuffling seed.
        epoch_inputs: optional callback returning the input matrix to use for a given
            epoch index; the denoising autoencoder uses it to redraw corruption.

    Returns:
        Final parameters and the per-epoch mean training loss.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training set is empty")
    n = x.shape[0]
    y = np.asarray(targets)
    if len(y) != n:
        raise ValueError(f"{len(y)} targets for {n} inputs")
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")

    rng = np.random.default_rng(cfg.seed)
    params = net.copy()
    history = []
    for epoch in range(cfg.epochs):
        xe = x if epoch_inputs is None else np.asarray(epoch_inputs(epoch), dtype=np.float64)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            value, grads = value_and_grad(params, xe[idx], y[idx], loss)
            params = sgd_step(params, grads, cfg.learning_rate)
            total += value * len(idx)
        history.append(total / n)
        if not np.isfinite(history[-1]):
            raise FloatingPointError(f"training diverged at epoch {epoch}: loss {history[-1]}")
    return params, history


def _precise_loss(net: NetworkParams, batch: np.ndarray, target, loss: str) -> np.longdouble:
    """Loss evaluated in extended precision, used as the finite-difference reference."""
    a = np.asarray(batch, dtype=np.longdouble)
    for layer in net.layers:
        z = a @ layer.weight.astype(np.longdouble).T + layer.bias.astype(np.longdouble)
        if layer.activation == "relu":
            a = np.maximum(z, 0)
        elif layer.activation == "sigmoid":
            a = 1 / (1 + np.exp(-z))
        else:
            a = z
    m = a.shape[0]
    if loss == "mse":
        diff = a - np.asarray(target, dtype=np.longdouble)
        return np.sum(diff * diff) / (2 * m)
    y = _check_labels(target, m, a.shape[1])
    probs = np.exp(a - a.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    return -np.mean(np.log(np.maximum(probs[np.arange(m), y], LOG_EPS)))


def gradient_check(net: NetworkParams, batch, target, loss: str, epsilon: float = 1e-5) -> float:
    """Max relative error between ``backward`` and central finite differences.

    The perturbed losses are evaluated in ``np.longdouble`` so that rounding in the
    reference stays well below the 1e-6 tolerance even for small gradient entries.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    x = _as_batch(batch, net.layers[0].weight.shape[1])
    analytic = backward(net, x, target, loss).arrays()
    probe = net.copy()
    worst = 0.0
    for arr, grad in zip(probe.arrays(), analytic):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = _precise_loss(probe, x, target, loss)
            flat[i] = orig - epsilon
            down = _precise_loss(probe, x, target, loss)
            flat[i] = orig
            step = np.longdouble(orig + epsilon) - np.longdouble(orig - epsilon)
            numeric = float((up - down) / step)
            denom = max(abs(gflat[i]), abs(numeric), 1e-12)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


# -- persistence ---------------------------------------------------------------


class ModelFormatError(ValueError):
    pass


def _fmt(values: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def dumps_network(net: NetworkParams, extra: dict[str, str] | None = None) -> str:
    """Serialize to the versioned text format.

    ``extra`` is an optional flat record (e.g. the noise spec of an autoencoder)
    stored ahead of the arrays.
    """
    lines = [f"{FORMAT_MAGIC} {FORMAT_VERSION}"]
    extra = extra or {}
    lines.append(f"meta {len(extra)}")
    for key, value in extra.items():
        if any(ch.isspace() for ch in key) or "\n" in str(value):
            raise ValueError(f"meta entry {key!r} cannot be serialized")
        lines.append(f"{key} {value}")
    lines.append(f"layers {len(net.layers)}")
    for spec in net.specs:
        lines.append(f"{spec.in_dim} {spec.out_dim} {spec.activation}")
    for layer in net.layers:
        for row in layer.weight:
            lines.append(_fmt(row))
        lines.append(_fmt(layer.bias))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_network(text: str) -> tuple[NetworkParams, dict[str, str]]:
    lines = text.splitlines()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ModelFormatError("model file is truncated")
        pos += 1
        return lines[pos - 1]

    head = take().split()
    if len(head) != 2 or head[0] != FORMAT_MAGIC:
        raise ModelFormatError("not a fraud-dae network file")
    try:
        version = int(head[1])
    except ValueError:
        raise ModelFormatError(f"bad format version {head[1]!r}") from None
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version} (this build reads version {FORMAT_VERSION})")

    try:
        tag, count = take().split()
        if tag != "meta":
            raise ModelFormatError("missing meta section")
        extra = {}
        for _ in range(int(count)):
            key, _, value = take().partition(" ")
            extra[key] = value
        tag, count = take().split()
        if tag != "layers":
            raise ModelFormatError("missing layers section")
        specs = []
        for _ in range(int(count)):
            in_dim, out_dim, act = take().split()
            specs.append(LayerSpec(int(in_dim), int(out_dim), act))
        layers = []
        for spec in specs:
            rows = [np.array(take().split(), dtype=np.float64) for _ in range(spec.out_dim)]
            weight = np.vstack(rows) if rows else np.empty((0, spec.in_dim))
            bias = np.array(take().split(), dtype=np.float64)
            if weight.shape != (spec.out_dim, spec.in_dim) or bias.shape != (spec.out_dim,):
                raise ModelFormatError(f"array shape does not match layer spec {spec}")
            layers.append(Layer(weight, bias, spec.activation))
        if take() != "end":
            raise ModelFormatError("missing end marker")
        net = NetworkParams(layers)
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise ModelFormatError(f"corrupt model file near line {pos}: {exc}") from None
    return net, extra


def save_network(path: str | Path, net: NetworkParams, extra: dict[str, str] | None = None) -> None:
    Path(path).write_text(dumps_network(net, extra))


def load_network(path: str | Path) -> tuple[NetworkParams, dict[str, str]]:
    return loads_network(Path(path).read_text())
