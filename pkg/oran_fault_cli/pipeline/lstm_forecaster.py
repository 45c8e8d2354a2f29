import dataclasses
import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..exceptions import (
    DatasetIOException,
    DimensionMismatchException,
    NonFiniteLossException,
)
from ..utils import derive_rng
from .preprocess import WindowSet

logger = logging.getLogger(__name__)

DEFAULT_INPUT_SIZE = 10
DEFAULT_HIDDEN_SIZE = 32
DEFAULT_LAYERS = 2
DEFAULT_WINDOW_STEPS = 61
PREDICT_CHUNK = 1024


def tensor_shapes(
    input_size: int, hidden_size: int, n_layers: int, output_size: int
) -> Dict[str, Tuple[int, ...]]:
    h = hidden_size
    shapes: Dict[str, Tuple[int, ...]] = {}
    for layer in range(n_layers):
        shapes[f"l{layer}.W"] = (4 * h, input_size if layer == 0 else h)
        shapes[f"l{layer}.U"] = (4 * h, h)
        shapes[f"l{layer}.b"] = (4 * h,)
    shapes["fc.W"] = (output_size, h)
    shapes["fc.b"] = (output_size,)
    return shapes


@dataclasses.dataclass
class LstmParams:
    """
    Stacked LSTM with a fully connected head. Layer ``l`` holds ``l{l}.W``
    (``4h x in``), ``l{l}.U`` (``4h x h``) and ``l{l}.b`` (``4h``) with gate
    rows ordered input, forget, cell, output. The head holds ``fc.W``
    (``out x h``) and ``fc.b`` (``out``)
    """

    input_size: int
    hidden_size: int
    n_layers: int
    output_size: int
    tensors: Dict[str, np.ndarray]

    def __post_init__(self):
        for name, shape in self.expected_shapes().items():
            if name not in self.tensors:
                raise DimensionMismatchException(f"Missing LSTM tensor {name}")
            if self.tensors[name].shape != shape:
                raise DimensionMismatchException(
                    f"LSTM tensor {name} has shape {self.tensors[name].shape}, "
                    f"expected {shape}"
                )

    def expected_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return tensor_shapes(
            self.input_size, self.hidden_size, self.n_layers, self.output_size
        )

    def names(self) -> List[str]:
        return list(self.expected_shapes())

    @classmethod
    def zeros(
        cls,
        input_size: int = DEFAULT_INPUT_SIZE,
        hidden_size: int = DEFAULT_HIDDEN_SIZE,
        n_layers: int = DEFAULT_LAYERS,
        output_size: int = DEFAULT_INPUT_SIZE,
    ) -> "LstmParams":
        shapes = tensor_shapes(input_size, hidden_size, n_layers, output_size)
        tensors = {name: np.zeros(shape) for name, shape in shapes.items()}
        return cls(input_size, hidden_size, n_layers, output_size, tensors)

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        input_size: int = DEFAULT_INPUT_SIZE,
        hidden_size: int = DEFAULT_HIDDEN_SIZE,
        n_layers: int = DEFAULT_LAYERS,
        output_size: int = DEFAULT_INPUT_SIZE,
    ) -> "LstmParams":
        """
        Every tensor uniform in ``[-1/sqrt(h), 1/sqrt(h)]``, drawn in tensor order
        """
        params = cls.zeros(input_size, hidden_size, n_layers, output_size)
        bound = 1.0 / math.sqrt(hidden_size)
        for name in params.names():
            params.tensors[name] = rng.uniform(
                -bound, bound, size=params.tensors[name].shape
            )
        return params

    def copy(self) -> "LstmParams":
        return LstmParams(
            self.input_size,
            self.hidden_size,
            self.n_layers,
            self.output_size,
            {name: tensor.copy() for name, tensor in self.tensors.items()},
        )

    def is_finite(self) -> bool:
        return all(np.isfinite(tensor).all() for tensor in self.tensors.values())


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    clip_norm: float = 5.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate < 0 or self.clip_norm <= 0:
            raise ValueError("learning_rate must be >= 0 and clip_norm > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise ValueError("Adam moments must be in [0, 1) and epsilon > 0")


@dataclasses.dataclass
class _LayerCache:
    """
    Time major activations of one layer. ``cells`` and ``hidden`` carry a
    leading zero state, so row ``t`` is the state before step ``t``
    """

    inputs: np.ndarray
    gates: np.ndarray
    cells: np.ndarray
    cell_tanh: np.ndarray
    hidden: np.ndarray


def _check_batch(
    params: LstmParams, batch: np.ndarray, expected_steps: Optional[int]
):
    if batch.ndim != 3 or batch.shape[2] != params.input_size:
        raise DimensionMismatchException(
            f"Windows must be batch x steps x {params.input_size}, got {batch.shape}"
        )
    if expected_steps is not None and batch.shape[1] != expected_steps:
        raise DimensionMismatchException(
            f"Windows must have {expected_steps} steps, got {batch.shape[1]}"
        )


def _forward(
    params: LstmParams, batch: np.ndarray
) -> Tuple[np.ndarray, List[_LayerCache]]:
    n, steps, _ = batch.shape
    h = params.hidden_size
    layer_input = np.ascontiguousarray(batch.transpose(1, 0, 2))
    caches: List[_LayerCache] = []
    for layer in range(params.n_layers):
        w = params.tensors[f"l{layer}.W"]
        u_t = np.ascontiguousarray(params.tensors[f"l{layer}.U"].T)
        # pre-activations of every step, turned into gate values in place
        gates = layer_input @ w.T + params.tensors[f"l{layer}.b"]
        cells = np.zeros((steps + 1, n, h))
        cell_tanh = np.empty((steps, n, h))
        hidden = np.zeros((steps + 1, n, h))
        for t in range(steps):
            z = gates[t]
            z += hidden[t] @ u_t
            expit(z[:, : 2 * h], out=z[:, : 2 * h])
            np.tanh(z[:, 2 * h : 3 * h], out=z[:, 2 * h : 3 * h])
            expit(z[:, 3 * h :], out=z[:, 3 * h :])
            c_t = cells[t + 1]
            np.multiply(z[:, h : 2 * h], cells[t], out=c_t)
            c_t += z[:, :h] * z[:, 2 * h : 3 * h]
            np.tanh(c_t, out=cell_tanh[t])
            np.multiply(z[:, 3 * h :], cell_tanh[t], out=hidden[t + 1])
        caches.append(_LayerCache(layer_input, gates, cells, cell_tanh, hidden))
        layer_input = hidden[1:]
    output = hidden[-1] @ params.tensors["fc.W"].T + params.tensors["fc.b"]
    return output, caches


def forward(
    params: LstmParams,
    window: np.ndarray,
    expected_steps: Optional[int] = DEFAULT_WINDOW_STEPS,
) -> np.ndarray:
    """
    :param window: ``steps x input_size`` reduced telemetry, oldest row first
    :return: forecast of the reduced vector ``m`` steps after the last row
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise DimensionMismatchException("A single window must be a 2-D matrix")
    return predict_batch(params, window[None], expected_steps)[0]


def predict_batch(
    params: LstmParams,
    windows: np.ndarray,
    expected_steps: Optional[int] = DEFAULT_WINDOW_STEPS,
) -> np.ndarray:
    """
    :param windows: ``n x steps x input_size``
    :return: ``n x output_size`` forecasts in input order
    """
    windows = np.asarray(windows, dtype=np.float64)
    _check_batch(params, windows, expected_steps)
    outputs = [
        _forward(params, windows[start : start + PREDICT_CHUNK])[0]
        for start in range(0, windows.shape[0], PREDICT_CHUNK)
    ]
    if not outputs:
        return np.empty((0, params.output_size))
    return np.concatenate(outputs)


def predict_windows(params: LstmParams, windows: WindowSet) -> np.ndarray:
    """
    Forecast every window of a reduced `WindowSet` without materialising all of
    its inputs at once
    """
    outputs = []
    for start in range(0, len(windows), PREDICT_CHUNK):
        stop = min(start + PREDICT_CHUNK, len(windows))
        chunk = windows.subset(np.arange(start, stop))
        outputs.append(predict_batch(params, chunk.inputs, windows.k + 1))
    if not outputs:
        return np.empty((0, params.output_size))
    return np.concatenate(outputs)


def mse_loss(params: LstmParams, batch: np.ndarray, targets: np.ndarray) -> float:
    output, _ = _forward(params, np.asarray(batch, dtype=np.float64))
    return float(np.mean((output - targets) ** 2))


def loss_and_gradients(
    params: LstmParams, batch: np.ndarray, targets: np.ndarray
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Mean squared error over ``batch x outputs`` and its gradient for every
    tensor, by backpropagation through time over the full window
    """
    batch = np.asarray(batch, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if batch.ndim == 2:
        batch, targets = batch[None], targets[None]
    output, caches = _forward(params, batch)
    error = output - targets
    loss = float(np.mean(error**2))

    h = params.hidden_size
    n, steps, _ = batch.shape
    grads: Dict[str, np.ndarray] = {}
    d_output = 2.0 * error / error.size
    grads["fc.W"] = d_output.T @ caches[-1].hidden[-1]
    grads["fc.b"] = d_output.sum(axis=0)

    d_hidden = np.zeros((steps, n, h))
    d_hidden[-1] = d_output @ params.tensors["fc.W"]
    for layer in reversed(range(params.n_layers)):
        cache = caches[layer]
        u = params.tensors[f"l{layer}.U"]
        gates = cache.gates
        # derivative of every gate activation w.r.t. its pre-activation
        slope = gates * (1.0 - gates)
        slope[..., 2 * h : 3 * h] = 1.0 - gates[..., 2 * h : 3 * h] ** 2
        cell_from_hidden = gates[..., 3 * h :] * (1.0 - cache.cell_tanh**2)
        d_z = np.empty((steps, n, 4 * h))
        dh_next = np.zeros((n, h))
        dc_next = np.zeros((n, h))
        for t in reversed(range(steps)):
            gate = gates[t]
            row = d_z[t]
            dh = d_hidden[t] + dh_next
            dc = dh * cell_from_hidden[t]
            dc += dc_next
            np.multiply(dc, gate[:, 2 * h : 3 * h], out=row[:, :h])
            np.multiply(dc, cache.cells[t], out=row[:, h : 2 * h])
            np.multiply(dc, gate[:, :h], out=row[:, 2 * h : 3 * h])
            np.multiply(dh, cache.cell_tanh[t], out=row[:, 3 * h :])
            row *= slope[t]
            dc_next = dc * gate[:, h : 2 * h]
            dh_next = row @ u

        flat = d_z.reshape(steps * n, 4 * h)
        grads[f"l{layer}.W"] = flat.T @ cache.inputs.reshape(steps * n, -1)
        grads[f"l{layer}.U"] = flat.T @ cache.hidden[:-1].reshape(steps * n, h)
        grads[f"l{layer}.b"] = flat.sum(axis=0)
        if layer:
            d_hidden = d_z @ params.tensors[f"l{layer}.W"]
    return loss, grads


def clip_gradients(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """
    Scale all gradients in place so their global norm is at most `max_norm`

    :return: norm before clipping
    """
    norm = math.sqrt(sum(float((g**2).sum()) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


class _Adam:
    def __init__(self, params: LstmParams, config: TrainConfig):
        self.config = config
        self.step = 0
        self.first = {name: np.zeros_like(t) for name, t in params.tensors.items()}
        self.second = {name: np.zeros_like(t) for name, t in params.tensors.items()}

    def update(self, params: LstmParams, grads: Dict[str, np.ndarray]):
        config = self.config
        self.step += 1
        first_correction = 1.0 - config.beta1**self.step
        second_correction = 1.0 - config.beta2**self.step
        for name, grad in grads.items():
            self.first[name] = (
                config.beta1 * self.first[name] + (1 - config.beta1) * grad
            )
            self.second[name] = (
                config.beta2 * self.second[name] + (1 - config.beta2) * grad**2
            )
            first = self.first[name] / first_correction
            second = self.second[name] / second_correction
            params.tensors[name] -= (
                config.learning_rate * first / (np.sqrt(second) + config.epsilon)
            )


def train(
    windows: WindowSet,
    config: TrainConfig,
    hidden_size: int = DEFAULT_HIDDEN_SIZE,
    n_layers: int = DEFAULT_LAYERS,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[LstmParams, List[float]]:
    """
    Mini batch Adam on the MSE between the forecast and the window target

    :param windows: windows over reduced features
    :param rng: drives initialisation and batch order, derived from
        ``config.seed`` if not given
    :return: trained parameters and the mean training loss of every epoch
    :raises: NonFiniteLossException
    """
    if len(windows) == 0:
        raise ValueError("Cannot train on an empty window set")
    if rng is None:
        rng = derive_rng(config.seed, "pipeline.lstm")
    d = windows.n_features
    params = LstmParams.initialize(rng, d, hidden_size, n_layers, d)
    optimizer = _Adam(params, config)
    history: List[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(windows))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = windows.subset(order[start : start + config.batch_size])
            loss, grads = loss_and_gradients(params, batch.inputs, batch.targets)
            if not math.isfinite(loss):
                raise NonFiniteLossException(
                    f"Loss became {loss} in epoch {epoch} at batch "
                    f"{start // config.batch_size}"
                )
            clip_gradients(grads, config.clip_norm)
            optimizer.update(params, grads)
            total += loss * len(batch)
        history.append(total / len(order))
        logger.info("LSTM epoch %d/%d loss %.6g", epoch, config.epochs, history[-1])
    return params, history


GradientFunction = Callable[
    [LstmParams, np.ndarray, np.ndarray], Tuple[float, Dict[str, np.ndarray]]
]


def gradient_check(
    params: LstmParams,
    window: np.ndarray,
    target: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    coordinates_per_tensor: int = 200,
    step: float = 1e-5,
    gradient_fn: GradientFunction = loss_and_gradients,
) -> float:
    """
    Compare analytic gradients with central differences on up to
    `coordinates_per_tensor` random coordinates of every tensor (all of them
    when the tensor is smaller)

    :return: max relative error ``|a - n| / max(|a| + |n|, 1e-6)``
    """
    if rng is None:
        rng = derive_rng(0, "gradient_check")
    window = np.asarray(window, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if window.ndim == 2:
        window, target = window[None], target[None]
    _, analytic = gradient_fn(params, window, target)
    perturbed = params.copy()
    worst = 0.0
    for name in params.names():
        tensor = perturbed.tensors[name]
        flat = tensor.reshape(-1)
        count = min(coordinates_per_tensor, flat.shape[0])
        coordinates = np.sort(rng.choice(flat.shape[0], size=count, replace=False))
        for coordinate in coordinates:
            original = flat[coordinate]
            flat[coordinate] = original + step
            loss_plus = mse_loss(perturbed, window, target)
            flat[coordinate] = original - step
            loss_minus = mse_loss(perturbed, window, target)
            flat[coordinate] = original
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            exact = analytic[name].reshape(-1)[coordinate]
            error = abs(exact - numeric) / max(abs(exact) + abs(numeric), 1e-6)
            worst = max(worst, error)
    return worst


def write_lstm(params: LstmParams, path: str) -> None:
    """
    Header ``[lstm <input> <hidden> <layers> <output>]`` then one
    ``[tensor <name> <rows> <cols>]`` block per tensor, row major, full precision
    """
    lines = [
        f"[lstm {params.input_size} {params.hidden_size} {params.n_layers} "
        f"{params.output_size}]"
    ]
    for name in params.names():
        matrix = np.atleast_2d(params.tensors[name])
        lines.append(f"[tensor {name} {matrix.shape[0]} {matrix.shape[1]}]")
        lines += [",".join(repr(float(v)) for v in row) for row in matrix]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise DatasetIOException(path, str(e))


def _header(line: str, kind: str, path: str) -> List[str]:
    if not (line.startswith(f"[{kind} ") and line.endswith("]")):
        raise DatasetIOException(path, f"expected a [{kind} ...] header, got {line!r}")
    return line[1:-1].split()[1:]


def read_lstm(path: str) -> LstmParams:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line]
    except OSError as e:
        raise DatasetIOException(path, str(e))
    if not lines:
        raise DatasetIOException(path, "file is empty")

    try:
        input_size, hidden_size, n_layers, output_size = (
            int(v) for v in _header(lines[0], "lstm", path)
        )
        params = LstmParams.zeros(input_size, hidden_size, n_layers, output_size)
        position = 1
        while position < len(lines):
            name, rows, cols = _header(lines[position], "tensor", path)
            rows, cols = int(rows), int(cols)
            block = lines[position + 1 : position + 1 + rows]
            matrix = np.array([[float(v) for v in row.split(",")] for row in block])
            if matrix.shape != (rows, cols):
                raise DatasetIOException(path, f"tensor {name} is truncated")
            if name not in params.tensors:
                raise DatasetIOException(path, f"unknown tensor {name}")
            params.tensors[name] = matrix.reshape(params.tensors[name].shape)
            position += 1 + rows
    except ValueError as e:
        raise DatasetIOException(path, f"malformed LSTM file: {e}")
    return LstmParams(
        params.input_size,
        params.hidden_size,
        params.n_layers,
        params.output_size,
        params.tensors,
    )
