"""Small 1D-CNN kernel: forward, reverse-mode gradients, Adam, weights file.

Exactly four layer kinds (conv1d, max_pool1d, global_avg_pool1d, dense),
all "valid" (no padding), implemented on numpy arrays laid out
position-major, channel-minor. Activations are (L, C) per sample or
(B, L, C) batched; every public op accepts either.

The default profile reproduces the reference shape column
18x64 -> 3x64 -> 1x64 -> 64 -> {2|12} from a length-115 input.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

_EPS = 1e-7  # probability clamp for cross-entropy

_DEBUG_FINITE = False


def debug_checks(enabled: bool):
    """Toggle NaN/Inf assertions after every forward/backward step."""
    global _DEBUG_FINITE
    _DEBUG_FINITE = bool(enabled)


def _check_finite(name, *arrays):
    if _DEBUG_FINITE:
        for a in arrays:
            if a is not None and not np.all(np.isfinite(a)):
                raise FloatingPointError(f"non-finite values after {name}")


class ShapeError(ValueError):
    pass


class WeightsFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Layer specs and configs

@dataclass(frozen=True)
class Conv1dSpec:
    filters: int
    kernel: int
    stride: int
    activation: str = "relu"  # "relu" | "none"


@dataclass(frozen=True)
class MaxPool1dSpec:
    pool: int
    stride: int


@dataclass(frozen=True)
class GlobalAvgPoolSpec:
    pass


@dataclass(frozen=True)
class DenseSpec:
    units: int
    activation: str = "softmax"  # "softmax" | "sigmoid" | "none"


LayerSpec = Union[Conv1dSpec, MaxPool1dSpec, GlobalAvgPoolSpec, DenseSpec]

LOSS_BCE = "binary_cross_entropy"
LOSS_CCE = "categorical_cross_entropy"


@dataclass(frozen=True)
class ModelConfig:
    input_len: int
    layers: tuple[LayerSpec, ...]
    loss: str
    class_count: int
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 20
    epochs: int = 50
    seed: int = 0

    def output_shapes(self) -> list[tuple]:
        """Shape after each layer; raises ShapeError if the algebra fails."""
        shapes = []
        shape: tuple = (self.input_len, 1)
        for i, spec in enumerate(self.layers):
            if isinstance(spec, Conv1dSpec):
                if len(shape) != 2:
                    raise ShapeError(f"layer {i}: conv1d needs an (L, C) input, got {shape}")
                l_in, _ = shape
                if l_in < spec.kernel:
                    raise ShapeError(f"layer {i}: input length {l_in} < kernel {spec.kernel}")
                shape = ((l_in - spec.kernel) // spec.stride + 1, spec.filters)
            elif isinstance(spec, MaxPool1dSpec):
                if len(shape) != 2:
                    raise ShapeError(f"layer {i}: max_pool1d needs an (L, C) input, got {shape}")
                l_in, c = shape
                if l_in < spec.pool:
                    raise ShapeError(f"layer {i}: input length {l_in} < pool {spec.pool}")
                shape = ((l_in - spec.pool) // spec.stride + 1, c)
            elif isinstance(spec, GlobalAvgPoolSpec):
                if len(shape) != 2:
                    raise ShapeError(f"layer {i}: global_avg_pool1d needs an (L, C) input")
                shape = (shape[1],)
            elif isinstance(spec, DenseSpec):
                shape = (spec.units,)  # flattens its input implicitly
            else:
                raise ShapeError(f"layer {i}: unknown spec {spec!r}")
            if shape[0] < 1:
                raise ShapeError(f"layer {i}: collapsed to empty output")
            shapes.append(shape)
        return shapes

    def validate(self):
        shapes = self.output_shapes()
        if not self.layers or not isinstance(self.layers[-1], DenseSpec):
            raise ShapeError("model must end with a dense layer")
        if shapes[-1] != (self.class_count,):
            raise ShapeError(
                f"final dense units {shapes[-1]} != class count {self.class_count}"
            )


def pairing_for(task: str, pairing: str) -> tuple[str, str]:
    """(output activation, loss) for a task.

    "paper" keeps the reference pairing (softmax+BCE for binary,
    sigmoid+CCE for multi); "standard" uses softmax+CCE for both.
    """
    if pairing == "paper":
        return ("softmax", LOSS_BCE) if task == "binary" else ("sigmoid", LOSS_CCE)
    if pairing == "standard":
        return ("softmax", LOSS_CCE)
    raise ValueError(f"unknown pairing {pairing!r}")


def default_config(task: str = "binary", profile: str = "prose",
                   pairing: str = "paper", **overrides) -> ModelConfig:
    """Build the stock model.

    profile "prose": length-115 input, conv(K=64,S=3) -> pool(5,5) ->
    conv(K=3,S=1). profile "table": length-20 input with both convs at
    K=3,S=1. Both walks end at 18x64, 3x64, 1x64, 64, classes.
    """
    class_count = 2 if task == "binary" else 12
    activation, loss = pairing_for(task, pairing)
    if profile == "prose":
        input_len = 115
        convs = [Conv1dSpec(64, 64, 3), Conv1dSpec(64, 3, 1)]
    elif profile == "table":
        input_len = 20
        convs = [Conv1dSpec(64, 3, 1), Conv1dSpec(64, 3, 1)]
    else:
        raise ValueError(f"unknown profile {profile!r}")
    layers = (
        convs[0],
        MaxPool1dSpec(5, 5),
        convs[1],
        GlobalAvgPoolSpec(),
        DenseSpec(class_count, activation),
    )
    cfg = ModelConfig(input_len=input_len, layers=layers, loss=loss,
                      class_count=class_count)
    if overrides:
        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Layer forwards (public ops accept per-sample or batched arrays)

def _batched(x, rank):
    x = np.asarray(x)
    if x.ndim == rank - 1:
        return x[None, ...], True
    if x.ndim != rank:
        raise ShapeError(f"expected {rank - 1}- or {rank}-dim input, got {x.ndim}-dim")
    return x, False


def _apply_activation(z, activation):
    if activation == "none":
        return z
    if activation == "relu":
        return np.maximum(z, 0)
    if activation == "softmax":
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)
    if activation == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    raise ValueError(f"unknown activation {activation!r}")


def _window_index(l_in, size, stride):
    l_out = (l_in - size) // stride + 1
    return np.arange(l_out)[:, None] * stride + np.arange(size)[None, :]


def _conv_apply(x3, w, b, stride, idx=None):
    """Returns (pre-activation z, flattened window matrix for backward).

    The window matrix rows are output positions, columns ordered (k, c).
    """
    f, k, c = w.shape
    if idx is None:
        idx = _window_index(x3.shape[1], k, stride)
    xcol = np.take(x3, idx, axis=1)  # (B, L_out, K, C), contiguous
    b_dim, l_out = xcol.shape[0], xcol.shape[1]
    xflat = xcol.reshape(b_dim * l_out, k * c)
    wmat = w.transpose(1, 2, 0).reshape(k * c, f)
    z = (xflat @ wmat).reshape(b_dim, l_out, f) + b
    return z, xflat


def _maxpool_apply(a, pool, stride):
    """Windowed max plus argmax, built from strided slice views.

    Returns (out, am) with am holding in-window argmax positions,
    first on ties.
    """
    l_out = (a.shape[1] - pool) // stride + 1
    first = a[:, 0:stride * l_out:stride, :]
    best = first.copy()
    am = np.zeros(best.shape, dtype=np.intp)
    for p in range(1, pool):
        sl = a[:, p:p + stride * l_out:stride, :]
        better = sl > best
        am[better] = p
        np.maximum(best, sl, out=best)
    return best, am


def conv1d_forward(x, w, b, stride: int, activation: str = "none"):
    """Valid cross-correlation: out[t, f] = act(b[f] + sum w[f,k,c] x[t*S+k, c])."""
    x3, squeeze = _batched(x, 3)
    w = np.asarray(w, dtype=x3.dtype)
    if x3.shape[1] < w.shape[1]:
        raise ShapeError(f"input length {x3.shape[1]} < kernel {w.shape[1]}")
    z, _ = _conv_apply(x3, w, np.asarray(b, dtype=x3.dtype), stride)
    y = _apply_activation(z, activation)
    _check_finite("conv1d_forward", y)
    return y[0] if squeeze else y


def maxpool1d_forward(x, pool: int, stride: int):
    x3, squeeze = _batched(x, 3)
    if x3.shape[1] < pool:
        raise ShapeError(f"input length {x3.shape[1]} < pool {pool}")
    y, _ = _maxpool_apply(x3, pool, stride)
    _check_finite("maxpool1d_forward", y)
    return y[0] if squeeze else y


def global_avg_pool_forward(x):
    x3, squeeze = _batched(x, 3)
    y = x3.mean(axis=1)
    _check_finite("global_avg_pool_forward", y)
    return y[0] if squeeze else y


def dense_forward(x, w, b, activation: str = "none"):
    """Affine map plus activation; inputs above rank 1 are flattened."""
    x = np.asarray(x)
    w = np.asarray(w)
    if x.ndim == 1:
        x2, squeeze = x[None, :], True
    elif x.ndim == 2 and x.shape[1] == w.shape[1]:
        x2, squeeze = x, False  # already a batch of flat vectors
    elif x.ndim == 2:
        x2, squeeze = x.reshape(1, -1), True  # one (L, C) activation
    else:
        x2, squeeze = x.reshape(x.shape[0], -1), False
    z = x2 @ w.T + b
    y = _apply_activation(z, activation)
    _check_finite("dense_forward", y)
    return y[0] if squeeze else y


# ---------------------------------------------------------------------------
# Loss

def one_hot(labels, class_count: int, dtype=np.float64) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 0:
        labels = labels[None]
    if np.any(labels < 0) or np.any(labels >= class_count):
        raise ValueError(f"label index out of range [0, {class_count})")
    out = np.zeros((labels.shape[0], class_count), dtype=dtype)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def loss_and_grad(pred, labels, loss: str, activation: str):
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits.

    `pred` holds post-activation probabilities; the gradient is pushed back
    through the stated output activation analytically. Probabilities are
    clamped to [1e-7, 1-1e-7] inside the logs (with matching zero gradient
    where the clamp is active, so finite differences agree).
    """
    pred2, squeeze = _batched(pred, 2)
    y = one_hot(labels, pred2.shape[1], dtype=pred2.dtype)
    p = np.clip(pred2, _EPS, 1.0 - _EPS)
    if loss == LOSS_CCE:
        per_sample = -(y * np.log(p)).sum(axis=1)
        dldp = -y / p
    elif loss == LOSS_BCE:
        u = pred2.shape[1]
        per_sample = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum(axis=1) / u
        dldp = (-(y / p) + (1.0 - y) / (1.0 - p)) / u
    else:
        raise ValueError(f"unknown loss {loss!r}")
    dldp = dldp * ((pred2 > _EPS) & (pred2 < 1.0 - _EPS))

    if activation == "softmax":
        inner = (dldp * pred2).sum(axis=1, keepdims=True)
        dz = pred2 * (dldp - inner)
    elif activation == "sigmoid":
        dz = dldp * pred2 * (1.0 - pred2)
    elif activation == "none":
        dz = dldp
    else:
        raise ValueError(f"unknown output activation {activation!r}")

    batch = pred2.shape[0]
    loss_value = float(per_sample.mean())
    dz = dz / batch
    _check_finite("loss_and_grad", dz)
    return loss_value, (dz[0] if squeeze else dz)


# ---------------------------------------------------------------------------
# Model with caching forward and exact reverse-mode backward

class Model:
    """Parameterized layer stack built from a ModelConfig.

    Parameters live in one flat buffer (`flat_params`); the per-layer
    arrays in `params` are views into it, so optimizer updates through
    either alias are equivalent.
    """

    def __init__(self, config: ModelConfig, dtype=np.float32, init: bool = True):
        config.validate()
        self.config = config
        self.dtype = dtype
        self.shapes = config.output_shapes()
        self._window_idx = self._build_window_indices()
        if init:
            self._install(self._fresh_params(np.random.default_rng(config.seed)))
        else:
            self.flat_params = np.zeros(0, dtype=dtype)
            self.params = [[] for _ in config.layers]

    def _build_window_indices(self):
        idx = []
        l = self.config.input_len
        for spec in self.config.layers:
            if isinstance(spec, Conv1dSpec):
                idx.append(_window_index(l, spec.kernel, spec.stride))
                l = (l - spec.kernel) // spec.stride + 1
            elif isinstance(spec, MaxPool1dSpec):
                idx.append(_window_index(l, spec.pool, spec.stride))
                l = (l - spec.pool) // spec.stride + 1
            else:
                idx.append(None)
        return idx

    def _fresh_params(self, rng):
        """Glorot-uniform weights, zero biases, in fixed layer order."""
        params = []
        shape: tuple = (self.config.input_len, 1)
        for spec in self.config.layers:
            if isinstance(spec, Conv1dSpec):
                c_in = shape[1]
                fan_in = spec.kernel * c_in
                fan_out = spec.kernel * spec.filters
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, (spec.filters, spec.kernel, c_in))
                params.append([w, np.zeros(spec.filters)])
                shape = ((shape[0] - spec.kernel) // spec.stride + 1, spec.filters)
            elif isinstance(spec, MaxPool1dSpec):
                params.append([])
                shape = ((shape[0] - spec.pool) // spec.stride + 1, shape[1])
            elif isinstance(spec, GlobalAvgPoolSpec):
                params.append([])
                shape = (shape[1],)
            elif isinstance(spec, DenseSpec):
                c_in = int(np.prod(shape))
                limit = np.sqrt(6.0 / (c_in + spec.units))
                params.append([rng.uniform(-limit, limit, (spec.units, c_in)),
                               np.zeros(spec.units)])
                shape = (spec.units,)
        return params

    def _install(self, weights):
        """Pack per-layer tensors into the flat buffer and carve views."""
        total = sum(a.size for layer in weights for a in layer)
        self.flat_params = np.empty(total, dtype=self.dtype)
        self.params = []
        off = 0
        for layer in weights:
            views = []
            for a in layer:
                view = self.flat_params[off:off + a.size].reshape(np.shape(a))
                view[...] = a
                views.append(view)
                off += a.size
            self.params.append(views)

    @property
    def final_activation(self) -> str:
        return self.config.layers[-1].activation

    def forward(self, x, want_cache: bool = False):
        """Probabilities for a batch (B, L, 1); optionally with caches."""
        a = np.asarray(x, dtype=self.dtype)
        if a.ndim == 2:
            a = a[..., None]
        caches = []
        for spec, params, idx in zip(self.config.layers, self.params,
                                     self._window_idx):
            if isinstance(spec, Conv1dSpec):
                w, b = params
                z, xflat = _conv_apply(a, w, b, spec.stride, idx)
                out = np.maximum(z, 0) if spec.activation == "relu" else z
                caches.append((a.shape, xflat, z))
                a = out
            elif isinstance(spec, MaxPool1dSpec):
                in_shape = a.shape
                a, am = _maxpool_apply(a, spec.pool, spec.stride)
                caches.append((in_shape, am))
            elif isinstance(spec, GlobalAvgPoolSpec):
                caches.append(a.shape)
                a = a.mean(axis=1)
            elif isinstance(spec, DenseSpec):
                w, b = params
                xflat = a.reshape(a.shape[0], -1)
                z = xflat @ w.T + b
                caches.append((a.shape, xflat))
                a = _apply_activation(z, spec.activation)
        _check_finite("forward", a)
        return (a, caches) if want_cache else a

    def backward(self, caches, dlogits):
        """Parameter gradients (same nesting as params) from dLoss/dLogits."""
        grads: list[list[np.ndarray]] = [[] for _ in self.config.layers]
        g = np.asarray(dlogits, dtype=self.dtype)
        for i in range(len(self.config.layers) - 1, -1, -1):
            spec = self.config.layers[i]
            cache = caches[i]
            if isinstance(spec, DenseSpec):
                in_shape, xflat = cache
                w, _ = self.params[i]
                grads[i] = [(g.T @ xflat).astype(self.dtype),
                            g.sum(axis=0).astype(self.dtype)]
                g = (g @ w).reshape(in_shape)
            elif isinstance(spec, GlobalAvgPoolSpec):
                in_shape = cache
                g = np.broadcast_to(g[:, None, :] / in_shape[1],
                                    in_shape).astype(self.dtype)
            elif isinstance(spec, MaxPool1dSpec):
                in_shape, am = cache
                dx = np.zeros(in_shape, dtype=self.dtype)
                bsz, l_out, c = am.shape
                b_idx = np.arange(bsz)[:, None, None]
                l_idx = np.arange(l_out)[None, :, None] * spec.stride + am
                c_idx = np.arange(c)[None, None, :]
                if spec.stride >= spec.pool:
                    dx[b_idx, l_idx, c_idx] = g  # windows disjoint
                else:
                    np.add.at(dx, (b_idx, l_idx, c_idx), g)
                g = dx
            elif isinstance(spec, Conv1dSpec):
                in_shape, xflat, z = cache
                w, _ = self.params[i]
                if spec.activation == "relu":
                    g = g * (z > 0)
                bsz, l_out, f = g.shape
                c = in_shape[2]
                gflat = g.reshape(bsz * l_out, f)
                # xflat columns are (k, c); dw[f, (k, c)] lands contiguous
                dw = (gflat.T @ xflat).reshape(f, spec.kernel, c)
                db = g.sum(axis=(0, 1))
                grads[i] = [dw.astype(self.dtype, copy=False),
                            db.astype(self.dtype)]
                if i == 0:
                    continue  # nothing consumes the input gradient
                # scatter window contributions; per k the targets are disjoint
                contrib = np.tensordot(g, w, axes=([2], [0]))  # (B, L_out, K, C)
                dx = np.zeros(in_shape, dtype=self.dtype)
                for k in range(spec.kernel):
                    dx[:, k:k + spec.stride * l_out:spec.stride, :] += contrib[:, :, k]
                g = dx
        _check_finite("backward", *(a for layer in grads for a in layer))
        return grads

    def param_arrays(self) -> list[np.ndarray]:
        return [a for layer in self.params for a in layer]

    def set_weights(self, weights: list[list[np.ndarray]]):
        if len(weights) != len(self.config.layers):
            raise ShapeError("weight list does not match layer count")
        self._install([[np.asarray(a) for a in layer] for layer in weights])

    def copy_weights(self) -> list[list[np.ndarray]]:
        return [[a.copy() for a in layer] for layer in self.params]


def grad_arrays(grads) -> list[np.ndarray]:
    return [a for layer in grads for a in layer]


# ---------------------------------------------------------------------------
# Adam

def adam_init(params: list[np.ndarray]):
    return [(np.zeros_like(p), np.zeros_like(p)) for p in params]


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state, t: int,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-7):
    """One bias-corrected Adam update, in place; t is 1-based."""
    if t < 1:
        raise ValueError("Adam step index is 1-based")
    for p, g, (m, v) in zip(params, grads, state):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        mhat = m / (1.0 - beta1 ** t)
        vhat = v / (1.0 - beta2 ** t)
        p -= lr * mhat / (np.sqrt(vhat) + eps)
    return params


# ---------------------------------------------------------------------------
# Checkpoints and the weights file

@dataclass
class Checkpoint:
    config: ModelConfig
    weights: list[list[np.ndarray]]
    best_epoch: int
    best_val_accuracy: float

    def to_model(self, dtype=np.float32) -> Model:
        m = Model(self.config, dtype=dtype, init=False)
        m.set_weights(self.weights)
        return m


_WEIGHTS_MAGIC = b"FTLW"
_WEIGHTS_VERSION = 1
_KIND_CODES = {Conv1dSpec: 0, MaxPool1dSpec: 1, GlobalAvgPoolSpec: 2, DenseSpec: 3}
_ACT_CODES = {"none": 0, "relu": 1, "softmax": 2, "sigmoid": 3}
_ACT_FROM_CODE = {v: k for k, v in _ACT_CODES.items()}


def save_weights(path, ckpt: Checkpoint):
    """Little-endian layout: FTLW, version, input_len, layer specs, then per
    parameterized layer the weight and bias tensors as raw float32."""
    cfg = ckpt.config
    with open(path, "wb") as fp:
        fp.write(_WEIGHTS_MAGIC)
        fp.write(struct.pack("<HIH", _WEIGHTS_VERSION, cfg.input_len, len(cfg.layers)))
        for spec in cfg.layers:
            fp.write(struct.pack("<B", _KIND_CODES[type(spec)]))
            if isinstance(spec, Conv1dSpec):
                fp.write(struct.pack("<IIIB", spec.filters, spec.kernel, spec.stride,
                                     _ACT_CODES[spec.activation]))
            elif isinstance(spec, MaxPool1dSpec):
                fp.write(struct.pack("<II", spec.pool, spec.stride))
            elif isinstance(spec, DenseSpec):
                fp.write(struct.pack("<IB", spec.units, _ACT_CODES[spec.activation]))
        for layer in ckpt.weights:
            for tensor in layer:
                fp.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
        fp.write(struct.pack("<If", ckpt.best_epoch, ckpt.best_val_accuracy))


def _expected_param_shapes(input_len: int, layers) -> list[list[tuple]]:
    shapes = []
    shape: tuple = (input_len, 1)
    for spec in layers:
        if isinstance(spec, Conv1dSpec):
            shapes.append([(spec.filters, spec.kernel, shape[1]), (spec.filters,)])
            shape = ((shape[0] - spec.kernel) // spec.stride + 1, spec.filters)
        elif isinstance(spec, MaxPool1dSpec):
            shapes.append([])
            shape = ((shape[0] - spec.pool) // spec.stride + 1, shape[1])
        elif isinstance(spec, GlobalAvgPoolSpec):
            shapes.append([])
            shape = (shape[1],)
        elif isinstance(spec, DenseSpec):
            shapes.append([(spec.units, int(np.prod(shape))), (spec.units,)])
            shape = (spec.units,)
    return shapes


def load_weights(path, expect: Optional[ModelConfig] = None) -> Checkpoint:
    """Read a weights file back into a Checkpoint.

    Training hyperparameters are not stored; the restored ModelConfig keeps
    defaults for them. Passing `expect` additionally enforces that the file
    matches that architecture.
    """
    with open(path, "rb") as fp:
        magic = fp.read(4)
        if magic != _WEIGHTS_MAGIC:
            raise WeightsFormatError(f"{path}: bad weights magic {magic!r}")
        head = fp.read(8)
        if len(head) < 8:
            raise WeightsFormatError(f"{path}: truncated weights header")
        version, input_len, layer_count = struct.unpack("<HIH", head)
        if version != _WEIGHTS_VERSION:
            raise WeightsFormatError(f"{path}: unsupported weights version {version}")

        def need(nbytes, what):
            raw = fp.read(nbytes)
            if len(raw) < nbytes:
                raise WeightsFormatError(f"{path}: truncated while reading {what}")
            return raw

        layers: list[LayerSpec] = []
        for i in range(layer_count):
            (kind,) = struct.unpack("<B", need(1, f"layer {i} kind"))
            if kind == 0:
                f_, k_, s_, act = struct.unpack("<IIIB", need(13, f"layer {i} (conv1d)"))
                layers.append(Conv1dSpec(f_, k_, s_, _ACT_FROM_CODE[act]))
            elif kind == 1:
                p_, s_ = struct.unpack("<II", need(8, f"layer {i} (max_pool1d)"))
                layers.append(MaxPool1dSpec(p_, s_))
            elif kind == 2:
                layers.append(GlobalAvgPoolSpec())
            elif kind == 3:
                u_, act = struct.unpack("<IB", need(5, f"layer {i} (dense)"))
                layers.append(DenseSpec(u_, _ACT_FROM_CODE[act]))
            else:
                raise WeightsFormatError(f"{path}: unknown layer kind {kind}")

        if not layers or not isinstance(layers[-1], DenseSpec):
            raise WeightsFormatError(f"{path}: weights file does not end with a dense layer")
        class_count = layers[-1].units
        loss = LOSS_BCE if class_count == 2 else LOSS_CCE
        config = ModelConfig(input_len=input_len, layers=tuple(layers),
                             loss=loss, class_count=class_count)
        if expect is not None and (expect.input_len != input_len
                                   or tuple(expect.layers) != tuple(layers)):
            raise WeightsFormatError(f"{path}: architecture does not match expected config")

        weights = []
        kind_names = {0: "conv1d", 1: "max_pool1d", 2: "global_avg_pool1d", 3: "dense"}
        for i, per_layer in enumerate(_expected_param_shapes(input_len, layers)):
            tensors = []
            for shape in per_layer:
                count = int(np.prod(shape))
                raw = fp.read(count * 4)
                if len(raw) < count * 4:
                    name = kind_names[_KIND_CODES[type(layers[i])]]
                    raise WeightsFormatError(
                        f"{path}: truncated mid-tensor in layer {i} ({name})")
                tensors.append(np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
            weights.append(tensors)

        tail = need(8, "trailer")
        best_epoch, best_acc = struct.unpack("<If", tail)
        return Checkpoint(config=config, weights=weights,
                          best_epoch=best_epoch, best_val_accuracy=best_acc)
