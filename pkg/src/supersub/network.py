"""Feedforward network: parameters, forward/backward, quantization, file IO.

Hidden layers are dense -> optional batch-norm -> relu; the head is a bare
dense layer feeding a softmax cross-entropy loss. All math runs through the
fixed-order float32 kernels in tensor.py so training is bit-reproducible.

Networks are immutable snapshots: forward/backward/sgd_step never mutate
their inputs, which makes them safe to share across threads. Batch-norm
running statistics are returned inside the forward cache and committed by
the training loop, not by forward itself.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import tensor
from .container import Reader, Writer, check_trailing_crc
from .errors import ContractError, DimensionError, FormatError, ParameterError
from .tensor import F32, Prng, matmul, ordered_axis0_sum, relu, softmax_rows

NETWORK_MAGIC = b"HSNW"
NETWORK_VERSION = 1
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class NetworkConfig:
    layer_dims: tuple[int, ...]  # input, hidden..., output
    batchnorm: tuple[bool, ...]  # one flag per hidden layer

    def __post_init__(self):
        if len(self.layer_dims) < 3:
            raise ParameterError("need at least one hidden layer")
        if any(d < 1 for d in self.layer_dims):
            raise ParameterError(f"all dims must be >= 1, got {self.layer_dims}")
        if len(self.batchnorm) != len(self.layer_dims) - 2:
            raise ParameterError(
                f"{len(self.batchnorm)} batchnorm flags for {len(self.layer_dims) - 2} hidden layers"
            )

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def head_dim(self) -> int:
        return self.layer_dims[-1]


def uniform_config(input_dim: int, hidden_dims: list[int], head_dim: int, batchnorm: bool) -> NetworkConfig:
    dims = (input_dim, *hidden_dims, head_dim)
    return NetworkConfig(dims, tuple(batchnorm for _ in hidden_dims))


@dataclass(frozen=True)
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray


@dataclass(frozen=True)
class LayerParams:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    bn: BatchNormParams | None


@dataclass(frozen=True)
class QuantInfo:
    """Records that every tensor sits on its per-tensor quantization lattice."""

    bits: int
    scales: tuple[tuple[str, float], ...]  # tensor name -> scale, fixed order

    def scale_of(self, name: str) -> float:
        for n, s in self.scales:
            if n == name:
                return s
        raise ContractError(f"no quantization scale recorded for {name}")


@dataclass(frozen=True)
class Network:
    layers: tuple[LayerParams, ...]  # hidden layers then head (head has bn=None)
    quant: QuantInfo | None = None

    @property
    def head_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    def config(self) -> NetworkConfig:
        dims = [self.input_dim] + [layer.weight.shape[0] for layer in self.layers]
        flags = tuple(layer.bn is not None for layer in self.layers[:-1])
        return NetworkConfig(tuple(dims), flags)


def init_network(config: NetworkConfig, seed: int) -> Network:
    """He-initialized weights, zero biases, identity batch-norm, stats (0, 1)."""
    rng = Prng(seed)
    layers = []
    n_layers = len(config.layer_dims) - 1
    for i in range(n_layers):
        fan_in = config.layer_dims[i]
        fan_out = config.layer_dims[i + 1]
        sigma = (2.0 / fan_in) ** 0.5
        weight = tensor.gaussian_array(rng, (fan_out, fan_in), 0.0, sigma)
        bias = np.zeros(fan_out, dtype=F32)
        bn = None
        if i < n_layers - 1 and config.batchnorm[i]:
            bn = BatchNormParams(
                gamma=np.ones(fan_out, dtype=F32),
                beta=np.zeros(fan_out, dtype=F32),
                running_mean=np.zeros(fan_out, dtype=F32),
                running_var=np.ones(fan_out, dtype=F32),
            )
        layers.append(LayerParams(weight, bias, bn))
    return Network(tuple(layers))


def copy_network(net: Network) -> Network:
    layers = []
    for layer in net.layers:
        bn = None
        if layer.bn is not None:
            bn = BatchNormParams(
                layer.bn.gamma.copy(),
                layer.bn.beta.copy(),
                layer.bn.running_mean.copy(),
                layer.bn.running_var.copy(),
            )
        layers.append(LayerParams(layer.weight.copy(), layer.bias.copy(), bn))
    return Network(tuple(layers), net.quant)


def replace_head(net: Network, head_dim: int, seed: int) -> Network:
    """Body layers kept bit-exact; head reinitialized at the new width."""
    body = copy_network(net).layers[:-1]
    fan_in = net.layers[-1].weight.shape[1]
    rng = Prng(seed)
    sigma = (2.0 / fan_in) ** 0.5
    head = LayerParams(
        tensor.gaussian_array(rng, (head_dim, fan_in), 0.0, sigma),
        np.zeros(head_dim, dtype=F32),
        None,
    )
    return Network((*body, head), None)


def parameter_count(net: Network) -> int:
    total = 0
    for layer in net.layers:
        total += layer.weight.size + layer.bias.size
        if layer.bn is not None:
            total += 4 * layer.bn.gamma.size
    return total


def network_bytes(net: Network) -> int:
    """Resident float32 bytes of all parameters and batch-norm buffers."""
    return 4 * parameter_count(net)


def tensor_items(net: Network) -> list[tuple[str, np.ndarray, bool]]:
    """(name, tensor, is_weight) for every tensor, body first, head last."""
    items = []
    for i, layer in enumerate(net.layers[:-1]):
        items.append((f"layer{i}.weight", layer.weight, True))
        items.append((f"layer{i}.bias", layer.bias, False))
        if layer.bn is not None:
            items.append((f"layer{i}.bn_gamma", layer.bn.gamma, False))
            items.append((f"layer{i}.bn_beta", layer.bn.beta, False))
            items.append((f"layer{i}.bn_mean", layer.bn.running_mean, False))
            items.append((f"layer{i}.bn_var", layer.bn.running_var, False))
    items.append(("head.weight", net.layers[-1].weight, True))
    items.append(("head.bias", net.layers[-1].bias, False))
    return items


# --- quantization -----------------------------------------------------------


def quantize_scale(t: np.ndarray, bits: int) -> float:
    """Symmetric per-tensor scale; an all-zero tensor gets scale 1."""
    if not 2 <= bits <= 8:
        raise ParameterError(f"bits must be in [2, 8], got {bits}")
    amax = F32(np.max(np.abs(t))) if t.size else F32(0.0)
    if amax == 0:
        return 1.0
    return float(amax / F32((1 << (bits - 1)) - 1))


def quantize_with_scale(t: np.ndarray, scale: float, bits: int) -> np.ndarray:
    """Round to the integer grid (half away from zero), clamp, rescale."""
    q = grid_indices(t, scale, bits)
    return (q.astype(F32) * F32(scale)).astype(F32)


def lattice_indices(t: np.ndarray, scale: float) -> np.ndarray:
    """Nearest lattice coordinate of each element (half away from zero)."""
    scaled = np.asarray(t, dtype=F32) / F32(scale)
    q = np.copysign(np.floor(np.abs(scaled) + F32(0.5)), scaled)
    return q.astype(np.int32)


def grid_indices(t: np.ndarray, scale: float, bits: int) -> np.ndarray:
    """Integer grid coordinates of each element, clamped to the bit range."""
    qmax = (1 << (bits - 1)) - 1
    return np.clip(lattice_indices(t, scale), -qmax, qmax).astype(np.int32)


def fake_quantize(t: np.ndarray, bits: int) -> np.ndarray:
    """Quantize-dequantize with the tensor's own scale; idempotent on-grid."""
    return quantize_with_scale(t, quantize_scale(t, bits), bits)


@dataclass(frozen=True)
class QatConfig:
    """Fake-quantization applied to weights during forward passes.

    scales holds one entry per layer: a fixed float (shared-grid finetuning)
    or None to derive the scale live from the current master weights.
    """

    bits: int
    scales: tuple[float | None, ...]

    @staticmethod
    def live(net: Network, bits: int) -> "QatConfig":
        return QatConfig(bits, tuple(None for _ in net.layers))

    @staticmethod
    def shared_body(base: Network, bits: int) -> "QatConfig":
        """Body weight scales pinned to the base network's grids; live head."""
        if base.quant is None or base.quant.bits != bits:
            raise ContractError("base network carries no matching quantization info")
        body = tuple(
            base.quant.scale_of(f"layer{i}.weight") for i in range(len(base.layers) - 1)
        )
        return QatConfig(bits, (*body, None))


def effective_weights(net: Network, qat: QatConfig | None) -> list[np.ndarray]:
    """Weights as seen by forward passes: masters, or their grid projections."""
    if qat is None:
        return [layer.weight for layer in net.layers]
    if len(qat.scales) != len(net.layers):
        raise ContractError(f"{len(qat.scales)} qat scales for {len(net.layers)} layers")
    out = []
    for layer, scale in zip(net.layers, qat.scales):
        s = quantize_scale(layer.weight, qat.bits) if scale is None else scale
        out.append(quantize_with_scale(layer.weight, s, qat.bits))
    return out


def snap_to_grid(net: Network, bits: int, body_scales: dict[str, float] | None = None) -> Network:
    """Project every tensor onto its integer grid and record the scales.

    The whole network is stored quantized, not just the weights: biases and
    batch-norm tensors land on their own per-tensor lattices so that delta
    extraction yields exact integer differences everywhere. Weights clamp
    to the fake-quantization grid they trained against; the other tensors
    round without clamping, because running statistics legitimately drift
    far outside the base network's range and clamping them would wreck
    inference. Running variances are floored at one lattice step to stay
    positive. body_scales pins the body lattices to a base network's
    (shared grids for delta extraction); the head always uses its own live
    scales because its shape differs from any base network.
    """
    snapped = copy_network(net)
    body_names = {name for name, _, _ in tensor_items(snapped)[:-2]}
    if body_scales is not None and set(body_scales) != body_names:
        raise ContractError("body_scales must cover exactly the body tensors")

    scales: list[tuple[str, float]] = []
    new_tensors: dict[str, np.ndarray] = {}
    for name, t, is_weight in tensor_items(snapped):
        if body_scales is not None and name in body_scales:
            s = body_scales[name]
        else:
            s = quantize_scale(t, bits)
        scales.append((name, s))
        q = grid_indices(t, s, bits) if is_weight else lattice_indices(t, s)
        if name.endswith(".bn_var"):
            q = np.maximum(q, 1)  # running variance must stay positive
        new_tensors[name] = (q.astype(F32) * F32(s)).astype(F32)

    layers = []
    n_layers = len(snapped.layers)
    for i, layer in enumerate(snapped.layers):
        prefix = "head" if i == n_layers - 1 else f"layer{i}"
        bn = None
        if layer.bn is not None:
            bn = BatchNormParams(
                new_tensors[f"{prefix}.bn_gamma"],
                new_tensors[f"{prefix}.bn_beta"],
                new_tensors[f"{prefix}.bn_mean"],
                new_tensors[f"{prefix}.bn_var"],
            )
        layers.append(LayerParams(new_tensors[f"{prefix}.weight"], new_tensors[f"{prefix}.bias"], bn))
    return Network(tuple(layers), QuantInfo(bits, tuple(scales)))


# --- forward / backward ------------------------------------------------------


@dataclass
class LayerCache:
    x: np.ndarray  # layer input
    pre_act: np.ndarray  # post-bn, pre-relu (or logits for the head)
    xhat: np.ndarray | None  # bn-normalized input, training mode only
    sigma: np.ndarray | None  # sqrt(var + eps) used to normalize
    bn_update: tuple[np.ndarray, np.ndarray] | None  # new running (mean, var)


@dataclass
class ForwardCache:
    layer_caches: list[LayerCache]
    logits: np.ndarray
    eff_weights: list[np.ndarray]
    training: bool
    batch_size: int


def forward(
    net: Network,
    batch: np.ndarray,
    training: bool = False,
    qat: QatConfig | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network over a batch of rows; returns logits and the cache.

    Training mode normalizes with batch statistics and stashes the momentum
    update for the running stats in the cache; inference mode uses the
    stored running statistics, making each row's output independent of the
    rest of the batch, bit for bit.
    """
    batch = tensor.as_float(batch)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise DimensionError(
            f"batch shape {batch.shape} does not match input dim {net.input_dim}"
        )
    m = batch.shape[0]
    weights = effective_weights(net, qat)
    caches: list[LayerCache] = []
    a = batch
    for i, layer in enumerate(net.layers):
        z = matmul(a, weights[i].T) + layer.bias
        is_head = i == len(net.layers) - 1
        xhat = sigma = bn_update = None
        if layer.bn is not None:
            if training:
                if m < 2:
                    raise ContractError("batch-norm training needs batch size >= 2")
                mu = ordered_axis0_sum(z) / F32(m)
                centered = z - mu
                var = ordered_axis0_sum(centered * centered) / F32(m)
                sigma = np.sqrt(var + F32(BN_EPSILON))
                xhat = centered / sigma
                new_mean = F32(BN_MOMENTUM) * layer.bn.running_mean + F32(1 - BN_MOMENTUM) * mu
                new_var = F32(BN_MOMENTUM) * layer.bn.running_var + F32(1 - BN_MOMENTUM) * var
                bn_update = (new_mean, new_var)
            else:
                sigma = np.sqrt(layer.bn.running_var + F32(BN_EPSILON))
                xhat = (z - layer.bn.running_mean) / sigma
            z = layer.bn.gamma * xhat + layer.bn.beta
        caches.append(LayerCache(a, z, xhat if training else None, sigma, bn_update))
        a = z if is_head else relu(z)
    logits = tensor.check_finite(a, "forward logits")
    return logits, ForwardCache(caches, logits, weights, training, m)


@dataclass(frozen=True)
class LayerGrads:
    weight: np.ndarray
    bias: np.ndarray
    gamma: np.ndarray | None
    beta: np.ndarray | None


@dataclass(frozen=True)
class Gradients:
    layers: tuple[LayerGrads, ...]


def backward(net: Network, cache: ForwardCache, labels) -> Gradients:
    """Gradient of mean cross-entropy w.r.t. every parameter.

    With fake-quantized forward weights the gradients pass straight through
    to the full-precision masters: input gradients use the effective
    weights, parameter gradients land on the master tensors unchanged.

    On batch-norm layers the dense bias is a degenerate direction (batch
    centering cancels it exactly; beta provides the shift), so its gradient
    is pinned to exact zeros and the bias stays at its zero initialization.
    """
    if not cache.training:
        raise ContractError("backward needs a cache from a training-mode forward")
    labels = np.asarray(labels, dtype=np.int64)
    m = cache.batch_size
    if labels.shape != (m,):
        raise ContractError(f"{labels.shape[0] if labels.ndim else 0} labels for batch of {m}")
    n = net.head_dim
    if np.any(labels < 0) or np.any(labels >= n):
        raise ContractError(f"labels outside 0..{n - 1}")

    probs = softmax_rows(cache.logits)
    onehot = np.zeros_like(probs)
    onehot[np.arange(m), labels] = F32(1.0)
    d_out = (probs - onehot) / F32(m)

    grads: list[LayerGrads] = []
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        lc = cache.layer_caches[i]
        if i < len(net.layers) - 1:
            d_out = d_out * (lc.pre_act > 0)  # relu mask
        d_gamma = d_beta = None
        if layer.bn is not None:
            d_gamma = ordered_axis0_sum(d_out * lc.xhat)
            d_beta = ordered_axis0_sum(d_out)
            d_xhat = d_out * layer.bn.gamma
            mean_dxhat = ordered_axis0_sum(d_xhat) / F32(m)
            mean_dxhat_xhat = ordered_axis0_sum(d_xhat * lc.xhat) / F32(m)
            d_out = (d_xhat - mean_dxhat - lc.xhat * mean_dxhat_xhat) / lc.sigma
        d_weight = matmul(d_out.T, lc.x)
        if layer.bn is not None:
            d_bias = np.zeros_like(layer.bias)
        else:
            d_bias = ordered_axis0_sum(d_out)
        grads.append(LayerGrads(d_weight, d_bias, d_gamma, d_beta))
        if i > 0:
            d_out = matmul(d_out, cache.eff_weights[i])
    return Gradients(tuple(reversed(grads)))


def sgd_step(net: Network, grads: Gradients, lr: float) -> Network:
    """theta <- theta - lr * g for every parameter; running stats untouched."""
    if len(grads.layers) != len(net.layers):
        raise ContractError(f"{len(grads.layers)} gradient layers for {len(net.layers)} layers")
    lr32 = F32(lr)
    layers = []
    for layer, g in zip(net.layers, grads.layers):
        if layer.weight.shape != g.weight.shape or layer.bias.shape != g.bias.shape:
            raise ContractError(
                f"gradient shape {g.weight.shape} does not match weight {layer.weight.shape}"
            )
        bn = layer.bn
        if bn is not None:
            if g.gamma is None or g.beta is None:
                raise ContractError("missing batch-norm gradients for a batch-norm layer")
            bn = BatchNormParams(
                (bn.gamma - lr32 * g.gamma).astype(F32),
                (bn.beta - lr32 * g.beta).astype(F32),
                bn.running_mean.copy(),
                bn.running_var.copy(),
            )
        layers.append(
            LayerParams(
                (layer.weight - lr32 * g.weight).astype(F32),
                (layer.bias - lr32 * g.bias).astype(F32),
                bn,
            )
        )
    return Network(tuple(layers), None)


def apply_bn_updates(net: Network, cache: ForwardCache) -> Network:
    """Commit the running-stat momentum updates captured by a training forward."""
    layers = []
    for layer, lc in zip(net.layers, cache.layer_caches):
        if layer.bn is not None and lc.bn_update is not None:
            new_mean, new_var = lc.bn_update
            bn = BatchNormParams(layer.bn.gamma, layer.bn.beta, new_mean, new_var)
            layers.append(replace(layer, bn=bn))
        else:
            layers.append(layer)
    return Network(tuple(layers), net.quant)


# --- gradient checking -------------------------------------------------------


def _forward_loss_f64(net: Network, batch: np.ndarray, labels: np.ndarray) -> float:
    """Independent float64 reference loss (training-mode batch norm).

    Deliberately written with plain numpy reductions rather than the
    fixed-order kernels: this is the oracle side of the gradient check.
    """
    a = np.asarray(batch, dtype=np.float64)
    m = a.shape[0]
    for i, layer in enumerate(net.layers):
        z = a @ layer.weight.T.astype(np.float64) + layer.bias.astype(np.float64)
        if layer.bn is not None:
            mu = z.mean(axis=0)
            var = ((z - mu) ** 2).mean(axis=0)
            xhat = (z - mu) / np.sqrt(var + BN_EPSILON)
            z = layer.bn.gamma.astype(np.float64) * xhat + layer.bn.beta.astype(np.float64)
        a = z if i == len(net.layers) - 1 else np.maximum(z, 0.0)
    shifted = a - a.max(axis=1, keepdims=True)
    probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
    picked = probs[np.arange(m), labels]
    return float(-np.log(picked + tensor.CE_EPSILON).mean())


def _param_views(net: Network) -> list[np.ndarray]:
    views = []
    for layer in net.layers:
        views.append(layer.weight)
        views.append(layer.bias)
        if layer.bn is not None:
            views.append(layer.bn.gamma)
            views.append(layer.bn.beta)
    return views


def _cast_network(net: Network, dtype) -> Network:
    layers = []
    for layer in net.layers:
        bn = None
        if layer.bn is not None:
            bn = BatchNormParams(
                layer.bn.gamma.astype(dtype),
                layer.bn.beta.astype(dtype),
                layer.bn.running_mean.astype(dtype),
                layer.bn.running_var.astype(dtype),
            )
        layers.append(LayerParams(layer.weight.astype(dtype), layer.bias.astype(dtype), bn))
    return Network(tuple(layers), None)


def gradient_check(net: Network, batch: np.ndarray, labels, eps: float = 1e-4) -> float:
    """Max relative error between analytic gradients and central differences.

    Runs the production forward/backward code path on a float64 twin of the
    network and differences an independently written float64 loss: at
    float32, rounding noise alone (~1e-7 absolute) would swamp the
    comparison for any small gradient component. Full-precision networks
    only; fake-quantized forwards are piecewise-constant and have no
    meaningful pointwise derivative.
    """
    if eps <= 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    if parameter_count(net) > 10_000:
        raise ContractError("gradient_check is limited to networks with <= 10000 parameters")
    labels = np.asarray(labels, dtype=np.int64)
    batch64 = np.asarray(batch, dtype=np.float64)

    work = _cast_network(net, np.float64)
    _, cache = forward(work, batch64, training=True)
    grads = backward(work, cache, labels)

    analytic = []
    for g in grads.layers:
        analytic.append(g.weight)
        analytic.append(g.bias)
        if g.gamma is not None:
            analytic.append(g.gamma)
            analytic.append(g.beta)
    params = _param_views(work)

    worst = 0.0
    for p, g in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for idx in range(flat_p.size):
            original = float(flat_p[idx])
            flat_p[idx] = original + eps
            loss_plus = _forward_loss_f64(work, batch64, labels)
            flat_p[idx] = original - eps
            loss_minus = _forward_loss_f64(work, batch64, labels)
            flat_p[idx] = original
            cd = (loss_plus - loss_minus) / (2.0 * eps)
            a = float(flat_g[idx])
            rel = abs(a - cd) / max(abs(a), abs(cd), 1e-8)
            worst = max(worst, rel)
    return worst


# --- file format --------------------------------------------------------------


def serialize_network(net: Network) -> bytes:
    config = net.config()
    w = Writer()
    w.raw(NETWORK_MAGIC)
    w.u16(NETWORK_VERSION)
    w.u32(len(config.layer_dims))
    for d in config.layer_dims:
        w.u32(d)
    for flag in config.batchnorm:
        w.u8(1 if flag else 0)
    if net.quant is None:
        w.u8(0)
    else:
        w.u8(1)
        w.u8(net.quant.bits)
        w.u32(len(net.quant.scales))
        for name, s in net.quant.scales:
            w.text(name)
            w.f32(s)
    for layer in net.layers:
        w.raw(np.ascontiguousarray(layer.weight, dtype="<f4").tobytes())
        w.raw(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())
        if layer.bn is not None:
            for arr in (layer.bn.gamma, layer.bn.beta, layer.bn.running_mean, layer.bn.running_var):
                w.raw(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return w.finish()


def deserialize_network(data: bytes) -> Network:
    body = check_trailing_crc(data)
    r = Reader(body)
    r.expect_magic(NETWORK_MAGIC)
    r.expect_version(NETWORK_VERSION)
    n_dims = r.u32()
    if n_dims < 3:
        raise FormatError(f"network needs at least 3 dims, got {n_dims}", offset=r.pos)
    dims = [r.u32() for _ in range(n_dims)]
    flags = [bool(r.u8()) for _ in range(n_dims - 2)]
    quant = None
    if r.u8():
        bits = r.u8()
        count = r.u32()
        scales = tuple((r.text(), r.f32()) for _ in range(count))
        quant = QuantInfo(bits, scales)

    def read_arr(*shape: int) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(r.raw(count * 4), dtype="<f4").reshape(shape).astype(F32)

    layers = []
    for i in range(n_dims - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        weight = read_arr(fan_out, fan_in)
        bias = read_arr(fan_out)
        bn = None
        if i < n_dims - 2 and flags[i]:
            bn = BatchNormParams(read_arr(fan_out), read_arr(fan_out), read_arr(fan_out), read_arr(fan_out))
        layers.append(LayerParams(weight, bias, bn))
    r.expect_end()
    return Network(tuple(layers), quant)


def save_network(net: Network, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_network(net))


def load_network(path) -> Network:
    with open(path, "rb") as f:
        return deserialize_network(f.read())
