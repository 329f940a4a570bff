"""Parameter deltas between a base network and its finetuned specialists.

Two storage modes:

* fp16 — body deltas rounded to binary16 (lossy by about half an ulp per
  element); works for any pair of structurally matching networks.
* qat-int — both networks must be snapped onto shared per-tensor integer
  grids (every body tensor, batch-norm stats included); deltas are exact
  signed 16-bit grid-index differences and reconstruction, done in the
  integer domain, is bit-exact.

Head tensors are stored without a value delta: the head is reinitialized
at a different width during finetuning, so none exists. When the head
shape happens to match the base (self-deltas, same-width specialists) an
XOR delta is used; otherwise the tensors are stored verbatim.

The packed container records a CRC-32C fingerprint of the base network
file; reconstruction against any other base fails loudly instead of
silently producing a plausible-looking network.

DeltaPacks are immutable and every function here is pure, so concurrent
use is safe; reconstruction allocates a fresh network and never mutates
the shared base.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import Reader, Writer, check_trailing_crc, crc32c, deflate, inflate
from .errors import (
    BaseMismatchError,
    ContractError,
    DeltaModeError,
    FormatError,
    ParameterError,
)
from .network import (
    BatchNormParams,
    LayerParams,
    Network,
    QuantInfo,
    lattice_indices,
    serialize_network,
    tensor_items,
)
from .tensor import F32, f16_round

DELTA_MAGIC = b"HSDL"
DELTA_VERSION = 1

MODE_FP16 = "fp16"
MODE_QAT_INT = "qat-int"
_MODE_CODES = {MODE_FP16: 0, MODE_QAT_INT: 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}

KIND_F32_VALUE = 0  # verbatim float32 tensor (replacement, not a delta)
KIND_F16_DELTA = 1  # binary16 delta against the base tensor
KIND_I16_GRID_DELTA = 2  # signed grid-index delta plus the shared scale
KIND_XOR32_DELTA = 3  # bitwise XOR against the base tensor; exact and compact


@dataclass(frozen=True)
class DeltaEntry:
    name: str
    shape: tuple[int, ...]
    kind: int
    payload: np.ndarray  # f32 values, f16 deltas, or i16 grid deltas
    scale: float | None = None  # grid-index entries only


@dataclass(frozen=True)
class DeltaPack:
    superclass_id: int
    mode: str
    qat_bits: int
    base_fingerprint: int
    body_entries: tuple[DeltaEntry, ...]
    head_entries: tuple[DeltaEntry, ...]
    # Quantization scales of the specialist's head tensors (qat-int only);
    # needed to rebuild the specialist's quant record bit-exactly.
    head_scales: tuple[tuple[str, float], ...] | None


@dataclass(frozen=True)
class PackedDelta:
    data: bytes
    raw_size: int  # container size had the entry section not been compressed
    packed_size: int  # actual container size on the wire


def body_tensor_items(net: Network) -> list[tuple[str, np.ndarray, bool]]:
    """(name, tensor, is_weight) for every non-head tensor, fixed order."""
    return tensor_items(net)[:-2]


def _check_body_compatible(base: Network, sub: Network) -> None:
    base_items = body_tensor_items(base)
    sub_items = body_tensor_items(sub)
    if len(base_items) != len(sub_items):
        raise ContractError(
            f"body tensor count mismatch: base {len(base_items)}, specialist {len(sub_items)}"
        )
    for (name_a, t_a, _), (name_b, t_b, _) in zip(base_items, sub_items):
        if name_a != name_b or t_a.shape != t_b.shape:
            raise ContractError(
                f"body tensor mismatch at {name_a}: {t_a.shape} vs {name_b} {t_b.shape}"
            )


def base_fingerprint_of(base: Network) -> int:
    """The base network file's own trailing checksum.

    The CRC of a whole container that ends in its own CRC is a constant
    residue, identical for every file, so the fingerprint must cover the
    body only; that is exactly the value already stored in the file's
    trailing field.
    """
    blob = serialize_network(base)
    return crc32c(blob[:-4])


def _xor_bits(t_sub: np.ndarray, t_base: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(t_sub, dtype="<f4").view(np.uint32)
    b = np.ascontiguousarray(t_base, dtype="<f4").view(np.uint32)
    return (a ^ b).reshape(t_sub.shape)


def _apply_xor(t_base: np.ndarray, payload: np.ndarray) -> np.ndarray:
    base_bits = np.ascontiguousarray(t_base, dtype="<f4").view(np.uint32)
    bits = base_bits ^ np.ascontiguousarray(payload, dtype=np.uint32)
    return bits.view("<f4").reshape(t_base.shape).astype(F32)


def compute_delta(base: Network, sub: Network, mode: str, superclass_id: int = 0) -> DeltaPack:
    """Extract the specialist's difference against the base network."""
    if mode not in _MODE_CODES:
        raise ParameterError(f"unknown delta mode {mode!r}")
    _check_body_compatible(base, sub)
    fingerprint = base_fingerprint_of(base)

    head_scales = None
    body: list[DeltaEntry] = []
    if mode == MODE_FP16:
        qat_bits = 0
        base_items = body_tensor_items(base)
        sub_items = body_tensor_items(sub)
        for (name, t_base, _), (_, t_sub, _) in zip(base_items, sub_items):
            delta = f16_round((t_sub - t_base).astype(F32)).astype(np.float16)
            body.append(DeltaEntry(name, t_base.shape, KIND_F16_DELTA, delta))
    else:
        if base.quant is None or sub.quant is None:
            raise DeltaModeError("qat-int deltas need both networks snapped to grids")
        if base.quant.bits != sub.quant.bits:
            raise DeltaModeError(
                f"bit width mismatch: base {base.quant.bits}, specialist {sub.quant.bits}"
            )
        base_body = tuple(s for s in base.quant.scales if not s[0].startswith("head"))
        sub_body = tuple(s for s in sub.quant.scales if not s[0].startswith("head"))
        if base_body != sub_body:
            raise DeltaModeError("body quantization scales differ; grids are not shared")
        qat_bits = base.quant.bits
        head_scales = tuple(s for s in sub.quant.scales if s[0].startswith("head"))
        base_items = body_tensor_items(base)
        sub_items = body_tensor_items(sub)
        for (name, t_base, _), (_, t_sub, _) in zip(base_items, sub_items):
            s = base.quant.scale_of(name)
            q_base = _exact_grid(t_base, s, f"base {name}")
            q_sub = _exact_grid(t_sub, s, f"specialist {name}")
            diff = q_sub - q_base
            if diff.size and max(abs(int(diff.max())), abs(int(diff.min()))) > 32767:
                raise DeltaModeError(f"grid delta for {name} overflows int16")
            body.append(DeltaEntry(name, t_base.shape, KIND_I16_GRID_DELTA, diff.astype(np.int16), s))

    head = []
    for name, t_sub, t_base in (
        ("head.weight", sub.layers[-1].weight, base.layers[-1].weight),
        ("head.bias", sub.layers[-1].bias, base.layers[-1].bias),
    ):
        if t_sub.shape == t_base.shape:
            head.append(DeltaEntry(name, t_sub.shape, KIND_XOR32_DELTA, _xor_bits(t_sub, t_base)))
        else:
            # Replaced head at a different width: no base tensor to delta against.
            head.append(DeltaEntry(name, t_sub.shape, KIND_F32_VALUE, t_sub.astype(F32)))
    return DeltaPack(superclass_id, mode, qat_bits, fingerprint, tuple(body), tuple(head), head_scales)


def _exact_grid(t: np.ndarray, scale: float, what: str) -> np.ndarray:
    q = lattice_indices(t, scale)
    if not np.array_equal((q.astype(F32) * F32(scale)).astype(F32), t):
        raise DeltaModeError(f"{what} is not on the shared quantization grid")
    return q


# --- container ---------------------------------------------------------------


def pack(d: DeltaPack) -> PackedDelta:
    """Serialize and DEFLATE-compress; the 16-byte header stays uncompressed."""
    entries = Writer()
    if d.head_scales is None:
        entries.u8(0)
    else:
        entries.u8(len(d.head_scales))
        for name, s in d.head_scales:
            entries.text(name)
            entries.f32(s)
    for group in (d.body_entries, d.head_entries):
        entries.u32(len(group))
        for e in group:
            entries.text(e.name)
            entries.u8(len(e.shape))
            for dim in e.shape:
                entries.u32(dim)
            entries.u8(e.kind)
            if e.kind == KIND_F32_VALUE:
                entries.raw(np.ascontiguousarray(e.payload, dtype="<f4").tobytes())
            elif e.kind == KIND_F16_DELTA:
                entries.raw(np.ascontiguousarray(e.payload, dtype="<f2").tobytes())
            elif e.kind == KIND_I16_GRID_DELTA:
                entries.f32(e.scale)
                entries.raw(np.ascontiguousarray(e.payload, dtype="<i2").tobytes())
            elif e.kind == KIND_XOR32_DELTA:
                entries.raw(np.ascontiguousarray(e.payload, dtype="<u4").tobytes())
            else:
                raise ParameterError(f"unknown entry kind {e.kind}")
    blob = entries.body()
    compressed = deflate(blob)

    w = Writer()
    w.raw(DELTA_MAGIC)
    w.u16(DELTA_VERSION)
    w.u32(d.superclass_id)
    w.u8(_MODE_CODES[d.mode])
    w.u8(d.qat_bits)
    w.u32(d.base_fingerprint)
    w.raw(compressed)
    data = w.finish()
    return PackedDelta(data, raw_size=16 + len(blob) + 4, packed_size=len(data))


def unpack(data: bytes) -> DeltaPack:
    body = check_trailing_crc(data)
    r = Reader(body)
    r.expect_magic(DELTA_MAGIC)
    r.expect_version(DELTA_VERSION)
    superclass_id = r.u32()
    mode_code = r.u8()
    if mode_code not in _MODE_NAMES:
        raise FormatError(f"unknown delta mode code {mode_code}", offset=r.pos - 1)
    qat_bits = r.u8()
    fingerprint = r.u32()
    blob = inflate(body[r.pos :])

    er = Reader(blob)
    head_scales = None
    n_scales = er.u8()
    if n_scales:
        head_scales = tuple((er.text(), er.f32()) for _ in range(n_scales))

    def read_group() -> tuple[DeltaEntry, ...]:
        count = er.u32()
        out = []
        for _ in range(count):
            name = er.text()
            ndim = er.u8()
            shape = tuple(er.u32() for _ in range(ndim))
            kind = er.u8()
            n = int(np.prod(shape)) if shape else 1
            if kind == KIND_F32_VALUE:
                payload = np.frombuffer(er.raw(n * 4), dtype="<f4").reshape(shape).astype(F32)
                out.append(DeltaEntry(name, shape, kind, payload))
            elif kind == KIND_F16_DELTA:
                payload = np.frombuffer(er.raw(n * 2), dtype="<f2").reshape(shape)
                out.append(DeltaEntry(name, shape, kind, payload.copy()))
            elif kind == KIND_I16_GRID_DELTA:
                scale = er.f32()
                payload = np.frombuffer(er.raw(n * 2), dtype="<i2").reshape(shape)
                out.append(DeltaEntry(name, shape, kind, payload.copy(), scale))
            elif kind == KIND_XOR32_DELTA:
                payload = np.frombuffer(er.raw(n * 4), dtype="<u4").reshape(shape)
                out.append(DeltaEntry(name, shape, kind, payload.copy()))
            else:
                raise FormatError(f"unknown entry kind {kind}", offset=er.pos - 1)
        return tuple(out)

    body_entries = read_group()
    head_entries = read_group()
    er.expect_end()
    return DeltaPack(
        superclass_id, _MODE_NAMES[mode_code], qat_bits, fingerprint, body_entries, head_entries, head_scales
    )


# --- reconstruction ----------------------------------------------------------


def reconstruct(base: Network, d: DeltaPack) -> Network:
    """Rebuild the specialist: body = base + delta, head installed verbatim.

    qat-int reconstruction works in the integer domain — recover the base's
    grid indices, add the stored index deltas, rescale — which reproduces
    the stored specialist bit for bit.
    """
    actual = base_fingerprint_of(base)
    if actual != d.base_fingerprint:
        raise BaseMismatchError(
            f"delta was computed against base {d.base_fingerprint:#010x}, "
            f"got network with fingerprint {actual:#010x}"
        )
    by_name = {e.name: e for e in d.body_entries}
    expected = body_tensor_items(base)
    if len(by_name) != len(d.body_entries) or len(d.body_entries) != len(expected):
        raise ContractError(
            f"delta has {len(d.body_entries)} body entries, base has {len(expected)} body tensors"
        )

    rebuilt: dict[str, np.ndarray] = {}
    scales: list[tuple[str, float]] = []
    for name, t_base, _ in expected:
        e = by_name.get(name)
        if e is None:
            raise ContractError(f"delta is missing body entry {name}")
        if e.shape != t_base.shape:
            raise ContractError(f"entry {name} shape {e.shape} != base shape {t_base.shape}")
        if e.kind == KIND_F16_DELTA:
            rebuilt[name] = (t_base + e.payload.astype(F32)).astype(F32)
        elif e.kind == KIND_I16_GRID_DELTA:
            q_base = lattice_indices(t_base, e.scale)
            q_new = q_base + e.payload.astype(np.int32)
            rebuilt[name] = (q_new.astype(F32) * F32(e.scale)).astype(F32)
            scales.append((name, e.scale))
        elif e.kind == KIND_XOR32_DELTA:
            rebuilt[name] = _apply_xor(t_base, e.payload)
        else:
            rebuilt[name] = e.payload.astype(F32)

    heads = {e.name: e for e in d.head_entries}
    if set(heads) != {"head.weight", "head.bias"}:
        raise ContractError(f"unexpected head entries {sorted(heads)}")

    def head_tensor(entry: DeltaEntry, t_base: np.ndarray) -> np.ndarray:
        if entry.kind == KIND_XOR32_DELTA:
            if entry.shape != t_base.shape:
                raise ContractError(
                    f"{entry.name} xor-delta shape {entry.shape} != base {t_base.shape}"
                )
            return _apply_xor(t_base, entry.payload)
        return entry.payload.astype(F32)

    layers: list[LayerParams] = []
    for i, layer in enumerate(base.layers[:-1]):
        bn = None
        if layer.bn is not None:
            bn = BatchNormParams(
                rebuilt[f"layer{i}.bn_gamma"],
                rebuilt[f"layer{i}.bn_beta"],
                rebuilt[f"layer{i}.bn_mean"],
                rebuilt[f"layer{i}.bn_var"],
            )
        layers.append(LayerParams(rebuilt[f"layer{i}.weight"], rebuilt[f"layer{i}.bias"], bn))
    layers.append(
        LayerParams(
            head_tensor(heads["head.weight"], base.layers[-1].weight),
            head_tensor(heads["head.bias"], base.layers[-1].bias),
            None,
        )
    )

    quant = None
    if d.mode == MODE_QAT_INT:
        if d.head_scales is None:
            raise ContractError("qat-int pack is missing the specialist head scales")
        quant = QuantInfo(d.qat_bits, (*scales, *d.head_scales))
    return Network(tuple(layers), quant)


# --- reporting helpers --------------------------------------------------------


def compression_ratio(packed: PackedDelta, reference_model_bytes: int) -> float:
    """Packed bytes over the matching-precision specialist model bytes."""
    if reference_model_bytes <= 0:
        raise ParameterError(f"reference size must be > 0, got {reference_model_bytes}")
    return packed.packed_size / reference_model_bytes


def quantized_network_bytes(net: Network) -> int:
    """Size of the network container had weights been stored as int8.

    This is the reference for qat-int compression ratios: identical layout
    to the float32 container, with each weight element taking one byte
    (per-tensor scales are already carried in the header's quant block).
    """
    full = len(serialize_network(net))
    weight_elems = sum(layer.weight.size for layer in net.layers)
    return full - 3 * weight_elems


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]  # n_bins + 1 edges, or (v, v) for a point mass
    counts: tuple[int, ...]


def delta_histogram(d: DeltaPack, n_bins: int) -> dict[str, Histogram]:
    """Histograms of the stored numeric delta values, one per tensor class.

    Classes are "weight", "bias" and "batchnorm". Only entries holding
    numeric deltas (fp16, grid-index) contribute; XOR and verbatim entries
    carry no additive delta value to bin.
    """
    if n_bins < 1:
        raise ParameterError(f"n_bins must be >= 1, got {n_bins}")
    groups: dict[str, list[np.ndarray]] = {}
    for e in d.body_entries:
        if e.kind == KIND_F16_DELTA:
            values = e.payload.astype(np.float64).ravel()
        elif e.kind == KIND_I16_GRID_DELTA:
            values = e.payload.astype(np.float64).ravel() * float(e.scale)
        else:
            continue
        suffix = e.name.split(".")[1]
        cls = "weight" if suffix == "weight" else "bias" if suffix == "bias" else "batchnorm"
        groups.setdefault(cls, []).append(values)

    out: dict[str, Histogram] = {}
    for cls, chunks in groups.items():
        values = np.concatenate(chunks)
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            out[cls] = Histogram((lo, hi), (values.size,))
            continue
        counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
        out[cls] = Histogram(tuple(float(x) for x in edges), tuple(int(c) for c in counts))
    return out
