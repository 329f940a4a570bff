"""Two-stage inference engines and the evaluation harness.

The vanilla engine keeps every specialist resident next to the router; the
efficient engine keeps one network resident and rebuilds specialists on
demand from packed deltas, charging every load and rebuild to a cost
ledger. With exact (qat-int) deltas both engines emit identical
predictions; the ledger is where they differ.

Evaluation is single-threaded here; results are defined as an ordered
reduction over the test rows, so a sharded implementation merging partial
reports in index order would reproduce them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network as net_mod
from .data import Dataset
from .delta import body_tensor_items, reconstruct, unpack
from .errors import ContractError, DimensionError
from .hierarchy import HierarchyManifest
from .network import Network, forward

MODE_LOWERBOUND = "lowerbound"
MODE_UPPERBOUND = "upperbound_oracle"
MODE_TWO_STAGE_VANILLA = "two_stage_vanilla"
MODE_TWO_STAGE_EFFICIENT = "two_stage_efficient"


@dataclass
class CostLedger:
    """Monotone counters for one serving session."""

    bytes_loaded: int = 0
    peak_resident_bytes: int = 0
    reconstruction_adds: int = 0
    specialist_switches: int = 0

    def snapshot(self) -> "CostLedger":
        return CostLedger(
            self.bytes_loaded,
            self.peak_resident_bytes,
            self.reconstruction_adds,
            self.specialist_switches,
        )


@dataclass(frozen=True)
class LedgerDelta:
    """What a single query charged."""

    bytes_loaded: int
    reconstruction_adds: int
    specialist_switches: int


def _validate_specialists(
    manifest: HierarchyManifest, specialists: dict[int, Network], input_dim: int
) -> None:
    missing = [i for i in range(manifest.n_super) if i not in specialists]
    if missing:
        raise ContractError(f"missing specialists for superclasses {missing}")
    for i, net in specialists.items():
        if net.head_dim != manifest.subclass_count(i):
            raise ContractError(
                f"specialist {i} head width {net.head_dim} != "
                f"{manifest.subclass_count(i)} subclasses"
            )
        if net.input_dim != input_dim:
            raise ContractError(f"specialist {i} input dim {net.input_dim} != {input_dim}")


@dataclass(frozen=True)
class ModelRegistry:
    """Vanilla serving state: router plus all specialists resident."""

    super_net: Network
    specialists: dict[int, Network]
    manifest: HierarchyManifest

    def __post_init__(self):
        if self.super_net.head_dim != self.manifest.n_super:
            raise ContractError(
                f"router head {self.super_net.head_dim} != {self.manifest.n_super} superclasses"
            )
        _validate_specialists(self.manifest, self.specialists, self.super_net.input_dim)

    def total_model_bytes(self) -> int:
        total = net_mod.network_bytes(self.super_net)
        for i in range(self.manifest.n_super):
            total += net_mod.network_bytes(self.specialists[i])
        return total


class EfficientSession:
    """One-resident-network serving over packed deltas.

    Holds the base network plus, at most, one reconstructed specialist (the
    single-slot cache). Loading a delta charges its packed byte size;
    rebuilding charges one add per body element. Disabling the cache
    replays the literal reload-per-query inference rule.

    Single-owner state: give each thread its own session (the base network
    may be shared read-only).
    """

    def __init__(
        self,
        base: Network,
        packed_deltas: dict[int, bytes],
        manifest: HierarchyManifest,
        cache_enabled: bool = True,
    ):
        if base.head_dim != manifest.n_super:
            raise ContractError(
                f"router head {base.head_dim} != {manifest.n_super} superclasses"
            )
        missing = [i for i in range(manifest.n_super) if i not in packed_deltas]
        if missing:
            raise ContractError(f"missing packed deltas for superclasses {missing}")
        self.base = base
        self.packed_deltas = packed_deltas
        self.manifest = manifest
        self.cache_enabled = cache_enabled
        self.ledger = CostLedger()
        self._base_bytes = net_mod.network_bytes(base)
        self._body_elements = sum(t.size for _, t, _ in body_tensor_items(base))
        self._cached_super: int | None = None
        self._cached_net: Network | None = None
        self.ledger.peak_resident_bytes = self._base_bytes

    def specialist_for(self, super_index: int) -> Network:
        """Fetch (possibly rebuilding) the specialist for a superclass."""
        if self.cache_enabled and self._cached_super == super_index:
            return self._cached_net
        blob = self.packed_deltas[super_index]
        self.ledger.bytes_loaded += len(blob)
        self.ledger.specialist_switches += 1
        pack = unpack(blob)
        specialist = reconstruct(self.base, pack)
        if specialist.head_dim != self.manifest.subclass_count(super_index):
            raise ContractError(
                f"reconstructed specialist {super_index} head {specialist.head_dim} != "
                f"{self.manifest.subclass_count(super_index)} subclasses"
            )
        self.ledger.reconstruction_adds += self._body_elements
        resident = self._base_bytes + net_mod.network_bytes(specialist) + len(blob)
        self.ledger.peak_resident_bytes = max(self.ledger.peak_resident_bytes, resident)
        if self.cache_enabled:
            self._cached_super = super_index
            self._cached_net = specialist
        return specialist


def _argmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row argmax; ties break to the lowest class index."""
    return np.argmax(logits, axis=1).astype(np.int64)


def route_batch(router: Network, features: np.ndarray) -> np.ndarray:
    logits, _ = forward(router, features, training=False)
    return _argmax_rows(logits)


def _local_predictions(specialist: Network, features: np.ndarray) -> np.ndarray:
    logits, _ = forward(specialist, features, training=False)
    return _argmax_rows(logits)


def infer_vanilla(registry: ModelRegistry, x: np.ndarray) -> tuple[int, int]:
    """Single-row two-stage inference with all specialists resident."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 1 or x.shape[0] != registry.super_net.input_dim:
        raise DimensionError(
            f"feature row has shape {x.shape}, expected ({registry.super_net.input_dim},)"
        )
    s = int(route_batch(registry.super_net, x[None, :])[0])
    local = int(_local_predictions(registry.specialists[s], x[None, :])[0])
    return s, registry.manifest.sub_offset(s) + local


def infer_efficient(session: EfficientSession, x: np.ndarray) -> tuple[int, int, LedgerDelta]:
    """Single-row two-stage inference through the one-resident-model session."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 1 or x.shape[0] != session.base.input_dim:
        raise DimensionError(
            f"feature row has shape {x.shape}, expected ({session.base.input_dim},)"
        )
    before = session.ledger.snapshot()
    s = int(route_batch(session.base, x[None, :])[0])
    specialist = session.specialist_for(s)
    local = int(_local_predictions(specialist, x[None, :])[0])
    after = session.ledger
    delta = LedgerDelta(
        after.bytes_loaded - before.bytes_loaded,
        after.reconstruction_adds - before.reconstruction_adds,
        after.specialist_switches - before.specialist_switches,
    )
    return s, session.manifest.sub_offset(s) + local, delta


# --- evaluation ---------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    mode: str
    label: str
    super_names: tuple[str, ...]
    per_super_accuracy: tuple[float, ...]  # percent, subclass-level, by superclass
    per_super_counts: tuple[int, ...]
    macro_accuracy: float  # percent; mean of per-superclass accuracies
    micro_accuracy: float  # percent; plain fraction over all rows
    confusion: tuple[tuple[int, ...], ...]  # [true][pred] superclass counts
    n_test: int

    def stage1_accuracy(self) -> float:
        """Percent of rows whose (derived) superclass decision was correct."""
        total = sum(sum(row) for row in self.confusion)
        diag = sum(self.confusion[i][i] for i in range(len(self.confusion)))
        return 100.0 * diag / total if total else 0.0


@dataclass(frozen=True)
class EvalResult:
    report: EvalReport
    pred_supers: np.ndarray
    pred_subs: np.ndarray
    ledger: CostLedger | None = None


def confusion_matrix(pred_supers, true_supers, n_super: int) -> np.ndarray:
    pred = np.asarray(pred_supers, dtype=np.int64)
    true = np.asarray(true_supers, dtype=np.int64)
    if pred.shape != true.shape:
        raise ContractError(f"{pred.shape} predictions vs {true.shape} labels")
    for labels, what in ((pred, "prediction"), (true, "label")):
        if labels.size and (labels.min() < 0 or labels.max() >= n_super):
            bad = int(labels[(labels < 0) | (labels >= n_super)][0])
            raise IndexError(f"{what} {bad} out of range for {n_super} superclasses")
    matrix = np.zeros((n_super, n_super), dtype=np.int64)
    np.add.at(matrix, (true, pred), 1)
    return matrix


def build_report(
    mode: str,
    manifest: HierarchyManifest,
    true_subs: np.ndarray,
    pred_supers: np.ndarray,
    pred_subs: np.ndarray,
    label: str | None = None,
) -> EvalReport:
    true_supers = np.asarray([manifest.super_of(int(s)) for s in true_subs], dtype=np.int64)
    matrix = confusion_matrix(pred_supers, true_supers, manifest.n_super)
    correct = pred_subs == true_subs
    per_acc = []
    per_count = []
    for i in range(manifest.n_super):
        mask = true_supers == i
        count = int(mask.sum())
        per_count.append(count)
        per_acc.append(100.0 * float(correct[mask].sum()) / count if count else 0.0)
    macro = sum(per_acc) / len(per_acc)
    micro = 100.0 * float(correct.sum()) / len(true_subs) if len(true_subs) else 0.0
    return EvalReport(
        mode=mode,
        label=label or mode,
        super_names=tuple(manifest.super_names()),
        per_super_accuracy=tuple(per_acc),
        per_super_counts=tuple(per_count),
        macro_accuracy=macro,
        micro_accuracy=micro,
        confusion=tuple(tuple(int(c) for c in row) for row in matrix),
        n_test=len(true_subs),
    )


def _stage2_grouped(
    specialist_of, manifest: HierarchyManifest, features: np.ndarray, routed: np.ndarray
) -> np.ndarray:
    """Run stage 2 over runs of identically routed consecutive rows.

    Row outputs are batch-independent bit for bit, so grouping changes
    nothing about the predictions; it only batches the forward passes.
    """
    pred_subs = np.empty(len(routed), dtype=np.int64)
    start = 0
    n = len(routed)
    while start < n:
        end = start
        while end < n and routed[end] == routed[start]:
            end += 1
        s = int(routed[start])
        local = _local_predictions(specialist_of(s), features[start:end])
        pred_subs[start:end] = manifest.sub_offset(s) + local
        start = end
    return pred_subs


def evaluate_lowerbound(net: Network, test: Dataset, label: str | None = None) -> EvalResult:
    """Monolithic all-subclasses network; superclass decision is derived."""
    if net.head_dim != test.manifest.n_sub:
        raise ContractError(
            f"lowerbound head {net.head_dim} != {test.manifest.n_sub} subclasses"
        )
    logits, _ = forward(net, test.features, training=False)
    pred_subs = _argmax_rows(logits)
    pred_supers = np.asarray(
        [test.manifest.super_of(int(s)) for s in pred_subs], dtype=np.int64
    )
    report = build_report(MODE_LOWERBOUND, test.manifest, test.sub_labels, pred_supers, pred_subs, label)
    return EvalResult(report, pred_supers, pred_subs)


def evaluate_upperbound(
    specialists: dict[int, Network], test: Dataset, label: str | None = None
) -> EvalResult:
    """Oracle routing: the true superclass selects the specialist."""
    manifest = test.manifest
    if not len(test.sub_labels):
        raise ContractError("cannot evaluate an empty test set")
    _validate_specialists(manifest, specialists, test.dim)
    true_supers = test.super_labels()
    pred_subs = _stage2_grouped(lambda s: specialists[s], manifest, test.features, true_supers)
    report = build_report(MODE_UPPERBOUND, manifest, test.sub_labels, true_supers, pred_subs, label)
    return EvalResult(report, true_supers.copy(), pred_subs)


def evaluate_two_stage(registry: ModelRegistry, test: Dataset, label: str | None = None) -> EvalResult:
    """Vanilla two-stage inference over the whole test set, in row order."""
    if not len(test.sub_labels):
        raise ContractError("cannot evaluate an empty test set")
    routed = route_batch(registry.super_net, test.features)
    pred_subs = _stage2_grouped(
        lambda s: registry.specialists[s], registry.manifest, test.features, routed
    )
    report = build_report(
        MODE_TWO_STAGE_VANILLA, registry.manifest, test.sub_labels, routed, pred_subs, label
    )
    return EvalResult(report, routed, pred_subs)


def evaluate_efficient(session: EfficientSession, test: Dataset, label: str | None = None) -> EvalResult:
    """Efficient two-stage inference; ledger reflects the test-order trace."""
    if not len(test.sub_labels):
        raise ContractError("cannot evaluate an empty test set")
    routed = route_batch(session.base, test.features)
    if session.cache_enabled:
        pred_subs = _stage2_grouped(session.specialist_for, session.manifest, test.features, routed)
    else:
        # Literal per-query replay: every row reloads its specialist.
        pred_subs = np.empty(len(routed), dtype=np.int64)
        for i in range(len(routed)):
            s = int(routed[i])
            local = _local_predictions(session.specialist_for(s), test.features[i : i + 1])
            pred_subs[i] = session.manifest.sub_offset(s) + int(local[0])
    report = build_report(
        MODE_TWO_STAGE_EFFICIENT, session.manifest, test.sub_labels, routed, pred_subs, label
    )
    return EvalResult(report, routed, pred_subs, session.ledger.snapshot())
