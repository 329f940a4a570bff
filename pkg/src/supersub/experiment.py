"""Config-driven experiment pipeline: the machinery behind the CLI verbs.

One JSON config drives a whole experiment: synthetic data generation,
router / baseline / specialist training, delta packing, evaluation, and
report rendering. Every stage derives its seed from the experiment seed
XOR a fixed stage tag, so the entire pipeline is reproducible byte for
byte from the single top-level seed.

Commands communicate through files in the config's output directory and
are idempotent: rerunning any of them overwrites its outputs with
identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import delta as delta_mod
from . import network as net_mod
from . import report as report_mod
from . import runtime as runtime_mod
from .data import Dataset, SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .errors import ParameterError, ValidationError
from .network import Network, init_network, load_network, save_network, snap_to_grid, uniform_config
from .runtime import (
    MODE_LOWERBOUND,
    MODE_TWO_STAGE_EFFICIENT,
    MODE_TWO_STAGE_VANILLA,
    MODE_UPPERBOUND,
    EfficientSession,
    EvalResult,
    ModelRegistry,
)
from .tensor import child_seed
from .train import LabelView, TrainConfig, finetune_from_super, train

# Stage seed tags; values are arbitrary fixed constants, never change them.
TAG_DATA = 0x4441544100000001
TAG_SUPER = 0x5355505200000002
TAG_LOWER = 0x4C4F575200000003
TAG_SCRATCH = 0x5355424300000004
TAG_FINETUNE = 0x46494E4500000005
TAG_INIT = 0x494E495400000006

MODE_UPPERBOUND_SCRATCH = "upperbound_scratch"
EVAL_MODES = (
    MODE_LOWERBOUND,
    MODE_UPPERBOUND,
    MODE_TWO_STAGE_VANILLA,
    MODE_TWO_STAGE_EFFICIENT,
)


@dataclass(frozen=True)
class StageTrainParams:
    lr: float
    epochs: int
    batch_size: int


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out_dir: str
    synthetic: SyntheticSpec | None
    dataset_paths: tuple[str, str] | None  # (train, test) when data comes from files
    hidden_dims: tuple[int, ...]
    batchnorm: bool
    train_super: StageTrainParams
    train_subclass: StageTrainParams
    train_finetune: StageTrainParams
    delta_mode: str
    qat_bits: int = 8
    include_lowerbound: bool = True
    include_scratch: bool = False
    eval_modes: tuple[str, ...] = EVAL_MODES

    def data_seed(self) -> int:
        return child_seed(self.seed, TAG_DATA)

    def qat(self) -> bool:
        return self.delta_mode == delta_mod.MODE_QAT_INT


def _stage_params(doc: dict, key: str) -> StageTrainParams:
    block = doc.get(key)
    if not isinstance(block, dict):
        raise ValidationError(f'config "train" section is missing "{key}"')
    try:
        return StageTrainParams(
            lr=float(block["lr"]),
            epochs=int(block["epochs"]),
            batch_size=int(block["batch_size"]),
        )
    except KeyError as exc:
        raise ValidationError(f'train.{key} is missing {exc}') from exc


def parse_config(doc: dict, out_dir_override: str | None = None, seed_override: int | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    for required in ("seed", "out_dir", "network", "train", "delta_mode"):
        if required not in doc:
            raise ValidationError(f'config is missing "{required}"')
    seed = int(doc["seed"]) if seed_override is None else seed_override

    synthetic = None
    dataset_paths = None
    if doc.get("synthetic") is not None:
        s = doc["synthetic"]
        try:
            synthetic = SyntheticSpec(
                n_super=int(s["n_super"]),
                subs_per_super=tuple(int(k) for k in s["subs_per_super"]),
                dim=int(s["dim"]),
                super_sep=float(s["super_sep"]),
                sub_sep=float(s["sub_sep"]),
                noise_sigma=float(s["noise_sigma"]),
                n_train_per_sub=int(s["n_train_per_sub"]),
                n_test_per_sub=int(s["n_test_per_sub"]),
                seed=child_seed(seed, TAG_DATA),
            )
        except KeyError as exc:
            raise ValidationError(f"synthetic block is missing {exc}") from exc
    elif doc.get("dataset") is not None:
        d = doc["dataset"]
        if "train" not in d or "test" not in d:
            raise ValidationError('dataset block needs "train" and "test" paths')
        dataset_paths = (str(d["train"]), str(d["test"]))
    else:
        raise ValidationError('config needs either a "synthetic" or a "dataset" block')

    net = doc["network"]
    if "hidden_dims" not in net:
        raise ValidationError('network block needs "hidden_dims"')
    delta_mode = str(doc["delta_mode"])
    if delta_mode not in (delta_mod.MODE_FP16, delta_mod.MODE_QAT_INT):
        raise ValidationError(f"unknown delta_mode {delta_mode!r}")
    eval_modes = tuple(doc.get("eval_modes", EVAL_MODES))
    allowed = set(EVAL_MODES) | {MODE_UPPERBOUND_SCRATCH}
    for mode in eval_modes:
        if mode not in allowed:
            raise ValidationError(f"unknown eval mode {mode!r}")

    return ExperimentConfig(
        seed=seed,
        out_dir=out_dir_override or str(doc["out_dir"]),
        synthetic=synthetic,
        dataset_paths=dataset_paths,
        hidden_dims=tuple(int(h) for h in net["hidden_dims"]),
        batchnorm=bool(net.get("batchnorm", True)),
        train_super=_stage_params(doc["train"], "superclass"),
        train_subclass=_stage_params(doc["train"], "subclass"),
        train_finetune=_stage_params(doc["train"], "finetune"),
        delta_mode=delta_mode,
        qat_bits=int(doc.get("qat_bits", 8)),
        include_lowerbound=bool(doc.get("include_lowerbound", True)),
        include_scratch=bool(doc.get("include_scratch", False)),
        eval_modes=eval_modes,
    )


def load_config(path, out_dir_override: str | None = None, seed_override: int | None = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, out_dir_override, seed_override)


# --- paths ---------------------------------------------------------------------


class RunPaths:
    """Canonical artifact locations inside one experiment's output directory."""

    def __init__(self, out_dir: str):
        self.root = Path(out_dir)

    def ensure(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)

    @property
    def train_data(self) -> Path:
        return self.root / "train.hsds"

    @property
    def test_data(self) -> Path:
        return self.root / "test.hsds"

    @property
    def super_net(self) -> Path:
        return self.root / "super.hsnw"

    @property
    def lower_net(self) -> Path:
        return self.root / "lower.hsnw"

    def scratch_net(self, i: int) -> Path:
        return self.root / f"sub_{i}.hsnw"

    def finetuned_net(self, i: int) -> Path:
        return self.root / f"ft_{i}.hsnw"

    def delta_file(self, i: int) -> Path:
        return self.root / f"delta_{i}.hsdl"

    def reconstructed_net(self, i: int) -> Path:
        return self.root / f"reconstructed_{i}.hsnw"

    def loss_csv(self, target: str) -> Path:
        return self.root / f"loss_{target.replace(':', '_')}.csv"

    def eval_csv(self, label: str) -> Path:
        return self.root / f"eval_{label}.csv"

    def confusion_csv(self, label: str) -> Path:
        return self.root / f"confusion_{label}.csv"

    def confusion_pct_csv(self, label: str) -> Path:
        return self.root / f"confusion_pct_{label}.csv"

    def predictions_csv(self, label: str) -> Path:
        return self.root / f"predictions_{label}.csv"

    def ledger_csv(self, label: str) -> Path:
        return self.root / f"ledger_{label}.csv"

    @property
    def summary_txt(self) -> Path:
        return self.root / "summary.txt"

    @property
    def summary_csv(self) -> Path:
        return self.root / "summary.csv"

    @property
    def compression_csv(self) -> Path:
        return self.root / "compression.csv"


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing artifact: {path}")
    return path


def _load_train(paths: RunPaths) -> Dataset:
    return load_dataset(_require(paths.train_data))


def _load_test(paths: RunPaths) -> Dataset:
    return load_dataset(_require(paths.test_data))


# --- commands ------------------------------------------------------------------


def cmd_gen_data(config: ExperimentConfig) -> tuple[Path, Path]:
    """Write train/test dataset files (generating them if synthetic)."""
    paths = RunPaths(config.out_dir)
    paths.ensure()
    if config.synthetic is not None:
        train_ds, test_ds = generate_synthetic(config.synthetic)
    else:
        train_ds = load_dataset(_require(Path(config.dataset_paths[0])))
        test_ds = load_dataset(_require(Path(config.dataset_paths[1])))
    save_dataset(train_ds, paths.train_data)
    save_dataset(test_ds, paths.test_data)
    return paths.train_data, paths.test_data


def _network_config(config: ExperimentConfig, input_dim: int, head_dim: int):
    return uniform_config(input_dim, list(config.hidden_dims), head_dim, config.batchnorm)


def _train_config(stage: StageTrainParams, stage_seed: int, qat: bool, bits: int) -> TrainConfig:
    return TrainConfig(
        lr=stage.lr,
        epochs=stage.epochs,
        batch_size=stage.batch_size,
        seed=stage_seed,
        qat=qat,
        qat_bits=bits,
    )


def _write_loss_history(path: Path, history: list[float]) -> None:
    lines = ["epoch,loss"]
    for i, loss in enumerate(history):
        lines.append(f"{i},{loss:.6f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_train(config: ExperimentConfig, target: str) -> Path:
    """Train one model: target is "super", "lowerbound", or "sub:<i>"."""
    paths = RunPaths(config.out_dir)
    train_ds = _load_train(paths)
    manifest = train_ds.manifest

    if target == "super":
        stage_seed = child_seed(config.seed, TAG_SUPER)
        view = LabelView.superclass()
        head = manifest.n_super
        stage = config.train_super
        qat = config.qat()
        out_path = paths.super_net
    elif target == "lowerbound":
        stage_seed = child_seed(config.seed, TAG_LOWER)
        view = LabelView.all_subclasses()
        head = manifest.n_sub
        stage = config.train_subclass
        qat = False
        out_path = paths.lower_net
    elif target.startswith("sub:"):
        i = _parse_super_index(target[4:], manifest.n_super)
        stage_seed = child_seed(config.seed, TAG_SCRATCH, i)
        view = LabelView.subclass_of(i)
        head = manifest.subclass_count(i)
        stage = config.train_subclass
        qat = False
        out_path = paths.scratch_net(i)
    else:
        raise ParameterError(f"unknown train target {target!r}")

    net0 = init_network(
        _network_config(config, train_ds.dim, head), child_seed(stage_seed, TAG_INIT)
    )
    tcfg = _train_config(stage, stage_seed, qat, config.qat_bits)
    trained, history = train(net0, train_ds, view, tcfg)
    if qat:
        trained = snap_to_grid(trained, config.qat_bits)
    save_network(trained, out_path)
    _write_loss_history(paths.loss_csv(target), history)
    return out_path


def _parse_super_index(text: str, n_super: int) -> int:
    try:
        i = int(text)
    except ValueError as exc:
        raise ParameterError(f"superclass index must be an integer, got {text!r}") from exc
    if not 0 <= i < n_super:
        raise IndexError(f"superclass index {i} out of range 0..{n_super - 1}")
    return i


def cmd_finetune(config: ExperimentConfig, super_index: int) -> Path:
    """Finetune the router into the specialist for one superclass."""
    paths = RunPaths(config.out_dir)
    train_ds = _load_train(paths)
    _parse_super_index(str(super_index), train_ds.manifest.n_super)
    base = load_network(_require(paths.super_net))
    stage_seed = child_seed(config.seed, TAG_FINETUNE, super_index)
    tcfg = _train_config(config.train_finetune, stage_seed, config.qat(), config.qat_bits)
    tuned = finetune_from_super(base, super_index, train_ds, tcfg)
    if config.qat():
        body_scales = {n: s for n, s in base.quant.scales if not n.startswith("head")}
        tuned = snap_to_grid(tuned, config.qat_bits, body_scales=body_scales)
    save_network(tuned, paths.finetuned_net(super_index))
    return paths.finetuned_net(super_index)


def pack_reference_bytes(config: ExperimentConfig, specialist: Network) -> tuple[int, str]:
    """Reference model size for compression ratios, with its kind label.

    fp16 deltas compare against the full-precision specialist file; qat-int
    deltas compare against the specialist stored with int8 weight payloads.
    """
    if config.delta_mode == delta_mod.MODE_FP16:
        return len(net_mod.serialize_network(specialist)), "full_f32"
    return delta_mod.quantized_network_bytes(specialist), "int8+scales"


def cmd_pack(config: ExperimentConfig, super_index: int) -> tuple[Path, str]:
    """Compute, compress and store the delta for one specialist."""
    paths = RunPaths(config.out_dir)
    base = load_network(_require(paths.super_net))
    specialist = load_network(_require(paths.finetuned_net(super_index)))
    pack = delta_mod.compute_delta(base, specialist, config.delta_mode, super_index)
    packed = delta_mod.pack(pack)
    paths.delta_file(super_index).write_bytes(packed.data)
    reference, kind = pack_reference_bytes(config, specialist)
    ratio = delta_mod.compression_ratio(packed, reference)
    summary = (
        f"superclass {super_index}: raw {packed.raw_size} packed {packed.packed_size} "
        f"reference {reference} ({kind}) ratio {ratio:.4f}"
    )
    return paths.delta_file(super_index), summary


def cmd_unpack(config: ExperimentConfig, super_index: int) -> Path:
    """Reconstruct a specialist network file from its stored delta."""
    paths = RunPaths(config.out_dir)
    base = load_network(_require(paths.super_net))
    blob = _require(paths.delta_file(super_index)).read_bytes()
    pack = delta_mod.unpack(blob)
    specialist = delta_mod.reconstruct(base, pack)
    save_network(specialist, paths.reconstructed_net(super_index))
    return paths.reconstructed_net(super_index)


def _load_specialists(paths: RunPaths, manifest, scratch: bool = False) -> dict[int, Network]:
    loader = paths.scratch_net if scratch else paths.finetuned_net
    return {i: load_network(_require(loader(i))) for i in range(manifest.n_super)}


def cmd_eval(config: ExperimentConfig, mode: str) -> EvalResult:
    """Evaluate one mode over the test set and write its report files."""
    paths = RunPaths(config.out_dir)
    test_ds = _load_test(paths)
    manifest = test_ds.manifest

    if mode == MODE_LOWERBOUND:
        net = load_network(_require(paths.lower_net))
        result = runtime_mod.evaluate_lowerbound(net, test_ds)
    elif mode == MODE_UPPERBOUND:
        specialists = _load_specialists(paths, manifest)
        result = runtime_mod.evaluate_upperbound(specialists, test_ds)
    elif mode == MODE_UPPERBOUND_SCRATCH:
        specialists = _load_specialists(paths, manifest, scratch=True)
        result = runtime_mod.evaluate_upperbound(specialists, test_ds, label=MODE_UPPERBOUND_SCRATCH)
    elif mode == MODE_TWO_STAGE_VANILLA:
        registry = ModelRegistry(
            load_network(_require(paths.super_net)), _load_specialists(paths, manifest), manifest
        )
        result = runtime_mod.evaluate_two_stage(registry, test_ds)
    elif mode == MODE_TWO_STAGE_EFFICIENT:
        base = load_network(_require(paths.super_net))
        packed = {
            i: _require(paths.delta_file(i)).read_bytes() for i in range(manifest.n_super)
        }
        session = EfficientSession(base, packed, manifest)
        result = runtime_mod.evaluate_efficient(session, test_ds)
    else:
        raise ParameterError(f"unknown eval mode {mode!r}")

    label = result.report.label
    paths.eval_csv(label).write_text(report_mod.render_eval_csv(result.report), encoding="utf-8")
    paths.confusion_csv(label).write_text(
        report_mod.render_confusion_csv(result.report.confusion, result.report.super_names),
        encoding="utf-8",
    )
    paths.confusion_pct_csv(label).write_text(
        report_mod.render_confusion_percent(result.report.confusion, result.report.super_names),
        encoding="utf-8",
    )
    paths.predictions_csv(label).write_text(
        report_mod.render_predictions_csv(test_ds.sub_labels, result.pred_supers, result.pred_subs),
        encoding="utf-8",
    )
    if result.ledger is not None:
        paths.ledger_csv(label).write_text(
            report_mod.render_ledger_csv(result.ledger), encoding="utf-8"
        )
    return result


def _parse_eval_csv(path: Path) -> runtime_mod.EvalReport:
    """Rebuild the aggregate report from its CSV rendering (cmd_report input)."""
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    label = None
    names, accs, counts = [], [], []
    macro = micro = None
    n_test = 0
    for line in lines[1:]:
        cells = line.split(",")
        if cells[0] == "summary":
            if cells[1] == "macro_accuracy_pct":
                macro = float(cells[2])
                n_test = int(cells[3])
            elif cells[1] == "micro_accuracy_pct":
                micro = float(cells[2])
            continue
        label = cells[0]
        names.append(cells[1])
        accs.append(float(cells[2]))
        counts.append(int(cells[3]))
    if label is None or macro is None or micro is None:
        raise ValidationError(f"eval CSV {path} is missing rows")
    mode = label if label in EVAL_MODES else MODE_UPPERBOUND
    zero = tuple(tuple(0 for _ in names) for _ in names)
    return runtime_mod.EvalReport(
        mode=mode,
        label=label,
        super_names=tuple(names),
        per_super_accuracy=tuple(accs),
        per_super_counts=tuple(counts),
        macro_accuracy=macro,
        micro_accuracy=micro,
        confusion=zero,
        n_test=n_test,
    )


def cmd_report(config: ExperimentConfig) -> tuple[str, str]:
    """Render the cross-mode gap summary and the compression table."""
    paths = RunPaths(config.out_dir)
    missing: list[str] = []
    reports = []
    for mode in config.eval_modes:
        path = paths.eval_csv(mode)
        if path.exists():
            reports.append(_parse_eval_csv(path))
        else:
            missing.append(str(path))

    manifest = None
    comp_rows: list[report_mod.CompressionRow] = []
    if paths.train_data.exists():
        manifest = _load_train(paths).manifest
        for i in range(manifest.n_super):
            delta_path = paths.delta_file(i)
            ft_path = paths.finetuned_net(i)
            if not delta_path.exists() or not ft_path.exists():
                missing.append(str(delta_path if not delta_path.exists() else ft_path))
                continue
            specialist = load_network(ft_path)
            reference, kind = pack_reference_bytes(config, specialist)
            comp_rows.append(
                report_mod.CompressionRow(
                    superclass=manifest.super_name(i),
                    mode=config.delta_mode,
                    packed_bytes=len(delta_path.read_bytes()),
                    reference_bytes=reference,
                    reference_kind=kind,
                )
            )
    else:
        missing.append(str(paths.train_data))

    if missing or not reports:
        raise FileNotFoundError("incomplete run dir, missing: " + ", ".join(missing))

    gap_text, gap_csv = report_mod.gap_report(reports)
    comp_text, comp_csv = report_mod.compression_summary(comp_rows)
    text = gap_text + "\n" + comp_text
    paths.summary_txt.write_text(text, encoding="utf-8")
    paths.summary_csv.write_text(gap_csv, encoding="utf-8")
    paths.compression_csv.write_text(comp_csv, encoding="utf-8")
    return text, gap_csv


@dataclass
class ExperimentRun:
    """Everything a full pipeline pass produced, for tests and reporting."""

    config: ExperimentConfig
    paths: RunPaths
    results: dict[str, EvalResult] = field(default_factory=dict)
    pack_summaries: list[str] = field(default_factory=list)


def run_experiment(config: ExperimentConfig) -> ExperimentRun:
    """Run the whole pipeline for one config: data to summary files."""
    run = ExperimentRun(config, RunPaths(config.out_dir))
    cmd_gen_data(config)
    cmd_train(config, "super")
    if config.include_lowerbound:
        cmd_train(config, "lowerbound")
    train_ds = _load_train(run.paths)
    n_super = train_ds.manifest.n_super
    if config.include_scratch:
        for i in range(n_super):
            cmd_train(config, f"sub:{i}")
    for i in range(n_super):
        cmd_finetune(config, i)
        _, summary = cmd_pack(config, i)
        run.pack_summaries.append(summary)
    for mode in config.eval_modes:
        run.results[mode] = cmd_eval(config, mode)
    cmd_report(config)
    return run
