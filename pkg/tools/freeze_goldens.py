#!/usr/bin/env python3
"""Run the golden experiment once and freeze its reference values.

Writes tests/golden/expected.json: macro accuracies per mode, compression
numbers, ledger counters, and SHA-256 hashes of every artifact. The
acceptance suite asserts against these frozen values; regenerate only when
the pipeline is intentionally changed, and review the diff.

Note: artifact hashes are exact for reruns in the same environment;
across numpy/zlib builds the accuracy values are covered by the published
tolerances instead.
"""

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from golden_pipeline import EXPECTED_PATH, branch_paths, collect_hashes, run_golden  # noqa: E402

from supersub.delta import MODE_FP16, compute_delta, pack  # noqa: E402
from supersub.network import load_network, network_bytes  # noqa: E402


def main() -> int:
    base = Path(tempfile.mkdtemp(prefix="golden_freeze_"))
    runs = run_golden(base)

    fp16 = {mode: res.report.macro_accuracy for mode, res in runs["fp16"].results.items()}
    qat = {mode: res.report.macro_accuracy for mode, res in runs["qat"].results.items()}
    stage1 = runs["fp16"].results["two_stage_vanilla"].report.stage1_accuracy()

    qat_paths = branch_paths(base, "qat")
    base_net = load_network(qat_paths.super_net)
    specialists = {i: load_network(qat_paths.finetuned_net(i)) for i in range(5)}
    qat_packed = [len(qat_paths.delta_file(i).read_bytes()) for i in range(5)]
    fp16_of_same = [
        pack(compute_delta(base_net, specialists[i], MODE_FP16, i)).packed_size for i in range(5)
    ]
    vanilla_total = network_bytes(base_net) + sum(network_bytes(n) for n in specialists.values())

    fp16_paths = branch_paths(base, "fp16")
    fp16_packed = [len(fp16_paths.delta_file(i).read_bytes()) for i in range(5)]
    fp16_refs = [len(fp16_paths.finetuned_net(i).read_bytes()) for i in range(5)]
    fp16_ratios = [p / r for p, r in zip(fp16_packed, fp16_refs)]

    ledger = runs["qat"].results["two_stage_efficient"].ledger

    expected = {
        "fp16_macro": fp16,
        "qat_macro": qat,
        "stage1_accuracy": stage1,
        "fp16_packed_sizes": fp16_packed,
        "fp16_ratios": fp16_ratios,
        "qat_packed_sizes": qat_packed,
        "fp16_packed_of_qat_finetunes": fp16_of_same,
        "qat_vanilla_total_bytes": vanilla_total,
        "qat_ledger": {
            "bytes_loaded": ledger.bytes_loaded,
            "peak_resident_bytes": ledger.peak_resident_bytes,
            "reconstruction_adds": ledger.reconstruction_adds,
            "specialist_switches": ledger.specialist_switches,
        },
        "hashes": collect_hashes(base),
    }
    EXPECTED_PATH.parent.mkdir(parents=True, exist_ok=True)
    EXPECTED_PATH.write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"froze goldens to {EXPECTED_PATH}")
    print(f"fp16 macro: { {k: round(v, 2) for k, v in fp16.items()} }")
    print(f"qat macro: { {k: round(v, 2) for k, v in qat.items()} }")
    print(f"gap: {fp16['upperbound_oracle'] - fp16['lowerbound']:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
