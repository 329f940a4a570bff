"""CLI verbs, exit codes, and stdout contracts."""

import json

import pytest

from supersub.cli import main
from supersub.experiment import RunPaths
from test_experiment import config_doc


@pytest.fixture()
def config_path(tmp_path):
    doc = config_doc(tmp_path / "run", epochs=4)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture()
def qat_config_path(tmp_path):
    doc = config_doc(tmp_path / "run", delta_mode="qat-int", epochs=4)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_gen_data_exit_zero(config_path, capsys):
    assert main(["--config", str(config_path), "gen-data"]) == 0
    assert "wrote" in capsys.readouterr().out


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.json"), "gen-data"]) == 2
    assert "error" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1}', encoding="utf-8")
    assert main(["--config", str(bad), "gen-data"]) == 2


def test_train_before_gen_data_exits_2(config_path):
    assert main(["--config", str(config_path), "train", "super"]) == 2


def test_invalid_superclass_index_exits_2(config_path):
    assert main(["--config", str(config_path), "gen-data"]) == 0
    assert main(["--config", str(config_path), "train", "super"]) == 0
    assert main(["--config", str(config_path), "finetune", "9"]) == 2


def test_pack_prints_ratio_matching_compression_ratio(qat_config_path, capsys):
    for argv in (["gen-data"], ["train", "super"], ["finetune", "0"]):
        assert main(["--config", str(qat_config_path)] + argv) == 0
    capsys.readouterr()
    assert main(["--config", str(qat_config_path), "pack", "0"]) == 0
    out = capsys.readouterr().out

    from supersub.delta import compression_ratio, compute_delta, pack
    from supersub.experiment import load_config, pack_reference_bytes
    from supersub.network import load_network

    config = load_config(qat_config_path)
    paths = RunPaths(config.out_dir)
    base = load_network(paths.super_net)
    specialist = load_network(paths.finetuned_net(0))
    packed = pack(compute_delta(base, specialist, config.delta_mode, 0))
    reference, _ = pack_reference_bytes(config, specialist)
    expected = compression_ratio(packed, reference)
    assert f"ratio {expected:.4f}" in out


def test_unpack_reconstructs_bit_identical(qat_config_path):
    for argv in (["gen-data"], ["train", "super"], ["finetune", "0"], ["pack", "0"], ["unpack", "0"]):
        assert main(["--config", str(qat_config_path)] + argv) == 0
    from supersub.experiment import load_config

    paths = RunPaths(load_config(qat_config_path).out_dir)
    assert paths.reconstructed_net(0).read_bytes() == paths.finetuned_net(0).read_bytes()


def test_corrupted_delta_exits_3(qat_config_path, capsys):
    for argv in (["gen-data"], ["train", "super"], ["finetune", "0"], ["pack", "0"]):
        assert main(["--config", str(qat_config_path)] + argv) == 0
    from supersub.experiment import load_config

    paths = RunPaths(load_config(qat_config_path).out_dir)
    blob = bytearray(paths.delta_file(0).read_bytes())
    blob[-1] ^= 0xFF
    paths.delta_file(0).write_bytes(bytes(blob))
    assert main(["--config", str(qat_config_path), "unpack", "0"]) == 3
    assert "integrity" in capsys.readouterr().err


def test_stale_base_exits_3(qat_config_path, capsys):
    for argv in (["gen-data"], ["train", "super"], ["finetune", "0"], ["pack", "0"]):
        assert main(["--config", str(qat_config_path)] + argv) == 0
    # Retrain the router with a different seed: the stored delta goes stale.
    assert main(["--config", str(qat_config_path), "--seed", "31337", "train", "super"]) == 0
    assert main(["--config", str(qat_config_path), "unpack", "0"]) == 3


def test_eval_and_report_flow(config_path, capsys):
    verbs = (
        ["gen-data"],
        ["train", "super"],
        ["train", "lowerbound"],
        ["finetune", "0"],
        ["finetune", "1"],
        ["pack", "0"],
        ["pack", "1"],
        ["eval", "lowerbound"],
        ["eval", "upperbound_oracle"],
        ["eval", "two_stage_vanilla"],
        ["eval", "two_stage_efficient"],
        ["report"],
    )
    for argv in verbs:
        assert main(["--config", str(config_path)] + argv) == 0, argv
    out = capsys.readouterr().out
    assert "macro" in out
    assert "avg ratio" in out


def test_eval_rerun_byte_identical(config_path):
    for argv in (["gen-data"], ["train", "super"], ["finetune", "0"], ["finetune", "1"],
                 ["eval", "upperbound_oracle"]):
        assert main(["--config", str(config_path)] + argv) == 0
    from supersub.experiment import load_config

    paths = RunPaths(load_config(config_path).out_dir)
    first = paths.eval_csv("upperbound_oracle").read_bytes()
    assert main(["--config", str(config_path), "eval", "upperbound_oracle"]) == 0
    assert paths.eval_csv("upperbound_oracle").read_bytes() == first


def test_out_override_redirects_artifacts(config_path, tmp_path):
    other = tmp_path / "elsewhere"
    assert main(["--config", str(config_path), "--out", str(other), "gen-data"]) == 0
    assert (other / "train.hsds").exists()


def test_run_verb_executes_pipeline(tmp_path, capsys):
    doc = config_doc(tmp_path / "run", epochs=3)
    doc["eval_modes"] = ["lowerbound", "two_stage_vanilla"]
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["--config", str(path), "run"]) == 0
    out = capsys.readouterr().out
    assert "two_stage_vanilla: macro" in out
