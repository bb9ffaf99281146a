import csv
import dataclasses
import hashlib
import json
from pathlib import Path

import pytest

from detsched.cli import main
from detsched.synthgen import build_paper_shaped_scenario, save_scenario, scenario_to_json

REPO_ROOT = Path(__file__).resolve().parents[1]


def tiny_scenario_file(tmp_path, **overrides):
    config = dataclasses.replace(
        build_paper_shaped_scenario(),
        train_count=3,
        test_count=2,
        frames_per_sequence=24,
        segment_frames=8,
        **overrides,
    )
    path = tmp_path / "scenario.json"
    save_scenario(path, config)
    return path


def tiny_schedule_file(tmp_path, **overrides):
    doc = {
        "version": 1,
        "total_steps": 400,
        "epsilon_start": 1.0,
        "epsilon_end": 0.1,
        "epsilon_decay_steps": 300,
        "target_sync_period": 100,
        "warmup_transitions": 50,
        "batch_size": 8,
        "learn_period": 2,
        "n_step": 3,
        "discount": 0.8,
        "learning_rate": 1e-3,
        "replay_capacity": 1000,
        "hidden_sizes": [16, 16],
        "n_atoms": 21,
        "v_min": 0.0,
        "v_max": 10.0,
        "log_period": 100,
    }
    doc.update(overrides)
    path = tmp_path / "schedule.json"
    path.write_text(json.dumps(doc))
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_rows(path: Path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Generate a tiny dataset, train a tiny agent, keep paths around."""
    root = tmp_path_factory.mktemp("cli")
    scenario = tiny_scenario_file(root)
    data = root / "data"
    assert main(["generate", str(scenario), str(data), "--seed", "3"]) == 0
    schedule = tiny_schedule_file(root)
    ckpt = root / "agent.ckpt"
    rc = main([
        "train", str(data), "--config", str(schedule), "--out", str(ckpt), "--seed", "1",
    ])
    assert rc == 0
    return {"root": root, "scenario": scenario, "data": data,
            "schedule": schedule, "ckpt": ckpt}


class TestGenerate:
    def test_rerun_same_seed_identical_files(self, pipeline, tmp_path):
        out2 = tmp_path / "data2"
        assert main(["generate", str(pipeline["scenario"]), str(out2), "--seed", "3"]) == 0
        for name in sorted(p.name for p in pipeline["data"].iterdir()):
            assert sha256(pipeline["data"] / name) == sha256(out2 / name), name

    def test_invalid_scenario_exit_2_with_field_name(self, tmp_path, capsys):
        config = build_paper_shaped_scenario()
        doc = scenario_to_json(config)
        doc["detectors"][0]["tp_rate_day"] = 1.2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        rc = main(["generate", str(bad), str(tmp_path / "out")])
        assert rc == 2
        assert "tp_rate_day" in capsys.readouterr().err

    def test_prints_summary(self, pipeline, capsys, tmp_path):
        main(["generate", str(pipeline["scenario"]), str(tmp_path / "d"), "--seed", "3"])
        out = capsys.readouterr().out
        assert "sequences" in out and "detectors" in out


class TestTrain:
    def test_checkpoint_and_log_exist(self, pipeline):
        assert pipeline["ckpt"].exists()
        log = pipeline["ckpt"].with_suffix(".ckpt.log.csv")
        assert log.exists()

    def test_log_header_asserts_holdout_variant(self, pipeline):
        log = pipeline["ckpt"].with_suffix(".ckpt.log.csv")
        header = log.read_text().splitlines()[0]
        assert header.startswith("#")
        assert "variant=holdout" in header
        assert "split=train" in header

    def test_log_is_csv_with_expected_columns(self, pipeline):
        rows = read_rows(pipeline["ckpt"].with_suffix(".ckpt.log.csv"))
        assert rows
        assert set(rows[0]) == {"step", "epsilon", "loss", "mean_return_last_100"}

    def test_rerun_identical_checkpoint_and_log(self, pipeline, tmp_path):
        ckpt2 = tmp_path / "again.ckpt"
        rc = main([
            "train", str(pipeline["data"]), "--config", str(pipeline["schedule"]),
            "--out", str(ckpt2), "--seed", "1",
        ])
        assert rc == 0
        assert sha256(ckpt2) == sha256(pipeline["ckpt"])

    def test_single_detector_portfolio_rejected(self, pipeline, tmp_path, capsys):
        rc = main([
            "train", str(pipeline["data"]), "--config", str(pipeline["schedule"]),
            "--out", str(tmp_path / "x.ckpt"), "--portfolio", "fast-rgb",
        ])
        assert rc == 2

    def test_paper_config_parses_with_protocol_values(self):
        doc = json.loads((REPO_ROOT / "configs" / "paper.json").read_text())
        from detsched.agent import schedule_from_json

        schedule = schedule_from_json(doc)
        assert schedule.total_steps == 300_000
        assert schedule.epsilon_start == 1.0
        assert schedule.epsilon_end == 0.01
        assert schedule.decay_steps == 300_000
        assert schedule.target_sync_period == 8_000
        assert schedule.warmup_transitions == 20_000


class TestEval:
    def test_fixed_baseline_row(self, pipeline, tmp_path):
        out = tmp_path / "fixed.csv"
        rc = main([
            "eval", str(pipeline["data"]), "--baseline", "fixed:fast-rgb",
            "--out", str(out),
        ])
        assert rc == 0
        rows = read_rows(out)
        assert len(rows) == 1
        assert rows[0]["policy"] == "fixed:fast-rgb"
        assert float(rows[0]["usage_fast-rgb"]) == 100.0

    def test_checkpoint_eval_usage_sums_to_hundred(self, pipeline, tmp_path):
        out = tmp_path / "learned.csv"
        rc = main([
            "eval", str(pipeline["data"]), "--checkpoint", str(pipeline["ckpt"]),
            "--out", str(out),
        ])
        assert rc == 0
        row = read_rows(out)[0]
        assert row["policy"] == "learned"
        usage = [float(v) for k, v in row.items() if k.startswith("usage_")]
        assert sum(usage) == pytest.approx(100.0, abs=0.05)

    def test_eval_does_not_mutate_checkpoint_or_dataset(self, pipeline, tmp_path):
        before_ckpt = sha256(pipeline["ckpt"])
        before_frames = sha256(pipeline["data"] / "frames.jsonl")
        main([
            "eval", str(pipeline["data"]), "--checkpoint", str(pipeline["ckpt"]),
            "--out", str(tmp_path / "o.csv"),
        ])
        assert sha256(pipeline["ckpt"]) == before_ckpt
        assert sha256(pipeline["data"] / "frames.jsonl") == before_frames

    def test_random_exclusion_named_in_policy(self, pipeline, tmp_path):
        out = tmp_path / "rand.csv"
        rc = main([
            "eval", str(pipeline["data"]), "--baseline", "random",
            "--exclude", "slow-lidar", "--out", str(out), "--seed", "5",
        ])
        assert rc == 0
        row = read_rows(out)[0]
        assert row["policy"] == "random-wo-slow-lidar"
        assert float(row["usage_slow-lidar"]) == 0.0

    def test_lighting_sweep_table(self, pipeline, tmp_path):
        out = tmp_path / "light.csv"
        rc = main([
            "eval", str(pipeline["data"]), "--baseline", "lighting", "--sweep",
            "--out", str(out),
        ])
        assert rc == 0
        sweep_rows = read_rows(tmp_path / "light_sweep.csv")
        assert len(sweep_rows) == 10
        summary = read_rows(out)[0]
        assert summary["policy"] == "lighting"
        for column in ("ap_0.7", "ap_0.5", "ap_0.5:0.95"):
            best = max(float(r[column]) for r in sweep_rows)
            assert float(summary[column]) == pytest.approx(best, abs=1e-9)

    def test_lighting_without_threshold_or_sweep_rejected(self, pipeline, tmp_path):
        rc = main([
            "eval", str(pipeline["data"]), "--baseline", "lighting",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == 2

    def test_rerun_identical_csv(self, pipeline, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["eval", str(pipeline["data"]), "--baseline", "alternating", "--seed", "2"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_baseline_exit_2(self, pipeline, tmp_path):
        rc = main([
            "eval", str(pipeline["data"]), "--baseline", "nonsense",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == 2


class TestReport:
    def test_merge_and_best_flags(self, pipeline, tmp_path):
        csvs = []
        for i, baseline in enumerate(["fixed:fast-rgb", "fixed:fast-lidar", "alternating"]):
            out = tmp_path / f"e{i}.csv"
            assert main([
                "eval", str(pipeline["data"]), "--baseline", baseline, "--out", str(out),
            ]) == 0
            csvs.append(str(out))
        report = tmp_path / "report.csv"
        assert main(["report", *csvs, "--out", str(report)]) == 0
        rows = read_rows(report)
        assert len(rows) == 3
        for column in ("ap_0.7", "ap_0.5", "ap_0.5:0.95"):
            best = max(float(r[column]) for r in rows)
            flagged = [r for r in rows if r[f"best_{column}"] == "1"]
            assert flagged
            assert all(float(r[column]) == best for r in flagged)

    def test_portfolio_filter(self, pipeline, tmp_path):
        full = tmp_path / "full.csv"
        duo = tmp_path / "duo.csv"
        assert main([
            "eval", str(pipeline["data"]), "--baseline", "fixed:fast-rgb",
            "--out", str(full),
        ]) == 0
        assert main([
            "eval", str(pipeline["data"]), "--baseline", "fixed:fast-rgb",
            "--portfolio", "fast-rgb,slow-rgb", "--out", str(duo),
        ]) == 0
        report = tmp_path / "r.csv"
        assert main([
            "report", str(full), str(duo), "--out", str(report),
            "--portfolio", "fast-rgb,slow-rgb",
        ]) == 0
        rows = read_rows(report)
        assert len(rows) == 1
        assert rows[0]["portfolio"] == "fast-rgb+slow-rgb"

    def test_empty_report_rejected(self, pipeline, tmp_path):
        full = tmp_path / "full.csv"
        assert main([
            "eval", str(pipeline["data"]), "--baseline", "fixed:fast-rgb",
            "--out", str(full),
        ]) == 0
        rc = main([
            "report", str(full), "--out", str(tmp_path / "r.csv"),
            "--portfolio", "does-not-exist",
        ])
        assert rc == 2
