"""End-to-end tests of the command-line interface."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from trajtransfer.cli import main
from trajtransfer.config import RunConfig
from trajtransfer.dtw import DtwParams, dtw_mt
from trajtransfer.trajectory import trajectory_from_dict


@pytest.fixture()
def runner():
    return CliRunner()


def write_traj(path: Path, xs, id="t"):
    data = {
        "id": id,
        "source": "crowd",
        "waypoints": [
            {"g": "open", "t": [float(x), 0.0, 0.0], "r": [0.0, 0.0, 0.0, 1.0]} for x in xs
        ],
    }
    path.write_text(json.dumps(data))
    return data


def tiny_config(tmp_path: Path) -> Path:
    cfg = RunConfig()
    cfg = cfg.override(
        "net",
        h1_pc=6, h1_lang=4, h1_traj=6, h2_pt=5, h2_lt=4, h3=4,
        epochs_pretrain=2, epochs_finetune=3, batch_size=16,
        corruption_p=0.1, dropout_rate=0.2, rng_seed=0,
    )
    cfg = cfg.override(
        "synth", n_tasks=8, demos_per_task=4, tasks_per_manual=1, points_per_part=60
    )
    path = tmp_path / "config.json"
    cfg.save(path)
    return path


class TestDistanceCommand:
    def test_prints_scalar(self, runner, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        write_traj(a, [0.0, 0.01], id="a")
        write_traj(b, [0.0, 0.02], id="b")
        result = runner.invoke(main, ["distance", str(a), str(b)])
        assert result.exit_code == 0, result.output
        expected = dtw_mt(
            trajectory_from_dict(json.loads(a.read_text())),
            trajectory_from_dict(json.loads(b.read_text())),
            DtwParams(),
        ).distance
        assert float(result.output.strip()) == pytest.approx(expected, rel=1e-9)

    def test_json_output_with_path(self, runner, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        write_traj(a, [0.0, 0.01, 0.02], id="a")
        write_traj(b, [0.0, 0.02], id="b")
        result = runner.invoke(main, ["distance", str(a), str(b), "--json"])
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert set(payload) == {"distance", "path", "path_len"}
        assert payload["path"][0] == [0, 0]
        assert payload["path_len"] == len(payload["path"])

    def test_flag_overrides_scale(self, runner, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        write_traj(a, [0.0], id="a")
        write_traj(b, [1.0], id="b")
        result = runner.invoke(
            main,
            ["distance", str(a), str(b), "--alpha-t", "1.0", "--gamma", "0.0", "--beta", "0"],
        )
        assert result.exit_code == 0
        assert float(result.output.strip()) == pytest.approx(1.0, abs=1e-9)

    def test_invalid_file_fails(self, runner, tmp_path):
        a = tmp_path / "a.json"
        a.write_text("{\"waypoints\": []}")
        b = tmp_path / "b.json"
        write_traj(b, [0.0])
        result = runner.invoke(main, ["distance", str(a), str(b)])
        assert result.exit_code != 0


class TestSynthImportExport:
    def test_synth_deterministic_hash(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        outputs = []
        for name in ("d1", "d2"):
            result = runner.invoke(
                main,
                ["synth", "--out", str(tmp_path / name), "--seed", "4", "--config", str(config)],
            )
            assert result.exit_code == 0, result.output
            outputs.append(result.output)
        hash_lines = [out.splitlines()[-1] for out in outputs]
        assert hash_lines[0] == hash_lines[1]

    def test_import_reports_counts(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        runner.invoke(main, ["synth", "--out", str(tmp_path / "ds"), "--config", str(config)])
        result = runner.invoke(main, ["import", str(tmp_path / "ds")])
        assert result.exit_code == 0
        assert "instructions: 8" in result.output
        assert "demos: 32" in result.output

    def test_import_empty_fails(self, runner, tmp_path):
        (tmp_path / "empty" / "objects").mkdir(parents=True)
        result = runner.invoke(main, ["import", str(tmp_path / "empty")])
        assert result.exit_code != 0

    def test_export_round_trip(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        runner.invoke(main, ["synth", "--out", str(tmp_path / "src"), "--config", str(config)])
        result = runner.invoke(main, ["export", str(tmp_path / "src"), str(tmp_path / "dst")])
        assert result.exit_code == 0
        h1 = runner.invoke(main, ["import", str(tmp_path / "src")]).output.splitlines()[-1]
        h2 = runner.invoke(main, ["import", str(tmp_path / "dst")]).output.splitlines()[-1]
        assert h1 == h2


class TestFeaturizeTrainInfer:
    def test_featurize_outputs(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        runner.invoke(main, ["synth", "--out", str(tmp_path / "ds"), "--config", str(config)])
        features = tmp_path / "features.npz"
        result = runner.invoke(
            main,
            ["featurize", "--dataset", str(tmp_path / "ds"), "--out", str(features), "--config", str(config)],
        )
        assert result.exit_code == 0, result.output
        data = np.load(features, allow_pickle=False)
        assert data["pc"].shape == (8, 2000)
        assert data["traj"].shape[0] == 32
        assert Path(f"{features}.vocab.txt").exists()

    def test_train_then_infer(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        runner.invoke(main, ["synth", "--out", str(tmp_path / "ds"), "--config", str(config)])
        model = tmp_path / "model.npz"
        result = runner.invoke(
            main,
            ["train", "--dataset", str(tmp_path / "ds"), "--out", str(model), "--config", str(config)],
        )
        assert result.exit_code == 0, result.output
        assert model.exists()
        assert Path(f"{model}.vocab.txt").exists()

        result = runner.invoke(
            main,
            [
                "infer",
                "--dataset", str(tmp_path / "ds"),
                "--model", str(model),
                "--task", "task-000",
                "--top", "3",
            ],
        )
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert len(lines) == 3
        probs = [float(line.split()[0]) for line in lines]
        assert probs == sorted(probs, reverse=True)


class TestEvalCommand:
    def test_baseline_rows_and_determinism(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        runner.invoke(main, ["synth", "--out", str(tmp_path / "ds"), "--config", str(config)])
        reports = []
        for name in ("r1.json", "r2.json"):
            result = runner.invoke(
                main,
                [
                    "eval",
                    "--dataset", str(tmp_path / "ds"),
                    "--models", "chance,similarity+random,similarity+weighted",
                    "--out-json", str(tmp_path / name),
                    "--out-csv", str(tmp_path / f"{name}.csv"),
                    "--seed", "2",
                    "--config", str(config),
                ],
            )
            assert result.exit_code == 0, result.output
            reports.append((tmp_path / name).read_bytes())
        assert reports[0] == reports[1]
        payload = json.loads(reports[0])
        assert [row["model"] for row in payload["rows"]] == [
            "chance",
            "similarity+random",
            "similarity+weighted",
        ]
        csv_text = (tmp_path / "r1.json.csv").read_text()
        assert csv_text.splitlines()[0].startswith("model,per_manual_mean")

    def test_unknown_row_fails(self, runner, tmp_path):
        config = tiny_config(tmp_path)
        runner.invoke(main, ["synth", "--out", str(tmp_path / "ds"), "--config", str(config)])
        result = runner.invoke(
            main, ["eval", "--dataset", str(tmp_path / "ds"), "--models", "nonsense"]
        )
        assert result.exit_code != 0


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = RunConfig().override("dtw", alpha_t=0.25).override("eval", threshold=7.5)
        path = tmp_path / "cfg.json"
        cfg.save(path)
        loaded = RunConfig.load(path)
        assert loaded.dtw.alpha_t == 0.25
        assert loaded.eval.threshold == 7.5
        assert loaded.net == cfg.net

    def test_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "cfg.json"
        data = RunConfig().to_dict()
        data["config_version"] = 99
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError):
            RunConfig.load(path)

    def test_config_drives_distance(self, runner, tmp_path):
        cfg = RunConfig().override("dtw", alpha_t=1.0, gamma=0.0, beta=0.0)
        cfg_path = tmp_path / "cfg.json"
        cfg.save(cfg_path)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_traj(a, [0.0], id="a")
        write_traj(b, [2.0], id="b")
        result = runner.invoke(main, ["distance", str(a), str(b), "--config", str(cfg_path)])
        assert result.exit_code == 0
        assert float(result.output.strip()) == pytest.approx(2.0, abs=1e-9)
