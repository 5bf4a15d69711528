import json
import subprocess
import sys

import pytest

from mzi_align.cli import main

QUIET = [
    "--set", "randomization.radius_enabled=false",
    "--set", "randomization.pixel_noise_enabled=false",
    "--set", "randomization.brightness_enabled=false",
    "--set", "randomization.phase_noise_enabled=false",
    "--set", "randomization.cyclic_shift_enabled=false",
    "--set", "randomization.duty_enabled=false",
    "--set", "env.actuator_noise=false",
]


class TestRender:
    def test_aligned_controls_render_bright_fringes(self, tmp_path, capsys):
        out = tmp_path / "frames"
        code = main(["render", "--ctrl", "0,0,0,0,0", "--out", str(out), *QUIET])
        assert code == 0
        pngs = sorted(out.glob("frame_*.png"))
        assert len(pngs) == 16
        meta = json.loads((out / "meta.json").read_text())
        assert meta["visibility_analytic"] == pytest.approx(1.0, abs=1e-9)
        assert meta["visibility_frames"] > 0.999

    def test_bad_ctrl_is_config_error(self, tmp_path):
        code = main(["render", "--ctrl", "zero", "--out", str(tmp_path / "x")])
        assert code == 2


class TestConfigErrors:
    def test_missing_config_file(self, tmp_path):
        code = main(["render", "--config", str(tmp_path / "nope.yaml")])
        assert code == 2

    def test_bad_override(self):
        code = main(["render", "--set", "train.bogus=1"])
        assert code == 2

    def test_bad_yaml(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("train: [unclosed\n")
        code = main(["render", "--config", str(bad)])
        assert code == 2


class TestTrainEvaluateReplay:
    @pytest.fixture(scope="class")
    def train_dir(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("cli_train")
        code = main([
            "train", "--preset", "desk-scale", "--seed", "3", "--out", str(out),
            "--set", "train.total_steps=1500",
            "--set", "train.start_train_step=400",
            "--set", "train.num_epochs=2",
            "--set", "train.eval_every=500",
            "--set", "train.eval_episodes=1",
            "--set", "train.buffer_capacity=1500",
        ])
        assert code == 0
        return out

    def test_train_writes_checkpoints(self, train_dir):
        assert (train_dir / "checkpoint_final.pt").exists()
        assert (train_dir / "checkpoint_best.pt").exists()
        assert (train_dir / "train_log.jsonl").exists()

    def test_evaluate_then_replay_round_trip(self, train_dir, tmp_path):
        eval_out = tmp_path / "eval"
        code = main([
            "evaluate", "--preset", "desk-scale",
            "--checkpoint", str(train_dir / "checkpoint_best.pt"),
            "--episodes", "2", "--seed", "9", "--out", str(eval_out),
            "--set", "env.horizon=25",
        ])
        assert code == 0
        summary = json.loads((eval_out / "summary.json").read_text())
        assert summary["episodes"] == 2
        log = eval_out / "trajectories.jsonl"

        code = main(["replay", "--preset", "desk-scale",
                     "--set", "env.horizon=25", str(log)])
        assert code == 0

    def test_replay_mismatch_exit_code(self, train_dir, tmp_path):
        eval_out = tmp_path / "eval2"
        main([
            "evaluate", "--preset", "desk-scale",
            "--checkpoint", str(train_dir / "checkpoint_best.pt"),
            "--episodes", "1", "--seed", "10", "--out", str(eval_out),
            "--set", "env.horizon=10",
        ])
        log = eval_out / "trajectories.jsonl"
        lines = log.read_text().splitlines()
        rec = json.loads(lines[1])
        rec["visibility"] = 0.123
        lines[1] = json.dumps(rec)
        log.write_text("\n".join(lines) + "\n")
        code = main(["replay", "--preset", "desk-scale",
                     "--set", "env.horizon=10", str(log)])
        assert code == 3

    def test_evaluate_requires_checkpoint(self, tmp_path):
        code = main(["evaluate", "--out", str(tmp_path / "e")])
        assert code == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "mzi_align.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for sub in ("train", "evaluate", "replay", "render", "serve"):
        assert sub in out.stdout
