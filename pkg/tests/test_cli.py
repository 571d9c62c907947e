#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for cli.py module
"""
import pytest

from kdgan import cli as kcli


def as_set_args(flat):
    args = []
    for key, value in flat.items():
        args.extend(["--set", f"{key}={value}"])
    return args


class TestParser:
    """Test argument parsing"""

    def test_subcommands(self):
        parser = kcli.get_parser()
        args = parser.parse_args(["check-grads", "--module", "cgkd"])
        assert args.module == "cgkd"
        assert args.func is kcli.main_check_grads

    def test_unknown_flag(self):
        assert kcli.main(["train", "--no-such-flag"]) == 2

    def test_no_command(self):
        assert kcli.main([]) == 2

    def test_invalid_suite(self):
        assert kcli.main(["check-grads", "--module", "everything"]) == 2


class TestCommands:
    """Test the sub-commands"""

    def test_missing_config(self, tmp_path, reset_logging):
        assert kcli.main(["train", "--config", str(tmp_path / "missing.cfg")]) == 2

    def test_invalid_override(self, tmp_path, reset_logging):
        assert kcli.main(["train", "--set", "agkd.p=2", "--run-dir", str(tmp_path)]) == 2

    def test_check_grads(self, capsys, reset_logging):
        assert kcli.main(["check-grads", "--module", "cgkd"]) == 0
        out = capsys.readouterr().out
        assert "module=cgkd" in out
        assert "passed=True" in out

    @pytest.mark.integration
    def test_train_eval_plot(self, tmp_path, tiny_overrides, capsys, reset_logging):
        run_dir = tmp_path / "run"
        args = ["train", "--run-dir", str(run_dir), "--preset", "full"] + as_set_args(tiny_overrides)
        assert kcli.main(args) == 0
        assert str(run_dir) in capsys.readouterr().out
        ckpt = run_dir / "checkpoints" / "ckpt-000004.npz"
        assert ckpt.exists()

        assert kcli.main(["eval", "--ckpt", str(ckpt)]) == 0
        assert "teacher_fid" in capsys.readouterr().out
        assert (run_dir / "eval.csv").exists()

        assert kcli.main(["plot", "--run", str(run_dir)]) == 0
        assert (run_dir / "curves.png").exists()

    def test_missing_checkpoint(self, tmp_path, reset_logging):
        assert kcli.main(["eval", "--ckpt", str(tmp_path / "missing.npz")]) == 2

    def test_plot_missing_run(self, tmp_path, reset_logging):
        assert kcli.main(["plot", "--run", str(tmp_path)]) == 2
