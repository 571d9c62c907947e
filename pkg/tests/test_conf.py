#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for conf.py module
"""
import pathlib

import configobj
import pytest

from kdgan import conf as kconf


class TestValidators:
    """Test validator functions"""

    def test_is_path_valid(self):
        result = kconf.is_path("/tmp/test")
        assert isinstance(result, pathlib.Path)
        assert str(result) == "/tmp/test"

    def test_is_path_none(self):
        assert kconf.is_path(None) is None

    @pytest.mark.parametrize("value,expected", [("0", 0.0), ("0.7", 0.7), (1, 1.0)])
    def test_is_probability(self, value, expected):
        assert kconf.is_probability(value) == expected

    def test_is_probability_out_of_range(self):
        with pytest.raises(kconf.validate.VdtValueError):
            kconf.is_probability("1.2")

    def test_is_fraction(self):
        assert kconf.is_fraction("0.1") == 0.1
        with pytest.raises(kconf.validate.VdtValueError):
            kconf.is_fraction("0")

    def test_get_validator(self):
        validator = kconf.get_validator()
        for name in "path", "probability", "fraction":
            assert name in validator.functions


class TestFlatKeys:
    """Test dotted key helpers"""

    def test_unflatten(self):
        assert kconf.unflatten({"agkd.p": 0.5, "cgkd": {"weight": 2}}) == {
            "agkd": {"p": 0.5},
            "cgkd": {"weight": 2},
        }

    def test_unflatten_merges_sections(self):
        assert kconf.unflatten({"agkd": {"p": 0.5}, "agkd.weight": 2}) == {"agkd": {"p": 0.5, "weight": 2}}

    def test_unflatten_conflict(self):
        with pytest.raises(kconf.ConfigError):
            kconf.unflatten({"agkd": 1, "agkd.p": 0.5})

    def test_parse_overrides(self):
        assert kconf.parse_overrides(["agkd.p=0.5", "teacher.texts=cat, dog"]) == {
            "agkd.p": "0.5",
            "teacher.texts": ["cat", "dog"],
        }

    def test_parse_overrides_invalid(self):
        with pytest.raises(kconf.ConfigError):
            kconf.parse_overrides(["agkd.p"])

    def test_flatten(self):
        assert kconf.flatten_config({"a": {"b": 1, "c": {"d": 2}}}) == {"a.b": 1, "a.c.d": 2}


class TestLoadConfig:
    """Test configuration loading"""

    def test_defaults(self):
        cfg = kconf.load_config()
        assert isinstance(cfg, configobj.ConfigObj)
        assert cfg["agkd"]["p"] == 0.7
        assert cfg["train"]["batch_size"] == 32
        assert cfg["run"]["preset"] is None

    def test_file(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("[agkd]\np = 0.25\n[data]\nclass_names = cat, dog\n")
        cfg = kconf.load_config(str(cfgfile), overrides={"agkd.weight": "2"})
        assert cfg["agkd"]["p"] == 0.25
        assert cfg["agkd"]["weight"] == 2.0
        assert cfg["data"]["class_names"] == ["cat", "dog"]

    def test_bundled_desk(self):
        cfg = kconf.load_config("desk", overrides={"train.steps": 10}, preset="full")
        assert cfg["run"]["name"] == "desk"
        assert cfg["loss"]["w_pd"] == pytest.approx(1 / (32 * 31), rel=0.01)
        assert cfg["cgkd"]["pd_weight"] == 1.0
        assert cfg["train"]["steps"] == 10
        assert (cfg["data"]["num_modes"], cfg["data"]["samples_per_mode"]) == (8, 100)

    def test_local_file_before_bundled(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        (tmp_path / "desk").write_text("[run]\nname = local\n")
        assert kconf.load_config("desk")["run"]["name"] == "local"

    def test_missing_file(self, tmp_path):
        with pytest.raises(kconf.ConfigError):
            kconf.load_config(str(tmp_path / "missing.cfg"))

    @pytest.mark.parametrize(
        "overrides",
        [{"agkd.p": 1.5}, {"train.batch_size": 1}, {"run.precision": "16"}, {"train.foo": 1}, {"run.device": "cpu"}],
    )
    def test_invalid(self, overrides):
        with pytest.raises(kconf.ConfigError):
            kconf.load_config(overrides=overrides)

    @pytest.mark.parametrize("preset", list(kconf.PRESETS))
    def test_presets(self, preset):
        cfg = kconf.load_config(preset=preset)
        assert cfg["run"]["preset"] == preset
        for key, value in kconf.PRESETS[preset].items():
            section, option = key.split(".")
            assert cfg[section][option] == value

    def test_preset_from_file(self):
        cfg = kconf.load_config({"run.preset": "baseline"})
        assert not cfg["agkd"]["enabled"]
        assert not cfg["cgkd"]["enabled"]

    def test_invalid_preset(self):
        with pytest.raises(kconf.ConfigError):
            kconf.load_config(preset="distill_everything")


class TestHashAndSnapshot:
    """Test configuration hashes and snapshots"""

    def test_hash_is_stable(self, make_config):
        assert kconf.config_hash(make_config()) == kconf.config_hash(make_config())

    def test_hash_changes(self, make_config):
        assert kconf.config_hash(make_config()) != kconf.config_hash(make_config(agkd__p=0.5))

    def test_hash_exclude(self, make_config):
        first = kconf.config_hash(make_config(), exclude=kconf.RESUME_FREE_KEYS)
        second = kconf.config_hash(make_config(train__steps=100), exclude=kconf.RESUME_FREE_KEYS)
        assert first == second

    def test_snapshot_reloads(self, make_config, tmp_path):
        cfg = make_config(preset="agkd")
        path = kconf.write_snapshot(cfg, str(tmp_path / "run" / "config.snapshot"))
        reloaded = kconf.load_config(path)
        assert kconf.config_hash(reloaded) == kconf.config_hash(cfg)


class TestOutputRoot:
    """Test the run directory root"""

    def test_from_config(self, tiny_config, tmp_path):
        assert kconf.get_output_root(tiny_config) == tmp_path / "runs"

    def test_from_env(self, tiny_config, env_vars, tmp_path):
        env_vars(KD_DLGAN_RUN_DIR=tmp_path / "elsewhere")
        assert kconf.get_output_root(tiny_config) == tmp_path / "elsewhere"

    def test_default(self):
        root = kconf.get_output_root(kconf.load_config())
        assert root.name == "runs"
        assert "kdgan" in str(root)
