#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for util.py module
"""
import json
import os
import pathlib

import numpy as np
import torch

from kdgan import util as kutil


class TestCheckDir:
    """Test directory creation"""

    def test_check_dir_existing(self, tmp_path):
        filepath = tmp_path / "subdir" / "file.txt"
        (tmp_path / "subdir").mkdir()

        result = kutil.check_dir(str(filepath))
        assert os.path.dirname(result) == str(tmp_path / "subdir")

    def test_check_dir_creates(self, tmp_path):
        filepath = tmp_path / "newdir" / "file.txt"

        kutil.check_dir(str(filepath))
        assert os.path.exists(tmp_path / "newdir")

    def test_check_dir_dry_mode(self, tmp_path):
        filepath = tmp_path / "drydir" / "file.txt"

        kutil.check_dir(str(filepath), dry=True)
        assert not os.path.exists(tmp_path / "drydir")

    def test_check_dir_path_object(self, tmp_path):
        result = kutil.check_dir(tmp_path / "a" / "b" / "file.txt")
        assert isinstance(result, str)
        assert os.path.isdir(tmp_path / "a" / "b")


class TestTensorHash:
    """Test raw byte hashes"""

    def test_stable(self):
        assert kutil.tensor_hash(torch.arange(4)) == kutil.tensor_hash(torch.arange(4))

    def test_tensor_and_array(self):
        assert kutil.tensor_hash(torch.arange(4)) == kutil.tensor_hash(np.arange(4))

    def test_dtype_matters(self):
        assert kutil.tensor_hash(torch.zeros(3)) != kutil.tensor_hash(torch.zeros(3, dtype=torch.float64))

    def test_dict_order(self):
        first = kutil.tensor_hash({"a": torch.ones(2), "b": torch.zeros(2)})
        second = kutil.tensor_hash({"b": torch.zeros(2), "a": torch.ones(2)})
        assert first == second


class TestKdganJSONEncoder:
    """Test custom JSON encoder"""

    def test_encode_arrays(self):
        data = {"tensor": torch.tensor([1.0, 2.0]), "array": np.arange(2), "scalar": np.float64(0.5)}
        assert json.loads(json.dumps(data, cls=kutil.KdganJSONEncoder)) == {
            "tensor": [1.0, 2.0],
            "array": [0, 1],
            "scalar": 0.5,
        }

    def test_encode_path(self):
        result = json.dumps({"root": pathlib.Path("/data/cifar")}, cls=kutil.KdganJSONEncoder)
        assert "/data/cifar" in result

    def test_encode_fallback(self):
        result = json.dumps({"obj": object()}, cls=kutil.KdganJSONEncoder)
        assert "object" in result


class TestColorize:
    """Test console coloring"""

    def test_no_color(self):
        assert kutil.colorize("passed", {"pass": "green"}, colorize=False) == "passed"

    def test_not_a_terminal(self, mocker):
        mocker.patch.object(kutil, "sys").stdout.isatty.return_value = False
        assert kutil.colorize("passed", {"pass": "green"}) == "passed"

    def test_terminal(self, mocker):
        mocker.patch.object(kutil, "sys").stdout.isatty.return_value = True
        text = kutil.colorize("passed=False", {".*True": "green", ".*False": "bold_red"})
        assert text.startswith("\033[")
        assert "passed=False" in text
        assert text.endswith("\033[0m")

    def test_no_match(self, mocker):
        mocker.patch.object(kutil, "sys").stdout.isatty.return_value = True
        assert kutil.colorize("skipped", {"pass": "green"}) == "skipped"
