#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for render.py module
"""
import jinja2
import pandas as pd
import pytest

from kdgan import render as krender


class TestRender:
    """Test template rendering"""

    def test_string(self):
        assert krender.render("Hello {{ name }}", {"name": "World"}) == "Hello World"

    def test_template_object(self):
        tpl = krender.JINJA_ENV.from_string("Value: {{ value }}")
        assert krender.render(tpl, {"value": 42}) == "Value: 42"

    def test_no_nested_rendering(self):
        params = {"message": "Hello {{ name }}", "name": "Bob"}
        assert krender.render("{{ message }}", params) == "Hello {{ name }}"

    def test_undefined(self):
        with pytest.raises(jinja2.UndefinedError):
            krender.render("{{ undefined_var }}", {})

    def test_filters(self):
        assert krender.render("{{ x | fmt('.2f') }}", {"x": 0.125}) == "0.12"


class TestFilterFmt:
    """Test the number format filter"""

    @pytest.mark.parametrize(
        "value,spec,expected",
        [(3.14159, ".3f", "3.142"), (12345.678, ".4g", "1.235e+04"), (7, ".4g", "7"), (None, ".4g", "n/a")],
    )
    def test_numbers(self, value, spec, expected):
        assert krender.filter_fmt(value, spec) == expected

    def test_nan(self):
        assert krender.filter_fmt(float("nan")) == "n/a"

    def test_non_numbers(self):
        assert krender.filter_fmt(True) == "True"
        assert krender.filter_fmt("full") == "full"


class TestFilterMarkdownTable:
    """Test the markdown table filter"""

    def test_records(self):
        table = krender.filter_markdown_table([{"metric": "teacher_fid", "value": 1.23456}])
        lines = table.splitlines()
        assert lines[0].split("|")[1].strip() == "metric"
        assert "1.235" in table

    def test_dataframe(self):
        df = pd.DataFrame({"name": ["eval/is_style"], "mean": [2.0], "std": [0.1]})
        assert "eval/is_style" in krender.filter_markdown_table(df)

    def test_empty(self):
        assert krender.filter_markdown_table([]) == "*empty*"


class TestSummaryTemplate:
    """Test the run summary template"""

    @pytest.fixture
    def params(self, tiny_config):
        return dict(
            name="tiny",
            run_dir="/tmp/runs/tiny",
            seed=0,
            preset=None,
            steps=4,
            start_step=0,
            config_hash="abc123",
            precision="32",
            wall_time=1.234,
            peak_rss_mb=321.0,
            agkd=tiny_config["agkd"],
            cgkd=tiny_config["cgkd"],
            loss=tiny_config["loss"],
            gate_open_rate=0.75,
            metrics=[{"metric": "teacher_fid", "value": 0.5}],
            artifacts={"metrics": "/tmp/runs/tiny/metrics.csv"},
        )

    def test_render(self, params):
        text = krender.render_template("summary.md", params)
        assert text.startswith("# Run summary: tiny")
        assert "Preset: custom" in text
        assert "Aggregation gate open rate: 0.750" in text
        assert "| AGKD (p=0.7) | True | 1 |" in text
        assert "teacher_fid" in text
        assert "- metrics: `/tmp/runs/tiny/metrics.csv`" in text

    def test_without_gate(self, params):
        params["gate_open_rate"] = None
        assert "Aggregation gate" not in krender.render_template("summary.md", params)

    def test_missing_parameter(self, params):
        del params["metrics"]
        with pytest.raises(jinja2.UndefinedError):
            krender.render_template("summary.md", params)
