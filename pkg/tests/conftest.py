#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Pytest configuration and shared fixtures for kdgan tests
"""
import sys
from pathlib import Path

import pytest
import torch


# Add the parent directory to path to import kdgan
@pytest.fixture(scope="session", autouse=True)
def add_kdgan_to_path():
    """Add kdgan package to Python path"""
    kdgan_root = Path(__file__).parent.parent
    if str(kdgan_root) not in sys.path:
        sys.path.insert(0, str(kdgan_root))


@pytest.fixture(autouse=True)
def no_run_dir_env(monkeypatch):
    """Ignore a run directory set in the user environment"""
    monkeypatch.delenv("KD_DLGAN_RUN_DIR", raising=False)


#: Desk-scale settings shared by the engine tests
TINY_CONFIG = {
    "run.name": "tiny",
    "train.steps": 4,
    "train.batch_size": 8,
    "train.eval_every": 0,
    "train.checkpoint_every": 0,
    "train.sample_every": 0,
    "train.log_every": 1,
    "model.hidden_dim": 16,
    "model.feature_dim_F": 16,
    "model.latent_dim": 4,
    "teacher.feature_dim": 8,
    "teacher.hidden_dim": 16,
    "data.num_modes": 4,
    "data.samples_per_mode": 8,
    "data.prefetch": 0,
    "eval.num_samples": 32,
    "eval.diversity_pairs": 16,
}


@pytest.fixture
def tiny_overrides(tmp_path):
    """Flat tiny settings with runs written below `tmp_path`"""
    flat = dict(TINY_CONFIG)
    flat["run.output_root"] = str(tmp_path / "runs")
    return flat


@pytest.fixture
def make_config(tiny_overrides):
    """Factory of validated tiny configurations writing runs below `tmp_path`"""
    from kdgan import conf as kconf

    def _make(preset=None, **overrides):
        flat = dict(tiny_overrides)
        flat.update({key.replace("__", "."): value for key, value in overrides.items()})
        return kconf.load_config(None, overrides=flat, preset=preset)

    return _make


@pytest.fixture
def tiny_config(make_config):
    return make_config()


@pytest.fixture
def mock_teacher():
    """Mock teacher on 1x8x8 images with 8 features"""
    from kdgan import teacher as kteacher

    spec = kteacher.MockTeacherSpec(seed=7, M=8, hidden_dim=16, input_shape=(1, 8, 8))
    return kteacher.build_mock_teacher(spec)


@pytest.fixture
def generator():
    """Seeded torch random generator"""
    gen = torch.Generator()
    gen.manual_seed(12345)
    return gen


@pytest.fixture
def reset_logging():
    """Reset logging configuration between tests"""
    import logging

    yield
    # Clear all loggers
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger):
            logger.handlers.clear()
            logger.filters.clear()


@pytest.fixture
def env_vars(monkeypatch):
    """Fixture to easily set environment variables"""

    def _set_env(**kwargs):
        for key, value in kwargs.items():
            monkeypatch.setenv(key, str(value))

    return _set_env


# Markers for categorizing tests
def pytest_configure(config):
    """Register custom markers"""
    config.addinivalue_line("markers", "unit: mark test as a unit test")
    config.addinivalue_line("markers", "integration: mark test as an integration test")
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line("markers", "smoke: mark test as a quick end-to-end validation")
