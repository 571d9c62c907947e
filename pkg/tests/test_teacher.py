#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for teacher.py module
"""
import pytest
import torch

from kdgan import InvalidArgumentError
from kdgan import numerics as knum
from kdgan import teacher as kteacher

pytestmark = pytest.mark.unit

class TestMockTeacher:
    """Test the deterministic mock teacher"""

    def test_unit_rows(self, mock_teacher):
        probe = kteacher.make_probe((1, 8, 8), batch_size=5)
        feats = mock_teacher.encode_images(probe)
        assert isinstance(feats, knum.FeatureBatch)
        assert feats.shape == (5, 8)
        assert torch.allclose(torch.linalg.vector_norm(feats.data, dim=1), torch.ones(5, dtype=torch.float64))

    def test_same_seed_same_weights(self):
        spec = kteacher.MockTeacherSpec(seed=3, M=6, hidden_dim=10, input_shape=(1, 4, 4))
        probe = kteacher.make_probe(spec.input_shape)
        first = kteacher.build_mock_teacher(spec).encode_images(probe).data
        second = kteacher.build_mock_teacher(spec).encode_images(probe).data
        assert torch.equal(first, second)

    def test_different_seeds(self):
        probe = kteacher.make_probe((1, 4, 4))
        feats = [
            kteacher.build_mock_teacher(
                kteacher.MockTeacherSpec(seed=seed, M=6, hidden_dim=10, input_shape=(1, 4, 4))
            ).encode_images(probe).data
            for seed in (1, 2)
        ]
        assert not torch.equal(*feats)

    def test_frozen(self, mock_teacher):
        assert not any(p.requires_grad for p in mock_teacher.parameters())
        assert kteacher.freeze_check(mock_teacher, kteacher.make_probe((1, 8, 8)))

    def test_dtype_follows_input(self, mock_teacher):
        probe = kteacher.make_probe((1, 8, 8), dtype=torch.float32)
        assert mock_teacher.encode_images(probe).data.dtype == torch.float32

    def test_gradient_reaches_images(self, mock_teacher):
        images = kteacher.make_probe((1, 8, 8), batch_size=2).requires_grad_(True)
        mock_teacher.encode_images(images).data[:, 0].sum().backward()
        assert torch.isfinite(images.grad).all()
        assert images.grad.abs().sum() > 0

    def test_wrong_shape(self, mock_teacher):
        with pytest.raises(InvalidArgumentError):
            mock_teacher.encode_images(torch.zeros(2, 3, 8, 8))

    def test_texts(self, mock_teacher):
        texts = mock_teacher.encode_texts(["a photo of a cat", "a photo of a dog", "a photo of a cat"])
        assert texts.K == 3
        assert torch.equal(texts.data[0], texts.data[2])
        assert not torch.equal(texts.data[0], texts.data[1])
        assert torch.allclose(torch.linalg.vector_norm(texts.data, dim=1), torch.ones(3, dtype=torch.float64))

    @pytest.mark.parametrize("seed", range(100))
    def test_two_texts_separated_in_dimension_2(self, seed):
        teacher = kteacher.build_mock_teacher(kteacher.MockTeacherSpec(seed=seed, M=2))
        texts = teacher.encode_texts(["cat", "dog"])
        assert float(texts.data[0] @ texts.data[1]) < kteacher.MAX_TEXT_COSINE

    @pytest.mark.parametrize("seed", range(10))
    def test_mode_prompts_separated_in_dimension_2(self, seed):
        teacher = kteacher.build_mock_teacher(kteacher.MockTeacherSpec(seed=seed, M=2))
        prompts = kteacher.texts_from_labels([f"mode{i}" for i in range(8)])
        data = teacher.encode_texts(prompts).data
        gram = data @ data.T
        assert (gram[~torch.eye(8, dtype=torch.bool)] < kteacher.MAX_TEXT_COSINE).all()

    def test_texts_order_independent(self, mock_teacher):
        first = mock_teacher.encode_texts(["cat", "dog", "bird"]).data
        second = kteacher.build_mock_teacher(mock_teacher.spec).encode_texts(["bird", "cat", "dog"]).data
        assert torch.equal(first, second[[1, 2, 0]])

    def test_too_many_texts(self):
        teacher = kteacher.build_mock_teacher(kteacher.MockTeacherSpec(seed=0, M=2))
        with pytest.raises(kteacher.TeacherError):
            teacher.encode_texts([f"label {i}" for i in range(60)])

    def test_texts_empty(self, mock_teacher):
        with pytest.raises(InvalidArgumentError):
            mock_teacher.encode_texts([])

    def test_invalid_dimension(self):
        with pytest.raises(InvalidArgumentError):
            kteacher.MockTeacher(kteacher.MockTeacherSpec(M=1))

class TestPrompts:
    """Test the text prompts"""

    def test_texts_from_labels(self):
        assert kteacher.texts_from_labels(["cat", "dog"]) == ["a photo of a cat", "a photo of a dog"]

    def test_custom_template(self):
        assert kteacher.texts_from_labels(["cat"], "{label}!") == ["cat!"]

    def test_duplicate_labels(self):
        with pytest.raises(InvalidArgumentError):
            kteacher.texts_from_labels(["cat", "cat"])

    def test_no_label(self):
        with pytest.raises(InvalidArgumentError):
            kteacher.texts_from_labels([])

    @pytest.mark.parametrize("template", ["no placeholder", "{label} {label}", "{name}"])
    def test_invalid_template(self, template):
        with pytest.raises(InvalidArgumentError):
            kteacher.PromptTemplate(template)

ADAPTER = """
import torch
from kdgan import teacher as kteacher

def build_teacher(feature_dim, checkpoint_path, input_shape):
    return kteacher.build_mock_teacher(
        kteacher.MockTeacherSpec(seed=5, M=feature_dim, hidden_dim=4, input_shape=input_shape)
    )

def build_wrong_teacher(feature_dim, checkpoint_path, input_shape):
    return build_teacher(feature_dim + 1, checkpoint_path, input_shape)
"""

class TestTeacherFromConfig:
    """Test teacher selection from the configuration"""

    def test_mock(self, tiny_config):
        teacher = kteacher.teacher_from_config(tiny_config["teacher"], (1, 8, 8))
        assert isinstance(teacher, kteacher.MockTeacher)
        assert teacher.feature_dim == 8

    def test_external(self, tiny_config, tmp_path):
        adapter = tmp_path / "adapter.py"
        adapter.write_text(ADAPTER)
        tiny_config["teacher"]["kind"] = "external"
        tiny_config["teacher"]["adapter"] = str(adapter)
        teacher = kteacher.teacher_from_config(tiny_config["teacher"], (1, 8, 8))
        assert teacher.feature_dim == 8
        assert teacher.spec.seed == 5

    def test_external_wrong_dimension(self, tiny_config, tmp_path):
        adapter = tmp_path / "adapter.py"
        adapter.write_text(ADAPTER)
        tiny_config["teacher"]["kind"] = "external"
        tiny_config["teacher"]["adapter"] = f"{adapter}:build_wrong_teacher"
        with pytest.raises(kteacher.TeacherError):
            kteacher.teacher_from_config(tiny_config["teacher"], (1, 8, 8))

    def test_external_without_adapter(self, tiny_config):
        tiny_config["teacher"]["kind"] = "external"
        with pytest.raises(kteacher.TeacherError):
            kteacher.teacher_from_config(tiny_config["teacher"], (1, 8, 8))
