#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Optional CLIP teacher adapter

Requires the ``transformers`` package (``pip install kdgan[clip]``) and a
local checkpoint directory. Use it with::

    [teacher]
    kind = external
    adapter = kdgan.clip:build_teacher
    checkpoint_path = /path/to/clip-vit-base-patch32
    feature_dim = 512
"""
import logging

import torch
import torch.nn.functional as F

from . import numerics as knum
from . import teacher as kteacher

logger = logging.getLogger(__name__)

CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_STD = (0.26862954, 0.26130258, 0.27577711)


class ClipTeacher(torch.nn.Module, kteacher.TeacherModel):
    """Frozen CLIP image and text towers

    Images in [-1, 1] are resized with a differentiable bilinear
    interpolation and normalized with the CLIP statistics.
    """

    def __init__(self, checkpoint_path):
        super().__init__()
        import transformers

        self.model = transformers.CLIPModel.from_pretrained(checkpoint_path, local_files_only=True)
        self.tokenizer = transformers.CLIPTokenizer.from_pretrained(checkpoint_path, local_files_only=True)
        self.model.eval()
        for param in self.model.parameters():
            param.requires_grad_(False)
        self.feature_dim = self.model.config.projection_dim
        self.resolution = self.model.config.vision_config.image_size
        self.register_buffer("mean", torch.tensor(CLIP_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(CLIP_STD).view(1, 3, 1, 1))
        self._text_cache = {}

    def encode_images(self, images):
        x = knum.as_data(images)
        dtype = x.dtype
        if x.shape[1] == 1:
            x = x.repeat(1, 3, 1, 1)
        x = F.interpolate(
            x.float(), size=(self.resolution, self.resolution), mode="bilinear", align_corners=False
        )
        x = ((x + 1) / 2 - self.mean) / self.std
        feats = self.model.get_image_features(pixel_values=x)
        return knum.FeatureBatch(knum.row_l2_normalize(feats.to(dtype)))

    def encode_texts(self, texts):
        texts = list(texts)
        key = tuple(texts)
        if key not in self._text_cache:
            tokens = self.tokenizer(texts, padding=True, return_tensors="pt")
            with torch.no_grad():
                feats = self.model.get_text_features(**tokens)
            self._text_cache[key] = knum.row_l2_normalize(feats.double())
        return knum.TextFeatureSet(self._text_cache[key], texts)


def build_teacher(feature_dim, checkpoint_path, input_shape):
    """Adapter factory for :func:`kdgan.teacher.teacher_from_config`"""
    if checkpoint_path is None:
        raise kteacher.TeacherError("The CLIP teacher requires teacher.checkpoint_path")
    if input_shape[0] not in (1, 3):
        raise kteacher.TeacherError(f"CLIP accepts 1 or 3 channel images, not {input_shape[0]}")
    teacher = ClipTeacher(str(checkpoint_path))
    logger.info(f"Loaded CLIP teacher from {checkpoint_path} (feature dim {teacher.feature_dim})")
    return teacher
