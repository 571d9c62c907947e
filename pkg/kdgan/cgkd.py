#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Correlated generative knowledge distillation

Image features of generated samples are correlated with the K teacher text
embeddings. The teacher correlations ``C_T`` feed a pairwise diversity
penalty and are distilled into the discriminator correlations ``C_S``.
"""
import dataclasses
import logging
import typing

import torch

from . import InvalidArgumentError
from . import numerics as knum

logger = logging.getLogger(__name__)

#: Allowed correlation sources
SOURCES = ("teacher", "student")

UNIT_NORM_TOL = 1e-6


@dataclasses.dataclass(frozen=True)
class CorrelationMatrix:
    """Row normalized image-text correlations ``[B, K]``"""

    data: torch.Tensor
    source: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise InvalidArgumentError(f"Invalid correlation source: {self.source}. Choose one of: {SOURCES}")
        knum.check_matrix(self.data, "correlation matrix")
        if not torch.isfinite(self.data).all():
            raise InvalidArgumentError("Correlation matrix contains non-finite entries")
        norms = torch.linalg.vector_norm(self.data.detach(), dim=1)
        if (norms - 1).abs().max() > UNIT_NORM_TOL:
            raise InvalidArgumentError("Correlation matrix rows must have a unit L2 norm")

    @property
    def B(self):
        return self.data.shape[0]

    @property
    def K(self):
        return self.data.shape[1]


class CgkdOutput(typing.NamedTuple):
    l_pd: torch.Tensor
    l_kd: torch.Tensor
    l_total: torch.Tensor


def build_correlation(features, texts, source):
    """Row normalized inner products of image features and text embeddings

    Parameters
    ----------
    features: FeatureBatch, torch.Tensor
        ``[B, M]`` image features
    texts: TextFeatureSet
        ``[K, M]`` text embeddings
    source: {"teacher", "student"}

    Return
    ------
    CorrelationMatrix
    """
    feats = knum.as_data(features)
    tdata = knum.as_data(texts)
    knum.check_matrix(feats, "image features")
    knum.check_matrix(tdata, "text features")
    if feats.shape[1] != tdata.shape[1]:
        raise InvalidArgumentError(
            f"Feature dimension mismatch: images have {feats.shape[1]}, texts have {tdata.shape[1]}"
        )
    raw = feats @ tdata.to(feats.dtype).T
    return CorrelationMatrix(knum.row_l2_normalize(raw), source)


def pairwise_diversity_loss(c, ordered_pairs=True):
    """Sum of the cosine similarities of all pairs of distinct rows

    Rows of a :class:`CorrelationMatrix` are unit vectors, so the cosine is
    the dot product. Other matrices are row normalized first.

    Parameters
    ----------
    c: CorrelationMatrix, torch.Tensor
    ordered_pairs: bool
        Count ``(i, j)`` and ``(j, i)`` separately, otherwise each unordered pair once

    Return
    ------
    torch.Tensor
        In ``[-B(B-1), B(B-1)]`` for ordered pairs
    """
    if not isinstance(c, CorrelationMatrix):
        c = knum.row_l2_normalize(c)
    data = knum.as_data(c)
    if data.shape[0] < 2:
        raise InvalidArgumentError(
            f"The pairwise diversity loss needs at least 2 images, got {data.shape[0]}"
        )
    if data.shape[1] < 2:
        raise InvalidArgumentError(f"The pairwise diversity loss needs at least 2 texts, got {data.shape[1]}")
    gram = data @ data.T
    total = gram.sum() - torch.diagonal(gram).sum()
    return total if ordered_pairs else total / 2


def correlation_kd_loss(ct, cs):
    """Mean absolute difference between teacher and student correlations"""
    if isinstance(ct, CorrelationMatrix) and ct.source != "teacher":
        raise InvalidArgumentError(f"First correlation must come from the teacher, not the {ct.source}")
    if isinstance(cs, CorrelationMatrix) and cs.source != "student":
        raise InvalidArgumentError(f"Second correlation must come from the student, not the {cs.source}")
    return knum.l1_mean(ct, cs)


def cgkd_total(teacher_fake, student_fake, texts, weight=1.0, pd_weight=1.0, ordered_pairs=True):
    """CGKD loss on a generated batch

    Parameters
    ----------
    teacher_fake: FeatureBatch
        Teacher features of the generated images
    student_fake: FeatureBatch
        Projected discriminator features of the same images
    texts: TextFeatureSet
    weight: float
        Multiplier of the distillation term
    pd_weight: float
        Multiplier of the diversity term

    Return
    ------
    CgkdOutput
        ``(l_pd, l_kd, l_total)`` with ``l_total = pd_weight * l_pd + weight * l_kd``
    """
    if knum.as_data(texts).shape[0] < 2:
        raise InvalidArgumentError("CGKD needs at least 2 texts")
    ct = build_correlation(teacher_fake, texts, "teacher")
    cs = build_correlation(student_fake, texts, "student")
    if ct.data.shape != cs.data.shape:
        raise InvalidArgumentError(f"Shape mismatch: {tuple(ct.data.shape)} versus {tuple(cs.data.shape)}")
    l_pd = pairwise_diversity_loss(ct, ordered_pairs=ordered_pairs)
    l_kd = correlation_kd_loss(ct, cs)
    return CgkdOutput(l_pd, l_kd, pd_weight * l_pd + weight * l_kd)
