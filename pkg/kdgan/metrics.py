#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Desk-scale evaluation metrics

The Fréchet distance and the Inception-style score take features and class
probabilities from pluggable backbones: by default the frozen teacher
("teacher-FID") and a nearest-template or zero-shot teacher classifier.
The perceptual diversity proxy is a mean pairwise cosine distance in the
teacher feature space.
"""
import dataclasses
import logging

import numpy as np
import scipy.linalg
import scipy.special
import torch

from . import InvalidArgumentError, NumericFailureError
from . import data as kdata
from . import numerics as knum

logger = logging.getLogger(__name__)

#: Added to the covariances before the matrix square root
COV_EPS = 1e-6

#: Smoothing of the class probabilities
PROB_EPS = 1e-12

#: Minimal share of samples for a mode to count as covered
COVERAGE_THRESHOLD = 0.01


@dataclasses.dataclass(frozen=True)
class FeatureStats:
    """Gaussian fit of a feature distribution"""

    mean: np.ndarray
    covariance: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype="float64"))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype="float64"))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise InvalidArgumentError(
                f"Inconsistent stats shapes: mean {mean.shape}, covariance {cov.shape}"
            )
        if np.abs(cov - cov.T).max() > 1e-8 * max(1.0, np.abs(cov).max()):
            raise InvalidArgumentError("Covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", (cov + cov.T) / 2)

    @property
    def M(self):
        return self.mean.size

    @classmethod
    def from_features(cls, features):
        """Fit the mean and the unbiased covariance of ``[N, M]`` features"""
        feats = knum.as_data(features)
        if isinstance(feats, torch.Tensor):
            feats = feats.detach().cpu().double().numpy()
        feats = np.asarray(feats, dtype="float64")
        if feats.ndim != 2 or feats.shape[0] < 2:
            raise InvalidArgumentError(f"Need at least 2 feature vectors, got shape {feats.shape}")
        return cls(feats.mean(axis=0), np.cov(feats, rowvar=False), feats.shape[0])


def _sqrtm_psd(mat):
    vals, vecs = scipy.linalg.eigh(mat)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def trace_sqrt_product(sigma_a, sigma_b):
    """Trace of the square root of ``sigma_a @ sigma_b``

    With ``A = sqrt(sigma_a)``, the eigenvalues of ``sigma_a sigma_b`` are
    those of the symmetric ``A sigma_b A``.
    """
    sqrt_a = _sqrtm_psd(sigma_a)
    vals = scipy.linalg.eigvalsh(sqrt_a @ sigma_b @ sqrt_a)
    return float(np.sqrt(np.clip(vals, 0, None)).sum())


def frechet_distance(a, b, eps=COV_EPS):
    """Fréchet distance between two Gaussian fits

    Parameters
    ----------
    a: FeatureStats
    b: FeatureStats
    eps: float
        Added to the diagonal of both covariances

    Return
    ------
    float
    """
    if a.M != b.M:
        raise InvalidArgumentError(f"Feature dimension mismatch: {a.M} versus {b.M}")
    for stats in a, b:
        if stats.n < stats.M:
            logger.warning(
                f"Fréchet distance from {stats.n} samples in dimension {stats.M}: estimate is biased"
            )
    offset = eps * np.eye(a.M)
    sigma_a = a.covariance + offset
    sigma_b = b.covariance + offset
    try:
        tr_covmean = trace_sqrt_product(sigma_a, sigma_b)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericFailureError(
            f"Matrix square root failed: condition numbers {np.linalg.cond(sigma_a):.3g} "
            f"and {np.linalg.cond(sigma_b):.3g}: {e}"
        ) from e
    if not np.isfinite(tr_covmean):
        raise NumericFailureError(
            f"Non-finite matrix square root: condition numbers {np.linalg.cond(sigma_a):.3g} "
            f"and {np.linalg.cond(sigma_b):.3g}"
        )
    diff = a.mean - b.mean
    return float(diff @ diff + np.trace(sigma_a) + np.trace(sigma_b) - 2 * tr_covmean)


def inception_style_score(probs, eps=PROB_EPS):
    """Exponential of the mean KL divergence to the marginal prediction

    Parameters
    ----------
    probs: array_like
        ``[N, C]`` rows of class probabilities

    Return
    ------
    float
        At least 1
    """
    p = knum.as_data(probs)
    if isinstance(p, torch.Tensor):
        p = p.detach().cpu().double().numpy()
    p = np.asarray(p, dtype="float64")
    if p.ndim != 2 or p.shape[0] < 1:
        raise InvalidArgumentError(f"Expected a [N, C] probability matrix, got shape {p.shape}")
    if (p < 0).any() or np.abs(p.sum(axis=1) - 1).max() > 1e-6:
        raise InvalidArgumentError("Probability rows must be non-negative and sum to 1")
    p = np.clip(p, eps, None)
    marginal = p.mean(axis=0, keepdims=True)
    kl = (p * (np.log(p) - np.log(marginal))).sum(axis=1)
    return float(np.exp(max(kl.mean(), 0.0)))


def perceptual_diversity(features, num_pairs=256, seed=0):
    """Mean cosine distance between random pairs of distinct samples

    Parameters
    ----------
    features: FeatureBatch, torch.Tensor
        ``[B, M]``
    num_pairs: int
    seed: int

    Return
    ------
    float
        In [0, 2]
    """
    feats = knum.as_data(features)
    feats = torch.as_tensor(feats).detach().double()
    knum.check_matrix(feats, "features")
    B = feats.shape[0]
    if B < 2:
        raise InvalidArgumentError(f"Diversity needs at least 2 samples, got {B}")
    if num_pairs < 1:
        raise InvalidArgumentError(f"Invalid number of pairs: {num_pairs}")
    unit = knum.row_l2_normalize(feats).numpy()
    rng = np.random.default_rng(seed)
    first = rng.integers(0, B, num_pairs)
    second = (first + rng.integers(1, B, num_pairs)) % B
    cos = np.clip((unit[first] * unit[second]).sum(axis=1), -1, 1)
    return float((1 - cos).mean())


def mode_coverage(generated, templates, threshold=COVERAGE_THRESHOLD):
    """Number of modes receiving at least `threshold` of the samples

    Parameters
    ----------
    generated: ImageBatch, torch.Tensor
    templates: torch.Tensor
        ``[num_modes, C, H, W]``

    Return
    ------
    tuple(int, numpy.ndarray)
        Covered mode count and per-mode histogram
    """
    images = knum.as_data(generated)
    assigned = kdata.nearest_template(images, templates).numpy()
    hist = np.bincount(assigned, minlength=len(templates))
    covered = int((hist >= threshold * len(assigned)).sum())
    return covered, hist


def template_probabilities(images, templates, temperature=0.1):
    """Soft nearest-template classifier

    Softmax of the negated mean squared pixel distances over `temperature`.
    """
    x = torch.as_tensor(knum.as_data(images)).detach().double().flatten(1)
    t = torch.as_tensor(templates).double().flatten(1)
    dist = torch.cdist(x, t) ** 2 / x.shape[1]
    return scipy.special.softmax(-dist.numpy() / temperature, axis=1)


def zero_shot_probabilities(image_features, text_features, logit_scale=100.0):
    """Softmax over scaled image-text cosine similarities"""
    img = knum.as_data(image_features).detach().double()
    txt = knum.as_data(text_features).detach().double()
    return scipy.special.softmax(logit_scale * (img @ txt.T).numpy(), axis=1)
