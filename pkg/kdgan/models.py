#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Desk-scale generator and discriminator

Two architectures are available:

- ``dense``: multilayer perceptrons for small images like 8x8;
- ``conv``: three strided convolution blocks on each side, for 32x32 images.

The discriminator exposes its last layer features ``D^f`` and a trainable
projection to the teacher feature dimension ``M`` followed by a row L2
normalization.
"""
import dataclasses
import logging
import math

import torch
from torch import nn

from . import InvalidArgumentError
from . import numerics as knum
from . import rng as krng

logger = logging.getLogger(__name__)

ARCHS = ("auto", "dense", "conv")

ACTIVATIONS = {
    "lrelu": lambda: nn.LeakyReLU(0.2),
    "relu": nn.ReLU,
    "elu": nn.ELU,
}

#: Largest image size handled by the dense architecture in auto mode
DENSE_MAX_SIZE = 16


@dataclasses.dataclass(frozen=True)
class NoiseBatch:
    """Standard normal latent vectors ``[B, Z]``"""

    data: torch.Tensor

    def __post_init__(self):
        knum.check_matrix(self.data, "noise batch")

    @property
    def B(self):
        return self.data.shape[0]

    @property
    def Z(self):
        return self.data.shape[1]


@dataclasses.dataclass(frozen=True)
class ImageBatch:
    """Images ``[B, C, H, W]`` in [-1, 1] with optional integer labels ``[B]``"""

    data: torch.Tensor
    labels: torch.Tensor = None

    def __post_init__(self):
        if not isinstance(self.data, torch.Tensor) or self.data.ndim != 4 or self.data.shape[0] < 1:
            shape = tuple(getattr(self.data, "shape", ()))
            raise InvalidArgumentError(f"Expected images of shape [B, C, H, W], got {shape}")
        if self.data.detach().abs().max() > 1 + 1e-6:
            raise InvalidArgumentError("Image values must lie in [-1, 1]")
        if self.labels is not None:
            labels = torch.as_tensor(self.labels, dtype=torch.long)
            if labels.shape != (self.data.shape[0],):
                raise InvalidArgumentError(
                    f"Expected {self.data.shape[0]} labels, got shape {tuple(labels.shape)}"
                )
            if (labels < 0).any():
                raise InvalidArgumentError("Labels must be non-negative")
            object.__setattr__(self, "labels", labels)

    @property
    def B(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return tuple(self.data.shape)


@dataclasses.dataclass(frozen=True)
class DiscriminatorOutput:
    scores: torch.Tensor
    features: knum.FeatureBatch
    projected: knum.FeatureBatch


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """Architecture of the toy GAN"""

    image_size: int = 8
    channels: int = 1
    latent_dim: int = 16
    conditional: bool = False
    num_classes: int = 1
    feature_dim_F: int = 64
    teacher_dim: int = 32
    arch: str = "auto"
    hidden_dim: int = 128
    label_dim: int = 8
    activation: str = "lrelu"

    def __post_init__(self):
        for name in "image_size", "channels", "latent_dim", "feature_dim_F", "teacher_dim", "hidden_dim":
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"Invalid model dimension {name}={getattr(self, name)}")
        if self.arch not in ARCHS:
            raise InvalidArgumentError(f"Invalid architecture: {self.arch}. Choose one of: {ARCHS}")
        if self.activation not in ACTIVATIONS:
            raise InvalidArgumentError(
                f"Invalid activation: {self.activation}. Choose one of: {list(ACTIVATIONS)}"
            )
        if self.conditional and (self.num_classes < 2 or self.label_dim < 1):
            raise InvalidArgumentError(
                "A conditional model needs at least 2 classes and a positive label dim"
            )
        if self.resolved_arch == "conv" and self.image_size % 8:
            raise InvalidArgumentError(
                f"The conv architecture needs an image size multiple of 8: {self.image_size}"
            )

    @property
    def resolved_arch(self):
        if self.arch == "auto":
            return "dense" if self.image_size <= DENSE_MAX_SIZE else "conv"
        return self.arch

    @property
    def image_shape(self):
        return (self.channels, self.image_size, self.image_size)

    @property
    def num_pixels(self):
        return self.channels * self.image_size**2

    @property
    def embed_dim(self):
        return self.label_dim if self.conditional else 0

    @classmethod
    def from_config(cls, cfg, num_classes=1):
        mcfg = cfg["model"]
        return cls(
            image_size=mcfg["image_size"],
            channels=mcfg["channels"],
            latent_dim=mcfg["latent_dim"],
            conditional=mcfg["conditional"],
            num_classes=num_classes,
            feature_dim_F=mcfg["feature_dim_F"],
            teacher_dim=cfg["teacher"]["feature_dim"],
            arch=mcfg["arch"],
            hidden_dim=mcfg["hidden_dim"],
            label_dim=mcfg["label_dim"],
            activation=mcfg["activation"],
        )


def _check_labels(module, batch_size, labels):
    if module.spec.conditional:
        if labels is None:
            raise InvalidArgumentError("A conditional model requires labels")
        labels = torch.as_tensor(labels, dtype=torch.long)
        if labels.shape != (batch_size,):
            raise InvalidArgumentError(f"Expected {batch_size} labels, got shape {tuple(labels.shape)}")
        if (labels < 0).any() or (labels >= module.spec.num_classes).any():
            raise InvalidArgumentError(f"Labels must lie in [0, {module.spec.num_classes})")
        return labels
    if labels is not None:
        raise InvalidArgumentError("An unconditional model does not accept labels")
    return None


class Generator(nn.Module):
    def __init__(self, spec):
        super().__init__()
        self.spec = spec
        act = ACTIVATIONS[spec.activation]
        H = spec.hidden_dim
        nin = spec.latent_dim + spec.embed_dim
        self.embed = nn.Embedding(spec.num_classes, spec.label_dim) if spec.conditional else None
        if spec.resolved_arch == "dense":
            self.body = nn.Sequential(
                nn.Linear(nin, H),
                act(),
                nn.Linear(H, H),
                act(),
                nn.Linear(H, spec.num_pixels),
            )
        else:
            base = spec.image_size // 8
            self.body = nn.Sequential(
                nn.Linear(nin, 4 * H * base * base),
                nn.Unflatten(1, (4 * H, base, base)),
                act(),
                nn.ConvTranspose2d(4 * H, 2 * H, 4, 2, 1),
                act(),
                nn.ConvTranspose2d(2 * H, H, 4, 2, 1),
                act(),
                nn.ConvTranspose2d(H, spec.channels, 4, 2, 1),
            )

    def forward(self, z, labels=None):
        if self.embed is not None:
            z = torch.cat([z, self.embed(labels)], dim=1)
        return torch.tanh(self.body(z)).reshape((z.shape[0],) + self.spec.image_shape)


class Discriminator(nn.Module):
    def __init__(self, spec):
        super().__init__()
        self.spec = spec
        act = ACTIVATIONS[spec.activation]
        H = spec.hidden_dim
        F = spec.feature_dim_F
        if spec.resolved_arch == "dense":
            self.body = nn.Sequential(
                nn.Flatten(),
                nn.Linear(spec.num_pixels, H),
                act(),
                nn.Linear(H, F),
                act(),
            )
        else:
            base = spec.image_size // 8
            self.body = nn.Sequential(
                nn.Conv2d(spec.channels, H, 4, 2, 1),
                act(),
                nn.Conv2d(H, 2 * H, 4, 2, 1),
                act(),
                nn.Conv2d(2 * H, 4 * H, 4, 2, 1),
                act(),
                nn.Flatten(),
                nn.Linear(4 * H * base * base, F),
                act(),
            )
        self.embed = nn.Embedding(spec.num_classes, spec.label_dim) if spec.conditional else None
        self.head = nn.Linear(F + spec.embed_dim, 1)
        self.projection = nn.Linear(F, spec.teacher_dim)

    def forward(self, images, labels=None):
        """Scores, last layer features and raw projected features"""
        features = self.body(images)
        hin = features if self.embed is None else torch.cat([features, self.embed(labels)], dim=1)
        return self.head(hin).squeeze(1), features, self.projection(features)


def count_parameters(module):
    return sum(p.numel() for p in module.parameters())


def _reset_parameters(module, gen):
    """Seeded float64 re-initialization of all parameters

    Weights are uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, biases
    are zero and label embeddings are standard normal.
    """
    with torch.no_grad():
        for sub in module.modules():
            if isinstance(sub, nn.Embedding):
                sub.weight.copy_(torch.randn(sub.weight.shape, generator=gen, dtype=torch.float64))
            elif isinstance(sub, (nn.Linear, nn.Conv2d, nn.ConvTranspose2d)):
                shape = sub.weight.shape
                nin = shape[0] if isinstance(sub, nn.ConvTranspose2d) else shape[1]
                bound = (nin * math.prod(shape[2:])) ** -0.5
                values = (torch.rand(shape, generator=gen, dtype=torch.float64) * 2 - 1) * bound
                sub.weight.copy_(values)
                sub.bias.zero_()


def init_params(spec, streams, dtype=torch.float32):
    """Build and initialize the generator and the discriminator

    Parameters
    ----------
    spec: ModelSpec
    streams: kdgan.rng.RandomStreams, int
        Streams of the run or master seed. The ``init`` stream is reseeded
        once per network.
    dtype: torch.dtype

    Return
    ------
    tuple(Generator, Discriminator)
    """
    if not isinstance(streams, krng.RandomStreams):
        streams = krng.RandomStreams(streams)
    gen = Generator(spec).to(torch.float64)
    disc = Discriminator(spec).to(torch.float64)
    _reset_parameters(gen, streams.reset("init", "g"))
    _reset_parameters(disc, streams.reset("init", "d"))
    gen.to(dtype)
    disc.to(dtype)
    logger.info(
        f"Initialized {spec.resolved_arch} models: generator={count_parameters(gen)} "
        f"discriminator={count_parameters(disc)} parameters"
    )
    return gen, disc


def sample_noise(batch_size, latent_dim, generator, dtype=torch.float32):
    """Draw a :class:`NoiseBatch` from a random stream"""
    noise = torch.randn((batch_size, latent_dim), generator=generator, dtype=torch.float64)
    return NoiseBatch(noise.to(dtype))


def generate(g, z, labels=None):
    """Generate images

    Parameters
    ----------
    g: Generator
    z: NoiseBatch
    labels: torch.Tensor, None
        Required in conditional mode only

    Return
    ------
    ImageBatch
    """
    zdata = knum.as_data(z)
    if zdata.shape[1] != g.spec.latent_dim:
        raise InvalidArgumentError(f"Expected latent dimension {g.spec.latent_dim}, got {zdata.shape[1]}")
    labels = _check_labels(g, zdata.shape[0], labels)
    return ImageBatch(g(zdata, labels), labels)


def discriminate(d, imgs, labels=None):
    """Discriminate images

    Parameters
    ----------
    d: Discriminator
    imgs: ImageBatch
    labels: torch.Tensor, None
        Defaults to the labels of `imgs` in conditional mode

    Return
    ------
    DiscriminatorOutput
    """
    data = knum.as_data(imgs)
    if tuple(data.shape[1:]) != d.spec.image_shape:
        raise InvalidArgumentError(
            f"Expected images of shape {d.spec.image_shape}, got {tuple(data.shape[1:])}"
        )
    if labels is None and d.spec.conditional:
        labels = getattr(imgs, "labels", None)
    labels = _check_labels(d, data.shape[0], labels)
    scores, features, projected = d(data, labels)
    return DiscriminatorOutput(
        scores=scores,
        features=knum.FeatureBatch(features),
        projected=knum.FeatureBatch(knum.row_l2_normalize(projected)),
    )
