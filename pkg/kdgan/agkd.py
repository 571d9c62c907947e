#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Aggregated generative knowledge distillation

The discriminator features of real and generated images mimic the teacher
features of the same images (:func:`agkd_kd_loss`). With probability `p`,
they also mimic the teacher features of the other branch
(:func:`agkd_agg_loss`), which lowers the real/fake discriminability of
the discriminator.
"""
import dataclasses
import logging

import torch

from . import InvalidArgumentError
from . import numerics as knum

logger = logging.getLogger(__name__)

DEFAULT_GATE_PROBABILITY = 0.7


@dataclasses.dataclass(frozen=True)
class AgkdInputs:
    """Teacher and student features of a real and a generated batch"""

    teacher_real: torch.Tensor
    teacher_fake: torch.Tensor
    student_real: torch.Tensor
    student_fake: torch.Tensor

    def __post_init__(self):
        shapes = {}
        for field in dataclasses.fields(self):
            value = knum.as_data(getattr(self, field.name))
            knum.check_matrix(value, field.name.replace("_", " ") + " features")
            object.__setattr__(self, field.name, value)
            shapes[field.name] = tuple(value.shape)
        if len(set(shapes.values())) != 1:
            raise InvalidArgumentError(
                "AGKD features must share the same shape: "
                + ", ".join(f"{name}={shape}" for name, shape in shapes.items())
            )

    @property
    def shape(self):
        return tuple(self.teacher_real.shape)

    def swapped(self):
        """Same inputs with the student real and fake features exchanged"""
        return AgkdInputs(self.teacher_real, self.teacher_fake, self.student_fake, self.student_real)


@dataclasses.dataclass
class GateConfig:
    """Gate of the aggregation term

    Parameters
    ----------
    p: float
        Probability to apply the aggregation term
    rng_stream: torch.Generator
        The only source of the gate draws
    """

    p: float = DEFAULT_GATE_PROBABILITY
    rng_stream: torch.Generator = None

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise InvalidArgumentError(f"Gate probability must be in [0, 1]: {self.p}")
        if self.rng_stream is None:
            raise InvalidArgumentError("The gate requires a seeded random stream")


@dataclasses.dataclass(frozen=True)
class AgkdOutput:
    l_kd: torch.Tensor
    l_agg_raw: torch.Tensor
    gate_open: bool
    l_total: torch.Tensor


def agkd_kd_loss(inputs):
    """Feature mimicry on both branches

    Return
    ------
    torch.Tensor
        ``l1(I(x), D(x)) + l1(I(G(z)), D(G(z)))``
    """
    return knum.l1_mean(inputs.teacher_real, inputs.student_real) + knum.l1_mean(
        inputs.teacher_fake, inputs.student_fake
    )


def agkd_agg_loss(inputs):
    """Cross-branch feature mimicry

    Return
    ------
    torch.Tensor
        ``l1(I(x), D(G(z))) + l1(I(G(z)), D(x))``
    """
    return agkd_kd_loss(inputs.swapped())


def sample_gate(cfg):
    """Draw ``q ~ U[0, 1)`` from the gate stream and return whether ``q <= p``"""
    q = torch.rand(1, generator=cfg.rng_stream, dtype=torch.float64).item()
    return q <= cfg.p


def agkd_total(inputs, cfg, weight=1.0, aggregate=True):
    """Gated AGKD loss

    The gate is drawn exactly once per call, even when the aggregation term
    is disabled, so that the gate stream advances identically.

    Parameters
    ----------
    inputs: AgkdInputs
    cfg: GateConfig
    weight: float
        Multiplier of the aggregation term
    aggregate: bool
        When false, only the feature mimicry term is used (vanilla KD)

    Return
    ------
    AgkdOutput
    """
    gate_open = sample_gate(cfg)
    l_kd = agkd_kd_loss(inputs)
    if aggregate:
        l_agg_raw = agkd_agg_loss(inputs)
    else:
        l_agg_raw = torch.zeros((), dtype=l_kd.dtype)
        gate_open = False
    l_total = l_kd + weight * l_agg_raw if gate_open else l_kd
    return AgkdOutput(l_kd=l_kd, l_agg_raw=l_agg_raw, gate_open=gate_open, l_total=l_total)
