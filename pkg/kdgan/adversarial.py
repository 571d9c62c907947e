#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Adversarial losses and composition of the training objective

Every loss is expressed as a quantity to minimize: the discriminator
minimizes the negated logistic objective plus its distillation terms, and
the generator minimizes its adversarial loss plus the CGKD terms routed to
it.
"""
import dataclasses
import logging

import torch
import torch.nn.functional as F

from . import InvalidArgumentError, NumericFailureError

logger = logging.getLogger(__name__)

#: Probability clamp before logarithms
PROB_EPS = 1e-7

D_KINDS = ("logistic", "hinge")
G_KINDS = ("logistic_saturating", "logistic_nonsaturating", "hinge")
SCORE_TAGS = ("logits", "probabilities")


@dataclasses.dataclass(frozen=True)
class DiscriminatorScores:
    """Discriminator outputs on a real and a generated batch"""

    real_scores: torch.Tensor
    fake_scores: torch.Tensor
    tag: str = "logits"

    def __post_init__(self):
        check_scores(self.real_scores, self.tag)
        check_scores(self.fake_scores, self.tag)


@dataclasses.dataclass(frozen=True)
class LossWeights:
    """Objective weights

    ``kd_in_g`` routes the CGKD distillation term to the generator through
    the teacher path.
    """

    w_agkd: float = 1.0
    w_cgkd: float = 1.0
    w_pd: float = 1.0
    kd_in_g: bool = True

    @classmethod
    def from_config(cls, cfg):
        return cls(
            w_agkd=cfg["loss"]["w_agkd"],
            w_cgkd=cfg["loss"]["w_cgkd"],
            w_pd=cfg["loss"]["w_pd"],
            kd_in_g=not cfg["cgkd"]["stop_teacher_grad_in_kd"],
        )


@dataclasses.dataclass
class ObjectiveBundle:
    """Losses minimized by each network and their weighted components

    Component names are prefixed by the network they update: ``d/`` or ``g/``.
    """

    d_loss: torch.Tensor = None
    g_loss: torch.Tensor = None
    components: dict = dataclasses.field(default_factory=dict)

    def routing(self):
        """Names of the terms updating each network"""
        out = {"d": [], "g": []}
        for name in self.components:
            net, term = name.split("/", 1)
            out[net].append(term)
        return out


def check_scores(scores, tag="logits"):
    if tag not in SCORE_TAGS:
        raise InvalidArgumentError(f"Invalid score tag: {tag}. Choose one of: {SCORE_TAGS}")
    if not isinstance(scores, torch.Tensor) or scores.ndim != 1 or scores.numel() == 0:
        raise InvalidArgumentError("Discriminator scores must be a non-empty 1D tensor")
    if not torch.isfinite(scores).all():
        raise InvalidArgumentError("Discriminator scores contain non-finite entries")
    if tag == "probabilities" and ((scores < 0).any() or (scores > 1).any()):
        raise InvalidArgumentError("Probabilities must lie in (0, 1)")


def _log_d(scores, tag):
    """``log D``"""
    if tag == "probabilities":
        return torch.log(scores.clamp(PROB_EPS, 1 - PROB_EPS))
    return F.logsigmoid(scores)


def _log_one_minus_d(scores, tag):
    """``log(1 - D)``"""
    if tag == "probabilities":
        return torch.log(1 - scores.clamp(PROB_EPS, 1 - PROB_EPS))
    return F.logsigmoid(-scores)


def d_adv_loss(scores, kind="logistic"):
    """Discriminator adversarial loss

    Parameters
    ----------
    scores: DiscriminatorScores
    kind: {"logistic", "hinge"}

    Return
    ------
    torch.Tensor
    """
    if kind == "logistic":
        real = _log_d(scores.real_scores, scores.tag).mean()
        fake = _log_one_minus_d(scores.fake_scores, scores.tag).mean()
        return -(real + fake)
    if kind == "hinge":
        if scores.tag != "logits":
            raise InvalidArgumentError("The hinge loss works on logits")
        return F.relu(1 - scores.real_scores).mean() + F.relu(1 + scores.fake_scores).mean()
    raise InvalidArgumentError(f"Invalid discriminator loss kind: {kind}. Choose one of: {D_KINDS}")


def g_adv_loss(fake_scores, kind="logistic_nonsaturating", tag="logits"):
    """Generator adversarial loss

    Parameters
    ----------
    fake_scores: torch.Tensor
        ``[B]`` scores of generated images
    kind: {"logistic_saturating", "logistic_nonsaturating", "hinge"}
    tag: {"logits", "probabilities"}

    Return
    ------
    torch.Tensor
    """
    check_scores(fake_scores, tag)
    if kind == "logistic_saturating":
        return _log_one_minus_d(fake_scores, tag).mean()
    if kind == "logistic_nonsaturating":
        return -_log_d(fake_scores, tag).mean()
    if kind == "hinge":
        if tag != "logits":
            raise InvalidArgumentError("The hinge loss works on logits")
        return -fake_scores.mean()
    raise InvalidArgumentError(f"Invalid generator loss kind: {kind}. Choose one of: {G_KINDS}")


def g_kind_from_config(adv_kind, g_variant):
    """Generator loss kind from the ``adv.kind`` and ``adv.g_variant`` keys"""
    if adv_kind == "hinge":
        return "hinge"
    return f"logistic_{g_variant}"


def _check_finite(name, value):
    if not torch.isfinite(torch.as_tensor(value)).all():
        raise NumericFailureError(f"Non-finite loss component: {name}={float(value)}")


def compose_objective(adv_d=None, adv_g=None, agkd=None, cgkd=None, weights=None):
    """Assign the loss terms to the networks they update

    Terms with a zero weight or a missing input are left out entirely so
    that a configuration without distillation reduces to the plain GAN
    objective.

    Parameters
    ----------
    adv_d: torch.Tensor, None
        Discriminator adversarial loss, when updating the discriminator
    adv_g: torch.Tensor, None
        Generator adversarial loss, when updating the generator
    agkd: AgkdOutput, None
    cgkd: tuple, None
        ``(l_pd, l_kd)``, either may be None
    weights: LossWeights

    Return
    ------
    ObjectiveBundle
    """
    weights = LossWeights() if weights is None else weights
    l_pd, l_kd = (None, None) if cgkd is None else tuple(cgkd)[:2]
    terms = []
    if adv_d is not None:
        terms.append(("d/adv", adv_d, 1.0))
        if agkd is not None:
            terms.append(("d/agkd", agkd.l_total, weights.w_agkd))
        if l_kd is not None:
            terms.append(("d/cgkd_kd", l_kd, weights.w_cgkd))
    if adv_g is not None:
        terms.append(("g/adv", adv_g, 1.0))
        if l_pd is not None:
            terms.append(("g/cgkd_pd", l_pd, weights.w_pd))
        if l_kd is not None and weights.kd_in_g:
            terms.append(("g/cgkd_kd", l_kd, weights.w_cgkd))

    bundle = ObjectiveBundle()
    for name, value, weight in terms:
        _check_finite(name, value.detach() if isinstance(value, torch.Tensor) else value)
        if weight == 0:
            continue
        term = weight * value
        bundle.components[name] = term
        attr = "d_loss" if name.startswith("d/") else "g_loss"
        current = getattr(bundle, attr)
        setattr(bundle, attr, term if current is None else current + term)
    logger.debug(
        "Loss routing: "
        + "; ".join(f"{net} <- {', '.join(names)}" for net, names in bundle.routing().items() if names)
    )
    return bundle
