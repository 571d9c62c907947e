#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests for adversarial.py module
"""
import math

import pytest
import torch

from kdgan import InvalidArgumentError, NumericFailureError
from kdgan import adversarial as kadv
from kdgan import agkd as kagkd

pytestmark = pytest.mark.unit


def scalar(value):
    return torch.tensor(value, dtype=torch.float64)


def agkd_output(value):
    return kagkd.AgkdOutput(l_kd=scalar(value), l_agg_raw=scalar(0.0), gate_open=False, l_total=scalar(value))


class TestScores:
    """Test score validation"""

    def test_valid(self):
        scores = kadv.DiscriminatorScores(torch.zeros(3), torch.ones(3))
        assert scores.tag == "logits"

    @pytest.mark.parametrize(
        "real,tag",
        [
            (torch.zeros(3, 1), "logits"),
            (torch.zeros(0), "logits"),
            (torch.tensor([0.0, float("nan")]), "logits"),
            (torch.tensor([0.5, 1.5]), "probabilities"),
            (torch.zeros(3), "scores"),
        ],
    )
    def test_invalid(self, real, tag):
        with pytest.raises(InvalidArgumentError):
            kadv.DiscriminatorScores(real, torch.full_like(real, 0.5), tag)


class TestDiscriminatorLoss:
    """Test the discriminator adversarial losses"""

    def test_logistic_at_zero(self):
        scores = kadv.DiscriminatorScores(torch.zeros(4), torch.zeros(4))
        assert kadv.d_adv_loss(scores).item() == pytest.approx(2 * math.log(2))

    def test_logistic_probabilities_match_logits(self):
        real, fake = torch.tensor([0.3, -1.2]), torch.tensor([2.0, 0.1])
        from_logits = kadv.d_adv_loss(kadv.DiscriminatorScores(real, fake))
        from_probs = kadv.d_adv_loss(
            kadv.DiscriminatorScores(torch.sigmoid(real), torch.sigmoid(fake), "probabilities")
        )
        assert from_logits.item() == pytest.approx(from_probs.item(), rel=1e-5)

    def test_hinge(self):
        scores = kadv.DiscriminatorScores(torch.tensor([2.0, 0.0]), torch.tensor([-2.0, 0.0]))
        assert kadv.d_adv_loss(scores, "hinge").item() == pytest.approx(1.0)

    def test_hinge_needs_logits(self):
        scores = kadv.DiscriminatorScores(torch.full((2,), 0.5), torch.full((2,), 0.5), "probabilities")
        with pytest.raises(InvalidArgumentError):
            kadv.d_adv_loss(scores, "hinge")

    def test_invalid_kind(self):
        scores = kadv.DiscriminatorScores(torch.zeros(2), torch.zeros(2))
        with pytest.raises(InvalidArgumentError):
            kadv.d_adv_loss(scores, "wasserstein")


class TestGeneratorLoss:
    """Test the generator adversarial losses"""

    def test_variants_at_zero(self):
        fake = torch.zeros(3)
        assert kadv.g_adv_loss(fake, "logistic_nonsaturating").item() == pytest.approx(math.log(2))
        assert kadv.g_adv_loss(fake, "logistic_saturating").item() == pytest.approx(-math.log(2))
        assert kadv.g_adv_loss(fake, "hinge").item() == 0

    def test_nonsaturating_decreases_with_score(self):
        low = kadv.g_adv_loss(torch.full((2,), -1.0))
        high = kadv.g_adv_loss(torch.full((2,), 1.0))
        assert high < low

    def test_invalid_kind(self):
        with pytest.raises(InvalidArgumentError):
            kadv.g_adv_loss(torch.zeros(2), "least_squares")

    @pytest.mark.parametrize(
        "adv_kind,variant,expected",
        [
            ("logistic", "nonsaturating", "logistic_nonsaturating"),
            ("logistic", "saturating", "logistic_saturating"),
            ("hinge", "nonsaturating", "hinge"),
        ],
    )
    def test_kind_from_config(self, adv_kind, variant, expected):
        assert kadv.g_kind_from_config(adv_kind, variant) == expected


class TestComposeObjective:
    """Test the routing of the loss terms"""

    def test_full_routing(self):
        weights = kadv.LossWeights(w_agkd=0.5, w_cgkd=2.0, w_pd=3.0)
        d_bundle = kadv.compose_objective(
            adv_d=scalar(1.0), agkd=agkd_output(1.0), cgkd=(None, scalar(1.0)), weights=weights
        )
        assert set(d_bundle.components) == {"d/adv", "d/agkd", "d/cgkd_kd"}
        assert d_bundle.g_loss is None
        assert d_bundle.d_loss.item() == pytest.approx(1.0 + 0.5 + 2.0)

        g_bundle = kadv.compose_objective(adv_g=scalar(1.0), cgkd=(scalar(1.0), scalar(1.0)), weights=weights)
        assert g_bundle.routing() == {"d": [], "g": ["adv", "cgkd_pd", "cgkd_kd"]}
        assert g_bundle.g_loss.item() == pytest.approx(1.0 + 3.0 + 2.0)

    def test_stop_teacher_grad(self):
        weights = kadv.LossWeights(kd_in_g=False)
        bundle = kadv.compose_objective(adv_g=scalar(1.0), cgkd=(scalar(1.0), scalar(1.0)), weights=weights)
        assert set(bundle.components) == {"g/adv", "g/cgkd_pd"}

    def test_zero_weights_reduce_to_plain_gan(self):
        weights = kadv.LossWeights(w_agkd=0.0, w_cgkd=0.0, w_pd=0.0)
        adv = scalar(0.8)
        bundle = kadv.compose_objective(
            adv_d=adv, agkd=agkd_output(1.0), cgkd=(scalar(1.0), scalar(1.0)), weights=weights
        )
        assert list(bundle.components) == ["d/adv"]
        assert bundle.d_loss is adv or torch.equal(bundle.d_loss, adv)

    def test_non_finite(self):
        with pytest.raises(NumericFailureError):
            kadv.compose_objective(adv_d=scalar(float("inf")))

    def test_non_finite_even_with_zero_weight(self):
        weights = kadv.LossWeights(w_agkd=0.0)
        with pytest.raises(NumericFailureError):
            kadv.compose_objective(adv_d=scalar(1.0), agkd=agkd_output(float("nan")), weights=weights)

    def test_from_config(self, tiny_config):
        weights = kadv.LossWeights.from_config(tiny_config)
        assert weights.w_agkd == tiny_config["loss"]["w_agkd"]
        assert weights.kd_in_g is not tiny_config["cgkd"]["stop_teacher_grad_in_kd"]
