#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Finite difference gradient oracle suite

Every differentiable loss is compared to central finite differences at
64-bit precision on small random inputs. Inputs lying closer than
:data:`KINK_MARGIN` to a non-differentiable point (L1 and hinge kinks) are
redrawn.

Suites:

``agkd``, ``cgkd``, ``adv``
    Loss functions with respect to all their student side inputs, at
    :data:`LOSS_TOL`. ``all`` runs the three of them.
``models``
    End-to-end composed objectives with respect to a random sample of
    generator and discriminator parameters, gradients through the mock
    teacher image encoder and through the augmentation, at
    :data:`MODEL_TOL`.
"""
import bisect
import logging

import torch
from torch.func import functional_call

from . import InvalidArgumentError, NumericFailureError
from . import adversarial as kadv
from . import agkd as kagkd
from . import cgkd as kcgkd
from . import data as kdata
from . import models as kmodels
from . import numerics as knum
from . import rng as krng
from . import teacher as kteacher

logger = logging.getLogger(__name__)

SUITES = ("all", "agkd", "cgkd", "adv", "models")

#: Minimal distance to a kink
KINK_MARGIN = 1e-3

#: Tolerance on the loss functions
LOSS_TOL = 1e-4

#: Tolerance on the end-to-end checks
MODEL_TOL = 1e-3

MAX_DRAWS = 100


def _draw_away_from_kinks(draw, margin, gen):
    for _ in range(MAX_DRAWS):
        inputs = draw(gen)
        if margin(inputs) >= KINK_MARGIN:
            return inputs
    raise NumericFailureError(f"Could not draw inputs away from kinks in {MAX_DRAWS} attempts")


def _randn(gen, *shape):
    return torch.randn(shape, generator=gen, dtype=torch.float64)


def _min_abs_diff(*pairs):
    return min(float((a - b).abs().min()) for a, b in pairs)


# %% Loss suites


def check_agkd(seed=0, batch_size=4, dim=5, h=knum.FD_STEP):
    """AGKD with an open gate, with and without aggregation"""
    gen = krng.make_generator(krng.derive_seed(seed, "gradcheck", "agkd"))

    def draw(gen):
        return {
            name: knum.row_l2_normalize(_randn(gen, batch_size, dim))
            for name in ("teacher_real", "teacher_fake", "student_real", "student_fake")
        }

    def margin(x):
        return _min_abs_diff(
            (x["teacher_real"], x["student_real"]),
            (x["teacher_fake"], x["student_fake"]),
            (x["teacher_real"], x["student_fake"]),
            (x["teacher_fake"], x["student_real"]),
        )

    inputs = _draw_away_from_kinks(draw, margin, gen)
    gate = kagkd.GateConfig(p=1.0, rng_stream=krng.make_generator(seed))
    report = knum.GradCheckReport()
    for aggregate in True, False:

        def func(**kw):
            return kagkd.agkd_total(kagkd.AgkdInputs(**kw), gate, weight=0.5, aggregate=aggregate).l_total

        sub = knum.check_gradients(func, inputs, h=h)
        report.merge(sub, prefix=f"agkd/{'agg' if aggregate else 'kd'}/")
    return report


def check_cgkd(seed=0, batch_size=4, dim=5, num_texts=3, h=knum.FD_STEP):
    """CGKD total loss with ordered and unordered pairs"""
    gen = krng.make_generator(krng.derive_seed(seed, "gradcheck", "cgkd"))
    texts = knum.TextFeatureSet(
        knum.row_l2_normalize(_randn(gen, num_texts, dim)), [f"text{k}" for k in range(num_texts)]
    )

    def draw(gen):
        return {"teacher_fake": _randn(gen, batch_size, dim), "student_fake": _randn(gen, batch_size, dim)}

    def margin(x):
        ct = kcgkd.build_correlation(x["teacher_fake"], texts, "teacher")
        cs = kcgkd.build_correlation(x["student_fake"], texts, "student")
        return _min_abs_diff((ct.data, cs.data))

    inputs = _draw_away_from_kinks(draw, margin, gen)
    report = knum.GradCheckReport()
    for ordered in True, False:

        def func(teacher_fake, student_fake):
            return kcgkd.cgkd_total(
                teacher_fake, student_fake, texts, weight=0.7, pd_weight=0.3, ordered_pairs=ordered
            ).l_total

        sub = knum.check_gradients(func, inputs, h=h)
        report.merge(sub, prefix=f"cgkd/{'ordered' if ordered else 'unordered'}/")
    return report


def check_adv(seed=0, batch_size=6, h=knum.FD_STEP):
    """Both adversarial loss families on logits, logistic losses on probabilities"""
    gen = krng.make_generator(krng.derive_seed(seed, "gradcheck", "adv"))

    def draw(gen):
        return {"real_scores": 2 * _randn(gen, batch_size), "fake_scores": 2 * _randn(gen, batch_size)}

    def margin(x):
        return min(float((1 - x["real_scores"]).abs().min()), float((1 + x["fake_scores"]).abs().min()))

    logits = _draw_away_from_kinks(draw, margin, gen)
    probs = {name: torch.sigmoid(value) for name, value in logits.items()}
    report = knum.GradCheckReport()
    for tag, inputs in ("logits", logits), ("probabilities", probs):
        for kind in kadv.D_KINDS:
            if kind == "hinge" and tag != "logits":
                continue

            def dfunc(real_scores, fake_scores):
                return kadv.d_adv_loss(kadv.DiscriminatorScores(real_scores, fake_scores, tag=tag), kind)

            report.merge(knum.check_gradients(dfunc, inputs, h=h), prefix=f"adv/d_{kind}/{tag}/")
        for kind in kadv.G_KINDS:
            if kind == "hinge" and tag != "logits":
                continue

            def gfunc(fake_scores):
                return kadv.g_adv_loss(fake_scores, kind, tag=tag)

            sub = knum.check_gradients(gfunc, {"fake_scores": inputs["fake_scores"]}, h=h)
            report.merge(sub, prefix=f"adv/g_{kind}/{tag}/")
    return report


# %% End-to-end suite


def _sample_positions(module, count, gen):
    """Random ``{parameter name: flat indices}`` sample of `count` entries"""
    named = list(module.named_parameters())
    offsets = [0]
    for _, param in named:
        offsets.append(offsets[-1] + param.numel())
    picks = torch.randperm(offsets[-1], generator=gen)[:count]
    out = {}
    for pick in sorted(picks.tolist()):
        iparam = bisect.bisect_right(offsets, pick) - 1
        out.setdefault(named[iparam][0], []).append(pick - offsets[iparam])
    return out


def _check_parameter_sample(module, loss_fn, count, gen, prefix, h, report):
    params = dict(module.named_parameters())
    for name, indices in _sample_positions(module, count, gen).items():
        base = params[name].detach()
        idx = torch.tensor(indices)

        def func(theta, name=name, base=base, idx=idx):
            full = base.reshape(-1).index_put((idx,), theta).reshape(base.shape)
            return loss_fn({name: full})

        sub = knum.check_gradients(func, {"theta": base.reshape(-1)[idx]}, h=h)
        report.merge(sub, prefix=f"{prefix}{name}/")
    return report


def check_models(seed=0, batch_size=4, count=10, h=knum.FD_STEP):
    """Composed objectives with respect to sampled network parameters

    Also checks the gradients of the teacher image encoder and of the
    basic augmentation with respect to the images.
    """
    gen = krng.make_generator(krng.derive_seed(seed, "gradcheck", "models"))
    spec = kmodels.ModelSpec(image_size=4, latent_dim=3, feature_dim_F=6, teacher_dim=5, hidden_dim=8)
    gnet, dnet = kmodels.init_params(spec, seed, dtype=torch.float64)
    teacher = kteacher.build_mock_teacher(
        kteacher.MockTeacherSpec(seed=seed, M=spec.teacher_dim, hidden_dim=8, input_shape=spec.image_shape)
    )
    texts = teacher.encode_texts(["a", "b", "c"])
    z = kmodels.sample_noise(batch_size, spec.latent_dim, gen, torch.float64)
    real = torch.tanh(_randn(gen, batch_size, *spec.image_shape))
    with torch.no_grad():
        fake = gnet(z.data)
        teacher_real = teacher.encode_images(real)
        teacher_fake = teacher.encode_images(fake)
    weights = kadv.LossWeights(w_agkd=0.5, w_cgkd=0.7, w_pd=0.3)

    def student(d_params, images):
        scores, _, projected = functional_call(dnet, d_params, (images,))
        return scores, knum.row_l2_normalize(projected)

    def d_loss(d_params):
        real_scores, s_real = student(d_params, real)
        fake_scores, s_fake = student(d_params, fake)
        adv = kadv.d_adv_loss(kadv.DiscriminatorScores(real_scores, fake_scores), "logistic")
        gate = kagkd.GateConfig(p=1.0, rng_stream=krng.make_generator(seed))
        agkd = kagkd.agkd_total(kagkd.AgkdInputs(teacher_real, teacher_fake, s_real, s_fake), gate)
        ct = kcgkd.build_correlation(teacher_fake, texts, "teacher")
        cs = kcgkd.build_correlation(s_fake, texts, "student")
        l_kd = kcgkd.correlation_kd_loss(ct, cs)
        return kadv.compose_objective(adv_d=adv, agkd=agkd, cgkd=(None, l_kd), weights=weights).d_loss

    def g_loss(g_params):
        images = functional_call(gnet, g_params, (z.data,))
        fake_scores, s_fake = student({}, images)
        adv = kadv.g_adv_loss(fake_scores, "logistic_nonsaturating")
        out = kcgkd.cgkd_total(teacher.encode_images(images), s_fake.detach(), texts)
        return kadv.compose_objective(adv_g=adv, cgkd=(out.l_pd, out.l_kd), weights=weights).g_loss

    report = knum.GradCheckReport()
    _check_parameter_sample(dnet, d_loss, count, gen, "models/d/", h, report)
    _check_parameter_sample(gnet, g_loss, count, gen, "models/g/", h, report)

    probe = kteacher.make_probe(spec.image_shape, batch_size=2, seed=seed)
    direction = _randn(gen, spec.teacher_dim)

    def encode(images):
        return (teacher.encode_images(images).data @ direction).sum()

    report.merge(knum.check_gradients(encode, {"images": probe}, h=h), prefix="models/teacher/")

    params = kdata.draw_augment(batch_size, spec.image_size, gen)

    def augmented(images):
        out = kdata.augment(kmodels.ImageBatch(images), "basic", params=params).data
        return (out * real).sum()

    report.merge(knum.check_gradients(augmented, {"images": fake}, h=h), prefix="models/augment/")
    return report


SUITE_FUNCTIONS = {"agkd": check_agkd, "cgkd": check_cgkd, "adv": check_adv, "models": check_models}


def suite_tolerance(module):
    return MODEL_TOL if module == "models" else LOSS_TOL


def run_suite(module="all", seed=0):
    """Run a gradient check suite

    Parameters
    ----------
    module: {"all", "agkd", "cgkd", "adv", "models"}
    seed: int

    Return
    ------
    kdgan.numerics.GradCheckReport
    """
    if module not in SUITES:
        raise InvalidArgumentError(f"Invalid gradient check suite: {module}. Choose one of: {SUITES}")
    names = ("agkd", "cgkd", "adv") if module == "all" else (module,)
    report = knum.GradCheckReport()
    for name in names:
        sub = SUITE_FUNCTIONS[name](seed=seed)
        logger.info(f"Gradient check {name}: max relative error {sub.max_rel_error:.3g}")
        report.merge(sub)
    return report
