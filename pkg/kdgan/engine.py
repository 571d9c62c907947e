#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Training engine

A training step performs ``d_steps_per_g_step`` discriminator updates
followed by one generator update. Loss terms are routed to the networks by
:func:`kdgan.adversarial.compose_objective`:

- the discriminator minimizes its adversarial loss, the gated AGKD loss and
  the CGKD correlation distillation through its projected features;
- the generator minimizes its adversarial loss, the CGKD pairwise diversity
  and the correlation distillation through the teacher path.

Teacher features are constants with respect to the teacher weights. The
generated images stay on the differentiable path through the teacher
during the generator update.
"""
import copy
import dataclasses
import logging
import os
import pathlib
import time

import pandas as pd
import psutil
import torch

from . import InvalidArgumentError, NumericFailureError
from . import adversarial as kadv
from . import agkd as kagkd
from . import cgkd as kcgkd
from . import checkpoint as kckpt
from . import conf as kconf
from . import data as kdata
from . import log as klog
from . import metrics as kmetrics
from . import models as kmodels
from . import numerics as knum
from . import plot as kplot
from . import render as krender
from . import rng as krng
from . import teacher as kteacher
from . import util as kutil

logger = logging.getLogger(__name__)

DTYPES = {"32": torch.float32, "64": torch.float64}

METRICS_COLUMNS = ["step", "name", "value", "seed"]


@dataclasses.dataclass
class StepMetrics:
    """Metrics of one training step

    ``components`` holds the weighted loss terms of :class:`~kdgan.adversarial.ObjectiveBundle`,
    averaged over the discriminator updates for the ``d/`` terms.
    """

    step: int
    components: dict
    extras: dict
    gate_open: list

    def rows(self, seed):
        values = dict(self.components)
        values.update(self.extras)
        return [(self.step, name, value, seed) for name, value in values.items()]


class MetricsWriter:
    """Buffered ``step,name,value,seed`` CSV writer"""

    def __init__(self, path, seed):
        self.path = str(path)
        self.seed = seed
        self._rows = []

    def add(self, rows):
        self._rows.extend(rows)

    def add_values(self, step, values):
        self._rows.extend((step, name, value, self.seed) for name, value in values.items())

    def flush(self):
        if not self._rows:
            return
        df = pd.DataFrame(self._rows, columns=METRICS_COLUMNS)
        df.to_csv(self.path, mode="a", header=not os.path.exists(self.path), index=False)
        self._rows = []

    def truncate(self, step):
        """Drop the rows recorded after `step` completed training steps"""
        self._rows = []
        if not os.path.exists(self.path):
            return
        df = pd.read_csv(self.path, dtype={"value": str})
        is_eval = df["name"].str.startswith("eval/")
        keep = (df["step"] < step) | (is_eval & (df["step"] == step))
        df[keep].to_csv(self.path, index=False)
        logger.debug(f"Truncated {int((~keep).sum())} metric rows after step {step}")


def _grad_norm(params):
    grads = [p.grad.detach().flatten() for p in params if p.grad is not None]
    if not grads:
        return 0.0
    return float(torch.linalg.vector_norm(torch.cat(grads)))


def _as_float(value):
    return float(value.detach()) if isinstance(value, torch.Tensor) else float(value)


def _check_bundle(bundle, what):
    loss = bundle.d_loss if what == "d" else bundle.g_loss
    if loss is not None and not torch.isfinite(loss.detach()).all():
        components = {name: _as_float(value) for name, value in bundle.components.items()}
        raise NumericFailureError(f"Non-finite {what} loss, components: {components}")


class Trainer:
    """Training state and step logic

    Parameters
    ----------
    cfg: configobj.ConfigObj
        Validated configuration
    dataset: kdgan.data.ImageDataset, None
        Training subset, loaded from the ``[data]`` section by default
    teacher: kdgan.teacher.TeacherModel, None
        Built from the ``[teacher]`` section by default
    """

    def __init__(self, cfg, dataset=None, teacher=None):
        self.cfg = cfg
        self.dtype = DTYPES[str(cfg["run"]["precision"])]
        self.seed = cfg["run"]["master_seed"]
        self.streams = krng.RandomStreams(self.seed)
        self.data_spec = kdata.DatasetSpec.from_config(cfg)
        self.dataset = kdata.load_subset(self.data_spec) if dataset is None else dataset
        self.spec = kmodels.ModelSpec.from_config(cfg, num_classes=max(self.dataset.num_classes, 1))
        if self.dataset.image_shape != self.spec.image_shape:
            raise InvalidArgumentError(
                f"Dataset images have shape {self.dataset.image_shape}, model expects {self.spec.image_shape}"
            )
        if teacher is None:
            teacher = kteacher.teacher_from_config(cfg["teacher"], self.spec.image_shape)
        self.teacher = teacher
        if self.teacher.feature_dim != self.spec.teacher_dim:
            raise InvalidArgumentError(
                f"Teacher feature dimension {self.teacher.feature_dim} differs from {self.spec.teacher_dim}"
            )
        self.weights = kadv.LossWeights.from_config(cfg)
        self.text_features = self._encode_texts()
        self.generator, self.discriminator = kmodels.init_params(self.spec, self.streams, self.dtype)
        ocfg = cfg["optim"]
        self.opt_g = torch.optim.Adam(
            self.generator.parameters(), lr=ocfg["g_lr"], betas=(ocfg["g_beta1"], ocfg["g_beta2"])
        )
        self.opt_d = torch.optim.Adam(
            self.discriminator.parameters(), lr=ocfg["d_lr"], betas=(ocfg["d_beta1"], ocfg["d_beta2"])
        )
        self.gate = kagkd.GateConfig(p=cfg["agkd"]["p"], rng_stream=self.streams["gate"])
        self.d_kind = cfg["adv"]["kind"]
        self.g_kind = kadv.g_kind_from_config(cfg["adv"]["kind"], cfg["adv"]["g_variant"])
        self.sampler = kdata.BatchSampler(len(self.dataset), cfg["train"]["batch_size"], self.streams)
        self.step = 0
        self.counters = {"gate_draws": 0, "gate_open": 0}
        self._reference = None
        self._reference_stats = None

    # %% Setup

    def _encode_texts(self):
        tcfg = self.cfg["teacher"]
        labels = tcfg["texts"] or list(self.dataset.class_names)
        prompts = kteacher.texts_from_labels(labels, tcfg["prompt_template"])
        if self.use_cgkd and len(prompts) < 2:
            raise InvalidArgumentError("CGKD needs at least 2 text labels")
        with torch.no_grad():
            texts = self.teacher.encode_texts(prompts)
        logger.debug(f"Encoded {texts.K} teacher texts: {prompts}")
        return texts

    @property
    def use_agkd(self):
        return bool(self.cfg["agkd"]["enabled"]) and self.weights.w_agkd != 0

    @property
    def use_cgkd(self):
        ccfg = self.cfg["cgkd"]
        kd_on = self.weights.w_cgkd != 0 and ccfg["weight"] != 0
        pd_on = self.weights.w_pd != 0 and ccfg["pd_weight"] != 0
        return bool(ccfg["enabled"]) and (kd_on or pd_on)

    @property
    def augment_policy(self):
        return self.cfg["data"]["augment"]

    # %% Steps

    def _sample_fake(self, batch_size, grad):
        z = kmodels.sample_noise(batch_size, self.spec.latent_dim, self.streams["noise"], self.dtype)
        labels = None
        if self.spec.conditional:
            labels = torch.randint(0, self.spec.num_classes, (batch_size,), generator=self.streams["noise"])
        with torch.set_grad_enabled(grad):
            return kmodels.generate(self.generator, z, labels)

    def _augment_pair(self, real, fake):
        if self.augment_policy == "none":
            return real, fake
        params = kdata.draw_augment(fake.B, self.spec.image_size, self.streams["augment"])
        if real is not None:
            real = kdata.augment(real, self.augment_policy, params=params)
        return real, kdata.augment(fake, self.augment_policy, params=params)

    def _teacher_features(self, images, grad=False):
        with torch.set_grad_enabled(grad):
            return self.teacher.encode_images(knum.as_data(images))

    def d_update(self, real, teacher_real):
        """One discriminator update, return its bundle and AGKD output"""
        fake = self._sample_fake(real.B, grad=False)
        aug_real, aug_fake = self._augment_pair(real, fake)
        d_real = kmodels.discriminate(self.discriminator, aug_real, real.labels)
        d_fake = kmodels.discriminate(self.discriminator, aug_fake, fake.labels)
        adv_d = kadv.d_adv_loss(kadv.DiscriminatorScores(d_real.scores, d_fake.scores), self.d_kind)

        agkd_out = cgkd_terms = None
        teacher_fake = None
        if self.use_agkd or self.use_cgkd:
            teacher_fake = self._teacher_features(fake)
        if self.use_agkd:
            inputs = kagkd.AgkdInputs(teacher_real, teacher_fake, d_real.projected, d_fake.projected)
            agkd_out = kagkd.agkd_total(
                inputs, self.gate, weight=self.cfg["agkd"]["weight"], aggregate=self.cfg["agkd"]["aggregate"]
            )
            self.counters["gate_draws"] += 1
            self.counters["gate_open"] += int(agkd_out.gate_open)
        ccfg = self.cfg["cgkd"]
        if self.use_cgkd and ccfg["weight"] != 0:
            ct = kcgkd.build_correlation(teacher_fake, self.text_features, "teacher")
            cs = kcgkd.build_correlation(d_fake.projected, self.text_features, "student")
            cgkd_terms = (None, ccfg["weight"] * kcgkd.correlation_kd_loss(ct, cs))

        bundle = kadv.compose_objective(adv_d=adv_d, agkd=agkd_out, cgkd=cgkd_terms, weights=self.weights)
        _check_bundle(bundle, "d")
        self.opt_d.zero_grad()
        bundle.d_loss.backward()
        grad_norm = _grad_norm(self.discriminator.parameters())
        self.opt_d.step()
        return bundle, agkd_out, grad_norm

    def g_update(self, batch_size):
        """One generator update, return its bundle"""
        fake = self._sample_fake(batch_size, grad=True)
        _, aug_fake = self._augment_pair(None, fake)
        d_fake = kmodels.discriminate(self.discriminator, aug_fake, fake.labels)
        adv_g = kadv.g_adv_loss(d_fake.scores, self.g_kind)

        cgkd_terms = None
        if self.use_cgkd:
            ccfg = self.cfg["cgkd"]
            teacher_fake = self._teacher_features(fake, grad=True)
            student_fake = knum.FeatureBatch(d_fake.projected.data.detach())
            out = kcgkd.cgkd_total(
                teacher_fake,
                student_fake,
                self.text_features,
                weight=ccfg["weight"],
                pd_weight=ccfg["pd_weight"],
                ordered_pairs=ccfg["ordered_pairs"],
            )
            l_pd = ccfg["pd_weight"] * out.l_pd if ccfg["pd_weight"] != 0 else None
            l_kd = ccfg["weight"] * out.l_kd if ccfg["weight"] != 0 else None
            cgkd_terms = (l_pd, l_kd)

        bundle = kadv.compose_objective(adv_g=adv_g, cgkd=cgkd_terms, weights=self.weights)
        _check_bundle(bundle, "g")
        self.opt_g.zero_grad()
        bundle.g_loss.backward()
        grad_norm = _grad_norm(self.generator.parameters())
        self.opt_g.step()
        return bundle, grad_norm

    def train_step(self, real_batch):
        """Run one training step on a real batch and advance the step counter

        Parameters
        ----------
        real_batch: kdgan.models.ImageBatch

        Return
        ------
        StepMetrics
        """
        self.generator.train()
        self.discriminator.train()
        teacher_real = None
        if self.use_agkd:
            teacher_real = self._teacher_features(real_batch)

        components = {}
        extras = {}
        gates = []
        nd = self.cfg["train"]["d_steps_per_g_step"]

        def accumulate(target, name, value):
            target[name] = target.get(name, 0.0) + _as_float(value) / nd

        for _ in range(nd):
            bundle, agkd_out, d_norm = self.d_update(real_batch, teacher_real)
            for name, value in bundle.components.items():
                accumulate(components, name, value)
            accumulate(extras, "d/loss", bundle.d_loss)
            accumulate(extras, "d/grad_norm", d_norm)
            if agkd_out is not None:
                gates.append(agkd_out.gate_open)
                accumulate(extras, "agkd/l_kd", agkd_out.l_kd)
                accumulate(extras, "agkd/l_agg_raw", agkd_out.l_agg_raw)

        g_bundle, g_norm = self.g_update(real_batch.B)
        components.update({name: _as_float(value) for name, value in g_bundle.components.items()})
        extras["g/loss"] = _as_float(g_bundle.g_loss)
        extras["g/grad_norm"] = g_norm
        if gates:
            extras["agkd/gate_open"] = sum(gates) / len(gates)
        logger.debug(
            f"Step {self.step}: "
            + ", ".join(f"{name}={value:.4g}" for name, value in components.items())
        )
        metrics = StepMetrics(step=self.step, components=components, extras=extras, gate_open=gates)
        self.step += 1
        return metrics

    # %% Evaluation

    @property
    def reference(self):
        """Full dataset used as the evaluation reference"""
        if self._reference is None:
            if self.data_spec.fraction < 1:
                self._reference = kdata.load_subset(dataclasses.replace(self.data_spec, fraction=1.0))
            else:
                self._reference = self.dataset
        return self._reference

    def _features_in_chunks(self, images):
        chunk = self.cfg["train"]["batch_size"]
        feats = []
        with torch.no_grad():
            for start in range(0, images.shape[0], chunk):
                part = images[start : start + chunk].to(self.dtype)
                feats.append(knum.as_data(self.teacher.encode_images(part)).double())
        return torch.cat(feats)

    def generate_samples(self, num_samples, salt="eval"):
        """Generate images from the eval stream reseeded with `salt`"""
        gen = self.streams.reset("eval", salt)
        chunk = self.cfg["train"]["batch_size"]
        images = []
        self.generator.eval()
        with torch.no_grad():
            for start in range(0, num_samples, chunk):
                size = min(chunk, num_samples - start)
                z = kmodels.sample_noise(size, self.spec.latent_dim, gen, self.dtype)
                labels = None
                if self.spec.conditional:
                    labels = torch.randint(0, self.spec.num_classes, (size,), generator=gen)
                images.append(kmodels.generate(self.generator, z, labels).data)
        self.generator.train()
        return torch.cat(images)

    def evaluate(self):
        """Evaluation metrics of the current generator

        Return
        ------
        dict
            ``eval/teacher_fid``, ``eval/is_style``, ``eval/diversity_proxy`` and,
            on synthetic data, ``eval/mode_coverage``
        """
        ecfg = self.cfg["eval"]
        fake = self.generate_samples(ecfg["num_samples"])
        fake_feats = self._features_in_chunks(fake)
        if self._reference_stats is None:
            self._reference_stats = kmetrics.FeatureStats.from_features(
                self._features_in_chunks(self.reference.images)
            )
        out = {}
        out["eval/teacher_fid"] = kmetrics.frechet_distance(
            self._reference_stats, kmetrics.FeatureStats.from_features(fake_feats)
        )
        classifier = ecfg["classifier"]
        templates = self.reference.templates
        if classifier == "auto":
            classifier = "templates" if templates is not None else "zero_shot"
        if classifier == "templates":
            if templates is None:
                raise InvalidArgumentError("The template classifier requires a synthetic dataset")
            probs = kmetrics.template_probabilities(fake, templates)
        else:
            probs = kmetrics.zero_shot_probabilities(fake_feats, self.text_features, ecfg["logit_scale"])
        out["eval/is_style"] = kmetrics.inception_style_score(probs)
        out["eval/diversity_proxy"] = kmetrics.perceptual_diversity(
            fake_feats, ecfg["diversity_pairs"], seed=krng.derive_seed(self.seed, "diversity")
        )
        if templates is not None:
            covered, hist = kmetrics.mode_coverage(fake, templates)
            out["eval/mode_coverage"] = float(covered)
            logger.debug(f"Mode histogram at step {self.step}: {hist.tolist()}")
        logger.info(
            f"Evaluation at step {self.step}: " + ", ".join(f"{k[5:]}={v:.4g}" for k, v in out.items())
        )
        return out

    def teacher_probe_hash(self):
        probe = kteacher.make_probe(self.spec.image_shape, batch_size=8, dtype=self.dtype)
        with torch.no_grad():
            return kutil.tensor_hash(knum.as_data(self.teacher.encode_images(probe)))

    # %% Checkpoints

    def state_record(self):
        return kckpt.CheckpointRecord(
            step=self.step,
            g_state=self.generator.state_dict(),
            d_state=self.discriminator.state_dict(),
            opt_g_state=self.opt_g.state_dict(),
            opt_d_state=self.opt_d.state_dict(),
            rng_states=self.streams.state_dict(),
            config=kconf.flatten_config(self.cfg),
            config_hash=kconf.config_hash(self.cfg, exclude=kconf.RESUME_FREE_KEYS),
            dtype=str(self.dtype).replace("torch.", ""),
            counters=dict(self.counters),
        )

    def save(self, path):
        return kckpt.save_checkpoint(str(path), self.state_record())

    def load_record(self, record, check_config=True):
        """Restore the state from a :class:`~kdgan.checkpoint.CheckpointRecord`"""
        if check_config:
            expected = kconf.config_hash(self.cfg, exclude=kconf.RESUME_FREE_KEYS)
            if record.config_hash != expected:
                raise kckpt.CheckpointError(
                    "Checkpoint configuration differs from the current one beyond "
                    + ", ".join(kconf.RESUME_FREE_KEYS)
                )
        try:
            self.generator.load_state_dict(record.g_state)
            self.discriminator.load_state_dict(record.d_state)
            self.opt_g.load_state_dict(record.opt_g_state)
            self.opt_d.load_state_dict(record.opt_d_state)
        except (RuntimeError, ValueError, KeyError) as e:
            raise kckpt.CheckpointError(f"Checkpoint does not match the models: {e}") from e
        self.streams.load_state_dict(record.rng_states)
        self.gate.rng_stream = self.streams["gate"]
        self.step = record.step
        self.counters.update(record.counters)
        logger.info(f"Restored state at step {self.step}")
        return self


def train_step(state, real_batch):
    """Functional form of :meth:`Trainer.train_step`

    Return
    ------
    tuple(Trainer, StepMetrics)
    """
    metrics = state.train_step(real_batch)
    return state, metrics


def _due(step, every, last):
    return step == last or (every > 0 and step % every == 0)


def get_run_dir(cfg):
    return kconf.get_output_root(cfg) / cfg["run"]["name"]


def run_experiment(cfg, resume=None, run_dir=None):
    """Train a GAN and write the run artifacts

    Parameters
    ----------
    cfg: configobj.ConfigObj
    resume: str, None
        Checkpoint to resume from
    run_dir: str, None
        Defaults to :file:`{output_root}/{run.name}`

    Return
    ------
    pathlib.Path
        Run directory containing ``config.snapshot``, ``metrics.csv``,
        ``checkpoints/``, ``samples/``, ``summary.md`` and ``log/kdgan.log``
    """
    run_dir = pathlib.Path(run_dir) if run_dir is not None else get_run_dir(cfg)
    with klog.run_log(kutil.check_dir(run_dir / "log" / "kdgan.log")):
        return _run_experiment(cfg, resume, run_dir)


def _run_experiment(cfg, resume, run_dir):
    tstart = time.time()
    process = psutil.Process()
    peak_rss = process.memory_info().rss
    logger.info(f"Run directory: {run_dir}")
    kconf.write_snapshot(cfg, str(run_dir / "config.snapshot"))

    trainer = Trainer(cfg)
    writer = MetricsWriter(run_dir / "metrics.csv", trainer.seed)
    if resume:
        trainer.load_record(kckpt.load_checkpoint(str(resume)))
        writer.truncate(trainer.step)
    start_step = trainer.step
    tcfg = cfg["train"]
    steps = tcfg["steps"]
    if start_step > steps:
        raise InvalidArgumentError(f"Checkpoint step {start_step} is beyond the number of steps {steps}")
    teacher_hash = trainer.teacher_probe_hash()

    final_metrics = {}
    artifacts = {}
    if start_step == 0:
        final_metrics = trainer.evaluate()
        writer.add_values(0, final_metrics)
        writer.flush()

    batches = kdata.Prefetcher(
        trainer.dataset,
        trainer.sampler,
        start_step,
        steps,
        size=cfg["data"]["prefetch"],
        dtype=trainer.dtype,
        with_labels=trainer.spec.conditional,
    )
    try:
        for _, batch in batches:
            try:
                metrics = trainer.train_step(batch)
            except NumericFailureError:
                path = trainer.save(run_dir / "checkpoints" / "ckpt-failure.npz")
                logger.error(f"Training aborted at step {trainer.step}, state saved to {path}")
                raise
            writer.add(metrics.rows(trainer.seed))
            step = trainer.step
            if step % tcfg["log_every"] == 0 or step == steps:
                peak_rss = max(peak_rss, process.memory_info().rss)
                logger.info(
                    f"Step {step}/{steps}: "
                    + ", ".join(f"{name}={value:.4g}" for name, value in metrics.components.items())
                )
                writer.flush()
            if _due(step, tcfg["eval_every"], steps):
                final_metrics = trainer.evaluate()
                writer.add_values(step, final_metrics)
                writer.flush()
            if _due(step, tcfg["checkpoint_every"], steps):
                artifacts["last checkpoint"] = trainer.save(run_dir / "checkpoints" / f"ckpt-{step:06d}.npz")
            if _due(step, tcfg["sample_every"], steps):
                artifacts["last sample grid"] = kplot.save_sample_grid(
                    trainer.generate_samples(kplot.GRID_SIZE**2, salt="grid"),
                    run_dir / "samples" / f"grid-{step:06d}.png",
                )
    finally:
        writer.flush()
        batches.close()

    if start_step == steps:
        if not final_metrics:
            final_metrics = trainer.evaluate()
        artifacts["last checkpoint"] = trainer.save(run_dir / "checkpoints" / f"ckpt-{steps:06d}.npz")

    if trainer.teacher_probe_hash() != teacher_hash:
        raise kteacher.TeacherError("Teacher outputs changed during training")

    peak_rss = max(peak_rss, process.memory_info().rss)
    artifacts["metrics"] = str(run_dir / "metrics.csv")
    gate_rate = None
    if trainer.counters["gate_draws"]:
        gate_rate = trainer.counters["gate_open"] / trainer.counters["gate_draws"]
    summary = krender.render_template(
        "summary.md",
        dict(
            name=cfg["run"]["name"],
            run_dir=run_dir,
            seed=trainer.seed,
            preset=cfg["run"]["preset"],
            steps=steps,
            start_step=start_step,
            config_hash=kconf.config_hash(cfg),
            precision=cfg["run"]["precision"],
            wall_time=time.time() - tstart,
            peak_rss_mb=peak_rss / 2**20,
            agkd=cfg["agkd"],
            cgkd=cfg["cgkd"],
            loss=cfg["loss"],
            gate_open_rate=gate_rate,
            metrics=[{"metric": name[5:], "value": value} for name, value in final_metrics.items()],
            artifacts=artifacts,
        ),
    )
    summary_path = kutil.check_dir(run_dir / "summary.md")
    with open(summary_path, "w") as f:
        f.write(summary)
    logger.info(f"Run completed: {run_dir}")
    return run_dir


def evaluate_checkpoint(ckpt, data_cfg=None):
    """Evaluate a checkpoint and append the metrics to :file:`{run_dir}/eval.csv`

    Parameters
    ----------
    ckpt: str
        Checkpoint path, inside :file:`{run_dir}/checkpoints/`
    data_cfg: str, None
        Configuration file whose ``[data]`` section replaces the one of the checkpoint

    Return
    ------
    dict
    """
    record = kckpt.load_checkpoint(str(ckpt))
    overrides = None
    if data_cfg is not None:
        data_section = kconf.load_config(data_cfg)["data"]
        overrides = {f"data.{key}": value for key, value in data_section.items() if value is not None}
    flat = {key: value for key, value in record.config.items() if value is not None}
    cfg = kconf.load_config(flat, overrides=overrides)
    trainer = Trainer(cfg)
    trainer.load_record(record, check_config=False)
    values = trainer.evaluate()
    run_dir = pathlib.Path(ckpt).resolve().parent.parent
    writer = MetricsWriter(run_dir / "eval.csv", trainer.seed)
    writer.add_values(record.step, values)
    writer.flush()
    logger.info(f"Wrote evaluation metrics: {writer.path}")
    return values


def run_seeds(cfg, seeds):
    """Run one experiment per master seed and summarize the final metrics

    Writes :file:`{output_root}/{name}-seeds/seeds_summary.csv` with the
    mean and standard deviation of each final evaluation metric.

    Return
    ------
    pandas.DataFrame
    """
    name = cfg["run"]["name"]
    records = []
    for seed in seeds:
        scfg = copy.deepcopy(cfg)
        scfg["run"]["master_seed"] = int(seed)
        scfg["run"]["name"] = f"{name}-seed{seed}"
        run_dir = run_experiment(scfg)
        df = pd.read_csv(run_dir / "metrics.csv")
        final = df[df["name"].str.startswith("eval/") & (df["step"] == df["step"].max())]
        for _, row in final.iterrows():
            records.append({"seed": int(seed), "name": row["name"], "value": row["value"]})
    df = pd.DataFrame(records)
    summary = df.groupby("name")["value"].agg(["mean", "std", "count"]).reset_index()
    path = kutil.check_dir(kconf.get_output_root(cfg) / f"{name}-seeds" / "seeds_summary.csv")
    summary.to_csv(path, index=False)
    logger.info(f"Wrote multi-seed summary: {path}")
    for _, row in summary.iterrows():
        logger.info(f"{row['name']}: {row['mean']:.4g} ± {row['std']:.2g} over {int(row['count'])} seeds")
    return summary
