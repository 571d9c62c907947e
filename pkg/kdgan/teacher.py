#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Frozen vision-language teachers

A teacher provides an image encoder and a text encoder that share a feature
space of dimension ``M``. Both outputs are row L2-normalized at the teacher
boundary. The :class:`MockTeacher` is a deterministic stand-in used offline;
real models plug in through :func:`teacher_from_config` and an adapter.
"""
import abc
import dataclasses
import hashlib
import logging
import string

import torch

from . import InvalidArgumentError, KdganError
from . import ext as kext
from . import numerics as knum

logger = logging.getLogger(__name__)

DEFAULT_PROMPT = "a photo of a {label}"

#: Maximal cosine similarity allowed between two distinct mock text embeddings
MAX_TEXT_COSINE = 0.99

#: Salted redraws allowed per mock text embedding
MAX_TEXT_DRAWS = 1000


class TeacherError(KdganError):
    pass


class TeacherModel(abc.ABC):
    """Interface of a frozen teacher"""

    #: Feature dimension ``M``
    feature_dim = None

    @abc.abstractmethod
    def encode_images(self, images):
        """Encode an image batch ``[B, C, H, W]`` to a :class:`~kdgan.numerics.FeatureBatch`"""

    @abc.abstractmethod
    def encode_texts(self, texts):
        """Encode a list of K strings to a :class:`~kdgan.numerics.TextFeatureSet`"""


@dataclasses.dataclass(frozen=True)
class MockTeacherSpec:
    seed: int = 1234
    M: int = 32
    hidden_dim: int = 64
    input_shape: tuple = (1, 8, 8)


@dataclasses.dataclass(frozen=True)
class PromptTemplate:
    """A prompt with a single ``{label}`` placeholder"""

    template: str = DEFAULT_PROMPT

    def __post_init__(self):
        fields = [name for _, name, _, _ in string.Formatter().parse(self.template) if name is not None]
        if fields != ["label"]:
            raise InvalidArgumentError(
                f"Prompt template must contain exactly one {{label}} placeholder: {self.template!r}"
            )

    def format(self, label):
        return self.template.format(label=label)


def _seeded_normal(shape, key, scale=1.0):
    seed = int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little") & (2**63 - 1)
    gen = torch.Generator()
    gen.manual_seed(seed)
    return torch.randn(shape, generator=gen, dtype=torch.float64) * scale


class MockTeacher(torch.nn.Module, TeacherModel):
    """Two-layer random projection image encoder with a hashed text encoder

    Images are flattened, projected to `hidden_dim`, squashed with a
    :func:`torch.tanh` and projected to `M`. Weights derive from the seed
    only and never require gradients.
    """

    def __init__(self, spec):
        super().__init__()
        if spec.M < 2:
            raise InvalidArgumentError(f"Teacher feature dimension must be at least 2: {spec.M}")
        if len(spec.input_shape) != 3 or min(spec.input_shape) < 1:
            raise InvalidArgumentError(f"Invalid teacher input shape: {spec.input_shape}")
        if spec.hidden_dim < 1:
            raise InvalidArgumentError(f"Invalid teacher hidden dimension: {spec.hidden_dim}")
        self.spec = spec
        self.feature_dim = spec.M
        self.input_shape = tuple(spec.input_shape)
        nin = 1
        for size in self.input_shape:
            nin *= size
        key = f"mock-teacher:{spec.seed}"
        self.register_buffer("w1", _seeded_normal((spec.hidden_dim, nin), key + ":w1", nin**-0.5))
        self.register_buffer("b1", _seeded_normal((spec.hidden_dim,), key + ":b1", 0.5))
        self.register_buffer(
            "w2", _seeded_normal((spec.M, spec.hidden_dim), key + ":w2", spec.hidden_dim**-0.5)
        )
        self.register_buffer("b2", _seeded_normal((spec.M,), key + ":b2", 0.5))
        self._text_cache = {}
        self.eval()

    def forward(self, images):
        x = knum.as_data(images)
        if tuple(x.shape[1:]) != self.input_shape:
            raise InvalidArgumentError(
                f"Teacher expects images of shape {self.input_shape}, got {tuple(x.shape[1:])}"
            )
        x = x.reshape(x.shape[0], -1)
        dtype = x.dtype
        h = torch.tanh(torch.nn.functional.linear(x, self.w1.to(dtype), self.b1.to(dtype)))
        return torch.nn.functional.linear(h, self.w2.to(dtype), self.b2.to(dtype))

    def encode_images(self, images):
        return knum.FeatureBatch(knum.row_l2_normalize(self(images)))

    def _text_vectors(self, texts):
        """Unit vectors of distinct texts, pairwise cosine below :data:`MAX_TEXT_COSINE`

        Texts are resolved in sorted order. A text whose hashed draw is too
        close to an already resolved one is redrawn with a salted key, so the
        vectors only depend on the seed and the set of texts.
        """
        unique = tuple(sorted(set(texts)))
        if unique not in self._text_cache:
            vectors = {}
            for text in unique:
                key = f"mock-teacher:{self.spec.seed}:text:{text}"
                for attempt in range(MAX_TEXT_DRAWS):
                    salted = key if attempt == 0 else f"{key}:{attempt}"
                    vec = knum.row_l2_normalize(_seeded_normal((1, self.feature_dim), salted))[0]
                    if all(float(vec @ other) < MAX_TEXT_COSINE for other in vectors.values()):
                        break
                else:
                    raise TeacherError(
                        f"Can't separate {len(unique)} mock text embeddings in dimension {self.feature_dim}; "
                        "increase the teacher feature dimension"
                    )
                if attempt:
                    logger.debug(f"Redrew the mock text embedding of {text!r} {attempt} time(s)")
                vectors[text] = vec
            self._text_cache[unique] = vectors
        return self._text_cache[unique]

    def encode_texts(self, texts):
        texts = list(texts)
        if not texts:
            raise InvalidArgumentError("Cannot encode an empty list of texts")
        vectors = self._text_vectors(texts)
        return knum.TextFeatureSet(torch.stack([vectors[text] for text in texts]), texts)


def build_mock_teacher(spec):
    """Build a frozen :class:`MockTeacher` from a :class:`MockTeacherSpec`"""
    teacher = MockTeacher(spec)
    logger.debug(f"Built mock teacher: seed={spec.seed} M={spec.M} hidden={spec.hidden_dim}")
    return teacher


def texts_from_labels(labels, tpl=None):
    """Build one prompt per class label, preserving order

    Parameters
    ----------
    labels: list(str)
        Unique class names
    tpl: PromptTemplate, str, None

    Return
    ------
    list(str)
    """
    if tpl is None:
        tpl = PromptTemplate()
    elif isinstance(tpl, str):
        tpl = PromptTemplate(tpl)
    labels = list(labels)
    if not labels:
        raise InvalidArgumentError("No label to build texts from")
    seen = set()
    for label in labels:
        if label in seen:
            raise InvalidArgumentError(f"Duplicate label: {label}")
        seen.add(label)
    return [tpl.format(label) for label in labels]


def freeze_check(t, probe):
    """Whether two consecutive encodings of a probe are bit-identical"""
    with torch.no_grad():
        first = knum.as_data(t.encode_images(probe)).clone()
        second = knum.as_data(t.encode_images(probe))
    return bool(torch.equal(first, second))


def make_probe(input_shape, batch_size=4, seed=0, dtype=torch.float64):
    """Deterministic probe images in [-1, 1]"""
    gen = torch.Generator()
    gen.manual_seed(seed)
    return torch.rand((batch_size,) + tuple(input_shape), generator=gen, dtype=dtype) * 2 - 1


def check_teacher(teacher, input_shape):
    """Check that a teacher honors the :class:`TeacherModel` contract"""
    for attr in "feature_dim", "encode_images", "encode_texts":
        if getattr(teacher, attr, None) is None:
            raise TeacherError(f"Teacher {teacher!r} lacks the {attr!r} attribute")
    probe = make_probe(input_shape, dtype=torch.float32)
    feats = knum.as_data(teacher.encode_images(probe))
    if feats.shape != (probe.shape[0], teacher.feature_dim):
        raise TeacherError(f"Teacher returned features of shape {tuple(feats.shape)}")
    if not freeze_check(teacher, probe):
        raise TeacherError("Teacher is not frozen: repeated encodings differ")
    return teacher


def teacher_from_config(cfg, input_shape):
    """Get a teacher from the ``[teacher]`` configuration section

    Parameters
    ----------
    cfg: dict
        The ``[teacher]`` section
    input_shape: tuple
        Image shape ``(C, H, W)``

    Return
    ------
    TeacherModel
    """
    kind = cfg["kind"]
    if kind == "mock":
        teacher = build_mock_teacher(
            MockTeacherSpec(
                seed=cfg["seed"],
                M=cfg["feature_dim"],
                hidden_dim=cfg["hidden_dim"],
                input_shape=tuple(input_shape),
            )
        )
    elif kind == "external":
        if not cfg["adapter"]:
            raise TeacherError("An external teacher requires the teacher.adapter configuration key")
        factory = kext.load_teacher_adapter(cfg["adapter"])
        logger.info(f"Loaded teacher adapter: {cfg['adapter']}")
        teacher = factory(
            feature_dim=cfg["feature_dim"],
            checkpoint_path=cfg["checkpoint_path"],
            input_shape=tuple(input_shape),
        )
        if teacher.feature_dim != cfg["feature_dim"]:
            raise TeacherError(
                f"Adapter teacher has feature dimension {teacher.feature_dim}, "
                f"configuration says {cfg['feature_dim']}"
            )
        check_teacher(teacher, input_shape)
    else:
        raise TeacherError(f"Invalid teacher kind: {kind}")
    return teacher
