#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Datasets, seeded subsets, augmentation and batch iteration

Supported formats:

``image_folder``
    One sub-directory per class: :file:`{root}/{class_name}/*.png`.
``packed_binary``
    One or more :file:`*.bin` files of fixed size records. Each record is
    one label byte followed by ``C*H*W`` pixel bytes, stored channel by
    channel then row by row (the CIFAR-10 binary layout for 32x32 RGB
    images: 1 + 3072 bytes).
``synthetic_modes``
    Rendered square templates with a small seeded jitter, for mode
    coverage checks.
"""
import dataclasses
import glob
import hashlib
import logging
import math
import os
import queue
import threading

import matplotlib.image as mpimg
import numpy as np
import torch
import torch.nn.functional as F

from . import InvalidArgumentError, KdganError
from . import models as kmodels
from . import rng as krng

logger = logging.getLogger(__name__)

FORMATS = ("image_folder", "packed_binary", "synthetic_modes")
AUGMENT_POLICIES = ("none", "basic")

#: Maximal translation as a fraction of the image size
TRANSLATION_RATIO = 0.125

#: Cutout square size as a fraction of the image size
CUTOUT_RATIO = 0.5


class DatasetError(KdganError, OSError):
    pass


@dataclasses.dataclass(frozen=True)
class SyntheticModesSpec:
    num_modes: int = 8
    image_size: int = 8
    samples_per_mode: int = 100
    seed: int = 0
    channels: int = 1
    jitter: float = 0.1


@dataclasses.dataclass(frozen=True)
class DatasetSpec:
    """Dataset location, format and subset"""

    root: str = None
    format: str = "synthetic_modes"
    fraction: float = 1.0
    subset_seed: int = 0
    class_names: tuple = ()
    image_size: int = 8
    channels: int = 1
    synthetic: SyntheticModesSpec = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InvalidArgumentError(f"Invalid dataset format: {self.format}. Choose one of: {FORMATS}")
        if not 0 < self.fraction <= 1:
            raise InvalidArgumentError(f"Dataset fraction must be in (0, 1]: {self.fraction}")
        if self.format != "synthetic_modes" and not self.root:
            raise InvalidArgumentError(f"The {self.format} format requires a root path")
        object.__setattr__(self, "class_names", tuple(self.class_names or ()))

    @classmethod
    def from_config(cls, cfg):
        dcfg = cfg["data"]
        mcfg = cfg["model"]
        return cls(
            root=None if dcfg["root"] is None else str(dcfg["root"]),
            format=dcfg["format"],
            fraction=dcfg["fraction"],
            subset_seed=dcfg["subset_seed"],
            class_names=dcfg["class_names"] or (),
            image_size=mcfg["image_size"],
            channels=mcfg["channels"],
            synthetic=SyntheticModesSpec(
                num_modes=dcfg["num_modes"],
                image_size=mcfg["image_size"],
                samples_per_mode=dcfg["samples_per_mode"],
                seed=dcfg["synthetic_seed"],
                channels=mcfg["channels"],
                jitter=dcfg["jitter"],
            ),
        )


@dataclasses.dataclass(frozen=True)
class ImageDataset:
    """Immutable in-memory dataset

    Attributes
    ----------
    images: torch.Tensor
        ``[N, C, H, W]`` float64 in [-1, 1]
    labels: torch.Tensor
        ``[N]`` class indices
    class_names: tuple(str)
    indices: numpy.ndarray
        Positions in the full dataset
    templates: torch.Tensor, None
        Mode templates ``[num_modes, C, H, W]`` of synthetic datasets
    """

    images: torch.Tensor
    labels: torch.Tensor
    class_names: tuple
    indices: np.ndarray = None
    templates: torch.Tensor = None

    def __post_init__(self):
        if self.indices is None:
            object.__setattr__(self, "indices", np.arange(len(self.labels)))
        if len(self.labels) and int(self.labels.max()) >= len(self.class_names):
            raise DatasetError(
                f"Label {int(self.labels.max())} has no class name among {len(self.class_names)}"
            )

    def __len__(self):
        return self.images.shape[0]

    @property
    def num_classes(self):
        return len(self.class_names)

    @property
    def image_shape(self):
        return tuple(self.images.shape[1:])

    def subset(self, positions):
        positions = np.asarray(positions, dtype="int64")
        tpos = torch.as_tensor(positions)
        return dataclasses.replace(
            self, images=self.images[tpos], labels=self.labels[tpos], indices=self.indices[positions]
        )

    def class_counts(self):
        return np.bincount(self.labels.numpy(), minlength=self.num_classes)

    def index_hash(self):
        return hashlib.sha256(np.ascontiguousarray(self.indices, dtype="<i8").tobytes()).hexdigest()

    def pixel_hash(self):
        return hashlib.sha256(self.images.numpy().tobytes()).hexdigest()

    def batch(self, positions, dtype=torch.float32, with_labels=False):
        """Get an :class:`~kdgan.models.ImageBatch`"""
        tpos = torch.as_tensor(np.asarray(positions, dtype="int64"))
        return kmodels.ImageBatch(self.images[tpos].to(dtype), self.labels[tpos] if with_labels else None)


# %% Subsets


def stratified_indices(labels, fraction, seed, num_classes=None):
    """Seeded stratified selection of ``round(fraction * N)`` positions

    Each class receives the floor of its share, then the remaining slots go
    to the classes with the largest fractional parts.

    Return
    ------
    numpy.ndarray
        Sorted positions
    """
    labels = np.asarray(labels)
    n = len(labels)
    if fraction >= 1:
        return np.arange(n)
    num_classes = int(labels.max()) + 1 if num_classes is None else num_classes
    sizes = np.bincount(labels, minlength=num_classes)
    shares = fraction * sizes
    quotas = np.floor(shares).astype("int64")
    extra = int(math.floor(fraction * n + 0.5)) - int(quotas.sum())
    if extra > 0:
        order = np.lexsort((np.arange(num_classes), -(shares - quotas)))
        quotas[order[:extra]] += 1
    rng = np.random.default_rng(krng.derive_seed(seed, "subset"))
    selected = []
    for icls in range(num_classes):
        members = np.flatnonzero(labels == icls)
        if quotas[icls]:
            selected.append(rng.choice(members, quotas[icls], replace=False))
    return np.sort(np.concatenate(selected)) if selected else np.array([], dtype="int64")


def _subset(dataset, spec):
    positions = stratified_indices(
        dataset.labels.numpy(), spec.fraction, spec.subset_seed, dataset.num_classes
    )
    if not len(positions):
        raise DatasetError(f"Empty subset for fraction {spec.fraction}")
    subset = dataset.subset(positions)
    empty = [name for name, count in zip(dataset.class_names, subset.class_counts()) if count == 0]
    if empty:
        logger.warning("Degenerate dataset: empty classes after subsetting: " + ", ".join(empty))
    logger.info(f"Selected {len(subset)}/{len(dataset)} samples (fraction={spec.fraction:g})")
    return subset


# %% Readers


def uint8_to_unit(pixels):
    """Map bytes in [0, 255] to floats in [-1, 1]"""
    return torch.as_tensor(np.asarray(pixels, dtype="float64") / 127.5 - 1.0)


def unit_to_uint8(images):
    """Map floats in [-1, 1] to bytes"""
    data = images.detach().cpu().double().numpy() if isinstance(images, torch.Tensor) else np.asarray(images)
    return np.clip(np.round((data + 1) * 127.5), 0, 255).astype("uint8")


def read_packed_binary(root, channels=3, image_size=32, class_names=None):
    """Read records from a file or from the sorted :file:`*.bin` files of a directory"""
    paths = sorted(glob.glob(os.path.join(root, "*.bin"))) if os.path.isdir(root) else [root]
    if not paths or not os.path.exists(paths[0]):
        raise DatasetError(f"No packed binary file found: {root}")
    npix = channels * image_size * image_size
    records = []
    for path in paths:
        try:
            raw = np.fromfile(path, dtype="uint8")
        except OSError as e:
            raise DatasetError(f"Can't read packed binary file {path}: {e}") from e
        if raw.size % (npix + 1):
            raise DatasetError(f"Size of {path} is not a multiple of the record size {npix + 1}")
        records.append(raw.reshape(-1, npix + 1))
    records = np.concatenate(records)
    labels = records[:, 0].astype("int64")
    if class_names is None or not len(class_names):
        class_names = [f"class{i}" for i in range(int(labels.max()) + 1)]
    images = uint8_to_unit(records[:, 1:].reshape(-1, channels, image_size, image_size))
    logger.debug(f"Read {len(labels)} records from {len(paths)} packed binary file(s)")
    return ImageDataset(images, torch.as_tensor(labels), tuple(class_names))


def write_packed_binary(path, images, labels):
    """Write uint8 images ``[N, C, H, W]`` and their labels as packed records"""
    images = np.asarray(images, dtype="uint8")
    labels = np.asarray(labels, dtype="uint8").reshape(-1, 1)
    records = np.concatenate([labels, images.reshape(len(images), -1)], axis=1)
    records.tofile(path)
    return path


def _read_png(path, channels):
    try:
        arr = np.asarray(mpimg.imread(path), dtype="float64")
    except (OSError, ValueError, SyntaxError) as e:
        raise DatasetError(f"Can't read image {path}: {e}") from e
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.shape[-1] == 4:
        arr = arr[..., :3]
    if channels == 1 and arr.shape[-1] == 3:
        arr = arr.mean(axis=-1, keepdims=True)
    elif channels == 3 and arr.shape[-1] == 1:
        arr = np.repeat(arr, 3, axis=-1)
    if arr.max() > 1:
        arr = arr / 255.0
    return arr.transpose(2, 0, 1) * 2 - 1


def read_image_folder(root, channels=3, image_size=32, class_names=None):
    """Read :file:`{root}/{class_name}/*.png` images"""
    if not os.path.isdir(root):
        raise DatasetError(f"Image folder not found: {root}")
    if not class_names:
        class_names = sorted(name for name in os.listdir(root) if os.path.isdir(os.path.join(root, name)))
    images, labels = [], []
    for icls, name in enumerate(class_names):
        paths = sorted(glob.glob(os.path.join(root, name, "*.png")))
        if not paths:
            logger.warning(f"No image for class {name} in {root}")
        for path in paths:
            arr = _read_png(path, channels)
            if arr.shape != (channels, image_size, image_size):
                raise DatasetError(
                    f"Image {path} has shape {arr.shape}, expected {(channels, image_size, image_size)}"
                )
            images.append(arr)
            labels.append(icls)
    if not images:
        raise DatasetError(f"No image found in {root}")
    return ImageDataset(
        torch.as_tensor(np.stack(images)), torch.as_tensor(labels, dtype=torch.long), tuple(class_names)
    )


def make_synthetic_modes(spec):
    """Render jittered square templates

    Mode ``k`` lights up the ``k``-th cell of a ``ceil(sqrt(num_modes))``
    grid on a dark background, so templates are disjoint.

    Parameters
    ----------
    spec: SyntheticModesSpec

    Return
    ------
    ImageDataset
        Samples ordered by mode, with templates attached
    """
    if spec.num_modes < 2:
        raise InvalidArgumentError(f"At least 2 modes are required: {spec.num_modes}")
    if spec.samples_per_mode < 1:
        raise InvalidArgumentError(f"At least 1 sample per mode is required: {spec.samples_per_mode}")
    ngrid = math.ceil(math.sqrt(spec.num_modes))
    cell = spec.image_size // ngrid
    if cell < 1:
        raise InvalidArgumentError(f"Images of size {spec.image_size} can't hold {spec.num_modes} modes")
    templates = -np.ones((spec.num_modes, spec.channels, spec.image_size, spec.image_size))
    for k in range(spec.num_modes):
        row, col = divmod(k, ngrid)
        templates[k, :, row * cell : (row + 1) * cell, col * cell : (col + 1) * cell] = 1
    rng = np.random.default_rng(krng.derive_seed(spec.seed, "synthetic"))
    images = np.repeat(templates, spec.samples_per_mode, axis=0)
    images = np.clip(images + spec.jitter * rng.standard_normal(images.shape), -1, 1)
    labels = np.repeat(np.arange(spec.num_modes), spec.samples_per_mode)
    return ImageDataset(
        torch.as_tensor(images),
        torch.as_tensor(labels),
        tuple(f"mode{k}" for k in range(spec.num_modes)),
        templates=torch.as_tensor(templates),
    )


def nearest_template(images, templates):
    """Index of the nearest template in L2 distance for each image"""
    x = torch.as_tensor(images).detach().double().flatten(1)
    t = torch.as_tensor(templates).double().flatten(1)
    return torch.cdist(x, t).argmin(dim=1)


def load_subset(spec):
    """Load a dataset and select its seeded stratified subset

    Parameters
    ----------
    spec: DatasetSpec

    Return
    ------
    ImageDataset
    """
    if spec.format == "synthetic_modes":
        synth = spec.synthetic or SyntheticModesSpec(image_size=spec.image_size, channels=spec.channels)
        dataset = make_synthetic_modes(synth)
        if spec.class_names:
            if len(spec.class_names) != synth.num_modes:
                raise InvalidArgumentError(
                    f"Got {len(spec.class_names)} class names for {synth.num_modes} synthetic modes"
                )
            dataset = dataclasses.replace(dataset, class_names=spec.class_names)
    elif spec.format == "packed_binary":
        dataset = read_packed_binary(spec.root, spec.channels, spec.image_size, spec.class_names)
    else:
        dataset = read_image_folder(spec.root, spec.channels, spec.image_size, spec.class_names)
    logger.info(f"Loaded {spec.format} dataset: {len(dataset)} samples, {dataset.num_classes} classes")
    return _subset(dataset, spec)


# %% Augmentation


@dataclasses.dataclass(frozen=True)
class AugmentParams:
    """Per-sample translations and cutout offsets of one draw"""

    shift_x: torch.Tensor
    shift_y: torch.Tensor
    offset_x: torch.Tensor
    offset_y: torch.Tensor


def draw_augment(batch_size, image_size, generator):
    """Draw the parameters of the basic policy from a random stream"""
    shift = int(image_size * TRANSLATION_RATIO)
    size = int(image_size * CUTOUT_RATIO + 0.5)

    def randint(low, high):
        return torch.randint(low, high, (batch_size, 1, 1), generator=generator)

    return AugmentParams(
        shift_x=randint(-shift, shift + 1),
        shift_y=randint(-shift, shift + 1),
        offset_x=randint(0, image_size + (1 - size % 2)),
        offset_y=randint(0, image_size + (1 - size % 2)),
    )


def _translate(x, params):
    B, _, H, W = x.shape
    grid_b, grid_x, grid_y = torch.meshgrid(torch.arange(B), torch.arange(H), torch.arange(W), indexing="ij")
    grid_x = torch.clamp(grid_x + params.shift_x + 1, 0, H + 1)
    grid_y = torch.clamp(grid_y + params.shift_y + 1, 0, W + 1)
    x_pad = F.pad(x, [1, 1, 1, 1])
    return x_pad.permute(0, 2, 3, 1)[grid_b, grid_x, grid_y].permute(0, 3, 1, 2).contiguous()


def _cutout(x, params):
    B, _, H, W = x.shape
    size = int(H * CUTOUT_RATIO + 0.5), int(W * CUTOUT_RATIO + 0.5)
    grid_b, grid_x, grid_y = torch.meshgrid(
        torch.arange(B), torch.arange(size[0]), torch.arange(size[1]), indexing="ij"
    )
    grid_x = torch.clamp(grid_x + params.offset_x - size[0] // 2, min=0, max=H - 1)
    grid_y = torch.clamp(grid_y + params.offset_y - size[1] // 2, min=0, max=W - 1)
    mask = torch.ones(B, H, W, dtype=x.dtype)
    mask[grid_b, grid_x, grid_y] = 0
    return x * mask.unsqueeze(1)


def augment(batch, policy="none", generator=None, params=None):
    """Differentiable augmentation

    Parameters
    ----------
    batch: ImageBatch
    policy: {"none", "basic"}
        ``basic`` translates by at most 1/8 of the size with zero padding,
        then zeroes a square of half the size
    generator: torch.Generator
        Stream used to draw `params` when not given
    params: AugmentParams
        Reuse a draw, to transform a real and a fake batch identically

    Return
    ------
    ImageBatch
    """
    if policy not in AUGMENT_POLICIES:
        raise InvalidArgumentError(
            f"Invalid augmentation policy: {policy}. Choose one of: {AUGMENT_POLICIES}"
        )
    if policy == "none":
        return batch
    x = batch.data
    if params is None:
        if generator is None:
            raise InvalidArgumentError("Augmentation requires a random stream or parameters")
        params = draw_augment(x.shape[0], x.shape[2], generator)
    x = _cutout(_translate(x, params), params)
    return kmodels.ImageBatch(x, batch.labels)


# %% Batches


class BatchSampler:
    """Positions of the batch of a given step

    Each epoch visits a permutation derived from the master seed and the
    epoch number, so the batch of a step needs no iteration state.
    """

    def __init__(self, size, batch_size, streams):
        if size < 1:
            raise DatasetError("Can't sample batches from an empty dataset")
        if batch_size < 1:
            raise InvalidArgumentError(f"Invalid batch size: {batch_size}")
        self.size = size
        self.batch_size = batch_size
        self.streams = streams
        self._perms = {}

    def permutation(self, epoch):
        if epoch not in self._perms:
            if len(self._perms) > 4:
                self._perms.pop(min(self._perms))
            self._perms[epoch] = self.streams.numpy_rng("shuffle", epoch).permutation(self.size)
        return self._perms[epoch]

    def indices(self, step):
        start = step * self.batch_size
        out = np.empty(self.batch_size, dtype="int64")
        for i, k in enumerate(range(start, start + self.batch_size)):
            out[i] = self.permutation(k // self.size)[k % self.size]
        return out


class Prefetcher:
    """Iterate over ``(step, ImageBatch)`` with a background worker

    The worker fills a bounded queue; with ``size=0`` batches are built in
    the calling thread.
    """

    def __init__(self, dataset, sampler, start, stop, size=2, dtype=torch.float32, with_labels=False):
        self.dataset = dataset
        self.sampler = sampler
        self.start = start
        self.stop = stop
        self.size = size
        self.dtype = dtype
        self.with_labels = with_labels
        self._stop_event = threading.Event()
        self._queue = None
        self._thread = None

    def _make(self, step):
        return self.dataset.batch(self.sampler.indices(step), self.dtype, self.with_labels)

    def _work(self):
        for step in range(self.start, self.stop):
            try:
                item = (step, self._make(step))
            except Exception as e:
                item = e
            while not self._stop_event.is_set():
                try:
                    self._queue.put(item, timeout=0.1)
                    break
                except queue.Full:
                    continue
            if self._stop_event.is_set() or isinstance(item, Exception):
                return

    def __iter__(self):
        if self.size <= 0:
            for step in range(self.start, self.stop):
                yield step, self._make(step)
            return
        self._queue = queue.Queue(maxsize=self.size)
        self._thread = threading.Thread(target=self._work, name="kdgan-prefetch", daemon=True)
        self._thread.start()
        try:
            for _ in range(self.start, self.stop):
                item = self._queue.get()
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            self.close()

    def close(self):
        self._stop_event.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
