#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Versioned checkpoint archives

A checkpoint is a :func:`numpy.savez` archive of named arrays:

``metadata``
    0-d unicode array holding a JSON document with ``format_version``,
    ``step``, ``config`` (flat dotted keys), ``config_hash``, ``dtype``,
    the optimizer hyperparameters and run ``counters``.
``g/<name>``, ``d/<name>``
    Generator and discriminator state entries, projection included.
``opt_g/<index>/<key>``, ``opt_d/<index>/<key>``
    Adam moment estimates and step counts per parameter index.
``rng/<stream>``
    :class:`torch.Generator` states as uint8 arrays.

Arrays keep their dtype so that a float64 run resumes bit-identically.
"""
import dataclasses
import json
import logging
import os

import numpy as np
import torch

from . import KdganError
from . import util as kutil

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class CheckpointError(KdganError):
    pass


@dataclasses.dataclass
class CheckpointRecord:
    step: int
    g_state: dict
    d_state: dict
    opt_g_state: dict
    opt_d_state: dict
    rng_states: dict
    config: dict
    config_hash: str
    dtype: str = "float32"
    counters: dict = dataclasses.field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def _to_numpy(tensor):
    return tensor.detach().cpu().numpy()


def _pack_optimizer(prefix, state_dict, arrays):
    for index, pstate in state_dict["state"].items():
        for key, value in pstate.items():
            arrays[f"{prefix}/{index}/{key}"] = _to_numpy(torch.as_tensor(value))
    return state_dict["param_groups"]


def _unpack_optimizer(prefix, archive, param_groups):
    state = {}
    for name in archive.files:
        if name.startswith(prefix + "/"):
            _, index, key = name.split("/", 2)
            state.setdefault(int(index), {})[key] = torch.from_numpy(archive[name].copy())
    return {"state": state, "param_groups": param_groups}


def save_checkpoint(path, record):
    """Write a :class:`CheckpointRecord` atomically

    Return
    ------
    str
        The checkpoint path
    """
    path = kutil.check_dir(path)
    arrays = {}
    for prefix, state in ("g", record.g_state), ("d", record.d_state):
        for name, value in state.items():
            arrays[f"{prefix}/{name}"] = _to_numpy(value)
    groups_g = _pack_optimizer("opt_g", record.opt_g_state, arrays)
    groups_d = _pack_optimizer("opt_d", record.opt_d_state, arrays)
    for name, value in record.rng_states.items():
        arrays[f"rng/{name}"] = _to_numpy(value)
    metadata = {
        "format_version": record.format_version,
        "step": record.step,
        "config": record.config,
        "config_hash": record.config_hash,
        "dtype": record.dtype,
        "counters": record.counters,
        "param_groups": {"g": groups_g, "d": groups_d},
    }
    arrays["metadata"] = np.array(json.dumps(metadata, cls=kutil.KdganJSONEncoder))
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as f:
            np.savez(f, **arrays)
        os.replace(tmp, path)
    except OSError as e:
        raise CheckpointError(f"Can't write checkpoint {path}: {e}") from e
    logger.info(f"Saved checkpoint at step {record.step}: {path}")
    return path


def load_checkpoint(path):
    """Read a :class:`CheckpointRecord`"""
    if not os.path.exists(path):
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            metadata = json.loads(str(archive["metadata"]))
            version = metadata.get("format_version")
            if version != FORMAT_VERSION:
                raise CheckpointError(f"Unsupported checkpoint format version {version} in {path}")
            states = {"g": {}, "d": {}, "rng": {}}
            for name in archive.files:
                prefix, _, key = name.partition("/")
                if prefix in states:
                    states[prefix][key] = torch.from_numpy(archive[name].copy())
            groups = metadata["param_groups"]
            opt_g = _unpack_optimizer("opt_g", archive, groups["g"])
            opt_d = _unpack_optimizer("opt_d", archive, groups["d"])
    except (OSError, ValueError, KeyError) as e:
        raise CheckpointError(f"Can't read checkpoint {path}: {e}") from e
    logger.debug(f"Loaded checkpoint at step {metadata['step']}: {path}")
    return CheckpointRecord(
        step=metadata["step"],
        g_state=states["g"],
        d_state=states["d"],
        opt_g_state=opt_g,
        opt_d_state=opt_d,
        rng_states=states["rng"],
        config=metadata["config"],
        config_hash=metadata["config_hash"],
        dtype=metadata["dtype"],
        counters=metadata.get("counters", {}),
        format_version=version,
    )
