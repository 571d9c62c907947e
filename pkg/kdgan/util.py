#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Misc utilities
"""
import collections
import hashlib
import json
import logging
import os
import pathlib
import re
import sys

import colorlog.escape_codes
import numpy as np
import torch

logger = logging.getLogger(__name__)


def check_dir(filepath, dry=False):
    """Create the parent directory of a file if needed

    Parameters
    ----------
    filepath: str, pathlib.Path
    dry: bool
        Only log, do not create

    Return
    ------
    str
        Absolute file path
    """
    filepath = os.path.abspath(filepath)
    parent = pathlib.Path(filepath).parent
    if not parent.exists():
        if not dry:
            parent.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Created directory: {parent}" + (" [dry]" if dry else ""))
    return filepath


def tensor_hash(*tensors):
    """sha256 hex digest of the raw bytes of tensors or arrays

    Dicts are hashed in sorted key order.
    """
    sha = hashlib.sha256()

    def feed(obj):
        if isinstance(obj, dict):
            for key in sorted(obj):
                sha.update(str(key).encode())
                feed(obj[key])
        elif isinstance(obj, (list, tuple)):
            for item in obj:
                feed(item)
        else:
            if isinstance(obj, torch.Tensor):
                obj = obj.detach().cpu().contiguous().numpy()
            arr = np.ascontiguousarray(obj)
            sha.update(str(arr.dtype).encode() + str(arr.shape).encode())
            sha.update(arr.tobytes())

    for tensor in tensors:
        feed(tensor)
    return sha.hexdigest()


class KdganJSONEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, collections.UserDict):
            return dict(obj)
        if isinstance(obj, torch.Tensor):
            return obj.detach().cpu().tolist()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, pathlib.PurePath):
            return str(obj)
        try:
            return super().default(obj)
        except TypeError:
            return str(obj)


def colorize(text, mapping, colorize=True):
    """Color a console line with the first matching pattern

    Parameters
    ----------
    text: str
    mapping: dict
        Regular expressions to :mod:`colorlog` color names like ``"bold_red"``
    colorize: bool

    Return
    ------
    str
        Unchanged when not colorizing or when stdout is not a terminal
    """
    if not colorize or not sys.stdout.isatty():
        return text
    for pattern, color in mapping.items():
        if re.match(pattern, text):
            reset = colorlog.escape_codes.escape_codes["reset"]
            return colorlog.escape_codes.parse_colors(color) + text + reset
    return text
