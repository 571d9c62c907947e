#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Teacher adapter extensions
"""
import importlib
import importlib.util
import os
import sys

from . import KdganError

#: Factory name looked up when the adapter reference has no attribute part
DEFAULT_FACTORY = "build_teacher"


class ExtensionError(KdganError):
    pass


def import_from_path(module_name, file_path):
    """Importing a python source file directly

    Source: https://docs.python.org/3/library/importlib.html#importing-a-source-file-directly
    """
    spec = importlib.util.spec_from_file_location(module_name, file_path)
    module = importlib.util.module_from_spec(spec)
    sys.modules[module_name] = module
    spec.loader.exec_module(module)
    return module


def split_reference(ref):
    """Split ``"target:attr"`` into its target and attribute parts

    Windows drive letters are not mistaken for the separator.
    """
    target, sep, attr = ref.rpartition(":")
    if not sep or not target or os.sep in attr or attr.endswith(".py"):
        return ref, DEFAULT_FACTORY
    return target, attr or DEFAULT_FACTORY


def load_teacher_adapter(ref):
    """Load a teacher factory from a python file or an importable module

    The reference is either ``"path/to/adapter.py[:factory]"`` or
    ``"package.module[:factory]"``. The factory defaults to
    :data:`DEFAULT_FACTORY` and is called with the ``feature_dim``,
    ``checkpoint_path`` and ``input_shape`` keyword arguments.

    Parameters
    ----------
    ref: str
        Adapter reference

    Return
    ------
    callable
    """
    target, attr = split_reference(str(ref))
    try:
        if target.endswith(".py") or os.path.exists(target):
            if not os.path.exists(target):
                raise ExtensionError(f"Teacher adapter file not found: {target}")
            module = import_from_path("kdgan.ext.teacher_adapter", target)
        else:
            module = importlib.import_module(target)
    except ImportError as e:
        raise ExtensionError(f"Can't import teacher adapter {target}: {e}") from e
    factory = getattr(module, attr, None)
    if not callable(factory):
        raise ExtensionError(f"Teacher adapter {target} has no callable {attr!r}")
    return factory
