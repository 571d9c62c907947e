#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Knowledge distillation laboratory for data-limited GAN training
"""

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "0.0.0"


class KdganError(Exception):
    pass


class InvalidArgumentError(KdganError, ValueError):
    pass


class DegenerateInputError(KdganError, ValueError):
    pass


class NumericFailureError(KdganError, ArithmeticError):
    pass
