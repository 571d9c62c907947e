#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Numeric primitives shared by the distillation and adversarial losses

All functions work on :class:`torch.Tensor` objects and are differentiable
through autograd, except :func:`finite_diff_gradient` which is the
verification oracle.
"""
import dataclasses
import math

import torch

from . import DegenerateInputError, InvalidArgumentError, NumericFailureError

#: Guard on every norm
EPS_NORM = 1e-12

#: Default finite difference step at 64-bit precision
FD_STEP = 1e-5


@dataclasses.dataclass(frozen=True)
class FeatureBatch:
    """A batch of feature vectors of shape ``[B, M]``

    Teacher image features and projected discriminator features both
    live in this container.
    """

    data: torch.Tensor

    def __post_init__(self):
        check_matrix(self.data, "feature batch")
        if not torch.isfinite(self.data).all():
            raise InvalidArgumentError("Feature batch contains non-finite entries")

    @property
    def B(self):
        return self.data.shape[0]

    @property
    def M(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return tuple(self.data.shape)


@dataclasses.dataclass(frozen=True)
class TextFeatureSet:
    """Teacher text embeddings ``[K, M]`` with their K text labels"""

    data: torch.Tensor
    labels: tuple

    def __post_init__(self):
        check_matrix(self.data, "text feature set")
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != self.data.shape[0]:
            raise InvalidArgumentError(
                f"Got {len(self.labels)} text labels for {self.data.shape[0]} text feature rows"
            )
        norms = torch.linalg.vector_norm(self.data.detach(), dim=1)
        bad = torch.nonzero(norms <= EPS_NORM).flatten()
        if bad.numel():
            raise DegenerateInputError(f"Text feature row {int(bad[0])} has a zero norm")

    @property
    def K(self):
        return self.data.shape[0]

    @property
    def M(self):
        return self.data.shape[1]


@dataclasses.dataclass
class GradCheckReport:
    """Analytic versus finite difference gradient comparison"""

    max_rel_error: float = 0.0
    max_abs_error: float = 0.0
    per_parameter_errors: dict = dataclasses.field(default_factory=dict)

    def add(self, name, rel_error, abs_error):
        self.per_parameter_errors[name] = float(rel_error)
        self.max_rel_error = max(self.max_rel_error, float(rel_error))
        self.max_abs_error = max(self.max_abs_error, float(abs_error))

    def merge(self, other, prefix=""):
        for name, err in other.per_parameter_errors.items():
            self.per_parameter_errors[prefix + name] = err
        self.max_rel_error = max(self.max_rel_error, other.max_rel_error)
        self.max_abs_error = max(self.max_abs_error, other.max_abs_error)
        return self

    def passed(self, tol=1e-4):
        return self.max_rel_error < tol


def as_data(value):
    """Get the raw tensor of a container or tensor"""
    return getattr(value, "data", value) if not isinstance(value, torch.Tensor) else value


def check_matrix(m, what="matrix"):
    if not isinstance(m, torch.Tensor) or m.ndim != 2:
        shape = tuple(m.shape) if hasattr(m, "shape") else type(m).__name__
        raise InvalidArgumentError(f"Expected a 2D tensor for the {what}, got {shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidArgumentError(f"Empty {what}: {tuple(m.shape)}")


def check_same_shape(a, b):
    if a.shape != b.shape:
        raise InvalidArgumentError(f"Shape mismatch: {tuple(a.shape)} versus {tuple(b.shape)}")


def l1_mean(a, b):
    """Mean absolute difference over all entries

    Parameters
    ----------
    a: FeatureBatch, torch.Tensor
    b: FeatureBatch, torch.Tensor
        Same shape as `a`

    Return
    ------
    torch.Tensor
        Scalar
    """
    a, b = as_data(a), as_data(b)
    check_same_shape(a, b)
    # abs has a zero subgradient at 0
    return (a - b).abs().mean()


def row_l2_normalize(m, eps=EPS_NORM):
    """Normalize each row to a unit L2 norm

    Raises
    ------
    DegenerateInputError
        When a row norm is not greater than `eps`
    """
    m = as_data(m)
    check_matrix(m)
    norms = torch.linalg.vector_norm(m, dim=1, keepdim=True)
    bad = torch.nonzero(norms.detach().flatten() <= eps).flatten()
    if bad.numel():
        raise DegenerateInputError(f"Cannot normalize row {int(bad[0])}: its norm is below {eps:g}")
    return m / norms


def cosine(u, v, eps=EPS_NORM):
    """Cosine similarity between two vectors"""
    u, v = as_data(u).flatten(), as_data(v).flatten()
    check_same_shape(u, v)
    nu = torch.linalg.vector_norm(u)
    nv = torch.linalg.vector_norm(v)
    if nu <= eps or nv <= eps:
        raise DegenerateInputError("Cosine similarity of a zero vector is undefined")
    return torch.clamp(torch.dot(u, v) / (nu * nv), -1.0, 1.0)


def finite_diff_gradient(f, theta, h=FD_STEP):
    """Central finite difference gradient

    Parameters
    ----------
    f: callable
        Scalar function of a parameter tensor
    theta: torch.Tensor, float
        Parameter values, of any shape
    h: float
        Step

    Return
    ------
    torch.Tensor
        Gradient with the same shape as `theta`
    """
    if h <= 0:
        raise InvalidArgumentError(f"Finite difference step must be positive: {h}")
    theta = torch.as_tensor(theta, dtype=torch.float64).detach().clone()
    flat = theta.reshape(-1)
    grad = torch.zeros_like(flat)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + h
        fp = float(f(theta))
        flat[i] = orig - h
        fm = float(f(theta))
        flat[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NumericFailureError(f"Non-finite function value around coordinate {i}")
        grad[i] = (fp - fm) / (2 * h)
    return grad.reshape(theta.shape)


def relative_error(analytic, numeric, floor=EPS_NORM):
    """Infinity-norm relative error between two gradients"""
    diff = (analytic - numeric).abs().max().item() if analytic.numel() else 0.0
    scale = max(analytic.abs().max().item() if analytic.numel() else 0.0, numeric.abs().max().item(), floor)
    return diff / scale, diff


def check_gradients(func, inputs, h=FD_STEP, report=None):
    """Compare autograd gradients of a scalar function to finite differences

    Parameters
    ----------
    func: callable
        Called with keyword arguments named after `inputs`, returns a scalar tensor
    inputs: dict
        Input name to :class:`torch.Tensor`, converted to float64
    h: float
        Finite difference step

    Return
    ------
    GradCheckReport
    """
    report = GradCheckReport() if report is None else report
    inputs = {name: torch.as_tensor(value, dtype=torch.float64).detach() for name, value in inputs.items()}
    leaves = {name: value.clone().requires_grad_(True) for name, value in inputs.items()}
    out = func(**leaves)
    grads = torch.autograd.grad(out, list(leaves.values()), allow_unused=True)
    for (name, value), grad in zip(inputs.items(), grads):
        if grad is None:
            grad = torch.zeros_like(value)

        def partial(theta, name=name):
            kwargs = dict(inputs)
            kwargs[name] = theta
            with torch.no_grad():
                return func(**kwargs)

        numeric = finite_diff_gradient(partial, value, h=h)
        rel, absolute = relative_error(grad, numeric)
        report.add(name, rel, absolute)
    return report
