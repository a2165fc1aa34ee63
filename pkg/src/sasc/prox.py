"""Closed-form proximal operators and Euclidean projections.

These are the building blocks every problem instance is assembled from:
scalar/vector projections onto the simple sets that appear as constraint
right-hand sides (points, intervals, half-lines), the hyperplane projection
used both as a prox and as a baseline step, and prox handles for the
nonsmooth objective terms (l1 norm, linear, indicator, zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateConstraintError

Array = np.ndarray


def soft_threshold(z: Array, tau: float) -> Array:
    """prox of tau*||.||_1: componentwise sign(z) * max(|z| - tau, 0)."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("soft_threshold: input has non-finite components")
    if tau <= 0:
        raise ValueError(f"soft_threshold: tau must be positive, got {tau}")
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def project_hyperplane(z: Array, a: Array, b: float) -> Array:
    """Project z onto the hyperplane {x : <a, x> = b}."""
    z = np.asarray(z, dtype=float)
    a = np.asarray(a, dtype=float)
    nrm2 = float(a @ a)
    if nrm2 == 0.0:
        raise DegenerateConstraintError("project_hyperplane: normal vector is zero")
    return z - ((a @ z - b) / nrm2) * a


def project_halfspace(z, lo):
    """Project a scalar (or array, componentwise) onto [lo, inf)."""
    return np.maximum(z, lo)


def project_interval(z, lo, hi):
    """Project a scalar (or array, componentwise) onto [lo, hi]."""
    if np.any(np.asarray(lo) > np.asarray(hi)):
        raise ValueError(f"project_interval: empty interval, lo={lo} > hi={hi}")
    return np.minimum(np.maximum(z, lo), hi)


class SetProjector:
    """A closed convex set, represented by its Euclidean projection.

    Subclasses provide ``project``; ``distance`` and positive rescaling of
    the set (B -> B/c) are derived from it.
    """

    def project(self, z):
        raise NotImplementedError

    def distance(self, z) -> float:
        diff = np.asarray(z, dtype=float) - self.project(z)
        return float(np.linalg.norm(np.atleast_1d(diff)))

    def scaled(self, c: float) -> "SetProjector":
        """Projector for the set B/c, c > 0 (via proj_{B/c}(z) = proj_B(cz)/c)."""
        if c <= 0:
            raise ValueError(f"scaled: factor must be positive, got {c}")
        base = self
        return CustomSet(lambda z: base.project(np.asarray(z, dtype=float) * c) / c)


@dataclass(frozen=True)
class BoxSet(SetProjector):
    """Componentwise box [lo, hi]; lo = hi gives a point, hi = inf a half-line."""

    lo: float | Array
    hi: float | Array

    def __post_init__(self):
        if np.any(np.asarray(self.lo) > np.asarray(self.hi)):
            raise ValueError(f"BoxSet: lo={self.lo} exceeds hi={self.hi}")

    def project(self, z):
        return np.minimum(np.maximum(z, self.lo), self.hi)

    def scaled(self, c: float) -> "BoxSet":
        if c <= 0:
            raise ValueError(f"scaled: factor must be positive, got {c}")
        return BoxSet(np.divide(self.lo, c), np.divide(self.hi, c))


@dataclass(frozen=True)
class CustomSet(SetProjector):
    """Set given by an arbitrary user projection function."""

    project_fn: Callable

    def project(self, z):
        return self.project_fn(z)


def singleton(value) -> BoxSet:
    """The one-point set {value}."""
    return BoxSet(value, value)


def interval(lo, hi) -> BoxSet:
    """The interval [lo, hi]."""
    return BoxSet(lo, hi)


def halfspace(lo) -> BoxSet:
    """The half-line [lo, inf)."""
    return BoxSet(lo, np.inf)


def full_space() -> BoxSet:
    """The whole space (distance 0 everywhere)."""
    return BoxSet(-np.inf, np.inf)


@dataclass(frozen=True)
class ProxHandle:
    """A proximable function phi: its prox map and its value.

    ``evaluate(z, step)`` returns argmin_x phi(x) + ||x - z||^2 / (2 step);
    ``objective_value(x)`` returns phi(x) (may be +inf for indicators).
    ``is_projection`` marks step-independent handles (indicators), whose
    ``evaluate`` is the projection onto the underlying set.
    """

    evaluate: Callable[[Array, float], Array]
    objective_value: Callable[[Array], float]
    is_projection: bool = False


def zero_prox() -> ProxHandle:
    """phi = 0: prox is the identity."""
    return ProxHandle(
        evaluate=lambda z, step: np.asarray(z, dtype=float),
        objective_value=lambda x: 0.0,
        is_projection=True,
    )


def l1_prox(weight: float = 1.0) -> ProxHandle:
    """phi = weight * ||.||_1: prox is soft thresholding."""
    if weight <= 0:
        raise ValueError(f"l1_prox: weight must be positive, got {weight}")
    return ProxHandle(
        evaluate=lambda z, step: soft_threshold(z, step * weight),
        objective_value=lambda x: weight * float(np.sum(np.abs(x))),
    )


def linear_prox(c: Array) -> ProxHandle:
    """phi = <c, .>: prox is the shifted identity z - step*c."""
    c = np.asarray(c, dtype=float)
    return ProxHandle(
        evaluate=lambda z, step: np.asarray(z, dtype=float) - step * c,
        objective_value=lambda x: float(c @ x),
    )


def hyperplane_indicator_prox(a: Array, b: float, tol: float = 1e-9) -> ProxHandle:
    """phi = indicator of {x : <a, x> = b}: prox is the hyperplane projection."""
    a = np.asarray(a, dtype=float)
    return ProxHandle(
        evaluate=lambda z, step: project_hyperplane(z, a, b),
        objective_value=lambda x: 0.0 if abs(float(a @ x) - b) <= tol else np.inf,
        is_projection=True,
    )
