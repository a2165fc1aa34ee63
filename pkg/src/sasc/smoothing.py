"""Smoothing of nonsmooth terms and the diagnostics built on it.

Contains the constraint-sample abstraction (a random linear map together
with the convex set its image must land in), Moreau-envelope smoothing for
indicator and Lipschitz terms, constraint normalization, the root-mean-square
feasibility metric, the smoothed gap function, and the four saddle-point
residual checks that certify the gap/feasibility translation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateConstraintError
from .prox import Array, BoxSet, ProxHandle, SetProjector


@dataclass(frozen=True)
class ConstraintSample:
    """One constraint realization: a linear map, its adjoint, a target set.

    ``row`` is either a vector (scalar-valued constraint a^T x in B) or an
    (m, d) matrix. ``index`` identifies the draw for finite-support samplers.
    """

    row: Array
    set_proj: SetProjector
    index: Optional[int] = None

    def apply(self, x: Array):
        return self.row @ x

    def adjoint(self, v):
        if self.row.ndim == 1:
            return self.row * v
        return self.row.T @ v

    def norm(self) -> float:
        if self.row.ndim == 1:
            return float(np.linalg.norm(self.row))
        return float(np.linalg.norm(self.row, 2))


def normalize_constraint(row: Array, set_proj: SetProjector,
                         index: Optional[int] = None) -> ConstraintSample:
    """Rescale a constraint to unit operator norm without changing its solutions.

    a^T x in B holds iff (a/||a||)^T x in B/||a|| holds, and projecting onto
    the rescaled set is as easy as onto the original.
    """
    row = np.asarray(row, dtype=float)
    nrm = float(np.linalg.norm(row)) if row.ndim == 1 else float(np.linalg.norm(row, 2))
    if nrm == 0.0:
        raise DegenerateConstraintError(
            "normalize_constraint: zero operator (drop the sample if 0 is in the "
            "target set, otherwise the data is infeasible)"
        )
    return ConstraintSample(row=row / nrm, set_proj=set_proj.scaled(nrm), index=index)


class ConstraintSampler:
    """Source of constraint realizations; may expose a finite support."""

    def draw(self, rng: np.random.Generator) -> ConstraintSample:
        raise NotImplementedError

    def draw_batch(self, rng: np.random.Generator, k: int) -> list[ConstraintSample]:
        return [self.draw(rng) for _ in range(k)]

    def support(self) -> Optional[Sequence[ConstraintSample]]:
        """All samples of a finite-support distribution (uniform), else None."""
        return None

    def distances(self, x: Array, indices: Optional[Array] = None) -> Optional[Array]:
        """Vectorized dist(A(xi_i) x, b(xi_i)) over the support (hook)."""
        return None


class RowConstraintSet(ConstraintSampler):
    """Finite uniform family of scalar constraints rows[i]^T x in [lo_i, hi_i].

    Points are boxes with lo = hi and half-lines have hi = +inf, so one pair
    of endpoint arrays covers every set shape used by the bundled problems.
    """

    def __init__(self, rows: Array, lo: Array, hi: Array):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValueError("RowConstraintSet: rows must be a nonempty (n, d) array")
        n = rows.shape[0]
        self.rows = rows
        self.lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
        if np.any(self.lo > self.hi):
            raise ValueError("RowConstraintSet: lo exceeds hi for some row")
        self._samples = [
            ConstraintSample(rows[i], BoxSet(self.lo[i], self.hi[i]), i)
            for i in range(n)
        ]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def sample(self, i: int) -> ConstraintSample:
        return self._samples[i]

    def draw(self, rng: np.random.Generator) -> ConstraintSample:
        return self._samples[int(rng.integers(len(self)))]

    def draw_batch(self, rng: np.random.Generator, k: int) -> list[ConstraintSample]:
        idx = rng.integers(0, len(self), size=k)
        return [self._samples[int(i)] for i in idx]

    def support(self) -> Sequence[ConstraintSample]:
        return self._samples

    def distances(self, x: Array, indices: Optional[Array] = None) -> Array:
        if indices is None:
            z = self.rows @ x
            lo, hi = self.lo, self.hi
        else:
            z = self.rows[indices] @ x
            lo, hi = self.lo[indices], self.hi[indices]
        return np.maximum(np.maximum(lo - z, z - hi), 0.0)

    @staticmethod
    def normalized(rows: Array, lo, hi, drop_zero_rows: bool = False
                   ) -> "RowConstraintSet":
        """Build the set with every row rescaled to unit norm.

        Zero rows are dropped when ``drop_zero_rows`` and 0 lies in their
        target set (they constrain nothing); otherwise they raise.
        """
        rows = np.asarray(rows, dtype=float)
        n = rows.shape[0]
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
        nrm = np.linalg.norm(rows, axis=1)
        zero = nrm == 0.0
        if np.any(zero):
            harmless = (lo[zero] <= 0.0) & (hi[zero] >= 0.0)
            if drop_zero_rows and np.all(harmless):
                keep = ~zero
                rows, lo, hi, nrm = rows[keep], lo[keep], hi[keep], nrm[keep]
                if rows.shape[0] == 0:
                    raise ValueError("normalized: all rows were degenerate")
            else:
                raise DegenerateConstraintError(
                    "normalized: zero row with 0 outside its target set"
                )
        return RowConstraintSet(rows / nrm[:, None], lo / nrm, hi / nrm)


def moreau_grad(z, inner, beta: float):
    """Value and gradient of the Moreau/Nesterov smoothing of a set or function.

    For a set B (indicator term): value = dist(z, B)^2 / (2 beta) and
    grad = (z - proj_B(z)) / beta. For a proximable g: the prox point
    p = prox_{beta g}(z) gives grad = (z - p) / beta and the envelope value
    g(p) + ||z - p||^2 / (2 beta). The gradient is (1/beta)-Lipschitz.
    """
    if beta <= 0:
        raise ValueError(f"moreau_grad: beta must be positive, got {beta}")
    z = np.asarray(z, dtype=float)
    if isinstance(inner, ProxHandle):
        p = inner.evaluate(z, beta)
        diff = z - p
        value = float(inner.objective_value(p)) + float(
            np.sum(np.atleast_1d(diff) ** 2)
        ) / (2.0 * beta)
    elif isinstance(inner, SetProjector):
        p = inner.project(z)
        diff = z - p
        value = float(np.sum(np.atleast_1d(diff) ** 2)) / (2.0 * beta)
    else:
        raise TypeError(f"moreau_grad: unsupported inner term {type(inner).__name__}")
    return value, diff / beta


@dataclass(frozen=True)
class SmoothedTerm:
    """The (1/beta)-smooth approximation of an indicator or Lipschitz term."""

    beta: float
    inner: SetProjector | ProxHandle

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"SmoothedTerm: beta must be positive, got {self.beta}")

    def value(self, z) -> float:
        return moreau_grad(z, self.inner, self.beta)[0]

    def gradient(self, z):
        return moreau_grad(z, self.inner, self.beta)[1]


@dataclass(frozen=True)
class CertificateInputs:
    """Reference quantities supplied by the user or a test oracle.

    The solver never estimates these; they only enter diagnostics (residual
    checks, constants, bound curves) and the distance-to-reference trace.
    """

    x_star: Optional[Array] = None
    p_star: float = 0.0
    y_star_norm: float = 0.0
    sigma_f: float = 0.0

    def __post_init__(self):
        if self.y_star_norm < 0:
            raise ValueError("CertificateInputs: y_star_norm must be >= 0")
        if self.sigma_f < 0:
            raise ValueError("CertificateInputs: sigma_f must be >= 0")


def _eval_samples(sampler: ConstraintSampler, n_samples: int, seed: int):
    """Pick the evaluation set: full support when it fits, else seeded draws.

    Returns (samples, indices); indices is an int array usable with the
    sampler's vectorized ``distances`` hook (None means the whole support).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    sup = sampler.support()
    if sup is not None and len(sup) == 0:
        raise ValueError("sampler has empty support")
    if sup is not None and n_samples >= len(sup):
        return list(sup), None
    rng = np.random.default_rng(seed)
    if sup is not None:
        idx = rng.integers(0, len(sup), size=n_samples)
        return [sup[int(i)] for i in idx], idx
    return sampler.draw_batch(rng, n_samples), None


def _mean_sq_distance(x: Array, sampler: ConstraintSampler, samples, indices) -> float:
    vectorized = getattr(sampler, "distances", None)
    d = vectorized(x, indices) if vectorized is not None else None
    if d is None:
        d = np.array([s.set_proj.distance(s.apply(x)) for s in samples])
    return float(np.mean(d ** 2))


def feasibility_metric(x: Array, sampler: ConstraintSampler,
                       n_samples: int, seed: int) -> float:
    """Root-mean-square constraint distance sqrt(E[dist(A(xi) x, b(xi))^2]).

    Exact over the population when the sampler has finite support and
    n_samples covers it; otherwise a seeded Monte-Carlo estimate.
    """
    samples, idx = _eval_samples(sampler, n_samples, seed)
    return float(np.sqrt(_mean_sq_distance(x, sampler, samples, idx)))


def _objective_estimate(x: Array, problem, samples) -> float:
    """P(x) = E[f(x, xi)] + h(x) estimated on the given sample set."""
    if getattr(problem, "f_deterministic", False):
        fbar = float(problem.f_value(x, None))
    else:
        fbar = float(np.mean([problem.f_value(x, s) for s in samples]))
    return fbar + float(problem.prox_h.objective_value(x))


def smoothed_gap(x: Array, beta: float, problem, cert: CertificateInputs,
                 n_samples: int, seed: int) -> float:
    """P(x) - P(x_star) + E[dist(A(xi) x, b(xi))^2] / (2 beta).

    Both expectations are estimated on the same sample set, so the value is
    exact for finite-support samplers that the set covers.
    """
    if beta <= 0:
        raise ValueError(f"smoothed_gap: beta must be positive, got {beta}")
    samples, idx = _eval_samples(problem.constraints, n_samples, seed)
    gap = _objective_estimate(x, problem, samples) - cert.p_star
    msd = _mean_sq_distance(x, problem.constraints, samples, idx)
    return gap + msd / (2.0 * beta)


def saddle_point_residuals(x: Array, beta: float, problem, cert: CertificateInputs,
                     n_samples: int, seed: int):
    """Slacks of the four saddle-point inequalities linking gap and feasibility.

    Each slack is oriented LHS - RHS so that a nonnegative value means the
    inequality holds; requires an exact certificate (p_star and y_star_norm)
    for the instance. Returns (r1, r2, r3, r4) for:
      r1: S_beta(x) + (beta/2) ||y*||^2
      r2: P(x) - P* + E[dist^2]/(4 beta) + beta ||y*||^2
      r3: S_beta(x) - (P(x) - P*)
      r4: 4 beta^2 ||y*||^2 + 4 beta S_beta(x) - E[dist^2]
    """
    if beta <= 0:
        raise ValueError(f"saddle_point_residuals: beta must be positive, got {beta}")
    samples, idx = _eval_samples(problem.constraints, n_samples, seed)
    gap = _objective_estimate(x, problem, samples) - cert.p_star
    msd = _mean_sq_distance(x, problem.constraints, samples, idx)
    s_beta = gap + msd / (2.0 * beta)
    y2 = cert.y_star_norm ** 2
    r1 = s_beta + 0.5 * beta * y2
    r2 = gap + msd / (4.0 * beta) + beta * y2
    r3 = s_beta - gap
    r4 = 4.0 * beta ** 2 * y2 + 4.0 * beta * s_beta - msd
    return r1, r2, r3, r4
