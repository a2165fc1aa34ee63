"""Comparator solvers: projected stochastic gradient, stochastic proximal
point with alternating projections, and the classic subgradient SVM solver.

All three share the trace/checkpoint machinery of the main driver and are
deterministic under a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import CompositeProblem, ConvergenceTrace, TraceRecord, _EvalSet
from .errors import UnsupportedProblemError
from .prox import Array

_BASELINE_METHODS = ("sgd", "spp", "pegasos")


@dataclass
class BaselineConfig:
    """Fixed-step baseline parameters.

    ``step`` is the base step of the 1/sqrt(t) SGD schedule, the fixed
    proximal step of the alternating-projection method, or the regularization
    weight of the subgradient SVM solver.
    """

    method: str
    step: float
    iterations: int
    seed: int = 0
    checkpoint_every: int = 100
    eval_samples: int = 1000

    def __post_init__(self):
        if self.method not in _BASELINE_METHODS:
            raise ValueError(f"unknown baseline method {self.method!r}")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def run_projected_sgd(problem: CompositeProblem, cfg: BaselineConfig):
    """x <- proj_K(x - eta_t grad f(x, xi)), eta_t = step / sqrt(t).

    The nonsmooth term must be an indicator of a projectable set (or zero);
    constraints are ignored beyond supplying the randomness stream. Returns
    the running average of the iterates and its trace.
    """
    if not problem.prox_h.is_projection:
        raise UnsupportedProblemError(
            "projected SGD needs h to be zero or an indicator of a "
            "projectable set"
        )
    rng_ss, val_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(rng_ss)
    eval_set = _EvalSet(problem, cfg.eval_samples, np.random.default_rng(val_ss))

    x = np.zeros(problem.dim)
    avg = np.zeros_like(x)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    eta = cfg.step
    for t in range(1, cfg.iterations + 1):
        sample = problem.constraints.draw(rng)
        eta = cfg.step / np.sqrt(t)
        x = problem.prox_h.evaluate(x - eta * problem.grad_f(x, sample), eta)
        avg += x
        if t % cfg.checkpoint_every == 0 or t == cfg.iterations:
            xb = avg / t
            trace.append(TraceRecord(
                samples=t, epoch=0,
                objective=eval_set.objective(xb),
                feasibility=eval_set.feasibility(xb),
                beta=0.0, alpha=float(eta), dist_to_ref=None,
                wall_time=time.perf_counter() - t0,
            ))
    return avg / cfg.iterations, trace


def _project_onto_constraint(z: Array, sample) -> Array:
    """Exact projection of z onto {x : A(xi) x in b(xi)} for a scalar row."""
    if sample.row.ndim != 1:
        raise UnsupportedProblemError(
            "alternating projection needs scalar (single-row) constraints"
        )
    val = float(sample.row @ z)
    target = float(np.asarray(sample.set_proj.project(val)))
    nrm2 = float(sample.row @ sample.row)
    return z - ((val - target) / nrm2) * sample.row


def run_spp(problem: CompositeProblem, cfg: BaselineConfig):
    """Stochastic proximal point on the objective + one alternating projection.

    Each iteration draws one realization for the objective and one for the
    constraint: z = prox applied to the full objective at fixed step mu
    (exact prox of f(., xi) when the problem provides one, else a gradient
    step, followed by prox of h), then x = projection of z onto the drawn
    constraint set. The fixed step caps the attainable accuracy.
    """
    mu = cfg.step
    rng_ss, val_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(rng_ss)
    eval_set = _EvalSet(problem, cfg.eval_samples, np.random.default_rng(val_ss))

    x = np.zeros(problem.dim)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    for t in range(1, cfg.iterations + 1):
        xi_obj = problem.constraints.draw(rng)
        xi_con = problem.constraints.draw(rng)
        if problem.prox_f is not None:
            z = problem.prox_f(x, xi_obj, mu)
        else:
            z = x - mu * problem.grad_f(x, xi_obj)
        z = problem.prox_h.evaluate(z, mu)
        x = _project_onto_constraint(z, xi_con)
        if t % cfg.checkpoint_every == 0 or t == cfg.iterations:
            trace.append(TraceRecord(
                samples=t, epoch=0,
                objective=eval_set.objective(x),
                feasibility=eval_set.feasibility(x),
                beta=0.0, alpha=mu, dist_to_ref=None,
                wall_time=time.perf_counter() - t0,
            ))
    return x, trace


def run_pegasos(dataset, lam: float, iterations: int, seed: int = 0,
                eval_dataset=None, checkpoint_every: int = 100):
    """Stochastic subgradient solver for the relaxed margin formulation.

    Update at step t with eta_t = 1/(lam t):
    x <- (1 - eta_t lam) x + eta_t 1[b <a, x> < 1] b a. The trace records the
    0/1 error on ``eval_dataset`` (the training set when omitted) in the
    feasibility column and the regularized hinge objective in the objective
    column.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    labels = np.asarray(dataset.labels, dtype=float)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must lie in {-1, +1}")
    holdout = dataset if eval_dataset is None else eval_dataset

    rng = np.random.default_rng(seed)
    x = np.zeros(dataset.dim)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    n = len(dataset)
    eta = 1.0 / lam
    for t in range(1, iterations + 1):
        i = int(rng.integers(n))
        idx, vals = dataset.index_lists[i], dataset.value_lists[i]
        b = labels[i]
        margin = b * float(vals @ x[idx])
        eta = 1.0 / (lam * t)
        x *= 1.0 - eta * lam
        if margin < 1.0:
            x[idx] += (eta * b) * vals
        if t % checkpoint_every == 0 or t == iterations:
            margins = holdout.margins(x)
            err = float(np.mean(margins <= 0.0))
            hinge = float(np.mean(np.maximum(0.0, 1.0 - margins)))
            obj = 0.5 * lam * float(x @ x) + hinge
            trace.append(TraceRecord(
                samples=t, epoch=0, objective=obj, feasibility=err,
                beta=0.0, alpha=eta, dist_to_ref=None,
                wall_time=time.perf_counter() - t0,
            ))
    return x, trace
