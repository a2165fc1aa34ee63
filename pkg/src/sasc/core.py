"""Double-loop stochastic proximal-gradient solver with smoothing homotopy.

One epoch runs a fixed number of stochastic proximal-gradient steps on the
smoothed problem at fixed (step size, smoothness) and then restarts; across
epochs the step size and smoothness parameter decay geometrically while the
epoch length grows, which drives the iterates to the original constrained
problem. Two parameter regimes are supported: the general convex schedule
(alpha_s ~ omega^{-s/2}) and the restricted-strongly-convex schedule
(alpha_s ~ omega^{-s}, restart from the epoch average).

Also houses the rate-certificate machinery: the closed-form constants of the
two convergence-rate guarantees, their right-hand-side bound curves, and
deterministic checks of every parameter inequality the schedules are proven to satisfy.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .prox import Array, ProxHandle
from .smoothing import (
    CertificateInputs,
    ConstraintSample,
    ConstraintSampler,
    _mean_sq_distance,
    _objective_estimate,
)


class Case(Enum):
    """Objective regime selecting the epoch schedule."""

    GENERAL_CONVEX = "general_convex"
    RESTRICTED_STRONGLY_CONVEX = "restricted_strongly_convex"


@dataclass
class CompositeProblem:
    """A composite objective with almost-sure scalar/linear inclusion constraints.

    ``grad_f(x, sample)`` and ``f_value(x, sample)`` take the drawn constraint
    sample as the randomness carrier (``None`` is allowed when
    ``f_deterministic``). ``norm_bound`` must dominate the operator norm of
    every constraint the sampler can produce; ``mu`` is the restricted
    strong-convexity modulus when available, ``lipschitz_grad`` the Lipschitz
    constant of the averaged gradient (0 when the smooth part is absent or
    linear). ``prox_f`` optionally provides an exact prox of f(., xi) for
    proximal-point baselines; ``norm_22`` is a purely diagnostic field.
    """

    dim: int
    grad_f: Callable
    f_value: Callable
    prox_h: ProxHandle
    constraints: ConstraintSampler
    norm_bound: float
    mu: Optional[float] = None
    lipschitz_grad: float = 0.0
    f_deterministic: bool = False
    prox_f: Optional[Callable] = None
    norm_22: Optional[float] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("CompositeProblem: dim must be >= 1")
        if self.norm_bound <= 0:
            raise ValueError("CompositeProblem: norm_bound must be positive")

    @property
    def h_value(self) -> Callable:
        return self.prox_h.objective_value


@dataclass
class SascConfig:
    """Run parameters: initial step/smoothness scale, epoch growth, budget.

    Exactly one of ``epochs`` or ``sample_budget`` must be set; a budget B
    runs every epoch s with m_0 + ... + m_s <= B. Epoch lengths count inner
    steps, so with ``minibatch`` > 1 the trace's sample counter advances by
    the batch size per step. ``checkpoint_every`` and ``eval_samples``
    control how often and on how many held-out draws the trace is evaluated.
    """

    alpha0: float
    omega: float
    m0: int
    case: Case = Case.GENERAL_CONVEX
    epochs: Optional[int] = None
    sample_budget: Optional[int] = None
    seed: int = 0
    minibatch: int = 1
    checkpoint_every: int = 100
    eval_samples: int = 1000

    def validate(self, problem: Optional[CompositeProblem] = None) -> None:
        if self.alpha0 <= 0:
            raise ConfigurationError(f"alpha0 must be positive, got {self.alpha0}")
        if self.omega <= 1:
            raise ConfigurationError(f"omega must exceed 1, got {self.omega}")
        if self.m0 < 1:
            raise ConfigurationError(f"m0 must be a positive integer, got {self.m0}")
        if self.minibatch < 1:
            raise ConfigurationError("minibatch must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigurationError("checkpoint_every must be >= 1")
        if self.eval_samples < 1:
            raise ConfigurationError("eval_samples must be >= 1")
        if (self.epochs is None) == (self.sample_budget is None):
            raise ConfigurationError(
                "exactly one of epochs or sample_budget must be set"
            )
        if self.epochs is not None and self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.sample_budget is not None and self.sample_budget < self.m0:
            raise ConfigurationError(
                f"sample_budget {self.sample_budget} cannot fit the first epoch "
                f"(m0 = {self.m0})"
            )
        if problem is None:
            return
        L = problem.lipschitz_grad
        if L > 0 and self.alpha0 > 3.0 / (4.0 * L) * (1 + 1e-12):
            raise ConfigurationError(
                f"alpha0 = {self.alpha0} violates alpha0 <= 3/(4 L) = "
                f"{3.0 / (4.0 * L)}; L = {L} is the Lipschitz constant of the "
                "averaged gradient (the per-sample constant imposes the same "
                "bound whenever the two coincide, as in the bundled problems)"
            )
        if self.case is Case.RESTRICTED_STRONGLY_CONVEX:
            if problem.mu is None:
                raise ConfigurationError(
                    "restricted_strongly_convex schedule needs the problem's mu"
                )
            needed = self.omega / (problem.mu * self.alpha0)
            if self.m0 < needed * (1 - 1e-12):
                raise ConfigurationError(
                    f"m0 = {self.m0} must be >= omega/(mu alpha0) = {needed}"
                )

    def planned_epochs(self) -> int:
        """Number of epochs: given directly, or the most the budget can fill."""
        if self.epochs is not None:
            return self.epochs
        total, s = 0, 0
        while True:
            m_s = int(math.floor(self.m0 * self.omega ** s))
            if total + m_s > self.sample_budget:
                break
            total += m_s
            s += 1
        return s


@dataclass
class ScheduleState:
    """Snapshot of the inner loop, handed to the optional step callback."""

    s: int
    k: int
    alpha_s: float
    beta_s: float
    m_s: int
    x: Array
    running_avg: Array
    samples_seen: int


@dataclass(frozen=True)
class TraceRecord:
    samples: int
    epoch: int
    objective: float
    feasibility: float
    beta: float
    alpha: float
    dist_to_ref: Optional[float]
    wall_time: float


@dataclass
class ConvergenceTrace:
    """Per-checkpoint records of a run, in sample order."""

    records: list[TraceRecord] = field(default_factory=list)

    def append(self, rec: TraceRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> Array:
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)


def schedule_params(case: Case, s: int, cfg: SascConfig, norm_bound: float,
                    mu: Optional[float] = None):
    """Epoch-s parameters (alpha_s, beta_s, m_s) for the given regime.

    General convex: alpha_s = alpha0 omega^{-s/2}; restricted strongly
    convex: alpha_s = alpha0 omega^{-s} (requires mu and m0 >= omega/(mu
    alpha0)). Both use beta_s = 4 alpha_s norm_bound^2 and m_s = floor(m0
    omega^s).
    """
    if s < 0:
        raise ValueError(f"epoch index must be >= 0, got {s}")
    if case is Case.RESTRICTED_STRONGLY_CONVEX:
        if mu is None:
            raise ConfigurationError(
                "restricted_strongly_convex schedule needs mu"
            )
        needed = cfg.omega / (mu * cfg.alpha0)
        if cfg.m0 < needed * (1 - 1e-12):
            raise ConfigurationError(
                f"m0 = {cfg.m0} must be >= omega/(mu alpha0) = {needed}"
            )
        alpha_s = cfg.alpha0 * cfg.omega ** (-float(s))
    else:
        alpha_s = cfg.alpha0 * cfg.omega ** (-0.5 * s)
    beta_s = 4.0 * alpha_s * norm_bound ** 2
    m_s = int(math.floor(cfg.m0 * cfg.omega ** s))
    return alpha_s, beta_s, m_s


def sasc_inner_step(x: Array, sample: ConstraintSample, alpha_s: float,
                    beta_s: float, problem: CompositeProblem) -> Array:
    """One stochastic proximal-gradient step on the smoothed problem.

    Forms z = A(xi) x, pulls the smoothed-penalty gradient (z - proj(z)) /
    beta_s back through the adjoint, adds the stochastic objective gradient,
    and applies prox of alpha_s * h.
    """
    if alpha_s <= 0 or beta_s <= 0:
        raise ValueError("sasc_inner_step: alpha_s and beta_s must be positive")
    z = sample.apply(x)
    g = (z - sample.set_proj.project(z)) / beta_s
    d = problem.grad_f(x, sample) + sample.adjoint(g)
    return problem.prox_h.evaluate(x - alpha_s * d, alpha_s)


def _batch_direction(x: Array, samples, beta_s: float,
                     problem: CompositeProblem) -> Array:
    d = np.zeros_like(x)
    for sample in samples:
        z = sample.apply(x)
        g = (z - sample.set_proj.project(z)) / beta_s
        d = d + problem.grad_f(x, sample) + sample.adjoint(g)
    return d / len(samples)


class _EvalSet:
    """Held-out seeded sample set used for every checkpoint of one run."""

    def __init__(self, problem: CompositeProblem, n_samples: int,
                 rng: np.random.Generator):
        self.problem = problem
        sup = problem.constraints.support()
        if sup is not None and n_samples >= len(sup):
            self.samples, self.idx = list(sup), None
        elif sup is not None:
            self.idx = rng.integers(0, len(sup), size=n_samples)
            self.samples = [sup[int(i)] for i in self.idx]
        else:
            self.samples = problem.constraints.draw_batch(rng, n_samples)
            self.idx = None

    def feasibility(self, x: Array) -> float:
        return float(np.sqrt(_mean_sq_distance(
            x, self.problem.constraints, self.samples, self.idx)))

    def objective(self, x: Array) -> float:
        return _objective_estimate(x, self.problem, self.samples)


def run_sasc(problem: CompositeProblem, cfg: SascConfig,
             cert: Optional[CertificateInputs] = None,
             x0: Optional[Array] = None,
             callback: Optional[Callable[[ScheduleState], None]] = None):
    """Run the double loop and return (final epoch average, trace).

    The restart rule is regime-dependent: the general convex schedule starts
    the next epoch from the last inner iterate, the restricted-strongly-convex
    schedule from the epoch average. Checkpoints are taken every
    ``cfg.checkpoint_every`` samples on the running epoch average, evaluated
    against a held-out validation sample set so that measurement never
    perturbs the training stream. Output is bit-identical for identical
    (problem data, cfg, seed).
    """
    cfg.validate(problem)
    train_ss, val_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(train_ss)
    eval_set = _EvalSet(problem, cfg.eval_samples, np.random.default_rng(val_ss))

    x = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have shape ({problem.dim},), got {x.shape}")
    x_ref = None if cert is None else cert.x_star

    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    seen = 0
    last_cp = 0
    n_epochs = cfg.planned_epochs()
    x_bar = x.copy()

    def record(xb: Array, s: int, alpha_s: float, beta_s: float) -> None:
        dist = None if x_ref is None else float(np.linalg.norm(xb - x_ref))
        trace.append(TraceRecord(
            samples=seen, epoch=s,
            objective=eval_set.objective(xb),
            feasibility=eval_set.feasibility(xb),
            beta=beta_s, alpha=alpha_s, dist_to_ref=dist,
            wall_time=time.perf_counter() - t0,
        ))

    for s in range(n_epochs):
        alpha_s, beta_s, m_s = schedule_params(
            cfg.case, s, cfg, problem.norm_bound, problem.mu)
        avg = np.zeros_like(x)
        for k in range(m_s):
            if cfg.minibatch == 1:
                sample = problem.constraints.draw(rng)
                x = sasc_inner_step(x, sample, alpha_s, beta_s, problem)
            else:
                batch = problem.constraints.draw_batch(rng, cfg.minibatch)
                d = _batch_direction(x, batch, beta_s, problem)
                x = problem.prox_h.evaluate(x - alpha_s * d, alpha_s)
            if not np.all(np.isfinite(x)):
                raise DivergenceError(epoch=s, step=k)
            avg += x
            seen += cfg.minibatch
            if callback is not None:
                callback(ScheduleState(
                    s=s, k=k + 1, alpha_s=alpha_s, beta_s=beta_s, m_s=m_s,
                    x=x.copy(), running_avg=avg / (k + 1), samples_seen=seen))
            cp = seen // cfg.checkpoint_every
            if cp > last_cp:
                last_cp = cp
                record(avg / (k + 1), s, alpha_s, beta_s)
        x_bar = avg / m_s
        if cfg.case is Case.RESTRICTED_STRONGLY_CONVEX:
            x = x_bar.copy()
        # general convex: continue from the last inner iterate (x unchanged)
        last_alpha, last_beta, last_epoch = alpha_s, beta_s, s

    if not trace.records or trace.records[-1].samples < seen:
        record(x_bar, last_epoch, last_alpha, last_beta)
    return x_bar, trace


class Case1Constants(NamedTuple):
    c1: float
    c2: float
    c3: float
    c4: float


class Case2Constants(NamedTuple):
    d1: float
    d2: float
    d3: float


def _squared_start_distance(cert: CertificateInputs, x0: Array) -> float:
    if cert.x_star is None:
        raise ValueError("constants need cert.x_star to measure the start distance")
    diff = np.asarray(cert.x_star, dtype=float) - np.asarray(x0, dtype=float)
    return float(diff @ diff)


def constants_case1(cfg: SascConfig, norm_bound: float,
                    cert: CertificateInputs, x0: Array) -> Case1Constants:
    """The four closed-form constants of the general-convex rate bound."""
    if cfg.m0 < 2:
        raise ConfigurationError(
            "constants are undefined for m0 = 1 (division by m0 - 1)")
    a0, w, m0 = cfg.alpha0, cfg.omega, cfg.m0
    a_sq = norm_bound ** 2
    r0_sq = _squared_start_distance(cert, x0)
    sf2 = cert.sigma_f ** 2
    y2 = cert.y_star_norm ** 2
    c1 = math.sqrt(m0 * w) / (a0 * (m0 - 1) * math.sqrt(w - 1))
    c2 = 0.5 * r0_sq + 2.0 * a0 * m0 * sf2
    c3 = 2.0 * a0 ** 2 * a_sq * m0 * y2 + 2.0 * a0 * m0 * sf2
    c4 = 4.0 * a0 * math.sqrt(m0) * a_sq * math.sqrt(w) / math.sqrt(w - 1)
    return Case1Constants(c1, c2, c3, c4)


def constants_case2(cfg: SascConfig, norm_bound: float,
                    cert: CertificateInputs, x0: Array) -> Case2Constants:
    """The three closed-form constants of the restricted-strongly-convex bound."""
    if cfg.m0 < 2:
        raise ConfigurationError(
            "constants are undefined for m0 = 1 (division by m0 - 1)")
    a0, w, m0 = cfg.alpha0, cfg.omega, cfg.m0
    a_sq = norm_bound ** 2
    r0_sq = _squared_start_distance(cert, x0)
    sf2 = cert.sigma_f ** 2
    y2 = cert.y_star_norm ** 2
    wfac = w / (w - 1)
    d1 = wfac * (m0 / (a0 * (m0 - 1))) * 0.5 * r0_sq + 2.0 * a0 * m0 * wfac * sf2
    d2 = (2.0 * m0 ** 2 * a0 * w / ((m0 - 1) * (w - 1))) * (a_sq * y2 + sf2)
    d3 = 4.0 * a0 * m0 * a_sq * wfac
    return Case2Constants(d1, d2, d3)


def bound_curves(case: Case, constants, m0: int, omega: float, M_values,
                 lipschitz_g: Optional[float] = None,
                 y_star_norm: float = 0.0):
    """Evaluate the rate-bound right-hand sides at each total sample count M.

    Returns a list of (objective_bound, feasibility_bound). When
    ``lipschitz_g`` is given, the objective bound carries the smoothing
    surplus of the Lipschitz-term extension (C4 or D3 scaled by L_g^2).
    """
    out = []
    for M in M_values:
        if M < m0:
            raise ValueError(f"M = {M} precedes the first completed epoch (m0 = {m0})")
        logfac = math.log(M / m0) / math.log(omega)
        if case is Case.GENERAL_CONVEX:
            c1, c2, c3, c4 = constants
            bracket = c2 + logfac * c3
            obj = c1 / math.sqrt(M) * bracket
            if lipschitz_g is not None:
                obj += c4 / math.sqrt(M) * lipschitz_g ** 2
            feas = (2.0 * c4 * y_star_norm
                    + 2.0 * math.sqrt(c1 * c4) * math.sqrt(bracket)) / math.sqrt(M)
        else:
            d1, d2, d3 = constants
            bracket = d1 + logfac * d2
            obj = bracket / M
            if lipschitz_g is not None:
                obj += d3 / M * lipschitz_g ** 2
            feas = (2.0 * d3 * y_star_norm
                    + 2.0 * math.sqrt(d3) * math.sqrt(bracket)) / M
        out.append((obj, feas))
    return out


@dataclass
class ScheduleCheckReport:
    """Worst observed slack per schedule inequality (nonnegative = holds)."""

    case: Case
    slacks: dict[str, float]

    @property
    def min_slack(self) -> float:
        return min(self.slacks.values())


def schedule_inequalities_check(case: Case, cfg: SascConfig, norm_bound: float,
                                s_max: int,
                                lipschitz_grad: Optional[float] = None
                                ) -> ScheduleCheckReport:
    """Verify every printed schedule inequality for s = 0..s_max.

    Covers the per-epoch smoothness bound, the step-mass lower bound, the two
    partial-sum bounds, the geometric-decay bound (restricted strongly convex
    regime only), and the two step-size conditions of the inner-loop descent
    argument. ``lipschitz_grad`` defaults to 3/(4 alpha0), the largest value
    admitted by the step-size rule. Report-only: negative slacks are returned,
    not raised.
    """
    if s_max < 1:
        raise ValueError("s_max must be >= 1")
    a0, w, m0 = cfg.alpha0, cfg.omega, cfg.m0
    a_sq = norm_bound ** 2
    L = 3.0 / (4.0 * a0) if lipschitz_grad is None else lipschitz_grad
    c = 1.0 / w

    names_common = ["step_size_rule", "smoothness_rule"]
    if case is Case.GENERAL_CONVEX:
        names = ["beta_upper", "alpha_m_lower", "sum_beta_alpha_m_upper",
                 "sum_alpha_sq_m_upper"] + names_common
    else:
        names = ["beta_upper", "alpha_m_lower", "sum_beta_alpha_m_upper",
                 "sum_alpha_sq_m_upper", "geometric_decay_upper"] + names_common
    worst = {name: math.inf for name in names}

    def note(name: str, slack: float) -> None:
        if slack < worst[name]:
            worst[name] = slack

    cum_M = 0.0
    sum_bam = 0.0      # sum_{l<s} beta_l alpha_l m_l
    sum_a2m = 0.0      # sum_{l<s} alpha_l^2 m_l
    t_bam = 0.0        # sum_{l<s} c^{s-l} beta_l alpha_l m_l
    t_a2m = 0.0        # sum_{l<s} c^{s-l} alpha_l^2 m_l
    # mu only gates schedule_params validation; pass a value satisfying it
    mu_ok = w / (a0 * m0) if case is Case.RESTRICTED_STRONGLY_CONVEX else None
    for s in range(s_max + 1):
        alpha, beta, m = schedule_params(case, s, cfg, norm_bound, mu_ok)
        M = cum_M + m
        logfac = math.log(M / m0) / math.log(w)
        if case is Case.GENERAL_CONVEX:
            note("beta_upper",
                 4.0 * a0 * math.sqrt(m0) * a_sq * math.sqrt(w / (w - 1.0))
                 / math.sqrt(M) - beta)
            note("alpha_m_lower",
                 alpha * m - a0 * (m0 - 1) / math.sqrt(m0)
                 * math.sqrt((w - 1.0) / w) * math.sqrt(M))
            note("sum_beta_alpha_m_upper",
                 4.0 * a0 ** 2 * a_sq * m0 * logfac - sum_bam)
            note("sum_alpha_sq_m_upper",
                 a0 * m0 * (logfac + 1.0) - (sum_a2m + alpha ** 2 * m))
        else:
            cpow = c ** s
            note("beta_upper",
                 4.0 * a0 * m0 * a_sq * (w / (w - 1.0)) / M - beta)
            note("alpha_m_lower", alpha * m - a0 * (m0 - 1))
            note("sum_beta_alpha_m_upper",
                 4.0 * cpow * a0 ** 2 * a_sq * m0 * logfac - t_bam)
            note("sum_alpha_sq_m_upper",
                 cpow * a0 ** 2 * m0 * logfac - t_a2m)
            note("geometric_decay_upper", (w / (w - 1.0)) * m0 / M - cpow)
        note("step_size_rule", beta / 2.0 - 2.0 * alpha * a_sq)
        note("smoothness_rule", 1.0 / (2.0 * alpha) - (L + a_sq / beta) / 2.0)

        cum_M = M
        sum_bam += beta * alpha * m
        sum_a2m += alpha ** 2 * m
        t_bam = c * (t_bam + beta * alpha * m)
        t_a2m = c * (t_a2m + alpha ** 2 * m)
    return ScheduleCheckReport(case=case, slacks=worst)
