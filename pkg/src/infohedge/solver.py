"""Bounded-rational channel solvers.

KL gets the exact alternating fixed point (Gibbs rows / marginal
update); every other smooth generator is solved by projected descent
on the channel with the exact coupled gradient, including the marginal
correction term.  Both report the indifference residual as the
convergence measure and never fail silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import DomainError, NumericFailureError, UnsupportedOperationError
from .generators import Generator, get_generator
from .problem import Channel, DiscreteProblem, expected_loss, f_mutual_information, induced_marginal

SUPPORT_EPS = 1e-12
_RESTART_MIX = 1e-3
_MAX_RESTARTS = 4


@dataclass(frozen=True)
class SolveConfig:
    """Solver knobs; ``beta`` may be preset here or passed per call."""

    beta: float | None = None
    max_iters: int = 200_000
    tol: float = 1e-8
    step_rule: str = "backtracking"  # or "fixed"
    init: str = "uniform"  # uniform | marginal_seed | warm_start
    warm_start: Channel | None = None

    def __post_init__(self):
        if self.beta is not None and not self.beta > 0:
            raise DomainError("beta must be positive")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.step_rule not in ("fixed", "backtracking"):
            raise DomainError("step_rule must be 'fixed' or 'backtracking'")
        if self.init not in ("uniform", "marginal_seed", "warm_start"):
            raise DomainError("init must be uniform, marginal_seed or warm_start")


@dataclass(frozen=True)
class SolveReport:
    """Solved channel plus convergence diagnostics."""

    channel: Channel
    free_energy: float
    iters: int
    residual: float
    converged: bool
    generator: str = "kl"
    beta: float = float("nan")
    dead_actions: tuple[int, ...] = ()

    def __post_init__(self):
        if self.converged and not self.residual <= 1e-5:
            # belt and braces: converged reports always carry a small residual
            raise AssertionError("converged report with large residual")


def free_energy(gen: Generator, problem: DiscreteProblem, channel: Channel, beta: float) -> float:
    """expected loss + f-information / beta; +inf propagates."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    return expected_loss(problem, channel) + f_mutual_information(gen, problem, channel) / beta


def _resolve_beta(beta, config):
    if beta is None:
        beta = config.beta
    if beta is None or not beta > 0:
        raise DomainError("beta must be positive")
    return float(beta)


def _initial_rows(problem, beta, config, n_s, n_a):
    if config.init == "warm_start":
        if config.warm_start is None:
            raise DomainError("init='warm_start' requires config.warm_start")
        return np.array(config.warm_start.rows, dtype=float)
    if config.init == "marginal_seed":
        avg = problem.prior @ problem.loss
        seed = np.exp(-beta * (avg - avg.min()))
        seed /= seed.sum()
        return np.tile(seed, (n_s, 1))
    return np.full((n_s, n_a), 1.0 / n_a)


def _reinsert_dropped(rows, m, keep, n_s):
    """Zero-prior stimuli are unconstrained; give them the marginal row."""
    if keep.all():
        return rows
    full = np.empty((n_s, rows.shape[1]))
    full[keep] = rows
    full[~keep] = m
    return full


def solve_kl(problem: DiscreteProblem, beta: float | None = None,
             config: SolveConfig | None = None) -> SolveReport:
    """Blahut-Arimoto style fixed point for the KL-regularized channel."""
    config = config or SolveConfig()
    beta = _resolve_beta(beta, config)
    keep = problem.prior > 0
    prior = problem.prior[keep] / problem.prior[keep].sum()
    loss = problem.loss[keep]
    rows0 = _initial_rows(problem, beta, config, problem.n_stimuli, problem.n_actions)[keep]
    rows, m, iters, resid, status = _kernels.kl_ba_run(
        prior, loss, beta, rows0, config.max_iters, config.tol, SUPPORT_EPS
    )
    full_rows = _reinsert_dropped(rows, m, keep, problem.n_stimuli)
    channel = Channel.from_rows(problem.prior, full_rows)
    gen = get_generator("kl")
    return SolveReport(
        channel=channel,
        free_energy=free_energy(gen, problem, channel, beta),
        iters=iters,
        residual=resid,
        converged=status == _kernels.OK,
        generator="kl",
        beta=beta,
    )


def solve_f(gen: Generator, problem: DiscreteProblem, beta: float | None = None,
            config: SolveConfig | None = None) -> SolveReport:
    """Projected-descent solve for any smooth generator.

    Convergence is declared when the support-wise indifference residual
    falls below tol.  Channels may legitimately stop using an action
    (finite f'(0) generators); the solver then restarts once from a
    slightly mixed channel so a wrongly abandoned face cannot persist.
    """
    if not gen.smooth:
        raise UnsupportedOperationError(f"{gen.id}: solve_f needs a smooth generator")
    config = config or SolveConfig()
    beta = _resolve_beta(beta, config)
    keep = problem.prior > 0
    prior = problem.prior[keep] / problem.prior[keep].sum()
    loss = problem.loss[keep]
    rows = _initial_rows(problem, beta, config, problem.n_stimuli, problem.n_actions)[keep]
    code = gen.kernel_code
    step0 = 1.0 / beta
    grow = 1.3 if config.step_rule == "backtracking" else 1.0

    best = None
    total_iters = 0
    for attempt in range(_MAX_RESTARTS + 1):
        rows, m, iters, resid, F, step, status = _kernels.pgd_run(
            code, prior, loss, beta, rows, config.max_iters, config.tol, SUPPORT_EPS, step0, grow
        )
        total_iters += iters
        if status == _kernels.STEP_FLOORED and resid > config.tol:
            raise NumericFailureError(
                f"solve_f({gen.id}) stalled before reaching tol",
                diagnostics={"generator": gen.id, "beta": beta, "iters": total_iters,
                             "residual": resid, "free_energy": F, "step": step},
            )
        improved = best is None or F < best[2] - 1e-12
        if improved:
            best = (rows.copy(), m.copy(), F, resid, status)
        dead = ~(m > 0)
        if not dead.any() or not improved or status != _kernels.OK:
            break
        # revive dead actions and re-solve; convexity guarantees this can
        # only lower the free energy if the face was wrong
        rows = (1.0 - _RESTART_MIX) * rows + _RESTART_MIX / rows.shape[1]
        step0 = step

    rows, m, F, resid, status = best
    full_rows = _reinsert_dropped(rows, m, keep, problem.n_stimuli)
    channel = Channel.from_rows(problem.prior, full_rows)
    return SolveReport(
        channel=channel,
        free_energy=free_energy(gen, problem, channel, beta),
        iters=total_iters,
        residual=resid,
        converged=status == _kernels.OK,
        generator=gen.id,
        beta=beta,
        dead_actions=tuple(int(a) for a in np.flatnonzero(~(channel.marginal > 0))),
    )


def per_stimulus_response(gen: Generator, marginal, loss_row, beta: float) -> np.ndarray:
    """Fixed-marginal best response to one loss row.

    Solves q(a) = m(a) * (f')^{-1}(beta * (lam - ell(a))) with lam
    chosen so q sums to one; entries below the attainable f' range
    clamp to zero.  This is the inner step of an alternative solve
    mode and the consistency check used by the probe module.
    """
    if not gen.smooth:
        raise UnsupportedOperationError(f"{gen.id}: response needs a smooth generator")
    if not beta > 0:
        raise DomainError("beta must be positive")
    m = np.asarray(marginal, dtype=float)
    ell = np.asarray(loss_row, dtype=float)
    if np.any(m <= 0):
        raise DomainError("marginal must be strictly positive")

    def mass(lam):
        q = m * gen._f_prime_inverse(beta * (lam - ell))
        return q

    lo_bound, hi_bound = gen.fprime_range
    if np.isfinite(hi_bound):
        hi = float(np.min(ell + hi_bound / beta))
        # mass(hi) = +inf on the argmin entries
    else:
        hi = float(ell.max())
        for _ in range(200):
            if mass(hi).sum() > 1.0:
                break
            hi += max(1.0, abs(hi))
        else:
            raise NumericFailureError("per_stimulus_response: no upper bracket")
    lo = float(ell.min()) - 1.0 / beta
    for _ in range(400):
        if mass(lo).sum() < 1.0:
            break
        lo -= max(1.0, abs(lo))
    else:
        raise NumericFailureError("per_stimulus_response: no lower bracket")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        total = mass(mid).sum()
        if total > 1.0:
            hi = mid
        else:
            lo = mid
    q = mass(lo)
    s = q.sum()
    if not np.isfinite(s) or s <= 0:
        raise NumericFailureError("per_stimulus_response: bracket collapse")
    return q / s
