"""Endogenous adversary: optimal perturbation, penalty, certificate.

The adversary's optimal cost correction is the channel's own
information gradient in loss units,
    C_s(a) = (f'(P(a|s)/P(a)) + G(a)) / beta,
where G couples stimuli through the shared marginal.  Entries at exact
conditional zeros where f'(0) = -inf are stored as -inf markers and
excluded from support-wise checks; entries merely below the support
threshold are clipped at f'(support_eps) and flagged.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedOperationError
from .generators import Generator
from .problem import Channel, DiscreteProblem, expected_loss, f_mutual_information
from .solver import SUPPORT_EPS, SolveConfig, solve_f, solve_kl


@dataclass(frozen=True)
class PerturbationTable:
    """Per-(s,a) cost corrections in loss units plus their penalty."""

    values: np.ndarray
    penalty: float


@dataclass(frozen=True)
class ResidualReport:
    """Per-stimulus indifference diagnostics.

    on_support[s]: max |ell + C - lam_s| over supported actions;
    off_support_violation[s]: worst shortfall of ell + C below lam_s
    off the support (0 when the inequality holds).
    """

    on_support: np.ndarray
    off_support_violation: np.ndarray
    support_level: np.ndarray  # lam_s, the on-support mean effective loss

    @property
    def worst(self) -> float:
        return float(max(self.on_support.max(), self.off_support_violation.max()))


def marginal_correction(gen: Generator, problem: DiscreteProblem, channel: Channel) -> np.ndarray:
    """G(a): stimulus average of f(r) - r f'(r) per action.

    Identically zero for KL in canonical gauge.
    """
    if not gen.smooth:
        raise UnsupportedOperationError(f"{gen.id}: marginal correction needs smooth f")
    if gen.id == "kl":
        return np.zeros(channel.n_actions)
    r = channel.ratios()
    return problem.prior @ gen.bracket(r)


def optimal_perturbation(gen: Generator, problem: DiscreteProblem, channel: Channel,
                         beta: float) -> PerturbationTable:
    """The endogenous worst-case loss perturbation at operating level beta."""
    if not gen.smooth:
        raise UnsupportedOperationError(f"{gen.id}: hedge needs a smooth generator")
    if not beta > 0:
        raise DomainError("beta must be positive")
    r = channel.ratios()
    G = marginal_correction(gen, problem, channel)
    fp = np.asarray(gen.f_prime(r), dtype=float)
    floor = gen.f_prime(SUPPORT_EPS)
    clipped = (channel.rows > 0) & (channel.rows <= SUPPORT_EPS) & (fp < floor)
    if np.any(clipped):
        fp = np.where(clipped, floor, fp)
        warnings.warn("sub-support channel entries clipped at f'(support_eps)")
    values = (fp + G[None, :]) / beta
    table = PerturbationTable(values=values, penalty=0.0)
    return PerturbationTable(values=values,
                             penalty=adversarial_penalty(gen, problem, channel, table, beta))


def adversarial_penalty(gen: Generator, problem: DiscreteProblem, channel: Channel,
                        table: PerturbationTable, beta: float) -> float:
    """Phi(C): product-law average of f*(beta C) / beta.

    +inf as soon as any positive-product-mass entry leaves the
    conjugate domain; -inf markers evaluate at the conjugate's limit.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    w = np.outer(problem.prior, channel.marginal)
    with np.errstate(invalid="ignore"):
        star = np.asarray(gen.conjugate(beta * table.values), dtype=float)
    mass = w > 0
    if np.any(mass & np.isposinf(star)):
        return math.inf
    if np.any(mass & np.isnan(star)):
        raise DomainError("perturbation table produced undefined conjugate values")
    if np.any(mass & np.isneginf(star)):
        return -math.inf
    return float(w[mass] @ star[mass]) / beta


def certificate(gen: Generator, problem: DiscreteProblem, channel: Channel, beta: float) -> float:
    """Hedged loss L + <P(s,a), C_opt>; equals L + I_f / beta."""
    table = optimal_perturbation(gen, problem, channel, beta)
    joint = problem.prior[:, None] * channel.rows
    vals = table.values
    carried = (joint > 0) & ~np.isfinite(vals)
    if np.any(carried):
        raise DomainError("perturbation carries infinite entries with joint mass")
    hedge_term = float(np.sum(joint * np.where(joint > 0, vals, 0.0)))
    return expected_loss(problem, channel) + hedge_term


def indifference_residual(problem: DiscreteProblem, channel: Channel,
                          table: PerturbationTable) -> ResidualReport:
    """Effective-loss flatness on the support; shortfall off it.

    lam_s is the on-support mean of ell + C, making the residual a
    black-box observable (the probe module reuses the same statistic).
    -inf entries (structural zeros) are skipped off-support.
    """
    eff = problem.loss + table.values
    n_s = problem.loss.shape[0]
    on = np.zeros(n_s)
    off = np.zeros(n_s)
    level = np.zeros(n_s)
    for s in range(n_s):
        sup = channel.rows[s] > SUPPORT_EPS
        if not np.any(sup):
            raise DomainError(f"stimulus {s}: empty support row")
        lam = float(eff[s, sup].mean())
        level[s] = lam
        on[s] = float(np.max(np.abs(eff[s, sup] - lam)))
        rest = ~sup & np.isfinite(eff[s])
        if np.any(rest):
            off[s] = max(0.0, float(np.max(lam - eff[s, rest])))
    return ResidualReport(on_support=on, off_support_violation=off, support_level=level)


def effective_loss_grid(gen: Generator, problem: DiscreteProblem, beta_grid,
                        beta_adv_grid, config: SolveConfig | None = None) -> np.ndarray:
    """Matrix of hedged losses L(beta_i) + I_f(beta_i) / beta_adv_j.

    The diagonal of a square grid with beta_adv = beta reproduces the
    certificate curve.
    """
    config = config or SolveConfig()
    beta_grid = np.asarray(beta_grid, dtype=float)
    beta_adv_grid = np.asarray(beta_adv_grid, dtype=float)
    out = np.full((beta_grid.size, beta_adv_grid.size), np.nan)
    warm = config
    for i, beta in enumerate(beta_grid):
        report = (solve_kl if gen.id == "kl" else lambda p, b, c: solve_f(gen, p, b, c))(
            problem, beta, warm
        )
        warm = SolveConfig(max_iters=config.max_iters, tol=config.tol,
                           step_rule=config.step_rule, init="warm_start",
                           warm_start=report.channel)
        L = expected_loss(problem, report.channel)
        info = f_mutual_information(gen, problem, report.channel)
        out[i, :] = L + info / beta_adv_grid
    return out
