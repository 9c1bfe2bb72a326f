"""Finite decision problems and the functionals evaluated on channels.

A problem is a prior over stimuli plus a loss matrix; a channel is a
row-stochastic conditional law from stimuli to actions together with
its induced action marginal.  Everything is dense float64 at desk
scale (a few hundred stimuli/actions at most).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .generators import Generator

PROB_ATOL = 1e-12
MARGINAL_ATOL = 1e-10


def _as_prob_vector(p, atol=PROB_ATOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise DomainError("probability vector must be 1-d")
    if np.any(p < 0):
        raise DomainError("probability vector has negative entries")
    if abs(p.sum() - 1.0) > atol:
        raise DomainError(f"probability vector sums to {p.sum()!r}, not 1")
    return p


@dataclass(frozen=True)
class DiscreteProblem:
    """Prior over stimuli and loss matrix ell(s, a) in loss units."""

    prior: np.ndarray
    loss: np.ndarray
    labels: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "prior", _as_prob_vector(self.prior))
        loss = np.asarray(self.loss, dtype=float)
        if loss.ndim != 2 or loss.shape[0] != self.prior.shape[0]:
            raise DomainError("loss must be an (n_s, n_a) matrix matching the prior")
        if not np.all(np.isfinite(loss)):
            raise DomainError("loss entries must be finite")
        object.__setattr__(self, "loss", loss)

    @property
    def n_stimuli(self) -> int:
        return self.loss.shape[0]

    @property
    def n_actions(self) -> int:
        return self.loss.shape[1]

    @classmethod
    def from_json(cls, path) -> "DiscreteProblem":
        with open(path) as fh:
            doc = json.load(fh)
        return cls(prior=doc["prior"], loss=doc["loss"], labels=doc.get("labels"))

    def to_json_dict(self) -> dict:
        doc = {"prior": self.prior.tolist(), "loss": self.loss.tolist()}
        if self.labels:
            doc["labels"] = self.labels
        return doc


@dataclass(frozen=True)
class Channel:
    """Row-stochastic conditional law with its induced marginal cached."""

    rows: np.ndarray
    marginal: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        marginal = np.asarray(self.marginal, dtype=float)
        if rows.ndim != 2:
            raise DomainError("channel rows must be a matrix")
        if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > PROB_ATOL):
            raise DomainError("channel rows must each be a probability vector")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "marginal", marginal)

    @classmethod
    def from_rows(cls, prior, rows) -> "Channel":
        """Build a channel with the marginal induced by the prior."""
        return cls(rows=np.asarray(rows, dtype=float), marginal=induced_marginal(prior, rows))

    def check_consistency(self, prior) -> float:
        """Max abs drift between the cached and the induced marginal."""
        return float(np.max(np.abs(self.marginal - induced_marginal(prior, self.rows))))

    @property
    def n_actions(self) -> int:
        return self.rows.shape[1]

    def ratios(self) -> np.ndarray:
        """Likelihood ratios r(s,a) = P(a|s)/P(a); 0/0 resolves to 0."""
        m = self.marginal
        safe = np.where(m > 0, m, 1.0)
        return np.where(m > 0, self.rows / safe, 0.0)


def induced_marginal(prior, rows) -> np.ndarray:
    """Marginal action law: prior-weighted average of the rows."""
    prior = np.asarray(prior, dtype=float)
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or prior.shape[0] != rows.shape[0]:
        raise DomainError("prior length must match the number of channel rows")
    m = prior @ rows
    drift = abs(m.sum() - 1.0)
    if drift > PROB_ATOL:
        m = m / m.sum()
    return m


def expected_loss(problem: DiscreteProblem, channel: Channel) -> float:
    """Joint-law average of the loss matrix."""
    if channel.rows.shape != problem.loss.shape:
        raise DomainError("channel shape does not match the problem")
    return float(np.einsum("s,sa,sa->", problem.prior, channel.rows, problem.loss))


def divergence(gen: Generator, q, p) -> float:
    """D_f(q || p) for probability vectors, boundary conventions applied.

    p(a) f(q/p) terms: 0*f(0/0) = 0; q > 0 on p = 0 contributes
    q * lim f(x)/x (infinite for superlinear generators).
    """
    q = np.asarray(q, dtype=float)
    p = _as_prob_vector(p)
    if q.shape != p.shape:
        raise DomainError("q and p must have the same length")
    if np.any(q < 0):
        raise DomainError("q has negative entries")
    pos = p > 0
    total = 0.0
    if np.any(pos):
        vals = np.asarray(gen.f(q[pos] / p[pos]), dtype=float)
        if np.any(np.isinf(vals)):
            return float("inf")
        total += float(p[pos] @ vals)
    escaped = float(q[~pos].sum())
    if escaped > 0:
        total += escaped * gen.slope_at_infinity
    return total


def f_mutual_information(gen: Generator, problem: DiscreteProblem, channel: Channel) -> float:
    """Prior-weighted f-divergence of each row from the marginal.

    Actions with zero marginal are excluded from the sums: by marginal
    self-consistency they carry no conditional mass either, and the
    likelihood ratio is undefined there.
    """
    m = channel.marginal
    active = m > 0
    if np.any(channel.rows[:, ~active] > PROB_ATOL):
        return float("inf")
    mm = m[active]
    total = 0.0
    for w, row in zip(problem.prior, channel.rows):
        if w == 0.0:
            continue
        vals = np.asarray(gen.f(row[active] / mm), dtype=float)
        if np.any(np.isinf(vals)):
            return float("inf")
        total += w * float(mm @ vals)
    return total
