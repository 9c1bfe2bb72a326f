"""Catalog of f-divergence generators in canonical gauge.

Every generator is the representative of its equivalence class with
f(1) = 0 and, where f is differentiable at 1, f'(1) = 0.  The catalog
covers nine divergences: KL, Pearson chi-squared, squared Hellinger,
reverse KL, Neyman chi-squared, total variation, Jensen-Shannon,
triangular discrimination, and the hockey-stick family E_gamma.

All transforms (f, f', the inverse of f', and the convex conjugate
f*) are closed-form.  Values outside a transform's finite domain are
returned as IEEE infinities; aggregation code is responsible for
masking them against zero weights (see ``problem`` and ``hedge``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SaturationError, UnsupportedOperationError

_LN2 = math.log(2.0)

SMOOTH_IDS = (
    "kl",
    "pearson_chi2",
    "sq_hellinger",
    "reverse_kl",
    "neyman_chi2",
    "jensen_shannon",
    "triangular",
)
NONSMOOTH_IDS = ("total_variation", "hockey_stick")
GENERATOR_IDS = SMOOTH_IDS + NONSMOOTH_IDS

# Integer codes shared with the compiled kernels.
KERNEL_CODES = {name: i for i, name in enumerate(SMOOTH_IDS)}


@dataclass(frozen=True)
class Generator:
    """One f-divergence generator in canonical gauge.

    ``fprime_range`` is the open/closed interval of attainable f'
    values on (0, inf); ``conjugate_domain`` is the interval where
    f*(y) is finite.  ``gamma`` is only meaningful for hockey_stick.
    """

    id: str
    smooth: bool
    fprime_range: tuple[float, float]
    conjugate_domain: tuple[float, float]
    gamma: float | None = None

    def __post_init__(self):
        if abs(self.f(1.0)) > 1e-15:
            raise AssertionError(f"{self.id}: gauge f(1)=0 violated")
        if self.smooth and abs(self.f_prime(1.0)) > 1e-15:
            raise AssertionError(f"{self.id}: gauge f'(1)=0 violated")

    # -- f -----------------------------------------------------------

    def f(self, x):
        """Generator value f(x); x may be a scalar or array, x >= 0."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError(f"{self.id}: f(x) requires x >= 0")
        out = self._f(x)
        return float(out) if out.ndim == 0 else out

    def _f(self, x):
        gid = self.id
        if gid == "kl":
            with np.errstate(divide="ignore", invalid="ignore"):
                xlogx = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
            return xlogx - x + 1.0
        if gid == "pearson_chi2":
            return (x - 1.0) ** 2
        if gid == "sq_hellinger":
            return (np.sqrt(x) - 1.0) ** 2
        if gid == "reverse_kl":
            with np.errstate(divide="ignore"):
                return np.where(x > 0, -np.log(np.where(x > 0, x, 1.0)) + x - 1.0, np.inf)
        if gid == "neyman_chi2":
            with np.errstate(divide="ignore"):
                return np.where(x > 0, (x - 1.0) ** 2 / np.where(x > 0, x, 1.0), np.inf)
        if gid == "total_variation":
            return 0.5 * np.abs(x - 1.0)
        if gid == "jensen_shannon":
            xs = np.where(x > 0, x, 1.0)
            val = 0.5 * xs * np.log(2.0 * xs / (1.0 + xs)) + 0.5 * np.log(2.0 / (1.0 + xs))
            return np.where(x > 0, val, 0.5 * _LN2)
        if gid == "triangular":
            return (x - 1.0) ** 2 / (2.0 * (x + 1.0))
        if gid == "hockey_stick":
            return np.maximum(x - self.gamma, 0.0)
        raise AssertionError(gid)

    # -- f' ----------------------------------------------------------

    def f_prime(self, x):
        """Derivative f'(x) for smooth generators; limits at x=0."""
        self._require_smooth("f_prime")
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError(f"{self.id}: f'(x) requires x >= 0")
        out = self._f_prime(x)
        return float(out) if out.ndim == 0 else out

    def _f_prime(self, x):
        gid = self.id
        with np.errstate(divide="ignore"):
            if gid == "kl":
                return np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
            if gid == "pearson_chi2":
                return 2.0 * (x - 1.0)
            if gid == "sq_hellinger":
                return np.where(x > 0, 1.0 - 1.0 / np.sqrt(np.where(x > 0, x, 1.0)), -np.inf)
            if gid == "reverse_kl":
                return np.where(x > 0, 1.0 - 1.0 / np.where(x > 0, x, 1.0), -np.inf)
            if gid == "neyman_chi2":
                return np.where(x > 0, 1.0 - 1.0 / np.where(x > 0, x, 1.0) ** 2, -np.inf)
            if gid == "jensen_shannon":
                xs = np.where(x > 0, x, 1.0)
                return np.where(x > 0, 0.5 * np.log(2.0 * xs / (1.0 + xs)), -np.inf)
            if gid == "triangular":
                return (x - 1.0) * (x + 3.0) / (2.0 * (x + 1.0) ** 2)
        raise AssertionError(gid)

    # -- inverse of f' -----------------------------------------------

    def f_prime_inverse(self, y: float) -> float:
        """Solve f'(x) = y for x >= 0.

        Values below the attainable range clamp to 0 (complementary
        slackness); values at or above the upper boundary raise
        SaturationError carrying that boundary.
        """
        self._require_smooth("f_prime_inverse")
        lo, hi = self.fprime_range
        if y >= hi:
            raise SaturationError(f"{self.id}: f' never reaches {y} (sup {hi})", boundary=hi)
        if y <= lo:
            return 0.0
        return float(self._f_prime_inverse(np.asarray(y, dtype=float)))

    def _f_prime_inverse(self, y):
        """Array form; clamps below range, returns +inf at/above it."""
        gid = self.id
        lo, hi = self.fprime_range
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if gid == "kl":
                return np.exp(y)
            if gid == "pearson_chi2":
                return np.maximum(1.0 + 0.5 * y, 0.0)
            if gid == "sq_hellinger":
                x = np.where(y < 1.0, (1.0 - np.minimum(y, 1.0 - 1e-300)) ** -2, np.inf)
                return x
            if gid == "reverse_kl":
                return np.where(y < 1.0, 1.0 / (1.0 - np.minimum(y, 1.0 - 1e-300)), np.inf)
            if gid == "neyman_chi2":
                return np.where(y < 1.0, (1.0 - np.minimum(y, 1.0 - 1e-300)) ** -0.5, np.inf)
            if gid == "jensen_shannon":
                e2y = np.exp(2.0 * np.minimum(y, hi))
                return np.where(y < hi, e2y / (2.0 - np.minimum(e2y, 2.0 - 1e-300)), np.inf)
            if gid == "triangular":
                yc = np.clip(y, lo, hi)
                x = 2.0 / np.sqrt(np.maximum(1.0 - 2.0 * yc, 1e-300)) - 1.0
                return np.where(y >= hi, np.inf, np.maximum(x, 0.0))
        raise AssertionError(gid)

    # -- convex conjugate --------------------------------------------

    def conjugate(self, y):
        """Convex conjugate f*(y); +inf outside the conjugate domain.

        Accepts -inf (returns the limit -f(0)), so perturbation tables
        with off-support markers evaluate cleanly.
        """
        y = np.asarray(y, dtype=float)
        out = self._conjugate(y)
        return float(out) if out.ndim == 0 else out

    def _conjugate(self, y):
        gid = self.id
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if gid == "kl":
                return np.expm1(y)
            if gid == "pearson_chi2":
                return np.where(y >= -2.0, y + 0.25 * np.square(np.where(np.isfinite(y), y, 0.0))
                                + np.where(np.isposinf(y), np.inf, 0.0), -1.0)
            if gid == "sq_hellinger":
                yn = np.where(np.isneginf(y), -1.0, np.minimum(y, 1.0 - 1e-300))
                return np.where(y < 1.0, np.where(np.isneginf(y), -1.0, yn / (1.0 - yn)), np.inf)
            if gid == "reverse_kl":
                return np.where(y < 1.0, -np.log1p(-np.minimum(y, 1.0 - 1e-300)), np.inf)
            if gid == "neyman_chi2":
                return np.where(y <= 1.0, 2.0 - 2.0 * np.sqrt(np.maximum(1.0 - y, 0.0)), np.inf)
            if gid == "total_variation":
                return np.where(y <= 0.5, np.maximum(y, -0.5), np.inf)
            if gid == "jensen_shannon":
                e2y = np.where(y < 0.5 * _LN2, np.exp(2.0 * np.minimum(y, 0.5 * _LN2)), 2.0)
                return np.where(y < 0.5 * _LN2, -0.5 * np.log(np.maximum(2.0 - e2y, 1e-300)), np.inf)
            if gid == "triangular":
                u = np.sqrt(np.maximum(1.0 - 2.0 * np.minimum(y, 0.5), 0.0))
                val = np.where(y <= -1.5, -0.5, 0.5 * (1.0 - u) * (3.0 - u))
                return np.where(y <= 0.5, val, np.inf)
            if gid == "hockey_stick":
                return np.where(y <= 1.0, self.gamma * np.maximum(y, 0.0), np.inf)
        raise AssertionError(gid)

    # -- auxiliary terms ---------------------------------------------

    def bracket(self, x):
        """f(x) - x f'(x), the per-stimulus integrand of the marginal
        correction G; closed forms avoid 0*inf at x=0."""
        self._require_smooth("bracket")
        x = np.asarray(x, dtype=float)
        gid = self.id
        with np.errstate(divide="ignore"):
            if gid == "kl":
                out = 1.0 - x
            elif gid == "pearson_chi2":
                out = 1.0 - x * x
            elif gid == "sq_hellinger":
                out = 1.0 - np.sqrt(x)
            elif gid == "reverse_kl":
                out = np.where(x > 0, -np.log(np.where(x > 0, x, 1.0)), np.inf)
            elif gid == "neyman_chi2":
                out = np.where(x > 0, 2.0 / np.where(x > 0, x, 1.0) - 2.0, np.inf)
            elif gid == "jensen_shannon":
                out = 0.5 * np.log(2.0 / (1.0 + x))
            elif gid == "triangular":
                out = -(x - 1.0) * (3.0 * x + 1.0) / (2.0 * (x + 1.0) ** 2)
            else:
                raise AssertionError(gid)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def f_at_zero(self) -> float:
        """f(0), possibly +inf."""
        return float(self._f(np.asarray(0.0)))

    @property
    def slope_at_infinity(self) -> float:
        """lim f(x)/x as x -> inf; weights mass that the reference
        distribution does not carry."""
        return {
            "kl": math.inf,
            "pearson_chi2": math.inf,
            "sq_hellinger": 1.0,
            "reverse_kl": 1.0,
            "neyman_chi2": 1.0,
            "total_variation": 0.5,
            "jensen_shannon": 0.5 * _LN2,
            "triangular": 0.5,
            "hockey_stick": 1.0,
        }[self.id]

    @property
    def kernel_code(self) -> int:
        if not self.smooth:
            raise UnsupportedOperationError(f"{self.id}: no solver kernel for non-smooth f")
        return KERNEL_CODES[self.id]

    def _require_smooth(self, op: str):
        if not self.smooth:
            raise UnsupportedOperationError(
                f"{self.id}: {op} undefined for non-smooth generators"
            )

    def __str__(self):
        if self.id == "hockey_stick":
            return f"hockey_stick(gamma={self.gamma:g})"
        return self.id


_RANGES = {
    # id: (fprime_range, conjugate_domain)
    "kl": ((-math.inf, math.inf), (-math.inf, math.inf)),
    "pearson_chi2": ((-2.0, math.inf), (-math.inf, math.inf)),
    "sq_hellinger": ((-math.inf, 1.0), (-math.inf, 1.0)),
    "reverse_kl": ((-math.inf, 1.0), (-math.inf, 1.0)),
    "neyman_chi2": ((-math.inf, 1.0), (-math.inf, 1.0)),
    "total_variation": ((math.nan, math.nan), (-math.inf, 0.5)),
    "jensen_shannon": ((-math.inf, 0.5 * _LN2), (-math.inf, 0.5 * _LN2)),
    "triangular": ((-1.5, 0.5), (-math.inf, 0.5)),
    "hockey_stick": ((math.nan, math.nan), (-math.inf, 1.0)),
}


def get_generator(name: str, gamma: float | None = None) -> Generator:
    """Look up a catalog generator by id string.

    hockey_stick requires gamma > 1; all other ids reject gamma.
    """
    if name not in GENERATOR_IDS:
        raise DomainError(f"unknown generator {name!r}; valid ids: {', '.join(GENERATOR_IDS)}")
    if name == "hockey_stick":
        if gamma is None or not gamma > 1.0:
            raise DomainError("hockey_stick requires gamma > 1")
    elif gamma is not None:
        raise DomainError(f"{name} takes no gamma parameter")
    fprange, conjdom = _RANGES[name]
    return Generator(
        id=name,
        smooth=name in SMOOTH_IDS,
        fprime_range=fprange,
        conjugate_domain=conjdom,
        gamma=gamma,
    )


def smooth_generators() -> list[Generator]:
    return [get_generator(name) for name in SMOOTH_IDS]


# Functional aliases for the four catalog transforms.

def f_value(gen: Generator, x: float) -> float:
    return gen.f(x)


def f_prime(gen: Generator, x: float) -> float:
    return gen.f_prime(x)


def f_prime_inverse(gen: Generator, y: float) -> float:
    return gen.f_prime_inverse(y)


def f_conjugate(gen: Generator, y: float) -> float:
    return gen.conjugate(y)
