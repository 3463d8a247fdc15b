"""Gaussian mixture messages and greedy mixture reduction.

A message is a finite one-dimensional Gaussian mixture

    f(z) = sum_i c_i * N(z; m_i, v_i),

with N(z; m, v) = (2*pi*v)^(-1/2) * exp(-(z - m)^2 / (2*v)).  Mixtures are
kept normalized (weights sum to one).  Reduction greedily merges the pair of
components whose replacement by a single moment-matched Gaussian costs the
least in squared-L2 distance, until every remaining pair costs at least
``theta`` and at most ``m_max`` components remain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from . import _kernels as _k

#: Components below this fraction of total mass are dropped by ``reduce``.
WEIGHT_FLOOR = _k.WEIGHT_FLOOR

_NORM_TOL = 1e-12


class GaussianComponent(NamedTuple):
    """One weighted Gaussian: ``weight * N(z; mean, variance)``."""

    mean: float
    variance: float
    weight: float


@dataclass(frozen=True)
class ReductionParams:
    """Greedy reduction control knobs.

    theta: merge any pair whose loss is below this (0 disables loss-driven
        merging, leaving only the size cap).
    m_max: hard cap on surviving components; must be a finite positive int.
    """

    theta: float
    m_max: int

    def __post_init__(self):
        if not (isinstance(self.theta, (int, float)) and math.isfinite(self.theta)):
            raise ValueError(f"theta must be finite, got {self.theta!r}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not isinstance(self.m_max, (int, np.integer)) or isinstance(self.m_max, bool):
            raise TypeError(f"m_max must be an integer, got {self.m_max!r}")
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")


class GaussianMixture:
    """Immutable normalized Gaussian mixture over the real line.

    Stores parallel float64 arrays ``means``, ``variances``, ``weights``.
    Variances must be positive and weights non-negative with positive total;
    weights are normalized to sum to one on construction.
    """

    __slots__ = ("means", "variances", "weights")

    def __init__(self, means, variances, weights):
        m = np.atleast_1d(np.array(means, dtype=np.float64, copy=True))
        v = np.atleast_1d(np.array(variances, dtype=np.float64, copy=True))
        c = np.atleast_1d(np.array(weights, dtype=np.float64, copy=True))
        if m.ndim != 1 or m.shape != v.shape or m.shape != c.shape:
            raise ValueError("means, variances, weights must be 1-D arrays of equal length")
        if m.size == 0:
            raise ValueError("mixture needs at least one component")
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite mean")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("variances must be positive and finite")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("weights must be non-negative and finite")
        total = float(c.sum())
        if total <= 0:
            raise ValueError("total weight must be positive")
        c = c / total
        for a in (m, v, c):
            a.flags.writeable = False
        self.means = m
        self.variances = v
        self.weights = c

    # -- constructors -------------------------------------------------

    @classmethod
    def single(cls, mean: float, variance: float) -> "GaussianMixture":
        return cls([mean], [variance], [1.0])

    @classmethod
    def from_components(cls, comps: Iterable[Sequence[float]]) -> "GaussianMixture":
        """Build from an iterable of (mean, variance, weight) triples."""
        trip = [(float(a), float(b), float(c)) for a, b, c in comps]
        if not trip:
            raise ValueError("mixture needs at least one component")
        m, v, c = zip(*trip)
        return cls(m, v, c)

    # -- container protocol -------------------------------------------

    def __len__(self) -> int:
        return self.means.shape[0]

    def __getitem__(self, i: int) -> GaussianComponent:
        return GaussianComponent(float(self.means[i]), float(self.variances[i]), float(self.weights[i]))

    def __iter__(self) -> Iterator[GaussianComponent]:
        for i in range(len(self)):
            yield self[i]

    def __repr__(self) -> str:
        if len(self) <= 4:
            body = ", ".join(f"({c.mean:.4g}, {c.variance:.4g}, {c.weight:.4g})" for c in self)
        else:
            body = f"{len(self)} components"
        return f"GaussianMixture({body})"

    # -- queries ------------------------------------------------------

    def evaluate(self, z):
        """Density at z (scalar or array).  Exponent underflow gives 0."""
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 0:
            return float(_k._eval_density(self.means, self.variances, self.weights, float(z)))
        diff = z[..., None] - self.means
        dens = np.exp(-diff * diff / (2.0 * self.variances)) / np.sqrt(2.0 * np.pi * self.variances)
        return dens @ self.weights

    def mean(self) -> float:
        """First moment of the mixture."""
        return float(self.weights @ self.means)

    def second_moment(self) -> float:
        return float(self.weights @ (self.means * self.means + self.variances))

    def variance(self) -> float:
        mu = self.mean()
        return self.second_moment() - mu * mu

    def to_triples(self) -> list[tuple[float, float, float]]:
        """[(mean, variance, weight), ...] with plain floats."""
        return [(float(a), float(b), float(c))
                for a, b, c in zip(self.means, self.variances, self.weights)]

    @classmethod
    def from_triples(cls, triples) -> "GaussianMixture":
        return cls.from_components(triples)


def moment_match(a: GaussianComponent | Sequence[float],
                 b: GaussianComponent | Sequence[float]) -> GaussianComponent:
    """Single Gaussian with the same total weight, mean and second moment as
    the two-component mixture {a, b}.

    The pair's weights must sum to one (callers holding an unnormalized pair
    normalize first); variances must be positive.
    """
    m1, v1, c1 = (float(x) for x in a)
    m2, v2, c2 = (float(x) for x in b)
    if v1 <= 0 or v2 <= 0:
        raise ValueError("variances must be positive")
    if c1 < 0 or c2 < 0:
        raise ValueError("weights must be non-negative")
    if abs(c1 + c2 - 1.0) > 1e-9:
        raise ValueError(f"pair weights must sum to 1, got {c1 + c2}")
    m, v = _k._moment_match(m1, v1, c1, m2, v2, c2)
    return GaussianComponent(float(m), float(v), 1.0)


def gql(a: GaussianComponent | Sequence[float],
        b: GaussianComponent | Sequence[float]) -> float:
    """Loss of collapsing the pair {a, b} into its moment match: the squared
    L2 distance between the two-component mixture and the single Gaussian.

    Weights may be unnormalized; they are normalized over the pair first.
    Negative round-off is clamped to zero.
    """
    m1, v1, c1 = (float(x) for x in a)
    m2, v2, c2 = (float(x) for x in b)
    if v1 <= 0 or v2 <= 0:
        raise ValueError("variances must be positive")
    if c1 < 0 or c2 < 0:
        raise ValueError("weights must be non-negative")
    if c1 + c2 <= 0:
        raise ValueError("at least one weight must be positive")
    return float(_k._gql(m1, v1, c1, m2, v2, c2))


def reduce(mix: GaussianMixture, params: ReductionParams) -> GaussianMixture:
    """Greedy reduction of ``mix`` under ``params``.

    Components below ``WEIGHT_FLOOR`` of total mass are dropped up front (if
    that would drop everything, the single heaviest component survives).
    Then, while the minimum pairwise loss is below ``params.theta`` or more
    than ``params.m_max`` components remain, the minimum-loss pair is
    replaced by its moment match carrying the pair's summed weight, appended
    after the surviving components.  Ties pick the earliest pair in list
    order.  The result is normalized; total weight, mean and second moment
    are preserved up to round-off.
    """
    if not isinstance(mix, GaussianMixture):
        raise TypeError("mix must be a GaussianMixture")
    if not isinstance(params, ReductionParams):
        raise TypeError("params must be ReductionParams")
    m, v, c = _k._floor_normalize(mix.means, mix.variances, mix.weights)
    m, v, c = _k._reduce(m, v, c, float(params.theta), int(params.m_max))
    return GaussianMixture(m, v, c)
