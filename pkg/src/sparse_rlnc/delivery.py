"""User delivery probability, average transmission overhead and error metrics.

A provider maps ``(K, n)`` to a full-rank probability for a fixed coefficient
law. :func:`delivery_probability` mixes provider values over the binomial
number of packets that survive the erasure channel.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.stats import binom

from . import analytic
from .analytic import AooConfig
from .gf import CodingDistribution
from .montecarlo import SimConfig, derive_seed, estimate_rank_prob

log = logging.getLogger(__name__)

METHODS = ("stein-chen", "lower-bound", "upper-bound", "exact-classic", "monte-carlo")


class OverheadDidNotConverge(RuntimeError):
    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


class RankProbProvider:
    """Base class: subclasses implement ``_value(K, n)`` for n >= K."""

    name = "abstract"

    def __init__(self, dist: CodingDistribution):
        self.dist = dist
        self._cache: dict[tuple[int, int], float] = {}

    @property
    def p(self) -> float:
        return self.dist.p

    @property
    def q(self) -> int:
        return self.dist.q

    def __call__(self, K: int, n: int) -> float:
        if n < K:
            return 0.0
        key = (K, n)
        if key not in self._cache:
            self._cache[key] = min(1.0, max(0.0, self._value(K, n)))
        return self._cache[key]

    def _value(self, K: int, n: int) -> float:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(p={self.p}, q={self.q})"


class SteinChen(RankProbProvider):
    """Order-m Stein-Chen approximation.

    With ``fixed_m`` set every n uses that order; otherwise the order is
    re-solved per n from ``aoo``. ``aoo=None`` selects tau = 1e-10 and
    m_hat = ceil(3K/4) for whatever K is requested.
    """

    name = "stein-chen"

    def __init__(self, dist: CodingDistribution, aoo: AooConfig | None = None,
                 fixed_m: int | None = None):
        super().__init__(dist)
        if fixed_m is not None and fixed_m < 2:
            raise ValueError(f"fixed order must be >= 2, got {fixed_m}")
        self.aoo = aoo
        self.fixed_m = fixed_m

    def order(self, K: int, n: int) -> int:
        if self.fixed_m is not None:
            return self.fixed_m
        cfg = self.aoo or AooConfig(analytic.DEFAULT_TAU, analytic.default_m_hat(K))
        return analytic.solve_aoo(K, n, self.p, self.q, cfg)

    def _value(self, K, n):
        if self.p == 1.0:
            return 0.0
        return analytic.full_rank_prob_stein_chen(K, n, self.p, self.q, self.order(K, n))


class LowerBound(RankProbProvider):
    name = "lower-bound"

    def _value(self, K, n):
        return analytic.full_rank_lower_bound(K, n, self.p, self.q)


class UpperBound(RankProbProvider):
    name = "upper-bound"

    def _value(self, K, n):
        return analytic.full_rank_upper_bound(K, n, self.p, self.q)


class ExactClassic(RankProbProvider):
    name = "exact-classic"

    def __init__(self, dist: CodingDistribution):
        if not dist.is_classic:
            raise ValueError(f"exact-classic needs p == 1/q = {1 / dist.q}, got p = {dist.p}")
        super().__init__(dist)

    def _value(self, K, n):
        return analytic.full_rank_prob_exact_classic(K, n, self.q)


class MonteCarlo(RankProbProvider):
    """Simulated full-rank frequency; each (K, n) gets its own derived seed."""

    name = "monte-carlo"

    def __init__(self, dist: CodingDistribution, cfg: SimConfig):
        super().__init__(dist)
        self.cfg = cfg
        self.estimates = {}

    def _value(self, K, n):
        cfg = SimConfig(self.cfg.trials, derive_seed(self.cfg.seed, K, n), None, self.cfg.workers)
        est = estimate_rank_prob(K, n, self.dist, cfg)
        self.estimates[(K, n)] = est
        return est.mean


def make_provider(method: str, dist: CodingDistribution, *, aoo: AooConfig | None = None,
                  fixed_m: int | None = None, sim: SimConfig | None = None) -> RankProbProvider:
    if method == "stein-chen":
        return SteinChen(dist, aoo, fixed_m)
    if method == "lower-bound":
        return LowerBound(dist)
    if method == "upper-bound":
        return UpperBound(dist)
    if method == "exact-classic":
        return ExactClassic(dist)
    if method == "monte-carlo":
        return MonteCarlo(dist, sim or SimConfig())
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def delivery_probability(K: int, N: int, epsilon: float, provider: RankProbProvider) -> float:
    """sum_{n=K}^N C(N, n) (1-eps)^n eps^(N-n) R_{K,n}, clamped to [0, 1]."""
    if N < K:
        raise ValueError(f"need N >= K, got K={K}, N={N}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    ns = np.arange(K, N + 1)
    weights = binom.pmf(ns, N, 1.0 - epsilon)
    values = np.array([provider(K, int(n)) for n in ns])
    return min(1.0, max(0.0, math.fsum((weights * values).tolist())))


def delivery_curve(K: int, Ns, epsilon: float, provider: RankProbProvider) -> list[float]:
    return [delivery_probability(K, int(N), epsilon, provider) for N in Ns]


def average_overhead(K: int, epsilon: float, provider: RankProbProvider, tail_tol: float = 1e-9,
                     t_max: int | None = None) -> float:
    """E[T] - K for the recovery time T implied by the delivery curve.

    With R_t the delivery probability after t transmissions, the pmf of T is
    R_t - R_{t-1}; negative increments from non-monotone providers are
    clamped to 0 by carrying the running maximum. E[T] - K is accumulated as
    sum_{t >= K} (1 - R_t) on that envelope and truncated once 1 - R_t < tail_tol.
    """
    t_max = 50 * K if t_max is None else t_max
    envelope = 0.0
    clamps = 0
    total = 0.0
    for t in range(K, t_max + 1):
        r = delivery_probability(K, t, epsilon, provider)
        if r < envelope:
            clamps += 1
        envelope = max(envelope, r)
        tail = 1.0 - envelope
        if tail < tail_tol:
            if clamps:
                log.info("average_overhead: %d non-monotone steps clamped", clamps)
            return total
        total += tail
    raise OverheadDidNotConverge(
        f"tail {1.0 - envelope:.3g} above {tail_tol:g} at t_max={t_max} (K={K}, eps={epsilon})", total)


def mse(model_series, sim_series) -> float:
    a = np.asarray(model_series, dtype=float)
    b = np.asarray(sim_series, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty series")
    return float(np.mean((a - b) ** 2))


def max_abs_gap(model_series, sim_series) -> float:
    a = np.asarray(model_series, dtype=float)
    b = np.asarray(sim_series, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))
