"""Seeded Monte Carlo estimates of full-rank, delivery and overhead quantities.

Every estimator reduces to one primitive: per trial, stream coded packets
through an erasure channel into an incremental decoder and record the
transmission index at which rank K is reached (:func:`recovery_times`).
Success after N transmissions is then ``T <= N``, so a whole N-sweep comes
from one batch of trials (common random numbers) and is monotone per trial.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import _kernels
from .gf import CodingDistribution

log = logging.getLogger(__name__)

Z99 = float(norm.ppf(0.995))
CENSOR_WARN_FRACTION = 0.01
_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    trials: int = 10_000
    seed: int = 0
    max_transmissions: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def tx_cap(self, K: int) -> int:
        return self.max_transmissions if self.max_transmissions is not None else 50 * K


@dataclass(frozen=True)
class Estimate:
    mean: float
    trials: int
    ci_half_width: float
    successes: int | None = None
    censored: int = 0
    warning: str | None = None

    @property
    def censored_fraction(self) -> float:
        return self.censored / self.trials

    @property
    def sigma(self) -> float:
        """Standard error (the 99% half-width divided by z)."""
        return self.ci_half_width / Z99


def bernoulli_estimate(successes: int, trials: int) -> Estimate:
    mean = successes / trials
    return Estimate(mean, trials, Z99 * math.sqrt(mean * (1.0 - mean) / trials), successes)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a sub-experiment, via numpy's SeedSequence."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def recovery_times(K: int, epsilon: float, dist: CodingDistribution, cfg: SimConfig,
                   max_transmissions: int) -> np.ndarray:
    """Per-trial transmission count until full rank; -1 where the cap was hit first."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    out = np.full(cfg.trials, -1, dtype=np.int64)
    if max_transmissions < K:
        return out
    seed = np.uint64(cfg.seed)
    f = dist.field

    def run(start):
        count = min(_CHUNK, cfg.trials - start)
        view = out[start:start + count]
        if dist.q == 2:
            _kernels.recovery_times_gf2(K, dist.p, epsilon, max_transmissions, seed, start, count, view)
        else:
            _kernels.recovery_times_gfq(K, dist.q, dist.p, epsilon, max_transmissions, seed, start,
                                        count, f.exp, f.log, f.inv_table.astype(np.int64), view)

    starts = range(0, cfg.trials, _CHUNK)
    if cfg.workers == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            list(pool.map(run, starts))
    return out


def estimate_rank_prob_curve(K: int, ns, dist: CodingDistribution, cfg: SimConfig) -> list[Estimate]:
    """Full-rank frequency of K x n matrices for each n, sharing one set of column streams."""
    ns = [int(n) for n in ns]
    top = max(ns, default=0)
    T = recovery_times(K, 0.0, dist, cfg, top) if top >= K else np.full(cfg.trials, -1)
    return [bernoulli_estimate(int(np.count_nonzero((T > 0) & (T <= n))), cfg.trials) for n in ns]


def estimate_rank_prob(K: int, n: int, dist: CodingDistribution, cfg: SimConfig) -> Estimate:
    if n < K:
        return bernoulli_estimate(0, cfg.trials)
    return estimate_rank_prob_curve(K, [n], dist, cfg)[0]


def estimate_delivery_curve(K: int, Ns, epsilon: float, dist: CodingDistribution,
                            cfg: SimConfig) -> list[Estimate]:
    """Delivery frequency after N transmissions, for each N, from one trial batch."""
    Ns = [int(N) for N in Ns]
    if any(N < 0 for N in Ns):
        raise ValueError("N must be >= 0")
    top = max(Ns, default=0)
    T = recovery_times(K, epsilon, dist, cfg, top)
    return [bernoulli_estimate(int(np.count_nonzero((T > 0) & (T <= N))), cfg.trials) for N in Ns]


def estimate_delivery_prob(K: int, N: int, epsilon: float, dist: CodingDistribution,
                           cfg: SimConfig) -> Estimate:
    return estimate_delivery_curve(K, [N], epsilon, dist, cfg)[0]


def estimate_overhead(K: int, epsilon: float, dist: CodingDistribution, cfg: SimConfig) -> Estimate:
    """Mean of T - K over trials, T the recovery time.

    Trials still undecoded at the transmission cap enter with T = cap and are
    counted in ``censored``; above 1% censoring the estimate carries a warning.
    """
    cap = cfg.tx_cap(K)
    T = recovery_times(K, epsilon, dist, cfg, cap)
    censored = int(np.count_nonzero(T < 0))
    overhead = np.where(T < 0, cap, T).astype(float) - K
    mean = float(overhead.mean())
    sd = float(overhead.std(ddof=1)) if cfg.trials > 1 else 0.0
    warning = None
    if censored > CENSOR_WARN_FRACTION * cfg.trials:
        warning = f"{censored}/{cfg.trials} trials censored at {cap} transmissions"
        log.warning("overhead K=%d eps=%g: %s", K, epsilon, warning)
    return Estimate(mean, cfg.trials, Z99 * sd / math.sqrt(cfg.trials), cfg.trials - censored,
                    censored, warning)
