"""Closed-form and approximate full-rank probabilities for sparse random matrices.

All functions take the model parameters directly: ``K`` rows (source
packets), ``n`` columns (received packets), zero probability ``p`` and field
size ``q``. For ``n < K`` every full-rank probability is exactly 0.

The Stein-Chen approximation conditions on the matrix having no zero rows
and approximates the number of minimal zero-sum row subsets by a Poisson
variable with mean ``sum(lambda_terms(...))``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

DEFAULT_TAU = 1e-10


def default_m_hat(K: int) -> int:
    """ceil(3K/4), kept inside [2, K]."""
    return max(2, min(K, math.ceil(3 * K / 4)))


def _zero_row_prob(n: int, p: float) -> float:
    """p^n, the chance a single row of length n is all zeros."""
    if p == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(p))


def log_no_zero_rows(K: int, n: int, p: float) -> float:
    """log((1 - p^n)^K), stable when p^n is tiny."""
    pn = _zero_row_prob(n, p)
    if pn >= 1.0:
        return -math.inf
    return K * math.log1p(-pn)


def no_zero_rows_prob(K: int, n: int, p: float) -> float:
    return math.exp(log_no_zero_rows(K, n, p))


def _rho_base(l: int, p: float, q: int) -> float:
    x = 1.0 - q * (1.0 - p) / (q - 1)
    return max(0.0, (1.0 + (q - 1) * x**l) / q)


def rho(l: int, n: int, p: float, q: int) -> float:
    """Probability that l iid rows of length n sum to the zero vector."""
    if l < 1 or n < 0:
        raise ValueError(f"need l >= 1 and n >= 0, got l={l}, n={n}")
    if l == 1:
        return _zero_row_prob(n, p)
    return _rho_base(l, p, q) ** n


def _log_rho(L: int, n: int, p: float, q: int) -> np.ndarray:
    out = np.empty(L)
    for l in range(1, L + 1):
        r = rho(l, n, p, q)
        out[l - 1] = math.log(r) if r > 0.0 else -math.inf
    return out


@dataclass(frozen=True)
class PiTable:
    """Recursive approximations pi~_1..pi~_L for one (n, p, q).

    ``values[l - 1]`` holds pi~_l. ``clamp_events`` counts entries that came
    out negative from cancellation and were set to 0.
    """

    n: int
    p: float
    q: int
    values: np.ndarray
    clamp_events: int

    @property
    def L(self) -> int:
        return len(self.values)

    def __getitem__(self, l: int) -> float:
        if not 1 <= l <= self.L:
            raise IndexError(f"pi~ index {l} outside 1..{self.L}")
        return float(self.values[l - 1])


def pi_tilde(L: int, n: int, p: float, q: int) -> PiTable:
    """pi~_l = rho_l - sum_{s=1}^{l-1} C(l-1, s) rho_s pi~_{l-s}, with pi~_1 = rho_1.

    Each subtracted sum is accumulated with math.fsum; terms are formed in
    log space so the binomials never overflow.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    log_rho = _log_rho(L, n, p, q)
    rho_vals = np.exp(log_rho)
    vals = np.zeros(L)
    log_vals = np.full(L, -math.inf)
    vals[0] = rho_vals[0]
    log_vals[0] = log_rho[0]
    lgam = gammaln(np.arange(L + 1) + 1.0)  # lgam[k] = log k!
    clamps = 0
    with np.errstate(under="ignore"):
        for l in range(2, L + 1):
            s = np.arange(1, l)
            log_terms = lgam[l - 1] - lgam[s] - lgam[l - 1 - s] + log_rho[s - 1] + log_vals[l - s - 1]
            v = math.fsum([rho_vals[l - 1], *(-np.exp(log_terms)).tolist()])
            if v < 0.0:
                clamps += 1
                v = 0.0
            vals[l - 1] = v
            log_vals[l - 1] = math.log(v) if v > 0.0 else -math.inf
    return PiTable(n, p, q, vals, clamps)


_pi_cache: dict[tuple[int, float, int], PiTable] = {}
_pi_lock = threading.Lock()


def cached_pi_tilde(L: int, n: int, p: float, q: int) -> PiTable:
    """pi_tilde with memoisation on (n, p, q); pi~ does not depend on K."""
    key = (int(n), float(p), int(q))
    table = _pi_cache.get(key)
    if table is not None and table.L >= L:
        return table
    table = pi_tilde(L, n, p, q)
    with _pi_lock:
        current = _pi_cache.get(key)
        if current is None or current.L < table.L:
            _pi_cache[key] = table
    return table


def lambda_terms(K: int, n: int, p: float, q: int) -> np.ndarray:
    """lambda_2..lambda_K; ``out[l - 2]`` is lambda_l.

    lambda_l = C(K, l) pi~_l / (1 - p^n)^l, evaluated in log space.
    """
    if n < K:
        raise ValueError(f"lambda terms need n >= K, got K={K}, n={n}")
    if K < 2:
        return np.zeros(0)
    pn = _zero_row_prob(n, p)
    if pn >= 1.0:
        raise ValueError("p^n == 1: every row is zero and the conditioning event is empty")
    table = cached_pi_tilde(K, n, p, q)
    l = np.arange(2, K + 1)
    pis = table.values[1:K]
    log_binom = gammaln(K + 1.0) - gammaln(l + 1.0) - gammaln(K - l + 1.0)
    with np.errstate(divide="ignore", under="ignore"):
        log_lam = log_binom + np.log(pis) - l * math.log1p(-pn)
        return np.exp(log_lam)


def stein_chen_orders(K: int, n: int, p: float, q: int) -> np.ndarray:
    """R^(m) for m = 1..K as ``out[m - 1]``.

    R^(1) is the no-zero-rows factor alone; R^(m) adds lambda_2..lambda_m.
    The partial sums are sequential, so the sequence is non-increasing in m.
    """
    if n < K:
        return np.zeros(K)
    if _zero_row_prob(n, p) >= 1.0:
        return np.zeros(K)
    base = no_zero_rows_prob(K, n, p)
    partial = np.concatenate([[0.0], np.cumsum(lambda_terms(K, n, p, q))])
    return np.array([base * math.exp(-s) for s in partial.tolist()])


def full_rank_prob_stein_chen(K: int, n: int, p: float, q: int, m: int | None = None) -> float:
    """(1 - p^n)^K exp(-sum_{l=2}^m lambda_l); m defaults to K, m > K acts as K."""
    if m is None:
        m = K
    if m < 2:
        raise ValueError(f"approximation order must be >= 2, got {m}")
    if n < K:
        return 0.0
    orders = stein_chen_orders(K, n, p, q)
    return float(orders[min(m, K) - 1])


@dataclass(frozen=True)
class AooConfig:
    """Target error tau and order cap m_hat (None means no cap beyond K).

    ``require_global_peak`` additionally refuses to stop before the largest
    single-step change of R^(m); the default local rule can stop on an early
    plateau when K is large.
    """

    tau: float = DEFAULT_TAU
    m_hat: int | None = None
    require_global_peak: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.m_hat is not None and self.m_hat < 2:
            raise ValueError(f"m_hat must be >= 2, got {self.m_hat}")

    def cap(self, K: int) -> int:
        return max(2, K if self.m_hat is None else min(self.m_hat, K))


def solve_aoo(K: int, n: int, p: float, q: int, cfg: AooConfig = AooConfig()) -> int:
    """Smallest order m whose last added term moved R by at most tau.

    With e(m) = R^(m) - R^(m+1) and R^(1) the no-zero-rows factor, return the
    first m in 2..cap with e(m-1) <= tau and, past the first step, e(m-2) >=
    e(m-1) (the error is already on its decreasing side). Falls back to the
    cap min(m_hat, K).
    """
    cap = cfg.cap(K)
    if n < K or K < 2:
        return cap if K >= 2 else 2
    R = np.concatenate([[np.nan], stein_chen_orders(K, n, p, q)])  # R[m] = R^(m)

    def e(m):
        return R[m] - R[m + 1]

    start = 2
    if cfg.require_global_peak:
        steps = R[1:K] - R[2:K + 1]  # e(1)..e(K-1)
        start = max(2, int(np.argmax(steps)) + 2)
    for m in range(start, cap + 1):
        if e(m - 1) <= cfg.tau and (m == 2 or e(m - 2) >= e(m - 1)):
            return m
    return cap


def full_rank_prob_exact_classic(K: int, n: int, q: int) -> float:
    """prod_{t=0}^{K-1} (1 - q^-(n-t)), exact for uniform coefficients."""
    if n < K:
        return 0.0
    return math.exp(math.fsum(math.log1p(-float(q) ** -(n - t)) for t in range(K)))


def eta_bounds(t: int, K: int, p: float, q: int) -> tuple[float, float]:
    """(eta_max(t), eta_min(t)): bounds on the non-full-rank probability of a K x t matrix."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t < K:
        return 1.0, 1.0
    nonzero = (1.0 - p) / (q - 1)

    def eta(a):
        if a >= 1.0:
            return 1.0
        return -math.expm1(math.fsum(math.log1p(-(a ** (t - w))) for w in range(K)))

    return eta(max(p, nonzero)), eta(min(p, nonzero))


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def full_rank_lower_bound(K: int, n: int, p: float, q: int) -> float:
    """1 - min{eta_max(n), sum_t C(K,t) (q-1)^(t-1) rho_t}, clamped to [0, 1]."""
    if n < K:
        return 0.0
    eta_max, _ = eta_bounds(n, K, p, q)
    t = np.arange(1, K + 1)
    log_binom = gammaln(K + 1.0) - gammaln(t + 1.0) - gammaln(K - t + 1.0)
    log_rho = _log_rho(K, n, p, q)
    with np.errstate(over="ignore", under="ignore"):
        union = math.fsum(np.exp(log_binom + (t - 1) * math.log(q - 1) + log_rho).tolist())
    return _clamp01(1.0 - min(eta_max, union))


def full_rank_upper_bound(K: int, n: int, p: float, q: int) -> float:
    """1 - max{eta_min(n), sum_t C(K,t) p^(nt) (1-p^n)^(K-t)}, clamped to [0, 1].

    The second sum is the probability of at least one zero row, which equals
    1 - (1 - p^n)^K.
    """
    if n < K:
        return 0.0
    _, eta_min = eta_bounds(n, K, p, q)
    some_zero_row = -math.expm1(log_no_zero_rows(K, n, p))
    return _clamp01(1.0 - max(eta_min, some_zero_row))
