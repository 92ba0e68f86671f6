"""numba kernels for the Monte Carlo engine.

Random numbers come from SplitMix64 (Steele, Lea & Flood 2014). Trial ``i``
under master seed ``s`` starts from state ``mix(mix(s) + (i + 1) * GOLDEN)``
and advances by ``GOLDEN`` per draw, so every trial's stream is a pure
function of ``(s, i)`` and trials can run in any order or on any worker.
"""

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_S58 = np.uint64(58)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_INV53 = 1.0 / 9007199254740992.0

# de Bruijn sequence for lowest-set-bit index
_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)
_DEBRUIJN_IDX = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DEBRUIJN_IDX[int(((1 << _i) * 0x03F79D71B4CB0A89) % (1 << 64)) >> 58] = _i


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def trial_state(seed, i):
    return mix64(mix64(seed) + np.uint64(i + 1) * GOLDEN)


@njit(cache=True)
def uniforms(seed, trial, count):
    """First ``count`` uniforms of a trial stream (for tests and docs)."""
    out = np.empty(count)
    state = trial_state(seed, trial)
    for k in range(count):
        state += GOLDEN
        out[k] = (mix64(state) >> _S11) * _INV53
    return out


@njit(cache=True, nogil=True)
def recovery_times_gf2(K, p, eps, max_tx, seed, start, count, out):
    """Transmissions until rank K over GF(2), or -1 if not reached within max_tx.

    Columns are bit-packed into W = ceil(K/64) words; the basis is keyed by
    the lowest set bit of each stored vector.
    """
    W = (K + 63) // 64
    basis = np.zeros((K, W), dtype=np.uint64)
    has = np.zeros(K, dtype=np.bool_)
    v = np.zeros(W, dtype=np.uint64)
    debruijn = _DEBRUIJN_IDX
    for k in range(count):
        state = trial_state(seed, start + k)
        has[:] = False
        rank = 0
        result = -1
        t = 0
        while t < max_tx:
            t += 1
            if eps > 0.0:
                state += GOLDEN
                if (mix64(state) >> _S11) * _INV53 < eps:
                    continue
            v[:] = _ZERO
            for i in range(K):
                state += GOLDEN
                if (mix64(state) >> _S11) * _INV53 >= p:
                    v[i >> 6] |= _ONE << np.uint64(i & 63)
            w = 0
            while True:
                while w < W and v[w] == _ZERO:
                    w += 1
                if w == W:
                    break
                low = v[w] & (~v[w] + _ONE)
                idx = w * 64 + debruijn[(low * _DEBRUIJN) >> _S58]
                if has[idx]:
                    for j in range(w, W):
                        v[j] ^= basis[idx, j]
                else:
                    for j in range(W):
                        basis[idx, j] = v[j]
                    has[idx] = True
                    rank += 1
                    break
            if rank == K:
                result = t
                break
        out[k] = result


@njit(cache=True, nogil=True)
def recovery_times_gfq(K, q, p, eps, max_tx, seed, start, count, exp_t, log_t, inv_t, out):
    """As recovery_times_gf2 for GF(q), q > 2, with log/antilog table arithmetic.

    Stored basis rows have their pivot (first nonzero) scaled to 1.
    """
    basis = np.zeros((K, K), dtype=np.int64)
    has = np.zeros(K, dtype=np.bool_)
    v = np.zeros(K, dtype=np.int64)
    qm1 = np.uint64(q - 1)
    for k in range(count):
        state = trial_state(seed, start + k)
        has[:] = False
        rank = 0
        result = -1
        t = 0
        while t < max_tx:
            t += 1
            if eps > 0.0:
                state += GOLDEN
                if (mix64(state) >> _S11) * _INV53 < eps:
                    continue
            for i in range(K):
                state += GOLDEN
                if (mix64(state) >> _S11) * _INV53 < p:
                    v[i] = 0
                else:
                    state += GOLDEN
                    v[i] = 1 + np.int64(((mix64(state) >> _S32) * qm1) >> _S32)
            for i in range(K):
                c = v[i]
                if c == 0:
                    continue
                if has[i]:
                    lc = log_t[c]
                    for j in range(i, K):
                        b = basis[i, j]
                        if b != 0:
                            v[j] ^= exp_t[lc + log_t[b]]
                else:
                    li = log_t[inv_t[c]]
                    for j in range(i, K):
                        x = v[j]
                        basis[i, j] = exp_t[li + log_t[x]] if x != 0 else 0
                    has[i] = True
                    rank += 1
                    break
            if rank == K:
                result = t
                break
        out[k] = result
