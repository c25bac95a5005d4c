"""Numeric inner loops.

Each kernel exists twice: a numba ``@njit`` version and a plain numpy/scipy
version. The public names at the bottom of the module dispatch to the numba
version when numba is importable and ``ROLLAGE_DISABLE_NUMBA`` is unset.
Set ``ROLLAGE_DISABLE_NUMBA=1`` before import to force the fallback path.

Both paths agree to floating-point rounding; they are not bit-identical
because summation order differs.
"""
import os

import numpy as np
from scipy import signal

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get(
    "ROLLAGE_DISABLE_NUMBA", ""
).strip().lower() not in {"1", "true", "yes", "on"}

# status codes returned by the levinson kernels
LEVINSON_OK = 0
LEVINSON_NOT_PD = 1

# samples per chunk in the numba autocovariance kernel
ACF_BLOCK = 4096


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------


def autocovariance_np(y, max_lag):
    n = y.shape[0]
    x = y - y.mean()
    out = np.empty(max_lag + 1)
    for h in range(max_lag + 1):
        out[h] = np.dot(x[: n - h], x[h:]) / n
    return out


def levinson_np(gamma, pbar):
    table = np.zeros((pbar, pbar))
    refl = np.zeros(pbar)
    v = np.zeros(pbar + 1)
    v[0] = gamma[0]
    if v[0] <= 0.0:
        return table, refl, v, LEVINSON_NOT_PD, 0
    prev = np.zeros(0)
    for ell in range(1, pbar + 1):
        acc = gamma[ell] - np.dot(prev, gamma[ell - 1 : 0 : -1]) if ell > 1 else gamma[1]
        k = acc / v[ell - 1]
        if not abs(k) < 1.0:
            return table, refl, v, LEVINSON_NOT_PD, ell
        cur = np.empty(ell)
        cur[: ell - 1] = prev - k * prev[::-1]
        cur[ell - 1] = k
        table[ell - 1, :ell] = cur
        refl[ell - 1] = k
        v[ell] = v[ell - 1] * (1.0 - k * k)
        prev = cur
    return table, refl, v, LEVINSON_OK, pbar


def arma_filter_np(phi, theta, w):
    b = np.concatenate(([1.0], theta))
    a = np.concatenate(([1.0], -phi))
    return signal.lfilter(b, a, w)


def ar_residuals_np(y, coeffs):
    p = coeffs.shape[0]
    n = y.shape[0]
    out = y[p:].copy()
    for i in range(1, p + 1):
        out -= coeffs[i - 1] * y[p - i : n - i]
    return out


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def autocovariance_nb(y, max_lag):
        n = y.shape[0]
        mean = 0.0
        for t in range(n):
            mean += y[t]
        mean /= n
        x = np.empty(n)
        for t in range(n):
            x[t] = y[t] - mean
        out = np.zeros(max_lag + 1)
        # np.dot lowers to BLAS; a scalar loop here does not vectorize.
        # Blocking over t keeps each chunk cached across all lags, so the
        # cost stays linear in n once the series outgrows the cache.
        for b in range(0, n, ACF_BLOCK):
            e = min(b + ACF_BLOCK, n)
            for h in range(max_lag + 1):
                stop = min(e, n - h)
                if stop <= b:
                    break
                out[h] += np.dot(x[b:stop], x[b + h : stop + h])
        return out / n

    @njit(cache=True)
    def levinson_nb(gamma, pbar):
        table = np.zeros((pbar, pbar))
        refl = np.zeros(pbar)
        v = np.zeros(pbar + 1)
        v[0] = gamma[0]
        if v[0] <= 0.0:
            return table, refl, v, 1, 0
        for ell in range(1, pbar + 1):
            acc = gamma[ell]
            for j in range(1, ell):
                acc -= table[ell - 2, j - 1] * gamma[ell - j]
            k = acc / v[ell - 1]
            if not abs(k) < 1.0:
                return table, refl, v, 1, ell
            for j in range(ell - 1):
                table[ell - 1, j] = table[ell - 2, j] - k * table[ell - 2, ell - 2 - j]
            table[ell - 1, ell - 1] = k
            refl[ell - 1] = k
            v[ell] = v[ell - 1] * (1.0 - k * k)
        return table, refl, v, 0, pbar

    @njit(cache=True)
    def arma_filter_nb(phi, theta, w):
        p = phi.shape[0]
        q = theta.shape[0]
        n = w.shape[0]
        y = np.empty(n)
        for t in range(n):
            acc = w[t]
            for i in range(1, q + 1):
                if t - i < 0:
                    break
                acc += theta[i - 1] * w[t - i]
            for i in range(1, p + 1):
                if t - i < 0:
                    break
                acc += phi[i - 1] * y[t - i]
            y[t] = acc
        return y

    @njit(cache=True)
    def ar_residuals_nb(y, coeffs):
        p = coeffs.shape[0]
        n = y.shape[0]
        out = np.empty(n - p)
        for t in range(p, n):
            acc = y[t]
            for i in range(1, p + 1):
                acc -= coeffs[i - 1] * y[t - i]
            out[t - p] = acc
        return out


if USE_NUMBA:
    autocovariance = autocovariance_nb
    levinson = levinson_nb
    arma_filter = arma_filter_nb
    ar_residuals = ar_residuals_nb
else:
    autocovariance = autocovariance_np
    levinson = levinson_np
    arma_filter = arma_filter_np
    ar_residuals = ar_residuals_np


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
