"""AR fitting: conditional least squares and the all-orders Levinson sweep."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import _kernels
from .exceptions import (
    LagTooLarge,
    NonPositiveDefiniteAcf,
    RankDeficientDesign,
    SeriesTooShort,
)
from .simulate import as_array

CMLE_LS = "cmle_ls"
YULE_WALKER_LD = "yule_walker_ld"
Z_95 = 1.96
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SampleAcf:
    gamma_hat: np.ndarray
    acf_hat: np.ndarray
    n: int

    @property
    def max_lag(self) -> int:
        return int(self.gamma_hat.size - 1)


@dataclass(frozen=True)
class CoefficientTable:
    """Fitted AR(1)..AR(pbar) coefficient vectors.

    ``coeffs`` is a pbar x pbar lower-triangular array; row ``l - 1`` holds
    the order-``l`` fit in its first ``l`` entries. ``reflection`` is empty on
    the least-squares path.
    """

    pbar: int
    coeffs: np.ndarray
    reflection: np.ndarray
    innovation_var: np.ndarray
    n_effective: int
    method: str

    def row(self, order: int) -> np.ndarray:
        if not 1 <= order <= self.pbar:
            raise IndexError(f"order {order} outside 1..{self.pbar}")
        return self.coeffs[order - 1, :order].copy()

    @property
    def rows(self) -> list[np.ndarray]:
        return [self.row(ell) for ell in range(1, self.pbar + 1)]

    def to_dict(self) -> dict:
        return {
            "pbar": self.pbar,
            "rows": [[float(x) for x in r] for r in self.rows],
            "reflection": [float(x) for x in self.reflection],
            "innovation_var": [float(x) for x in self.innovation_var],
            "n_effective": self.n_effective,
            "method": self.method,
        }


@dataclass(frozen=True)
class CmleFit:
    coefficients: np.ndarray
    innovation_var: float
    residuals: np.ndarray

    def __iter__(self):
        return iter((self.coefficients, self.innovation_var, self.residuals))


def lag_matrix(y: np.ndarray, order: int, start: int | None = None) -> np.ndarray:
    """Design with column j holding y_{t-j-1} for t = start..n-1 (0-based)."""
    n = y.size
    start = order if start is None else start
    # column-major, which is what LAPACK's QR wants
    x = np.empty((n - start, order), order="F")
    for j in range(order):
        x[:, j] = y[start - j - 1 : n - j - 1]
    return x


def _checked_qr(x, target):
    """R and Q^T target from one Householder QR, without forming Q."""
    z, r = linalg.qr_multiply(x, target, mode="right")
    d = np.abs(np.diag(r))
    scale = np.sqrt(np.sum(x * x, axis=0))
    if d.size and (scale.max() == 0.0 or np.any(d <= _RANK_TOL * scale.max())):
        raise RankDeficientDesign("lagged design matrix is rank deficient")
    return z, r


def fit_ar_cmle(series, order: int) -> CmleFit:
    """Least-squares regression of y_t on its ``order`` previous values.

    Rows t = order+1..n are used, so residuals have length n - order and the
    innovation variance is SSE / (n - order). No intercept is fitted.
    """
    y = as_array(series)
    order = int(order)
    if order < 1:
        raise ValueError("order must be at least 1")
    if y.size <= 2 * order:
        raise SeriesTooShort(f"n={y.size} too short for order {order}")
    if np.ptp(y) == 0.0:
        raise RankDeficientDesign("series has zero variance")
    x = lag_matrix(y, order)
    target = y[order:]
    z, r = _checked_qr(x, target)
    coef = linalg.solve_triangular(r, z)
    resid = target - x @ coef
    return CmleFit(coef, float(resid @ resid) / resid.size, resid)


def sample_acf(series, max_lag: int) -> SampleAcf:
    """Biased (divisor n) sample autocovariances and autocorrelations."""
    y = as_array(series)
    max_lag = int(max_lag)
    if max_lag < 0 or max_lag >= y.size:
        raise LagTooLarge(f"max_lag={max_lag} must be in [0, n={y.size})")
    gamma = _kernels.autocovariance(y, max_lag)
    acf = gamma / gamma[0] if gamma[0] > 0 else np.full_like(gamma, np.nan)
    return SampleAcf(gamma, acf, int(y.size))


def levinson_all_orders(acf: SampleAcf, pbar: int) -> CoefficientTable:
    """Yule-Walker fits of every order 1..pbar by the Levinson-Durbin recursion.

    O(pbar^2) on top of the ACF pass.
    """
    pbar = int(pbar)
    if pbar < 1:
        raise ValueError("pbar must be at least 1")
    if acf.max_lag < pbar:
        raise LagTooLarge(f"ACF has {acf.max_lag} lags, need {pbar}")
    gamma = np.ascontiguousarray(acf.gamma_hat[: pbar + 1])
    table, refl, v, status, where = _kernels.levinson(gamma, pbar)
    if status != _kernels.LEVINSON_OK:
        raise NonPositiveDefiniteAcf(
            f"reflection coefficient |k_{where}| >= 1; sample ACF is not positive definite"
        )
    return CoefficientTable(pbar, table, refl, v, acf.n, YULE_WALKER_LD)


def cmle_all_orders(series, pbar: int) -> CoefficientTable:
    """Least-squares fits of every order 1..pbar on a common design.

    All orders share rows t = pbar+1..n, so a single QR factorization of the
    n-pbar by pbar lagged design yields each nested fit by back substitution:
    O(n pbar^2 + pbar^3).
    """
    y = as_array(series)
    pbar = int(pbar)
    if pbar < 1:
        raise ValueError("pbar must be at least 1")
    if y.size <= 2 * pbar:
        raise SeriesTooShort(f"n={y.size} too short for pbar={pbar}")
    if np.ptp(y) == 0.0:
        raise RankDeficientDesign("series has zero variance")
    x = lag_matrix(y, pbar)
    target = y[pbar:]
    z, r = _checked_qr(x, target)
    table = np.zeros((pbar, pbar))
    for ell in range(1, pbar + 1):
        table[ell - 1, :ell] = linalg.solve_triangular(r[:ell, :ell], z[:ell])
    n_eff = target.size
    sse = float(target @ target) - np.concatenate(([0.0], np.cumsum(z * z)))
    v = np.maximum(sse, 0.0) / n_eff
    return CoefficientTable(pbar, table, np.zeros(0), v, n_eff, CMLE_LS)


def fit_all_orders(series, pbar: int, method: str = YULE_WALKER_LD) -> CoefficientTable:
    if method == YULE_WALKER_LD:
        return levinson_all_orders(sample_acf(series, pbar), pbar)
    if method == CMLE_LS:
        return cmle_all_orders(series, pbar)
    raise ValueError(f"unknown fitting method {method!r}")


def pacf(table: CoefficientTable):
    """Last coefficient of every row, and the 1.96/sqrt(n) zero band."""
    values = np.array([table.coeffs[ell - 1, ell - 1] for ell in range(1, table.pbar + 1)])
    return values, Z_95 / np.sqrt(table.n_effective)


def residuals_long_ar(series, coeffs) -> np.ndarray:
    """w_t = y_t - sum_i coeffs_i y_{t-i} for t = len(coeffs)+1..n."""
    y = as_array(series)
    c = np.ascontiguousarray(coeffs, dtype=np.float64).reshape(-1)
    if c.size >= y.size:
        raise SeriesTooShort(f"{c.size} coefficients need more than {y.size} values")
    return _kernels.ar_residuals(np.ascontiguousarray(y), c)
