"""BIC and GIC curves for choosing the long-AR order.

Both are computed from one Levinson sweep. The BIC residual variance for order
k is the Yule-Walker innovation variance v_k, which plays the role of
SSE(k)/n; the GIC residual sum of squares follows RSS_p = RSS_{p-1}(1 - k_p^2)
with RSS_0 = N * gamma_0, so RSS_p / N equals v_p as well. The two curves
differ only in their penalties.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arfit import CoefficientTable, levinson_all_orders, sample_acf
from .exceptions import NonPositiveDefiniteAcf, PbarTooLarge
from .simulate import as_array

BIC = "bic"
GIC = "gic"


@dataclass(frozen=True)
class CriterionCurve:
    """Criterion values for orders 0..pbar.

    Order 0 is reported but never selected; ``argmin`` is the smallest order
    >= 1 attaining the minimum.
    """

    values: np.ndarray
    argmin: int
    criterion: str

    def argmin_above(self, floor: int) -> int:
        """Minimizing order restricted to orders > ``floor``."""
        if floor + 1 >= self.values.size:
            raise ValueError(f"no candidate orders above {floor}")
        return floor + 1 + int(np.argmin(self.values[floor + 1 :]))

    def to_rows(self):
        return [(k, float(v)) for k, v in enumerate(self.values)]


def bic_value(sse: float, n: int, k: int) -> float:
    """log(SSE/n) + k log(n) / n."""
    return float(np.log(sse / n) + k * np.log(n) / n)


def gic_values(gamma0: float, reflection, N: int, alpha: float = 1.0) -> np.ndarray:
    """GIC(p, alpha) = log(RSS_p / N) + alpha p / N for p = 0..len(reflection)."""
    k = np.asarray(reflection, dtype=np.float64)
    if np.any(np.abs(k) >= 1.0):
        raise NonPositiveDefiniteAcf("reflection coefficients must lie in (-1, 1)")
    rss = N * gamma0 * np.concatenate(([1.0], np.cumprod(1.0 - k * k)))
    p = np.arange(k.size + 1)
    return np.log(rss / N) + alpha * p / N


def _levinson_table(series, pbar):
    y = as_array(series)
    pbar = int(pbar)
    if pbar < 1:
        raise ValueError("pbar must be at least 1")
    if pbar >= y.size / 2:
        raise PbarTooLarge(f"pbar={pbar} must be below n/2 = {y.size / 2:g}")
    return levinson_all_orders(sample_acf(y, pbar), pbar)


def bic_curve(series, pbar: int, table: CoefficientTable | None = None, log=np.log) -> CriterionCurve:
    """BIC(k) = log(sigma2_k) + k log(n)/n for k = 0..pbar.

    ``log`` exists so the base-invariance of the argmin can be checked.
    """
    if table is None:
        table = _levinson_table(series, pbar)
    n = table.n_effective
    v = table.innovation_var[: table.pbar + 1]
    k = np.arange(v.size)
    values = log(v) + k * log(n) / n
    return CriterionCurve(values, 1 + int(np.argmin(values[1:])), BIC)


def gic_curve(
    series, pbar: int, alpha: float = 1.0, table: CoefficientTable | None = None
) -> CriterionCurve:
    """GIC(p, alpha) for p = 0..pbar from the reflection coefficients."""
    if table is None:
        table = _levinson_table(series, pbar)
    values = gic_values(table.innovation_var[0], table.reflection, table.n_effective, alpha)
    return CriterionCurve(values, 1 + int(np.argmin(values[1:])), GIC)
