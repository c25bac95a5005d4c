"""Durbin's two-stage estimator for MA and ARMA models.

Stage one fits a long AR(ptilde) and keeps its residuals as stand-ins for
the unobserved innovations. Stage two regresses y_t on lagged residuals (and
lagged observations for ARMA). The long-AR order comes from a pluggable rule:
Rollage*, BIC, GIC, or a fixed value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .arfit import CMLE_LS, YULE_WALKER_LD, _checked_qr, fit_all_orders, fit_ar_cmle, residuals_long_ar
from .criteria import bic_curve, gic_curve
from .exceptions import CriterionFailed, SeriesTooShort, ZeroTruthNorm
from .selection import DEFAULT_DELTA, select_ptilde_rollage_star
from .simulate import as_array

ROLLAGE_STAR = "rollage_star"
BIC = "bic"
GIC = "gic"
FIXED = "fixed"
CRITERIA = (ROLLAGE_STAR, BIC, GIC, FIXED)

# fitted linear predictors of the chosen long-AR order, natural log of n
MA_PREDICTORS = {
    ROLLAGE_STAR: {"q": -7.12, "log_n": 3.19, "q_log_n": 0.81},
    BIC: {"q": -9.39, "log_n": 3.27, "q_log_n": 1.06},
    GIC: {"q": -9.43, "log_n": 5.76, "q_log_n": 1.05},
}
ARMA_PREDICTORS = {
    ROLLAGE_STAR: {"p": 2.08, "q": -6.29, "log_n": 4.19, "p_log_n": -0.14, "q_log_n": 0.76},
    BIC: {"p": 1.87, "q": -8.12, "log_n": 3.55, "p_log_n": -0.11, "q_log_n": 0.94},
    GIC: {"p": 2.54, "q": -8.86, "log_n": 7.09, "p_log_n": -0.19, "q_log_n": 1.03},
}
PBAR_MARGIN = 1.25
# an automatic scan limit that Rollage* saturates is doubled this many times
PBAR_EXPANSIONS = 2


def predict_ptilde_linear(p, q: int, n: int, model: str = "ma", criterion: str = ROLLAGE_STAR) -> float:
    """Empirical linear predictor of the long-AR order a criterion picks.

    A starting hint only: the coefficients were fitted on one set of random
    models and do not generalize as ground truth.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    ln = math.log(n)
    if model == "ma":
        c = MA_PREDICTORS[criterion]
        return c["q"] * q + c["log_n"] * ln + c["q_log_n"] * q * ln
    if model == "arma":
        c = ARMA_PREDICTORS[criterion]
        p = 0 if p is None else p
        return (c["p"] * p + c["q"] * q + c["log_n"] * ln
                + c["p_log_n"] * p * ln + c["q_log_n"] * q * ln)
    raise ValueError(f"unknown model family {model!r}")


def default_pbar(p: int, q: int, n: int, criterion: str = ROLLAGE_STAR) -> int:
    """Scan limit for the long-AR order: the criterion's predictor plus 25%.

    Clipped below at 2q + 10 and above at n/20.
    """
    model = "arma" if p else "ma"
    hint = predict_ptilde_linear(p, q, n, model, criterion)
    pbar = max(math.ceil(PBAR_MARGIN * hint), 2 * q + 10)
    return int(min(pbar, n // 20))


@dataclass(frozen=True)
class PtildeRule:
    """How stage one picks its AR order."""

    criterion: str = ROLLAGE_STAR
    delta: float = DEFAULT_DELTA
    pbar: int | None = None
    ptilde: int | None = None
    alpha: float = 1.0

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.criterion == FIXED and self.ptilde is None:
            raise ValueError("the fixed rule needs ptilde")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class DurbinFit:
    ptilde: int
    criterion: str
    theta_hat: np.ndarray
    phi_hat: np.ndarray
    sigma2_hat: float
    n_used: int
    pbar: int | None = None
    relative_error: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate((self.phi_hat, self.theta_hat))

    def to_dict(self) -> dict:
        d = {
            "ptilde": self.ptilde,
            "criterion": self.criterion,
            "phi_hat": [float(x) for x in self.phi_hat],
            "theta_hat": [float(x) for x in self.theta_hat],
            "sigma2_hat": self.sigma2_hat,
            "n_used": self.n_used,
            "pbar": self.pbar,
        }
        if self.relative_error is not None:
            d["relative_error"] = self.relative_error
        return d


def choose_ptilde(y: np.ndarray, p: int, q: int, rule: PtildeRule) -> tuple[int, int | None]:
    """Stage-one order and the scan limit used to find it."""
    n = y.size
    if rule.criterion == FIXED:
        return int(rule.ptilde), None
    pbar = rule.pbar if rule.pbar is not None else default_pbar(p, q, n, rule.criterion)
    if rule.criterion == ROLLAGE_STAR:
        rep = select_ptilde_rollage_star(y, q, pbar, rule.delta)
        # the default limit is only a hint; widen it before giving up
        grow = PBAR_EXPANSIONS if rule.pbar is None else 0
        while rep.saturated and grow and 2 * pbar <= n // 20:
            pbar, grow = 2 * pbar, grow - 1
            rep = select_ptilde_rollage_star(y, q, pbar, rule.delta)
        if rep.saturated:
            raise CriterionFailed(
                f"Rollage* found no order below pbar={pbar} with ratio <= {rule.delta}"
            )
        return rep.p_hat, pbar
    curve = bic_curve(y, pbar) if rule.criterion == BIC else gic_curve(y, pbar, rule.alpha)
    # the long AR must be longer than the MA part
    return curve.argmin_above(q), pbar


def durbin_second_stage(y, w, p: int, q: int, offset: int):
    """Regress y_t on y_{t-1..t-p} and w_{t-1..t-q}.

    ``w[j]`` is the innovation proxy at time ``j + offset``. Rows start at
    the first t where every lag exists. Returns (phi_hat, theta_hat,
    sigma2_hat, n_used).
    """
    y = as_array(y)
    w = np.asarray(w, dtype=np.float64)
    n = y.size
    start = max(offset + q, p)
    if n - start <= 2 * (p + q):
        raise SeriesTooShort(f"only {n - start} usable rows for {p + q} regressors")
    t = np.arange(start, n)
    cols = [y[t - i] for i in range(1, p + 1)]
    cols += [w[t - i - offset] for i in range(1, q + 1)]
    x = np.column_stack(cols)
    target = y[start:]
    z, r = _checked_qr(x, target)
    beta = linalg.solve_triangular(r, z)
    resid = target - x @ beta
    return beta[:p].copy(), beta[p:].copy(), float(resid @ resid) / target.size, int(target.size)


def _fit(series, p: int, q: int, rule: PtildeRule, long_ar: str, truth) -> DurbinFit:
    y = as_array(series)
    if q < 1:
        raise ValueError("q must be at least 1")
    ptilde, pbar = choose_ptilde(y, p, q, rule)
    if ptilde <= q:
        raise CriterionFailed(f"ptilde={ptilde} must exceed q={q}")
    if ptilde >= y.size / 4:
        raise CriterionFailed(f"ptilde={ptilde} must be below n/4")
    if long_ar == CMLE_LS:
        coef = fit_ar_cmle(y, ptilde).coefficients
    elif long_ar == YULE_WALKER_LD:
        coef = fit_all_orders(y, ptilde, YULE_WALKER_LD).row(ptilde)
    else:
        raise ValueError(f"unknown long-AR method {long_ar!r}")
    w = residuals_long_ar(y, coef)
    phi_hat, theta_hat, s2, n_used = durbin_second_stage(y, w, p, q, ptilde)
    rel = None
    if truth is not None:
        rel = relative_error(np.concatenate((phi_hat, theta_hat)), truth)
    return DurbinFit(ptilde, rule.criterion, theta_hat, phi_hat, s2, n_used, pbar, rel)


def fit_ma_durbin(series, q: int, rule: PtildeRule | None = None, long_ar: str = CMLE_LS, truth=None) -> DurbinFit:
    """MA(q) coefficients by Durbin's method.

    ``truth``, when given, is the true theta vector and fills in
    ``relative_error``.
    """
    return _fit(series, 0, int(q), rule or PtildeRule(), long_ar, truth)


def fit_arma_durbin(series, p: int, q: int, rule: PtildeRule | None = None, long_ar: str = CMLE_LS, truth=None) -> DurbinFit:
    """ARMA(p, q) coefficients: stage two also includes p lags of the series.

    ``truth`` is the stacked (phi, theta) vector.
    """
    if p < 1:
        raise ValueError("p must be at least 1; use fit_ma_durbin for pure MA")
    return _fit(series, int(p), int(q), rule or PtildeRule(), long_ar, truth)


def relative_error(estimate, truth) -> float:
    """||estimate - truth|| / ||truth|| in the Euclidean norm."""
    est = np.asarray(estimate, dtype=np.float64).reshape(-1)
    tru = np.asarray(truth, dtype=np.float64).reshape(-1)
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {tru.shape}")
    norm = np.linalg.norm(tru)
    if norm == 0.0:
        raise ZeroTruthNorm("truth vector has zero norm")
    return float(np.linalg.norm(est - tru) / norm)


def relative_difference_ptilde(ptilde_alt: int, ptilde_rollage: int) -> float:
    """|ptilde_alt - ptilde_rollage| / ptilde_rollage."""
    if ptilde_rollage < 1:
        raise ValueError("ptilde_rollage must be at least 1")
    return abs(ptilde_alt - ptilde_rollage) / ptilde_rollage
