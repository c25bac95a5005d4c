"""Rolling-average order selection.

Fitting AR(m) to a causal AR(l) series leaves the over-fitted coefficients
l+1..m asymptotically normal around zero. Their mean, the rolling average
``rbar[l, m]``, has asymptotic variance ``sigma2[l, m] / n`` where the
variance depends only on the true AR(l) coefficients. Comparing standardized
rolling averages against 1.96 gives an order test that pools every
over-fitted coefficient instead of only the last one.

Indexing: ``rbar[h, m]`` averages coefficients h+1..m of the order-m fit.
Row h = 0 (the white-noise null, averaging all m coefficients) is included so
that an AR(1) can be told apart from noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arfit import CMLE_LS, CoefficientTable, fit_all_orders
from .exceptions import OrderMismatch, PbarTooLarge, PbarTooSmall
from .models import nlrc_closed_form
from .simulate import as_array

Z_95 = 1.96
MIN_FRACTION = 0.05
DEFAULT_DELTA = 3.0
ROLLAGE_5PCT = "rollage_5pct"
ROLLAGE_STAR_DELTA = "rollage_star_delta"


def _phi0_partial_sums(phi):
    return np.cumsum(np.concatenate(([-1.0], np.asarray(phi, dtype=np.float64))))


def rolling_variance_row(phi, mmax: int) -> np.ndarray:
    """sigma2[l, m] for m = l+1..mmax where l = len(phi).

    With S_j = phi_0 + ... + phi_j, (m-l)^2 sigma2 = sum_{i<m-l} S_{min(i,l)}^2.
    """
    ell = len(phi)
    s2 = _phi0_partial_sums(phi) ** 2
    k = np.arange(1, mmax - ell + 1)
    terms = s2[np.minimum(k - 1, ell)]
    return np.cumsum(terms) / k.astype(np.float64) ** 2


def rolling_average_variance(phi, ell: int, m: int) -> float:
    """Asymptotic variance of sqrt(n) * rbar[ell, m] via the one-step recursion."""
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    if phi.size != ell:
        raise OrderMismatch(f"phi has length {phi.size}, expected {ell}")
    if ell < 1 or m <= ell:
        raise OrderMismatch(f"need m > l >= 1, got l={ell}, m={m}")
    s = _phi0_partial_sums(phi)
    acc = s[0] ** 2
    for mm in range(ell + 2, m + 1):
        # full sum phi_0..phi_l once m reaches 2l+1
        acc += s[min(mm - ell - 1, ell)] ** 2
    return acc / (m - ell) ** 2


def rolling_average_variance_closed(phi, ell: int, m: int) -> float:
    """General-solution form: two regimes split at m = 2l."""
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    if phi.size != ell or ell < 1 or m <= ell:
        raise OrderMismatch(f"need len(phi) == l >= 1 and m > l, got l={ell}, m={m}")
    s = _phi0_partial_sums(phi)
    k = m - ell
    if k <= ell:
        return float(np.sum(s[:k] ** 2)) / k**2
    head = float(np.sum(s[:ell] ** 2))
    return (head + (k - ell) * s[ell] ** 2) / k**2


def variance_vs_nlrc_oracle(phi, ell: int, m: int, tol: float = 1e-10) -> bool:
    """Does the recursion match the normalized entry sum of the NLRC block?"""
    lhs = rolling_average_variance(phi, ell, m)
    rhs = nlrc_closed_form(phi, ell, m).sum() / (m - ell) ** 2
    return abs(lhs - rhs) <= tol


@dataclass(frozen=True)
class RollingAverageTable:
    """Rolling averages and plug-in variances, indexed ``[h, m]``, 0 <= h < m <= pbar.

    Entries with h >= m are NaN. ``sigma2[h, m]`` uses the order-h fit as the
    plug-in for the true coefficients.
    """

    pbar: int
    rbar: np.ndarray
    sigma2: np.ndarray
    n_effective: int

    @property
    def scale(self) -> float:
        """sqrt(n - pbar), the significance denominator."""
        return math.sqrt(self.n_effective - self.pbar)

    def ratios(self) -> np.ndarray:
        """|rbar| / (1.96 sigma / sqrt(n - pbar)), NaN outside the triangle."""
        return np.abs(self.rbar) * self.scale / (Z_95 * np.sqrt(self.sigma2))

    def to_rows(self, include_null: bool = False):
        """(h, l, rbar, sigma2, ratio) tuples, ordered by l then h."""
        ratio = self.ratios()
        h0 = 0 if include_null else 1
        for m in range(1, self.pbar + 1):
            for h in range(h0, m):
                yield h, m, float(self.rbar[h, m]), float(self.sigma2[h, m]), float(ratio[h, m])


def rolling_averages(table: CoefficientTable) -> np.ndarray:
    """``rbar[h, m]`` = mean of coefficients h+1..m of the order-m fit."""
    pbar = table.pbar
    out = np.full((pbar + 1, pbar + 1), np.nan)
    for m in range(1, pbar + 1):
        row = table.coeffs[m - 1, :m]
        suffix = np.cumsum(row[::-1])[::-1]
        out[:m, m] = suffix / np.arange(m, 0, -1)
    return out


def rolling_average_table(table: CoefficientTable, n_effective: int | None = None) -> RollingAverageTable:
    pbar = table.pbar
    rbar = rolling_averages(table)
    sigma2 = np.full_like(rbar, np.nan)
    for h in range(pbar):
        phi = table.coeffs[h - 1, :h] if h else np.zeros(0)
        sigma2[h, h + 1 :] = rolling_variance_row(phi, pbar)
    n_eff = table.n_effective if n_effective is None else n_effective
    return RollingAverageTable(pbar, rbar, sigma2, int(n_eff))


@dataclass(frozen=True)
class Candidate:
    l: int
    frac_significant: float
    max_ratio: float
    passed: bool


@dataclass(frozen=True)
class OrderSelectionReport:
    p_hat: int
    candidates: list[Candidate]
    pbar: int
    rule: str
    n_effective: int
    delta: float | None = None
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    saturated: bool = False
    ra_table: RollingAverageTable | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "rule": self.rule,
            "delta": self.delta,
            "pbar": self.pbar,
            "n_effective": self.n_effective,
            "saturated": self.saturated,
            "coefficients": [float(c) for c in self.coefficients],
            "candidates": [
                {"l": c.l, "frac_significant": c.frac_significant,
                 "max_ratio": c.max_ratio, "passed": c.passed}
                for c in self.candidates
            ],
        }


def _check_pbar(n, pbar):
    if pbar < 2:
        raise PbarTooSmall(f"pbar must be at least 2, got {pbar}")
    if pbar > n / 20:
        raise PbarTooLarge(f"pbar={pbar} exceeds n/20 = {n / 20:g}")


def _scan(ra: RollingAverageTable):
    ratio = ra.ratios()
    out = []
    for h in range(ra.pbar):
        r = ratio[h, h + 1 :]
        out.append((h, float(np.mean(r >= 1.0)), float(r.max())))
    return out


def select_order_rollage(
    series,
    pbar: int,
    method: str = CMLE_LS,
    table: CoefficientTable | None = None,
    scan: str = "first_failure",
) -> OrderSelectionReport:
    """AR order by the 5% rolling-average rule.

    Candidate l passes when at least 5% of the inequalities
    |rbar[l, m]| >= 1.96 sigma[l, m] / sqrt(n - pbar), m = l+1..pbar, hold,
    i.e. the coefficients beyond l are still distinguishable from zero.

    With ``scan="first_failure"`` candidates are visited upward from l = 0
    and the order is the first l that fails: everything past it looks like
    over-fitting noise. ``scan="largest"`` instead returns one more than the
    largest passing l; because every candidate near pbar is judged on a
    handful of 5% tests, that variant over-selects badly. If every candidate
    passes the order saturates at ``pbar``.
    """
    if scan not in ("first_failure", "largest"):
        raise ValueError(f"unknown scan {scan!r}")
    y = as_array(series)
    pbar = int(pbar)
    _check_pbar(y.size, pbar)
    if table is None:
        table = fit_all_orders(y, pbar, method)
    ra = rolling_average_table(table, n_effective=y.size)
    cands = []
    for h, frac, rmax in _scan(ra):
        cands.append(Candidate(h, frac, rmax, frac >= MIN_FRACTION - 1e-12))
    if scan == "first_failure":
        p_hat = next((c.l for c in cands if not c.passed), pbar)
    else:
        p_hat = max((c.l + 1 for c in cands if c.passed), default=0)
    coef = table.row(p_hat) if p_hat else np.zeros(0)
    return OrderSelectionReport(
        p_hat, cands, pbar, ROLLAGE_5PCT, y.size, None, coef,
        all(c.passed for c in cands), ra,
    )


def select_ptilde_rollage_star(
    series,
    q: int,
    pbar: int,
    delta: float = DEFAULT_DELTA,
    method: str = CMLE_LS,
    table: CoefficientTable | None = None,
) -> OrderSelectionReport:
    """Long-AR order for Durbin's method by the delta-threshold rule.

    Scans l = 1, 2, ... and stops at the first l > q whose largest
    standardized rolling average max_m |rbar[l, m]| / (1.96 sigma / sqrt(n -
    pbar)) is at most ``delta``. If no l qualifies the result is ``pbar`` with
    ``saturated=True``.
    """
    y = as_array(series)
    pbar, q = int(pbar), int(q)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if q < 0:
        raise ValueError("q must be non-negative")
    if pbar <= q + 1:
        raise PbarTooSmall(f"pbar={pbar} must exceed q+1={q + 1}")
    _check_pbar(y.size, pbar)
    if table is None:
        table = fit_all_orders(y, pbar, method)
    ra = rolling_average_table(table, n_effective=y.size)
    cands = []
    chosen = None
    for h, frac, rmax in _scan(ra):
        if h == 0:
            continue
        ok = rmax <= delta
        cands.append(Candidate(h, frac, rmax, ok))
        if chosen is None and ok and h > q:
            chosen = h
    saturated = chosen is None
    ptilde = pbar if saturated else chosen
    return OrderSelectionReport(
        ptilde, cands, pbar, ROLLAGE_STAR_DELTA, y.size, float(delta),
        table.row(ptilde), saturated, ra,
    )
