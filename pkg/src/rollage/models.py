"""Model specifications, causality checks and the Toeplitz/NLRC algebra.

The AR coefficient convention throughout is

    y_t = phi_1 y_{t-1} + ... + phi_p y_{t-p} + w_t + theta_1 w_{t-1} + ... + theta_q w_{t-q}

Internally the NLRC and rolling-variance formulas prepend ``phi_0 = -1`` to the
AR coefficient vector; that convention never leaks into :class:`ModelSpec`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

from .exceptions import (
    InsufficientLags,
    InvalidModel,
    NonFiniteCoefficient,
    OrderMismatch,
    SingularSystem,
    ZeroLeadingCoefficient,
)

ROOT_MARGIN = 1e-8
KINDS = ("ar", "ma", "arma")


@dataclass(frozen=True)
class ModelSpec:
    """AR, MA or ARMA parameterization with Gaussian white noise."""

    kind: str
    phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma2_w: float = 1.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise InvalidModel(f"unknown model kind {self.kind!r}")
        phi = np.array(self.phi, dtype=np.float64).reshape(-1)
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        phi.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma2_w", float(self.sigma2_w))
        if kind == "ar" and theta.size:
            raise InvalidModel("an AR model cannot carry MA coefficients")
        if kind == "ma" and phi.size:
            raise InvalidModel("an MA model cannot carry AR coefficients")
        if not np.isfinite(self.sigma2_w) or self.sigma2_w <= 0:
            raise InvalidModel(f"sigma2_w must be positive, got {self.sigma2_w}")

    @property
    def p(self) -> int:
        return int(self.phi.size)

    @property
    def q(self) -> int:
        return int(self.theta.size)

    @property
    def params(self) -> np.ndarray:
        """Stacked (phi, theta), the vector relative errors are measured on."""
        return np.concatenate((self.phi, self.theta))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "phi": [float(x) for x in self.phi],
            "theta": [float(x) for x in self.theta],
            "sigma2_w": self.sigma2_w,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelSpec":
        try:
            kind = d["kind"]
        except (KeyError, TypeError) as exc:
            raise InvalidModel("model document needs a 'kind' field") from exc
        return cls(
            kind=kind,
            phi=d.get("phi", []) or [],
            theta=d.get("theta", []) or [],
            sigma2_w=d.get("sigma2_w", 1.0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.phi, other.phi)
            and np.array_equal(self.theta, other.theta)
            and self.sigma2_w == other.sigma2_w
        )

    def __hash__(self):
        return hash(self.to_json())


@dataclass(frozen=True)
class ValidationResult:
    causal: bool
    invertible: bool
    ar_root_moduli: np.ndarray
    ma_root_moduli: np.ndarray

    @property
    def ok(self) -> bool:
        return self.causal and self.invertible


@dataclass(frozen=True)
class AutocovarianceSequence:
    gamma: np.ndarray
    sigma2_w: float

    def __len__(self):
        return int(self.gamma.size)


def _poly_root_moduli(coeffs, sign):
    """Moduli of the roots of 1 + sign*(c_1 z + ... + c_k z^k).

    numpy.roots works on the companion matrix, so this is an eigenvalue solve.
    Trailing zeros are impossible here because the leading coefficient was
    checked by the caller.
    """
    if coeffs.size == 0:
        return np.zeros(0)
    poly = np.concatenate((sign * coeffs[::-1], [1.0]))
    return np.abs(np.roots(poly))


def validate_model(spec: ModelSpec, margin: float = ROOT_MARGIN) -> ValidationResult:
    """Check causality of the AR part and invertibility of the MA part.

    A polynomial passes when every root modulus exceeds ``1 + margin``.
    """
    for name, c in (("phi", spec.phi), ("theta", spec.theta)):
        if not np.all(np.isfinite(c)):
            raise NonFiniteCoefficient(f"{name} contains non-finite values")
        if c.size and c[-1] == 0.0:
            raise ZeroLeadingCoefficient(
                f"last {name} coefficient is zero; declared order {c.size}"
            )
    ar_mod = _poly_root_moduli(spec.phi, -1.0)
    ma_mod = _poly_root_moduli(spec.theta, 1.0)
    return ValidationResult(
        causal=bool(np.all(ar_mod > 1.0 + margin)),
        invertible=bool(np.all(ma_mod > 1.0 + margin)),
        ar_root_moduli=ar_mod,
        ma_root_moduli=ma_mod,
    )


def theoretical_autocovariance(spec: ModelSpec, max_lag: int) -> AutocovarianceSequence:
    """Autocovariances gamma_0..gamma_max_lag of a causal AR(p) model.

    gamma_0..gamma_p come from the (p+1)-dimensional linear system
    gamma_j - sum_i phi_i gamma_{|j-i|} = sigma2 * [j == 0]; higher lags follow
    the AR recursion.
    """
    if spec.q:
        raise InvalidModel("theoretical_autocovariance handles pure AR models only")
    phi = spec.phi
    p = phi.size
    max_lag = int(max_lag)
    if max_lag < p:
        raise InsufficientLags(f"max_lag={max_lag} must be at least p={p}")
    if p and not validate_model(spec).causal:
        raise InvalidModel("model is not causal")

    a = np.eye(p + 1)
    for j in range(p + 1):
        for i in range(1, p + 1):
            a[j, abs(j - i)] -= phi[i - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = spec.sigma2_w
    if np.linalg.cond(a) > 1e12:
        raise SingularSystem("Yule-Walker system is numerically singular")
    head = np.linalg.solve(a, rhs)

    gamma = np.empty(max_lag + 1)
    gamma[: p + 1] = head
    for j in range(p + 1, max_lag + 1):
        gamma[j] = np.dot(phi, gamma[j - 1 : j - p - 1 : -1]) if p else 0.0
    if not np.all(np.isfinite(gamma)):
        raise SingularSystem("autocovariance recursion overflowed")
    return AutocovarianceSequence(gamma=gamma, sigma2_w=spec.sigma2_w)


def gamma_matrix(acv, m: int) -> np.ndarray:
    """The m x m Toeplitz autocovariance matrix Gamma(i, j) = gamma_|i-j|."""
    gamma = acv.gamma if isinstance(acv, AutocovarianceSequence) else np.asarray(acv)
    if m < 1 or gamma.size < m:
        raise InsufficientLags(f"need {m} lags, have {gamma.size}")
    return linalg.toeplitz(gamma[:m])


def _with_phi0(phi):
    return np.concatenate(([-1.0], np.asarray(phi, dtype=np.float64)))


def _check_orders(phi, p, m):
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    if phi.size != p:
        raise OrderMismatch(f"phi has length {phi.size}, expected p={p}")
    if m <= p:
        raise OrderMismatch(f"need m > p, got p={p}, m={m}")
    return phi


def nlrc_closed_form(phi, p: int, m: int) -> np.ndarray:
    """Lower-right (m-p)x(m-p) block of sigma2 * Gamma_{p,m}^{-1}.

    Entry (i, i-l) is sum_{k=0}^{min(m-p-i, p-l)} phi_k phi_{k+l} with
    phi_0 = -1 (1-based i); entries beyond the band |i-j| > p are zero.
    """
    phi = _check_orders(phi, p, m)
    f = _with_phi0(phi)
    d = m - p
    out = np.zeros((d, d))
    for i in range(1, d + 1):
        for lag in range(0, min(p, i - 1) + 1):
            top = min(d - i, p - lag)
            s = float(np.dot(f[: top + 1], f[lag : lag + top + 1]))
            out[i - 1, i - 1 - lag] = s
            out[i - 1 - lag, i - 1] = s
    return out


def nlrc_recursive(phi, p: int, m: int) -> np.ndarray:
    """Same matrix as :func:`nlrc_closed_form`, grown one order at a time.

    Going from m-1 to m shifts the previous block one step down the diagonal
    and writes a new first column.
    """
    phi = _check_orders(phi, p, m)
    f = _with_phi0(phi)
    cur = np.array([[f[0] ** 2]])
    for mm in range(p + 2, m + 1):
        d = mm - p
        nxt = np.zeros((d, d))
        nxt[1:, 1:] = cur
        if mm <= 2 * p + 1:
            for i in range(1, d):
                nxt[i - 1, 0] = f[mm - p - i] * f[mm - p - 1] + cur[i - 1, 0]
            nxt[d - 1, 0] = f[0] * f[mm - p - 1]
        else:
            nxt[: d - 1, 0] = cur[:, 0]
            nxt[d - 1, 0] = 0.0
        # mirror the new first column into the first row
        nxt[0, :] = nxt[:, 0]
        cur = nxt
    return cur


def sigma_matrix(spec: ModelSpec, m: int) -> np.ndarray:
    """Dense sigma2 * Gamma_{p,m}^{-1} via Cholesky. Oracle use only."""
    acv = theoretical_autocovariance(spec, max(m - 1, spec.p))
    g = gamma_matrix(acv, m)
    c = linalg.cho_factor(g, lower=True)
    return spec.sigma2_w * linalg.cho_solve(c, np.eye(m))


def nlrc_dense_oracle(spec: ModelSpec, m: int) -> np.ndarray:
    p = spec.p
    return sigma_matrix(spec, m)[p:m, p:m]
