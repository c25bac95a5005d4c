"""Seeded synthetic series and random causal/invertible models."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import _kernels
from .exceptions import InvalidModel, RejectionBudgetExhausted, RollageError
from .models import ModelSpec, validate_model

MAX_DRAWS = 100_000
# above this order, uniform coefficient proposals are practically never causal
DIRECT_SAMPLING_MAX_ORDER = 10
ROOT_BAND = (0.8, 0.95)


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size < 1:
            raise RollageError("a time series needs at least one value")
        if not np.all(np.isfinite(v)):
            raise RollageError("time series contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.meta.get("burn_in", 0) < 0:
            raise RollageError("burn_in must be non-negative")

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def centered(self) -> "TimeSeries":
        """Mean-removed copy; the subtracted mean is recorded in ``meta``."""
        mean = float(self.values.mean())
        meta = dict(self.meta)
        meta["subtracted_mean"] = meta.get("subtracted_mean", 0.0) + mean
        return TimeSeries(self.values - mean, meta)


def as_array(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    y = np.ascontiguousarray(series, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise RollageError("time series contains non-finite values")
    return y


def default_burn_in(spec: ModelSpec) -> int:
    return max(1000, 10 * (spec.p + spec.q))


def derive_seed(seed: int, *keys) -> int:
    """Independent 64-bit stream seed for a (seed, keys...) cell.

    Keys are hashed so that string model ids can take part.
    """
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        h = hashlib.sha256(repr(k).encode()).digest()
        words.append(int.from_bytes(h[:8], "little"))
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def simulate(
    spec: ModelSpec,
    n: int,
    seed: int,
    burn_in: int | None = None,
    return_noise: bool = False,
):
    """Generate ``n`` observations of ``spec`` after ``burn_in`` discarded steps.

    The recursion starts from a zero state and is driven by i.i.d.
    N(0, sigma2_w) innovations drawn from PCG64. With ``return_noise=True`` the
    innovations aligned with the returned values are also returned.
    """
    n = int(n)
    if n < 1:
        raise RollageError(f"n must be positive, got {n}")
    check = validate_model(spec)
    if not check.ok:
        raise InvalidModel(
            f"model is not {'causal' if not check.causal else 'invertible'}"
        )
    if burn_in is None:
        burn_in = default_burn_in(spec)
    burn_in = int(burn_in)
    if burn_in < 0:
        raise RollageError("burn_in must be non-negative")
    rng = _rng(seed)
    w = rng.standard_normal(burn_in + n) * np.sqrt(spec.sigma2_w)
    y = _kernels.arma_filter(
        np.ascontiguousarray(spec.phi), np.ascontiguousarray(spec.theta), w
    )
    ts = TimeSeries(
        y[burn_in:],
        {"seed": int(seed), "model": spec.to_dict(), "burn_in": burn_in,
         "subtracted_mean": 0.0},
    )
    if return_noise:
        return ts, w[burn_in:].copy()
    return ts


def _step_up(refl):
    """AR coefficients from reflection coefficients (Levinson step-up)."""
    a = np.zeros(0)
    for k in refl:
        a = np.concatenate((a - k * a[::-1], [k]))
    return a


def _from_roots(rng, order, rmin, rmax):
    """AR coefficients whose reciprocal roots have moduli in [rmin, rmax].

    Roots come in conjugate pairs with uniform angles in (0, pi); an odd order
    adds one real root of random sign.
    """
    recip = []
    for _ in range(order // 2):
        r = rng.uniform(rmin, rmax)
        ang = rng.uniform(0.0, np.pi)
        z = r * np.exp(1j * ang)
        recip.extend((z, np.conj(z)))
    if order % 2:
        recip.append(rng.choice([-1.0, 1.0]) * rng.uniform(rmin, rmax))
    # prod (1 - z_i x) = 1 - phi_1 x - ... - phi_p x^p
    poly = np.real(np.poly(recip))
    return -poly[1:]


def _draw_poly(rng, order, scheme, root_band):
    if scheme == "coefficients":
        return rng.uniform(-1.0, 1.0, order)
    if scheme == "reflection":
        return _step_up(rng.uniform(-1.0, 1.0, order))
    return _from_roots(rng, order, *root_band)


def random_model(
    kind: str,
    p: int,
    q: int,
    seed: int,
    max_draws: int = MAX_DRAWS,
    scheme: str = "auto",
    root_band: tuple[float, float] = ROOT_BAND,
) -> ModelSpec:
    """Random causal and invertible model with unit noise variance.

    ``scheme="coefficients"`` draws each coefficient from Uniform(-1, 1) and
    rejects until the model validates. ``scheme="reflection"`` draws
    Uniform(-1, 1) reflection coefficients and maps them to polynomial
    coefficients, which is causal by construction but puts roots very close
    to the unit circle at high order. ``scheme="roots"`` draws reciprocal
    roots with moduli uniform in ``root_band``. ``"auto"`` uses coefficients
    up to order 10 and roots above that, per polynomial; uniform coefficient
    proposals are essentially never causal beyond that order.
    """
    kind = kind.lower()
    p, q = int(p), int(q)
    if p < 0 or q < 0 or p + q < 1:
        raise InvalidModel("need p, q >= 0 and p + q >= 1")
    if (kind == "ar" and q) or (kind == "ma" and p):
        raise InvalidModel(f"orders p={p}, q={q} do not fit kind {kind!r}")
    if scheme not in ("auto", "coefficients", "reflection", "roots"):
        raise ValueError(f"unknown scheme {scheme!r}")

    def pick(order):
        if scheme != "auto":
            return scheme
        return "coefficients" if order <= DIRECT_SAMPLING_MAX_ORDER else "roots"

    rng = _rng(seed)
    for _ in range(int(max_draws)):
        phi = _draw_poly(rng, p, pick(p), root_band) if p else np.zeros(0)
        # MA polynomial 1 + theta z is the AR form with the sign flipped
        theta = -_draw_poly(rng, q, pick(q), root_band) if q else np.zeros(0)
        if (p and phi[-1] == 0.0) or (q and theta[-1] == 0.0):
            continue
        spec = ModelSpec(kind, phi, theta, 1.0)
        if validate_model(spec).ok:
            return spec
    raise RejectionBudgetExhausted(
        f"no causal/invertible {kind}({p},{q}) found in {max_draws} draws"
    )


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def sidecar_path(csv_path) -> Path:
    path = Path(csv_path)
    name = path.name[:-4] if path.name.endswith(".csv") else path.name
    return path.with_name(name + ".meta.json")


def write_series_csv(series: TimeSeries, path, write_meta: bool = True) -> None:
    """Single ``y`` column, 17 significant digits, plus a JSON sidecar."""
    path = Path(path)
    lines = ["y"]
    lines.extend("%.17g" % v for v in series.values)
    path.write_text("\n".join(lines) + "\n")
    if write_meta:
        meta = {k: series.meta.get(k) for k in ("seed", "burn_in", "model", "subtracted_mean")}
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_series_csv(path, center: bool = True) -> TimeSeries:
    """Load a series written by :func:`write_series_csv`.

    A header line is optional. With ``center=True`` the sample mean is removed
    and recorded as ``meta["subtracted_mean"]``.
    """
    path = Path(path)
    text = path.read_text().split()
    if text and text[0].strip().lower() == "y":
        text = text[1:]
    try:
        values = np.array([float(t) for t in text])
    except ValueError as exc:
        raise RollageError(f"{path}: non-numeric value in series") from exc
    meta: dict[str, Any] = {}
    side = sidecar_path(path)
    if side.exists():
        meta.update({k: v for k, v in json.loads(side.read_text()).items() if v is not None})
    meta.setdefault("subtracted_mean", 0.0)
    ts = TimeSeries(values, meta)
    return ts.centered() if center else ts
