"""Energy gain/loss inference from measured impact velocities.

Impact ``n`` contributes a pre-impact energy ``E_n^- = v_in(n)**2`` and a
post-impact energy ``E_n^+ = v_out(n)**2``.  The flight between impacts is the
gain phase, the impact itself the loss phase::

    gain_n = E_n^- - E_{n-1}^+        loss_n = E_n^+ - E_n^-

Curves are fitted with small scikit-learn style regressors so they can be
cloned, inspected with ``get_params`` and dropped into pipelines.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from .analysis import FixedPointSet, fixed_points
from .core import KickParams, kick_gain_curve, kick_loss_curve
from .exceptions import DDMapError, ParseError, RankDeficiencyError, RecordValidationError

HEADER = ("n", "v_in", "v_out")
MIN_FIT_POINTS = 4


@dataclass(frozen=True)
class ImpactRecord:
    index: int
    v_in: float
    v_out: float


def _validate_records(records: list[ImpactRecord], lines: list[int] | None = None):
    prev = None
    for i, rec in enumerate(records):
        line = lines[i] if lines else None
        for name in ("v_in", "v_out"):
            val = getattr(rec, name)
            if not math.isfinite(val):
                raise RecordValidationError(f"{name} must be finite (impact {rec.index})", line)
            if val < 0:
                raise RecordValidationError(f"{name} must be a nonnegative speed, got {val!r}", line)
        if prev is not None and rec.index <= prev:
            raise RecordValidationError(
                f"impact indices must be strictly increasing ({rec.index} after {prev})", line
            )
        prev = rec.index


def parse_impacts(source: str | TextIO) -> list[ImpactRecord]:
    """Read ``n,v_in,v_out`` rows; ``#`` comment lines and blank lines are skipped."""
    text = source if isinstance(source, str) else source.read()
    records: list[ImpactRecord] = []
    lines: list[int] = []
    header_seen = False
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        row = [cell.strip() for cell in next(csv.reader([stripped]))]
        if not header_seen:
            if tuple(row) != HEADER:
                raise ParseError(f"expected header 'n,v_in,v_out', got {stripped!r}", lineno)
            header_seen = True
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            rec = ImpactRecord(int(row[0]), float(row[1]), float(row[2]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        records.append(rec)
        lines.append(lineno)
    if not header_seen:
        raise ParseError("missing header 'n,v_in,v_out'")
    _validate_records(records, lines)
    return records


def format_impacts(records: Iterable[ImpactRecord]) -> str:
    out = ["n,v_in,v_out"]
    out.extend(f"{r.index},{r.v_in:.17g},{r.v_out:.17g}" for r in records)
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class EnergySeries:
    indices: np.ndarray
    pre_impact: np.ndarray
    post_impact: np.ndarray
    gains: np.ndarray
    losses: np.ndarray

    def to_dict(self) -> dict:
        return {"gains": self.gains.tolist(), "losses": self.losses.tolist()}


def energy_series(records: list[ImpactRecord]) -> EnergySeries:
    if len(records) < 2:
        raise DDMapError(f"need at least 2 impact records, got {len(records)}")
    idx = np.array([r.index for r in records], dtype=int)
    e_minus = np.array([r.v_in for r in records], dtype=float) ** 2
    e_plus = np.array([r.v_out for r in records], dtype=float) ** 2
    gains = e_minus[1:] - e_plus[:-1]
    losses = (e_plus - e_minus)[1:]
    return EnergySeries(idx, e_minus, e_plus, gains, losses)


# ---------------------------------------------------------------------------
# curve estimators


def _check_xy(X, y):
    x = check_array(X, ensure_2d=False, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError(f"expected a single feature, got shape {x.shape}")
        x = x[:, 0]
    y = check_array(y, ensure_2d=False, dtype=float)
    check_consistent_length(x, y)
    # sorted so that fitted values do not depend on record order
    order = np.lexsort((y, x))
    return x[order], y[order]


def _check_x(X):
    scalar = np.ndim(X) == 0
    x = check_array(np.atleast_1d(X), ensure_2d=False, dtype=float)
    if x.ndim == 2:
        x = x[:, 0]
    return x, scalar


class _Curve(RegressorMixin, BaseEstimator):
    kind = ""

    def __call__(self, X):
        y = self.predict(X)
        return float(y[0]) if np.ndim(X) == 0 else y

    def _finish(self, x, y):
        self.x_range_ = (float(x[0]), float(x[-1]))
        resid = self.predict(x) - y
        self.rms_ = float(np.sqrt(np.mean(resid * resid)))
        return self

    def to_dict(self) -> dict:
        check_is_fitted(self)
        return {"kind": self.kind, **self._params_dict(), "rms": self.rms_,
                "x_range": list(self.x_range_)}


class LinearThroughOrigin(_Curve):
    """Least-squares line through the origin, ``y = slope * x``."""

    kind = "linear-through-origin"

    def fit(self, X, y):
        x, y = _check_xy(X, y)
        denom = float(x @ x)
        if denom == 0.0:
            raise RankDeficiencyError("all abscissae are zero; slope undetermined")
        self.coef_ = float(x @ y) / denom
        return self._finish(x, y)

    def predict(self, X):
        check_is_fitted(self)
        x, _ = _check_x(X)
        return self.coef_ * x

    def _params_dict(self):
        return {"slope": self.coef_}


class PolynomialCurve(_Curve):
    kind = "polynomial"

    def __init__(self, degree=3):
        self.degree = degree

    def fit(self, X, y):
        if not 1 <= self.degree <= 6:
            raise ValueError(f"degree must be in 1..6, got {self.degree}")
        x, y = _check_xy(X, y)
        if np.unique(x).size <= self.degree:
            raise RankDeficiencyError(
                f"{np.unique(x).size} distinct abscissae cannot determine a degree-{self.degree} fit"
            )
        # Polynomial.fit rescales x internally, which matters for energies ~1e-30
        self.poly_ = np.polynomial.Polynomial.fit(x, y, self.degree)
        self.coef_ = self.poly_.convert().coef
        return self._finish(x, y)

    def predict(self, X):
        check_is_fitted(self)
        x, _ = _check_x(X)
        return self.poly_(x)

    def _params_dict(self):
        return {"degree": self.degree, "coefficients": self.coef_.tolist()}


class BinnedPiecewiseLinear(_Curve):
    """Linear interpolation through per-bin means over the sorted abscissae.

    Outside the fitted range the end knots are held constant.
    """

    kind = "piecewise-linear"

    def __init__(self, n_bins=32):
        self.n_bins = n_bins

    def fit(self, X, y):
        x, y = _check_xy(X, y)
        if x[0] == x[-1]:
            raise RankDeficiencyError("all abscissae are identical")
        edges = np.linspace(x[0], x[-1], self.n_bins + 1)
        which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, self.n_bins - 1)
        kx, ky = [], []
        for b in range(self.n_bins):
            sel = which == b
            if np.any(sel):
                kx.append(float(np.mean(x[sel])))
                ky.append(float(np.mean(y[sel])))
        self.knots_x_ = np.array(kx)
        self.knots_y_ = np.array(ky)
        return self._finish(x, y)

    def predict(self, X):
        check_is_fitted(self)
        x, _ = _check_x(X)
        return np.interp(x, self.knots_x_, self.knots_y_)

    def _params_dict(self):
        return {"knots_x": self.knots_x_.tolist(), "knots_y": self.knots_y_.tolist()}


_KINDS = {
    "linear": LinearThroughOrigin,
    "linear-through-origin": LinearThroughOrigin,
    "polynomial": PolynomialCurve,
    "piecewise": BinnedPiecewiseLinear,
    "piecewise-linear": BinnedPiecewiseLinear,
}


def make_curve(kind: str, **params) -> _Curve:
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise DDMapError(f"unknown curve kind {kind!r}; choose from {sorted(_KINDS)}") from None
    return cls(**params)


def loss_data(series: EnergySeries):
    """Loss curve samples: post-impact energy against pre-impact energy."""
    return series.pre_impact, series.post_impact


def gain_data(series: EnergySeries):
    """Gain curve samples: pre-impact energy against the previous post-impact energy."""
    return series.post_impact[:-1], series.pre_impact[1:]


def fit_curves(
    series: EnergySeries,
    loss_kind: str = "linear",
    gain_kind: str = "piecewise",
    n_bins: int = 32,
    degree: int = 3,
):
    """Fit ``(gain, loss)`` curves to an energy series.

    Returns fitted estimators; ``loss.coef_`` of the default linear fit is
    the empirical ``C**2``.
    """

    def build(kind):
        if kind in ("piecewise", "piecewise-linear"):
            return make_curve(kind, n_bins=n_bins)
        if kind == "polynomial":
            return make_curve(kind, degree=degree)
        return make_curve(kind)

    fits = []
    for kind, (x, y) in ((gain_kind, gain_data(series)), (loss_kind, loss_data(series))):
        if x.size < MIN_FIT_POINTS:
            raise DDMapError(f"need at least {MIN_FIT_POINTS} points per fit, got {x.size}")
        fits.append(build(kind).fit(x, y))
    return fits[0], fits[1]


def empirical_cycle(gain, loss):
    """Round trip in pre-impact coordinates: ``E -> gain(loss(E))``."""

    def cycle(E):
        return gain(loss(E))

    return cycle


def _central_difference(f, h):
    def df(x):
        x = np.asarray(x, dtype=float)
        return (f(x + h) - f(np.maximum(x - h, 0.0))) / (x + h - np.maximum(x - h, 0.0))

    return df


def empirical_fixed_points(series: EnergySeries, gain, loss, grid_n: int = 4001) -> FixedPointSet:
    """Fixed points of the fitted cycle over the observed pre-impact range."""
    cycle = empirical_cycle(gain, loss)
    lo, hi = float(series.pre_impact.min()), float(series.pre_impact.max())
    return fixed_points(cycle, _central_difference(cycle, 1e-7 * (hi - lo)), (lo, hi), grid_n)


def fit_report(series: EnergySeries, gain, loss) -> dict:
    """JSON-ready summary: ``{gains, losses, fit: {loss, gain}}``."""
    return {**series.to_dict(), "fit": {"loss": loss.to_dict(), "gain": gain.to_dict()}}


def synthetic_impacts(
    p: KickParams,
    impacts: int,
    v0: float = 0.3,
    noise: float = 0.0,
    relative_noise: bool = False,
    seed: int | None = None,
) -> list[ImpactRecord]:
    """Impact records generated by the kick model's loss and gain curves.

    ``v_out = sqrt(loss(v_in**2))`` and the next ``v_in = sqrt(gain(v_out**2))``.
    Gaussian measurement noise of standard deviation ``noise`` (or
    ``noise * speed`` when ``relative_noise``) is added to the recorded speeds
    only; the dynamics stay noiseless.  Speeds are stored as absolute values.
    """
    if impacts < 2:
        raise DDMapError("need at least 2 impacts")
    rng = np.random.default_rng(seed)
    e_minus = float(v0) ** 2
    v_in = np.empty(impacts)
    v_out = np.empty(impacts)
    for k in range(impacts):
        e_plus = kick_loss_curve(e_minus, p)
        v_in[k] = math.sqrt(e_minus)
        v_out[k] = math.sqrt(e_plus)
        e_minus = max(kick_gain_curve(e_plus, p), 0.0)
    if noise > 0.0:
        scale_in = noise * v_in if relative_noise else noise
        scale_out = noise * v_out if relative_noise else noise
        v_in = np.abs(v_in + rng.normal(0.0, 1.0, impacts) * scale_in)
        v_out = np.abs(v_out + rng.normal(0.0, 1.0, impacts) * scale_out)
    return [ImpactRecord(k + 1, float(a), float(b)) for k, (a, b) in enumerate(zip(v_in, v_out))]
