"""Orbits, fixed points, cobwebs, periods, Lyapunov exponents and sweeps for
scalar maps.

A "map" here is any callable ``f(x) -> float``.  Energy-domain maps are
iterated with ``clamp=True``, which replaces negative iterates by zero; the
curve evaluators themselves are never clamped.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .core import (
    DEFAULT_OMEGA,
    EnergyVariant,
    GainLossSystem,
    KickParams,
    LogisticParams,
    energy_cycle,
    energy_cycle_derivative,
    logistic_derivative,
    logistic_step,
    logistic_two_step,
    default_nu,
)
from .exceptions import DDMapError, DivergenceError, DomainError, WindowTooShortError

DIVERGENCE_BOUND = 1e6
FIXED_POINT_ABS_TOL = 1e-12
MERGE_TOL = 1e-9
NONHYPERBOLIC_TOL = 1e-9
TANGENCY_TOL = 1e-9
PERIOD_TOL = 1e-6
P_MAX = 64
TRANSIENT = 5000
KEEP = 256
LOG_FLOOR = math.log(1e-300)
CHAOS_LYAPUNOV = 0.01

SINK = "sink"
SOURCE = "source"
NONHYPERBOLIC = "nonhyperbolic"


def _describe(f) -> str:
    if isinstance(f, partial):
        args = ", ".join(f"{k}={v!r}" for k, v in sorted(f.keywords.items()))
        return f"{_describe(f.func)}({args})"
    return getattr(f, "__qualname__", None) or repr(f)


def _eval_grid(f, xs: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an array, falling back to a Python loop."""
    try:
        ys = np.asarray(f(xs), dtype=float)
        if ys.shape == xs.shape:
            return ys
    except (TypeError, ValueError):
        pass
    return np.array([f(float(x)) for x in xs], dtype=float)


@dataclass(frozen=True)
class Orbit:
    """Post-transient iterates ``x_{transient+1}, ..., x_n`` of a map."""

    samples: np.ndarray
    transient_len: int = 0
    map_id: str = ""

    def __post_init__(self):
        if self.samples.size == 0:
            raise DDMapError("an orbit needs at least one sample")
        if self.transient_len < 0:
            raise DDMapError("transient_len must be >= 0")

    def __len__(self):
        return self.samples.size

    def __iter__(self):
        return iter(self.samples)


def iterate(
    f: Callable[[float], float],
    x0: float,
    n: int,
    transient: int = 0,
    clamp: bool = False,
    map_id: str | None = None,
    bound: float = DIVERGENCE_BOUND,
) -> Orbit:
    """Iterate ``f`` ``n`` times from ``x0`` and keep the iterates after ``transient``.

    Raises
    ------
    DivergenceError
        If an iterate is non-finite or exceeds ``bound`` in magnitude.
    """
    if not n > transient >= 0:
        raise DDMapError(f"need n > transient >= 0, got n={n}, transient={transient}")
    x = float(x0)
    out = np.empty(n - transient)
    for k in range(1, n + 1):
        x = f(x)
        if clamp and x < 0.0:
            x = 0.0
        if not abs(x) <= bound:
            raise DivergenceError(k, x)
        if k > transient:
            out[k - transient - 1] = x
    return Orbit(out, transient, map_id if map_id is not None else _describe(f))


@dataclass(frozen=True)
class FixedPoint:
    E: float
    stability: str
    multiplier: float


@dataclass(frozen=True)
class FixedPointSet:
    points: tuple[FixedPoint, ...]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def nontrivial(self, tol: float = MERGE_TOL) -> list[FixedPoint]:
        return [fp for fp in self.points if abs(fp.E) > tol]

    def to_dicts(self) -> list[dict]:
        return [{"E": fp.E, "stability": fp.stability, "multiplier": fp.multiplier} for fp in self.points]


def classify_multiplier(m: float, tol: float = NONHYPERBOLIC_TOL) -> str:
    if abs(abs(m) - 1.0) <= tol:
        return NONHYPERBOLIC
    return SINK if abs(m) < 1.0 else SOURCE


def _roots_on_grid(h, lo, hi, grid_n, abs_tol, tangency_tol):
    """Roots of ``h`` on ``[lo, hi]``; returns ``[(x, tangential), ...]``."""
    xs = np.linspace(lo, hi, grid_n)
    hs = _eval_grid(h, xs)
    found = [(float(x), False) for x in xs[hs == 0.0]]
    sign = np.sign(hs)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        r = optimize.bisect(h, xs[i], xs[i + 1], xtol=abs_tol, maxiter=200)
        found.append((float(r), False))
    # even-order touches: local minima of |h| below tolerance with no sign change
    ah = np.abs(hs)
    for i in range(1, grid_n - 1):
        if not (ah[i] <= ah[i - 1] and ah[i] <= ah[i + 1] and 0.0 < ah[i] < tangency_tol):
            continue
        if sign[i - 1] != sign[i] or sign[i] != sign[i + 1]:
            continue
        res = optimize.minimize_scalar(
            lambda x: abs(h(x)), bounds=(xs[i - 1], xs[i + 1]), method="bounded",
            options={"xatol": abs_tol},
        )
        if abs(h(res.x)) < tangency_tol:
            found.append((float(res.x), True))
    found.sort()
    return found


def _merge(found, merge_tol):
    merged = []
    for x, tangential in found:
        if merged and abs(x - merged[-1][0]) <= merge_tol:
            merged[-1] = (merged[-1][0], merged[-1][1] and tangential)
            continue
        merged.append((x, tangential))
    return merged


def fixed_points(
    cycle: Callable,
    derivative: Callable,
    domain: tuple[float, float],
    grid_n: int = 20001,
    abs_tol: float = FIXED_POINT_ABS_TOL,
    merge_tol: float = MERGE_TOL,
    tangency_tol: float = TANGENCY_TOL,
) -> FixedPointSet:
    """Fixed points of ``cycle`` on ``domain``, sorted and classified.

    Sign changes of ``cycle(E) - E`` on a uniform grid are refined by
    bisection.  A second pass looks for local minima of ``|cycle(E) - E|``
    below ``tangency_tol`` without a sign change (tangential intersections),
    which are reported as nonhyperbolic.
    """
    lo, hi = map(float, domain)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
        raise DomainError(f"empty or infinite domain {domain!r}")
    if grid_n < 2:
        raise DDMapError("grid_n must be >= 2")

    def h(x):
        return cycle(x) - x

    points = []
    for x, tangential in _merge(_roots_on_grid(h, lo, hi, grid_n, abs_tol, tangency_tol), merge_tol):
        m = float(derivative(x))
        stability = NONHYPERBOLIC if tangential else classify_multiplier(m)
        points.append(FixedPoint(E=x, stability=stability, multiplier=m))
    return FixedPointSet(tuple(points))


@dataclass(frozen=True)
class Segment:
    x0: float
    y0: float
    x1: float
    y1: float
    tag: str


@dataclass
class CobwebTrace:
    """Cobweb segments plus sampled curves for plotting.

    Two-step traces use the tags ``"loss"`` (vertical, gain curve to loss
    curve) and ``"gain"`` (horizontal, loss curve to gain curve).  The gain
    curve is drawn as a function of the ordinate, the loss curve as a function
    of the abscissa.  One-step traces use ``"to-curve"`` and ``"to-diagonal"``.
    """

    segments: list[Segment]
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    two_step: bool = False

    def vertices(self) -> np.ndarray:
        if not self.segments:
            return np.empty((0, 2))
        pts = [(self.segments[0].x0, self.segments[0].y0)]
        pts.extend((s.x1, s.y1) for s in self.segments)
        return np.array(pts)

    def orbit(self) -> np.ndarray:
        """Iterates of the composed map read back off the trace (initial value excluded)."""
        v = self.vertices()
        # two-step: ordinates of gain-curve vertices; one-step: abscissae of diagonal vertices
        return v[2::2, 1] if self.two_step else v[2::2, 0]


def cobweb_trace(
    system,
    x0: float,
    steps: int,
    clamp: bool = False,
    domain: tuple[float, float] | None = None,
    n_curve: int = 400,
    bound: float = DIVERGENCE_BOUND,
) -> CobwebTrace:
    """Build a cobweb for a :class:`GainLossSystem` or a one-step map.

    For a two-step system ``x0`` is the post-loss energy fed to the gain
    curve, and the trace starts on the gain curve at ``(gain(x0), x0)``.  For a
    one-step map the trace starts on the diagonal at ``(x0, x0)``.
    """
    if steps < 1:
        raise DDMapError("steps must be >= 1")
    segments: list[Segment] = []

    def check(k, val):
        if clamp and val < 0.0:
            val = 0.0
        if not abs(val) <= bound:
            raise DivergenceError(k, val)
        return val

    if isinstance(system, GainLossSystem):
        y = float(x0)
        x = system.gain(y)
        for k in range(1, steps + 1):
            y_next = check(k, system.loss(x))
            segments.append(Segment(x, y, x, y_next, "loss"))
            x_next = system.gain(y_next)
            segments.append(Segment(x, y_next, x_next, y_next, "gain"))
            x, y = x_next, y_next
        xs_lo, xs_hi = domain if domain is not None else system.domain
        xs = np.linspace(xs_lo, xs_hi, n_curve)
        loss_y = _eval_grid(system.loss, xs)
        ys = np.linspace(max(0.0, float(np.min(loss_y))), float(np.max(loss_y)), n_curve)
        curves = {"loss": (xs, loss_y), "gain": (_eval_grid(system.gain, ys), ys)}
        return CobwebTrace(segments, curves, two_step=True)

    f = system
    x = float(x0)
    for k in range(1, steps + 1):
        fx = check(k, f(x))
        segments.append(Segment(x, x, x, fx, "to-curve"))
        segments.append(Segment(x, fx, fx, fx, "to-diagonal"))
        x = fx
    if domain is None:
        pts = [x0] + [s.y1 for s in segments]
        lo, hi = min(pts), max(pts)
        pad = 0.05 * (hi - lo) or 1.0
        domain = (lo - pad, hi + pad)
    xs = np.linspace(domain[0], domain[1], n_curve)
    curves = {"map": (xs, _eval_grid(f, xs)), "diagonal": (xs, xs.copy())}
    return CobwebTrace(segments, curves, two_step=False)


def _smallest_period(x: np.ndarray, p_max: int, tol: float) -> int:
    for p in range(1, p_max + 1):
        if p >= x.size:
            break
        a, b = x[p:], x[:-p]
        if np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b))):
            return p
    return 0


def detect_period(orbit, p_max: int = P_MAX, tol: float = PERIOD_TOL) -> int:
    """Smallest period ``p <= p_max`` that repeats across the whole window, else 0."""
    x = np.asarray(orbit.samples if isinstance(orbit, Orbit) else orbit, dtype=float)
    if x.size < 3 * p_max:
        raise WindowTooShortError(
            f"need at least 3*p_max = {3 * p_max} retained samples, got {x.size}"
        )
    return _smallest_period(x, p_max, tol)


@dataclass(frozen=True)
class Cycle:
    points: tuple[float, ...]
    multiplier: float | None
    stability: str | None


def find_three_cycle(
    cycle: Callable,
    domain: tuple[float, float],
    grid_n: int = 20001,
    derivative: Callable | None = None,
    abs_tol: float = FIXED_POINT_ABS_TOL,
    merge_tol: float = 1e-7,
) -> list[Cycle]:
    """Period-3 orbits of ``cycle`` inside ``domain``.

    Roots of ``f(f(f(E))) - E`` are bracketed on a grid and bisected; roots
    that are fixed points of ``f`` are dropped and the rest are grouped into
    orbits by forward iteration.  Each orbit starts at its smallest point.
    """
    lo, hi = map(float, domain)
    if not hi > lo:
        raise DomainError(f"empty domain {domain!r}")

    def f3(x):
        return cycle(cycle(cycle(x)))

    def h(x):
        return f3(x) - x

    cycles: list[Cycle] = []
    for x, _ in _roots_on_grid(h, lo, hi, grid_n, abs_tol, 0.0):
        if abs(cycle(x) - x) <= merge_tol:
            continue
        orbit = [x, cycle(x)]
        orbit.append(cycle(orbit[-1]))
        i0 = int(np.argmin(orbit))
        pts = tuple(float(v) for v in orbit[i0:] + orbit[:i0])
        if any(abs(pts[0] - c.points[0]) <= merge_tol for c in cycles):
            continue
        mult = stab = None
        if derivative is not None:
            mult = float(np.prod([derivative(v) for v in pts]))
            stab = classify_multiplier(mult)
        cycles.append(Cycle(pts, mult, stab))
    return cycles


def lyapunov(
    f: Callable,
    derivative: Callable,
    x0: float,
    n: int,
    transient: int = 0,
    clamp: bool = False,
    full_output: bool = False,
):
    """Mean of ``log|f'(x_k)|`` over the post-transient orbit.

    Zero derivatives are floored at ``log(1e-300)``; with ``full_output`` the
    number of floored terms is returned alongside the exponent.
    """
    orbit = iterate(f, x0, n, transient, clamp=clamp)
    d = np.abs(_eval_grid(derivative, orbit.samples))
    floored = int(np.count_nonzero(d < 1e-300))
    logs = np.log(np.maximum(d, 1e-300))
    lam = float(np.mean(logs))
    if full_output:
        return lam, floored
    return lam


def is_chaotic(period: int, exponent: float) -> bool:
    return period == 0 and exponent > CHAOS_LYAPUNOV


# ---------------------------------------------------------------------------
# parameterised families and sweeps


@dataclass(frozen=True)
class KickEnergyFamily:
    """Kick energy cycle parameterised by ``C |K|`` (C in units of 1/K)."""

    variant: EnergyVariant = EnergyVariant.EXACT_SQUARE
    omega: float = DEFAULT_OMEGA
    nu: float | None = None
    name: str = "kick"
    clamp: bool = True
    default_x0: float = 1.0

    def params(self, c_frac: float) -> KickParams:
        nu = default_nu(self.omega) if self.nu is None else self.nu
        return KickParams.from_fraction(c_frac, self.omega, nu)

    def map_at(self, c_frac: float):
        return partial(energy_cycle, p=self.params(c_frac), variant=self.variant)

    def derivative_at(self, c_frac: float):
        return partial(energy_cycle_derivative, p=self.params(c_frac), variant=self.variant)


@dataclass(frozen=True)
class LogisticFamily:
    two_step: bool = False
    name: str = "logistic"
    clamp: bool = False
    default_x0: float = 0.5

    def map_at(self, r: float):
        p = LogisticParams(r)
        return partial(logistic_two_step if self.two_step else logistic_step, p=p)

    def derivative_at(self, r: float):
        return partial(logistic_derivative, p=LogisticParams(r))


@dataclass(frozen=True)
class CallableFamily:
    """Wrap ``make(param) -> map`` as a family."""

    make: Callable
    name: str = "custom"
    clamp: bool = False
    default_x0: float = 0.5

    def map_at(self, param):
        return self.make(param)


@dataclass
class BifurcationDiagram:
    param_grid: np.ndarray
    attractor_samples: np.ndarray
    periods: np.ndarray
    family: str = ""

    def rows(self):
        """``(param, sample_index, value, period)`` in grid order."""
        for param, samples, period in zip(self.param_grid, self.attractor_samples, self.periods):
            for j, value in enumerate(samples):
                yield float(param), j, float(value), int(period)

    def period_runs(self) -> list[tuple[int, float, float]]:
        """Maximal runs of equal period as ``(period, first_param, last_param)``."""
        runs = []
        for param, period in zip(self.param_grid, self.periods):
            if runs and runs[-1][0] == period:
                runs[-1] = (period, runs[-1][1], float(param))
            else:
                runs.append((int(period), float(param), float(param)))
        return runs

    def period_at(self, param: float) -> int:
        return int(self.periods[int(np.argmin(np.abs(self.param_grid - param)))])


def _sweep_point(family, param, start, transient, keep, p_max, tol):
    f = family.map_at(param)
    try:
        orbit = iterate(f, start, transient + keep, transient, clamp=family.clamp)
    except (DivergenceError, DomainError):
        return np.full(keep, np.nan), -1
    return orbit.samples, _smallest_period(orbit.samples, p_max, tol)


def _sweep_chunk(family, params, x0, transient, keep, p_max, tol):
    return [_sweep_point(family, c, x0, transient, keep, p_max, tol) for c in params]


def _n_workers(n_jobs):
    if n_jobs is None:
        env = os.environ.get("DDMAP_THREADS")
        n_jobs = int(env) if env else 1
    return max(1, int(n_jobs))


def bifurcation_sweep(
    family,
    param_range: tuple[float, float],
    grid_n: int,
    x0: float | None = None,
    transient: int = TRANSIENT,
    keep: int = KEEP,
    p_max: int = P_MAX,
    tol: float = PERIOD_TOL,
    warm_start: bool = True,
    include_left: bool = True,
    n_jobs: int | None = None,
) -> BifurcationDiagram:
    """Attractor samples and detected periods across a parameter grid.

    With ``warm_start`` each grid point starts from the last retained sample
    of the previous one, so the sweep follows an attractor branch and runs
    sequentially.  A branch that collapsed onto the origin (a fixed point of
    every map here) or diverged restarts from ``x0``.  Cold sweeps may run in
    ``n_jobs`` worker processes (default: ``$DDMAP_THREADS`` or 1); results are
    identical to a sequential run.  Diverging points get period ``-1``.
    """
    if not hasattr(family, "map_at"):
        family = CallableFamily(family)
    lo, hi = map(float, param_range)
    if grid_n < 2:
        raise DDMapError("grid_n must be >= 2")
    if not hi > lo:
        raise DomainError(f"parameter range must be ascending, got {param_range!r}")
    if keep < 2 * p_max:
        raise DDMapError(f"keep ({keep}) must be >= 2*p_max ({2 * p_max})")
    if include_left:
        grid = np.linspace(lo, hi, grid_n)
    else:
        grid = lo + (hi - lo) * np.arange(1, grid_n + 1) / grid_n
    x0 = family.default_x0 if x0 is None else float(x0)

    results: list[tuple[np.ndarray, int]] = []
    if warm_start:
        start = x0
        for c in grid:
            samples, period = _sweep_point(family, c, start, transient, keep, p_max, tol)
            results.append((samples, period))
            last = samples[-1]
            start = x0 if (period < 0 or last == 0.0) else float(last)
    else:
        workers = _n_workers(n_jobs)
        if workers == 1:
            results = _sweep_chunk(family, grid, x0, transient, keep, p_max, tol)
        else:
            chunks = np.array_split(grid, workers * 4)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_sweep_chunk, family, chunk, x0, transient, keep, p_max, tol)
                    for chunk in chunks
                ]
                for fut in futures:
                    results.extend(fut.result())

    samples = np.vstack([s for s, _ in results])
    periods = np.array([p for _, p in results], dtype=int)
    return BifurcationDiagram(grid, samples, periods, family.name)
