"""Walker paths on an annulus reconstructed from the signed velocity map."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .analysis import (
    P_MAX,
    PERIOD_TOL,
    detect_period,
    is_chaotic,
    iterate,
    lyapunov,
)
from .core import KickParams, kick_velocity_derivative, kick_velocity_step
from .exceptions import DDMapError

DEFAULT_CIRCUMFERENCE = 10.0 * math.pi
DEFAULT_DT = 1.0


@dataclass(frozen=True)
class WalkerPath:
    positions: np.ndarray
    velocities: np.ndarray
    unwrapped: np.ndarray
    circumference: float
    dt: float
    start: float = 0.0

    def __len__(self):
        return self.velocities.size


@dataclass(frozen=True)
class PathStats:
    mean_speed: float
    direction_switch_count: int
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def occupied_bins(self) -> int:
        return int(np.count_nonzero(self.counts))


def simulate_walk(
    p: KickParams,
    v0: float,
    impacts: int,
    L: float = DEFAULT_CIRCUMFERENCE,
    dt: float = DEFAULT_DT,
    transient: int = 0,
    x0: float = 0.0,
) -> WalkerPath:
    """Iterate the signed velocity map and integrate the position.

    The recorded velocities are the ``impacts`` iterates following
    ``transient`` discarded ones, exactly as :func:`ddmap.analysis.iterate`
    returns them.  Positions follow ``x_{k+1} = x_k + v_{k+1} dt`` starting
    from ``x0`` and are wrapped into ``[0, L)``.
    """
    if impacts < 1:
        raise DDMapError("impacts must be >= 1")
    if not (L > 0 and dt > 0):
        raise DDMapError("circumference and dt must be positive")
    orbit = iterate(partial(kick_velocity_step, p=p), v0, transient + impacts, transient)
    v = orbit.samples
    unwrapped = x0 + np.cumsum(v * dt)
    positions = np.mod(unwrapped, L)
    # np.mod can return L itself for tiny negative inputs
    positions[positions >= L] = 0.0
    return WalkerPath(positions, v, unwrapped, float(L), float(dt), float(x0))


def path_stats(path: WalkerPath, bin_width: float = 0.01) -> PathStats:
    v = path.velocities
    if v.size == 0:
        raise DDMapError("empty path")
    signs = np.sign(v)
    signs = signs[signs != 0]
    switches = int(np.count_nonzero(signs[1:] != signs[:-1]))
    steps = np.abs(np.diff(np.concatenate(([path.start], path.unwrapped))))
    top = max(float(steps.max()), bin_width)
    edges = np.arange(0.0, top + 2 * bin_width, bin_width)
    counts, edges = np.histogram(steps, bins=edges)
    return PathStats(float(np.mean(np.abs(v))), switches, edges, counts)


REGIME_LABELS = {1: "steady", 2: "two-step"}


def classify_regime(
    p: KickParams,
    v0: float = 1.0,
    transient: int = 5000,
    keep: int = 4096,
    p_max: int = P_MAX,
    tol: float = PERIOD_TOL,
) -> tuple[str, int, float]:
    """Label the walking regime from the velocity orbit.

    Returns ``(label, period, lyapunov_exponent)`` where the label is
    ``"steady"``, ``"two-step"``, ``"periodic-<p>"``, ``"chaotic"`` or
    ``"aperiodic"``.
    """
    f = partial(kick_velocity_step, p=p)
    df = partial(kick_velocity_derivative, p=p)
    orbit = iterate(f, v0, transient + keep, transient)
    period = detect_period(orbit, p_max, tol)
    lam = lyapunov(f, df, v0, transient + keep, transient)
    if period > 0:
        label = REGIME_LABELS.get(period, f"periodic-{period}")
    else:
        label = "chaotic" if is_chaotic(period, lam) else "aperiodic"
    return label, period, lam
