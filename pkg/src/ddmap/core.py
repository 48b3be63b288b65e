"""Gain-loss maps: the kick velocity map, its energy decomposition and the
two-step logistic map.

Every curve accepts either a Python scalar or a NumPy array.  Scalars are
evaluated with :mod:`math` (the orbit loops in :mod:`ddmap.analysis` call
these functions millions of times), arrays with the matching NumPy ufuncs.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .exceptions import DomainError, ParameterOverflowError, ResonanceError

DEFAULT_OMEGA = 31.0 / 2.0

_LOG_MAX = math.log(sys.float_info.max)
# exp() of anything below this underflows to zero
_LOG_TINY = math.log(sys.float_info.min * sys.float_info.epsilon)
_RESONANCE_TOL = 1e-12


def default_nu(omega: float = DEFAULT_OMEGA) -> float:
    """Damping parameter ``omega**2 / (8.4 pi**2)`` tied to the wavenumber."""
    return omega * omega / (8.4 * math.pi**2)


_SCALAR_TYPES = frozenset({float, int, np.float64, np.float32, np.int64, np.int32})


def _ns(x):
    # plain scalars go through math (fast in orbit loops), everything else through numpy;
    # the two may differ in the last ulp, so orbit comparisons must use one path
    return math if type(x) in _SCALAR_TYPES else np


def _check_nonnegative(E, what="energy"):
    """Validate ``E >= 0``; returns ``(E, namespace)``."""
    if type(E) in _SCALAR_TYPES:
        if not E >= 0.0:
            raise DomainError(f"{what} must be >= 0, got {E!r}")
        return E, math
    E = np.asarray(E, dtype=float)
    if not np.all(E >= 0.0):
        raise DomainError(f"{what} must be >= 0 (min={np.nanmin(E)!r})")
    return E, np


def _check_finite(v, what="velocity"):
    if type(v) in _SCALAR_TYPES:
        if not math.isfinite(v):
            raise DomainError(f"{what} must be finite, got {v!r}")
        return v, math
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{what} must be finite")
    return v, np


class EnergyVariant(str, enum.Enum):
    """Which form of the kinetic-energy recurrence to evaluate.

    ``EXACT_SQUARE`` is the literal square of the velocity map (cross term
    ``2 C**2 K v sin(omega v) exp(-nu v**2)``).  ``HALF_CROSS`` uses the
    cross-term coefficient ``C**2 K`` instead, a common shorthand of the
    recurrence; it is no longer an exact conjugate of the velocity map.
    """

    EXACT_SQUARE = "exact-square"
    HALF_CROSS = "half-cross"

    @property
    def cross_factor(self) -> float:
        return 2.0 if self is EnergyVariant.EXACT_SQUARE else 1.0


def kick_strength(omega: float, nu: float) -> float:
    """Closed-form kick strength ``-pi exp(nu pi**2) / sin(pi omega)``.

    Raises
    ------
    ResonanceError
        If ``|sin(pi omega)| <= 1e-12``.
    ParameterOverflowError
        If ``exp(nu pi**2)`` is not representable.
    """
    s = math.sin(math.pi * omega)
    if abs(s) <= _RESONANCE_TOL:
        raise ResonanceError(f"sin(pi*omega) vanishes for omega={omega!r}; K undefined")
    expo = nu * math.pi**2
    if expo > _LOG_MAX:
        raise ParameterOverflowError(f"nu*pi**2 = {expo!r} overflows exp()")
    return -math.pi * math.exp(expo) / s


@dataclass(frozen=True)
class KickParams:
    """Constants of the kick map ``v -> C [v + K sin(omega v) exp(-nu v**2)]``.

    Use :meth:`with_defaults` or :meth:`from_fraction` rather than passing
    ``K`` by hand; they derive it from ``omega`` and ``nu``.
    """

    C: float
    omega: float
    nu: float
    K: float
    log_abs_K: float = field(init=False, repr=False, compare=False)
    sign_K: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("C", "omega", "nu", "K"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise DomainError(f"KickParams.{name} must be finite, got {val!r}")
        if not 0.0 < self.C <= 1.0:
            raise DomainError(f"damping factor C must lie in (0, 1], got {self.C!r}")
        if self.K == 0.0:
            raise DomainError("kick strength K must be nonzero")
        # cached: the envelope is evaluated once per map iteration
        object.__setattr__(self, "log_abs_K", math.log(abs(self.K)))
        object.__setattr__(self, "sign_K", math.copysign(1.0, self.K))

    @classmethod
    def from_omega_nu(cls, C: float, omega: float = DEFAULT_OMEGA, nu: float | None = None):
        if nu is None:
            nu = default_nu(omega)
        return cls(C=C, omega=omega, nu=nu, K=kick_strength(omega, nu))

    @classmethod
    def with_defaults(cls, C: float) -> "KickParams":
        return cls.from_omega_nu(C)

    @classmethod
    def from_fraction(cls, c_frac: float, omega: float = DEFAULT_OMEGA, nu: float | None = None):
        """Build params with ``C = c_frac / |K|``; ``c_frac = 1/6`` means C = 1/(6K)."""
        if nu is None:
            nu = default_nu(omega)
        K = kick_strength(omega, nu)
        return cls(C=c_frac / abs(K), omega=omega, nu=nu, K=K)

    @property
    def c_frac(self) -> float:
        """``C |K|``, the damping factor in units of ``1/K``."""
        return self.C * abs(self.K)

    def with_C(self, C: float) -> "KickParams":
        return KickParams(C=C, omega=self.omega, nu=self.nu, K=self.K)


@dataclass(frozen=True)
class LogisticParams:
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and 0.0 < self.r <= 4.0):
            raise DomainError(f"logistic growth rate must lie in (0, 4], got {self.r!r}")


def _envelope(xp, v2, p: KickParams):
    # K exp(-nu v^2) evaluated as sign(K) exp(log|K| - nu v^2)
    return p.sign_K * xp.exp(p.log_abs_K - p.nu * v2)


def kick_velocity_step(v, p: KickParams):
    v, xp = _check_finite(v)
    return p.C * (v + _envelope(xp, v * v, p) * xp.sin(p.omega * v))


def kick_velocity_derivative(v, p: KickParams):
    """Exact derivative of :func:`kick_velocity_step` with respect to ``v``."""
    v, xp = _check_finite(v)
    w = p.omega
    env = _envelope(xp, v * v, p)
    return p.C * (1.0 + env * (w * xp.cos(w * v) - 2.0 * p.nu * v * xp.sin(w * v)))


def energy_cycle(E, p: KickParams, variant: EnergyVariant = EnergyVariant.EXACT_SQUARE):
    """One full gain-loss round trip in kinetic-energy coordinates."""
    E, xp = _check_nonnegative(E)
    if variant is EnergyVariant.EXACT_SQUARE:
        y = kick_velocity_step(xp.sqrt(E), p)
        return y * y
    x = xp.sqrt(E)
    a = _envelope(xp, E, p) * xp.sin(p.omega * x)
    return p.C * p.C * (E + a * a + x * a)


def _sin_over_x(xp, w, x):
    # sin(w x) / x with the x -> 0 limit w
    if xp is math:
        return w if x == 0.0 else math.sin(w * x) / x
    return w * np.sinc(w * x / math.pi)


def energy_cycle_derivative(E, p: KickParams, variant: EnergyVariant = EnergyVariant.EXACT_SQUARE):
    """d/dE of :func:`energy_cycle`, finite at ``E = 0``."""
    E, xp = _check_nonnegative(E)
    w, nu = p.omega, p.nu
    x = xp.sqrt(E)
    env = _envelope(xp, E, p)
    s = xp.sin(w * x)
    c = xp.cos(w * x)
    s_x = _sin_over_x(xp, w, x)
    alpha = variant.cross_factor
    quad = env * env * (s_x * w * c - 2.0 * nu * s * s)
    cross = alpha * env * (0.5 * s_x + 0.5 * w * c - nu * x * s)
    return p.C * p.C * (1.0 + quad + cross)


def kick_loss_curve(E, p: KickParams):
    """Hydrodynamic damping: ``E -> C**2 E``."""
    E, _ = _check_nonnegative(E)
    return p.C * p.C * E


def kick_gain_curve(E, p: KickParams, variant: EnergyVariant = EnergyVariant.EXACT_SQUARE):
    """Energy after a kick, as a function of the post-loss energy ``E``.

    With the exact-square variant ``kick_gain_curve(kick_loss_curve(E))``
    reproduces :func:`energy_cycle`.  When ``E / C**2`` is so large that the
    Gaussian envelope underflows, the kick terms vanish and ``E`` is returned.
    """
    E, xp = _check_nonnegative(E)
    C = p.C
    x = xp.sqrt(E)
    u = x / C
    log_amp = math.log(C) + p.log_abs_K
    if xp is math:
        arg = log_amp - p.nu * (E / (C * C))
        if arg < _LOG_TINY:
            return E
        a = p.sign_K * math.exp(arg) * math.sin(p.omega * u)
        return E + a * a + variant.cross_factor * x * a
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        arg = log_amp - p.nu * (E / (C * C))
        live = arg >= _LOG_TINY
        a = np.where(live, p.sign_K * np.exp(np.where(live, arg, 0.0)) * np.sin(p.omega * np.where(live, u, 0.0)), 0.0)
    return E + a * a + variant.cross_factor * x * a


def logistic_step(E, p: LogisticParams):
    if type(E) in _SCALAR_TYPES:
        if not 0.0 <= E <= 1.0:
            raise DomainError(f"logistic state must lie in [0, 1], got {E!r}")
    else:
        E = np.asarray(E, dtype=float)
        if not np.all((E >= 0.0) & (E <= 1.0)):
            raise DomainError("logistic state must lie in [0, 1]")
    return p.r * E * (1.0 - E)


def logistic_derivative(E, p: LogisticParams):
    return p.r * (1.0 - 2.0 * E)


def logistic_gain(E, p: LogisticParams):
    """Gain half of the two-step logistic map: ``E -> r E**2``."""
    E, _ = _check_nonnegative(E, "logistic gain input")
    return p.r * E * E


def logistic_loss(E, p: LogisticParams):
    """Loss half of the two-step logistic map: ``E -> sqrt(r E) - E``."""
    E, xp = _check_nonnegative(E, "logistic loss input")
    return xp.sqrt(p.r * E) - E


def logistic_two_step(E, p: LogisticParams):
    return logistic_loss(logistic_gain(E, p), p)


@dataclass(frozen=True)
class GainLossSystem:
    """A driving curve and a damping curve forming one damped-driven cycle.

    ``gain`` maps the post-loss energy to the post-gain energy, ``loss`` maps
    the post-gain energy back.  ``domain`` bounds the loss-curve input (the
    post-gain energies) for plotting and root scans.
    """

    gain: Callable
    loss: Callable
    domain: tuple[float, float]
    name: str = "gain-loss"

    def __post_init__(self):
        lo, hi = self.domain
        if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 <= lo < hi):
            raise DomainError(f"invalid domain {self.domain!r}")

    def cycle(self, E):
        """``loss(gain(E))``: one round trip in post-loss coordinates."""
        return self.loss(self.gain(E))

    def cycle_gain_last(self, E):
        """``gain(loss(E))``: one round trip in post-gain coordinates."""
        return self.gain(self.loss(E))


def kick_system(
    p: KickParams,
    variant: EnergyVariant = EnergyVariant.EXACT_SQUARE,
    e_max: float | None = None,
) -> GainLossSystem:
    if e_max is None:
        # |v_{n+1}| <= C (|v| + |K|), so post-gain energies rarely exceed (C K)^2
        e_max = (1.25 * p.c_frac) ** 2
    return GainLossSystem(
        gain=partial(kick_gain_curve, p=p, variant=variant),
        loss=partial(kick_loss_curve, p=p),
        domain=(0.0, float(e_max)),
        name=f"kick[C={p.c_frac:.6g}/K,{variant.value}]",
    )


def logistic_system(p: LogisticParams) -> GainLossSystem:
    return GainLossSystem(
        gain=partial(logistic_gain, p=p),
        loss=partial(logistic_loss, p=p),
        domain=(0.0, p.r),
        name=f"two-step-logistic[r={p.r:.6g}]",
    )
