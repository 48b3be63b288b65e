"""Damped-driven gain-loss maps for walking droplets."""
from .analysis import (
    BifurcationDiagram,
    CobwebTrace,
    FixedPoint,
    FixedPointSet,
    KickEnergyFamily,
    LogisticFamily,
    Orbit,
    bifurcation_sweep,
    cobweb_trace,
    detect_period,
    find_three_cycle,
    fixed_points,
    iterate,
    lyapunov,
)
from .core import (
    EnergyVariant,
    GainLossSystem,
    KickParams,
    LogisticParams,
    energy_cycle,
    energy_cycle_derivative,
    kick_gain_curve,
    kick_loss_curve,
    kick_strength,
    kick_system,
    kick_velocity_derivative,
    kick_velocity_step,
    logistic_gain,
    logistic_loss,
    logistic_step,
    logistic_system,
)
from .exceptions import DDMapError, DivergenceError
from .ingest import energy_series, fit_curves, parse_impacts, synthetic_impacts
from .trajectory import classify_regime, path_stats, simulate_walk

__version__ = "0.1.0"
