"""Acceptance criteria, one test each; results are echoed in the terminal summary."""
import math
import os
import subprocess
import sys
import time
from contextlib import contextmanager
from functools import partial

import numpy as np
import pytest

import conftest
from ddmap.analysis import (
    KickEnergyFamily,
    bifurcation_sweep,
    detect_period,
    fixed_points,
    iterate,
    lyapunov,
)
from ddmap.core import (
    EnergyVariant,
    KickParams,
    LogisticParams,
    energy_cycle,
    kick_velocity_step,
    logistic_derivative,
    logistic_gain,
    logistic_loss,
    logistic_step,
)
from ddmap.ingest import empirical_fixed_points, energy_series, fit_curves, synthetic_impacts
from ddmap.trajectory import path_stats, simulate_walk

KICK = KickEnergyFamily()


@contextmanager
def criterion(number, title, limit):
    """Record PASS/FAIL for one criterion, including its runtime limit."""
    start = time.perf_counter()
    status, detail = "FAIL", ""
    try:
        yield
        elapsed = time.perf_counter() - start
        if limit is not None and elapsed > limit:
            detail = f" (runtime {elapsed:.2f}s exceeds {limit}s)"
            raise AssertionError(f"criterion {number} took {elapsed:.2f}s > {limit}s")
        status = "PASS"
        detail = f" ({elapsed:.2f}s)"
    except Exception as exc:
        detail = detail or f" ({type(exc).__name__}: {str(exc).splitlines()[0][:100]})"
        raise
    finally:
        line = f"[{status}] criterion {number}: {title}{detail}"
        conftest.ACCEPTANCE_RESULTS.append(line)
        print(line)


def attractor(f, x0=1.0, transient=5000, keep=256, clamp=True):
    return iterate(f, x0, transient + keep, transient, clamp=clamp)


def test_01_two_step_logistic_equivalence():
    with criterion(1, "two-step logistic equals one-step map to rel 1e-12", 1.0):
        E = np.linspace(0.0, 1.0, 1001)
        for r in (2.5, 3.3, 4.0):
            p = LogisticParams(r)
            lhs = np.array([logistic_loss(logistic_gain(e, p), p) for e in E])
            rhs = r * E * (1 - E)
            nz = rhs != 0
            assert np.all(lhs[~nz] == 0)
            assert np.max(np.abs(lhs[nz] - rhs[nz]) / np.abs(rhs[nz])) < 1e-12


def test_02_logistic_regimes():
    with criterion(2, "logistic regimes at r = 2.5, 3.3, 4", 10.0):
        f = lambda r: partial(logistic_step, p=LogisticParams(r))
        orbit = attractor(f(2.5), 0.2, clamp=False)
        assert detect_period(orbit) == 1
        assert abs(orbit.samples[-1] - 0.6) < 1e-9

        r = 3.3
        orbit = attractor(f(r), 0.2, clamp=False)
        assert detect_period(orbit) == 2
        d = math.sqrt((r + 1) * (r - 3))
        oracle = sorted([((r + 1) - d) / (2 * r), ((r + 1) + d) / (2 * r)])
        assert np.allclose(sorted(orbit.samples[:2]), oracle, atol=1e-4)
        assert np.allclose(oracle, [0.4794, 0.8236], atol=1e-4)

        assert detect_period(attractor(f(4.0), 0.2, clamp=False)) == 0
        lam = lyapunov(f(4.0), partial(logistic_derivative, p=LogisticParams(4.0)), 0.2, 10**6)
        assert abs(lam - math.log(2)) < 0.01


def test_03_conjugacy():
    with criterion(3, "squared velocity step equals exact-square energy cycle", 1.0):
        rng = np.random.default_rng(20240601)
        for frac in (1 / 20, 1 / 6, 1.0):
            p = KickParams.from_fraction(frac)
            v = rng.uniform(-2 * math.pi, 2 * math.pi, 10_000)
            lhs = kick_velocity_step(v, p) ** 2
            rhs = energy_cycle(v * v, p, EnergyVariant.EXACT_SQUARE)
            assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.abs(lhs) + 1e-300)


def test_04_fixed_point_counts():
    with criterion(4, "non-trivial fixed points on [0, 50]: 0, 1, >= 2", 5.0):
        counts = {}
        for frac in (1 / 20, 1 / 4, 1.0):
            fps = fixed_points(KICK.map_at(frac), KICK.derivative_at(frac), (0.0, 50.0))
            counts[frac] = len(fps.nontrivial())
        assert counts[1 / 20] == 0
        assert counts[1 / 4] == 1
        assert counts[1.0] >= 2


def test_05_route_to_chaos():
    with criterion(5, "periods 1, 2, 0, 0 at C = 1/7, 1/6, 1/5, 1 (units of 1/K)", 30.0):
        periods = {frac: detect_period(attractor(KICK.map_at(frac)), p_max=64) for frac in (1 / 7, 1 / 6, 1 / 5, 1.0)}
        assert periods == {1 / 7: 1, 1 / 6: 2, 1 / 5: 0, 1.0: 0}
        lam_sink = lyapunov(KICK.map_at(1 / 7), KICK.derivative_at(1 / 7), 1.0, 20_000, 5000, clamp=True)
        assert lam_sink < 0
        lam = lyapunov(KICK.map_at(1.0), KICK.derivative_at(1.0), 1.0, 100_000, 5000, clamp=True)
        assert lam > 0.01


def _ladder(periods):
    """Distinct consecutive period values up to the first aperiodic point."""
    out = []
    for p in periods:
        if p == 0:
            break
        if not out or out[-1] != p:
            out.append(int(p))
    return out


def test_06_bifurcation_diagram():
    with criterion(6, "period ladder 1-2-4-8 over (0, 1/K] and a 3-cycle in [7/50, 1/5]", 300.0):
        full = bifurcation_sweep(KICK, (0.0, 1.0), 2000, include_left=False)
        assert full.param_grid.size == 2000 and full.param_grid[0] > 0 and full.param_grid[-1] == 1.0
        ladder = _ladder(full.periods)
        assert ladder[:4] == [1, 2, 4, 8]
        assert ladder == sorted(ladder)
        zoom = bifurcation_sweep(KICK, (7 / 50, 1 / 5), 2000)
        assert np.any(zoom.periods == 3)


def test_07_trajectory_regimes():
    with criterion(7, "steady, two-step and direction-switching walkers", 10.0):
        steady = simulate_walk(KickParams.from_fraction(1 / 10), 1.0, 1000, transient=5000)
        st = path_stats(steady)
        assert st.direction_switch_count == 0
        assert np.ptp(np.abs(steady.velocities)) < 1e-9

        two = simulate_walk(KickParams.from_fraction(1 / 6), 1.0, 1000, transient=5000)
        assert path_stats(two).occupied_bins == 2

        chaos = simulate_walk(KickParams.from_fraction(1 / 2), 1.0, 10_000)
        assert path_stats(chaos).direction_switch_count > 0


def test_08_ingest_round_trip():
    with criterion(8, "noiseless ingest recovers C^2 and the fixed-point count", 5.0):
        p = KickParams.from_fraction(1 / 10)
        series = energy_series(synthetic_impacts(p, 64))
        gain, loss = fit_curves(series)
        assert abs(loss.coef_ / p.C**2 - 1) < 1e-6
        emp = empirical_fixed_points(series, gain, loss)
        domain = (float(series.pre_impact.min()), float(series.pre_impact.max()))
        fam = KickEnergyFamily(clamp=False)
        ana = fixed_points(fam.map_at(1 / 10), fam.derivative_at(1 / 10), domain, 4001)
        assert len(emp) == len(ana)


def _cli(*argv, env=None):
    full_env = dict(os.environ, **(env or {}))
    res = subprocess.run([sys.executable, "-m", "ddmap", *argv], capture_output=True, env=full_env, check=True)
    return res.stdout


def test_09_determinism(tmp_path):
    with criterion(9, "repeated CLI runs, including parallel sweeps, are byte-identical", None):
        sweep = ["bifurcate", "--range", "1/10:1/2", "--grid", "48", "--transient", "1000", "--keep", "192"]
        par_a = _cli(*sweep, "--cold", "--jobs", "2")
        par_b = _cli(*sweep, "--cold", "--jobs", "2")
        seq = _cli(*sweep, "--cold", "--jobs", "1")
        env_threads = _cli(*sweep, "--cold", env={"DDMAP_THREADS": "3"})
        assert par_a == par_b == seq == env_threads
        assert _cli(*sweep) == _cli(*sweep)
        for argv in (
            ["cobweb", "--c-frac", "1/6"],
            ["simulate", "--c-frac", "1/5", "--n", "500"],
            ["trajectory", "--c-frac", "1/2", "--impacts", "200"],
            ["synth", "--noise", "0.01", "--relative-noise", "--seed", "9"],
            ["fixed-points", "--c-frac", "1"],
        ):
            assert _cli(*argv) == _cli(*argv)
