from functools import partial

import numpy as np
import pytest

from ddmap.analysis import iterate
from ddmap.core import KickParams, kick_velocity_step
from ddmap.exceptions import DDMapError, DivergenceError
from ddmap.trajectory import WalkerPath, classify_regime, path_stats, simulate_walk


def walk(frac, **kw):
    return simulate_walk(KickParams.from_fraction(frac), **kw)


def make_path(v, dt=1.0, L=100.0):
    v = np.asarray(v, float)
    unwrapped = np.cumsum(v * dt)
    return WalkerPath(np.mod(unwrapped, L), v, unwrapped, L, dt)


def test_steady_walking():
    path = walk(1 / 10, v0=1.0, impacts=500, transient=5000)
    v = path.velocities
    assert np.ptp(v) < 1e-9
    stats = path_stats(path)
    assert stats.direction_switch_count == 0
    assert stats.occupied_bins == 1
    assert np.allclose(np.diff(path.unwrapped), v[1:], rtol=1e-12)


def test_two_step_jump():
    path = walk(1 / 6, v0=1.0, impacts=500, transient=5000)
    steps = np.abs(np.diff(path.unwrapped))
    short, long = steps[0::2], steps[1::2]
    if short[0] > long[0]:
        short, long = long, short
    assert np.ptp(short) < 1e-9 and np.ptp(long) < 1e-9
    assert long[0] - short[0] > 0.05
    assert path_stats(path).occupied_bins == 2
    assert path_stats(path).direction_switch_count == 0


def test_chaotic_switching():
    path = walk(1 / 2, v0=1.0, impacts=10_000)
    stats = path_stats(path)
    assert stats.direction_switch_count > 0
    assert stats.direction_switch_count <= len(path) - 1


@pytest.mark.parametrize("frac,label", [(1 / 10, "steady"), (1 / 6, "two-step"), (1 / 2, "chaotic")])
def test_classify_regime(frac, label):
    got, period, lam = classify_regime(KickParams.from_fraction(frac))
    assert got == label
    assert (period == 0) == (label == "chaotic")
    assert (lam > 0) == (label == "chaotic")


def test_trivial_stats():
    stats = path_stats(make_path(np.ones(20)))
    assert stats.mean_speed == 1.0 and stats.direction_switch_count == 0
    assert path_stats(make_path([1.0, -1.0, 1.0])).direction_switch_count == 2
    assert path_stats(make_path([1.0, 0.0, 1.0, 0.0, -1.0])).direction_switch_count == 1


def test_histogram_counts_every_impact():
    path = walk(1 / 3, v0=0.4, impacts=300)
    stats = path_stats(path, bin_width=0.005)
    assert stats.counts.sum() == 300
    assert np.allclose(np.diff(stats.bin_edges), 0.005)


@pytest.mark.parametrize("frac", [1 / 10, 1 / 6, 1 / 2, 1.0])
def test_wrap_agrees_with_unwrap(frac):
    path = walk(frac, v0=0.8, impacts=2000, L=3.0, dt=0.7)
    assert np.all((path.positions >= 0) & (path.positions < 3.0))
    d = np.mod(path.unwrapped - path.positions + 1.5, 3.0) - 1.5
    assert np.max(np.abs(d)) < 1e-9
    assert np.allclose(np.diff(path.unwrapped), path.velocities[1:] * 0.7, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("frac", [1 / 6, 1 / 2])
def test_velocities_match_iterate(frac):
    p = KickParams.from_fraction(frac)
    path = simulate_walk(p, 0.9, 400, transient=100)
    ref = iterate(partial(kick_velocity_step, p=p), 0.9, 500, 100).samples
    np.testing.assert_array_equal(path.velocities, ref)


@pytest.mark.parametrize("frac", [1 / 6, 1 / 2, 1.0])
def test_reversal_symmetry(frac):
    a = walk(frac, v0=0.7, impacts=1000)
    b = walk(frac, v0=-0.7, impacts=1000)
    np.testing.assert_array_equal(b.velocities, -a.velocities)
    np.testing.assert_allclose(b.unwrapped, -a.unwrapped, rtol=0, atol=1e-12 * np.abs(a.unwrapped).max())


@pytest.mark.parametrize("kw", [dict(impacts=0), dict(L=0.0), dict(dt=-1.0)])
def test_bad_arguments(kw):
    args = dict(v0=1.0, impacts=5)
    args.update(kw)
    with pytest.raises(DDMapError):
        walk(1 / 6, **args)


def test_divergence():
    with pytest.raises(DivergenceError):
        # C = 1 (absolute) lets the kick amplitude K ~ 8e12 through undamped
        simulate_walk(KickParams.with_defaults(1.0), 1.0, 100)


def test_empty_path():
    with pytest.raises(DDMapError):
        path_stats(make_path([]))
