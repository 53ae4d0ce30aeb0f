"""Path integration, ensembles, histograms and the running-integral statistic."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from penosc.models import (
    ModelKind,
    ModelSpec,
    Potential,
    WhiteNoise,
    gibbs_density_obstacle,
    ou_noise,
    ou_stationary_density,
    quadratic_potential,
    zero_potential,
)
from penosc.simulate import (
    SimConfig,
    SimulationDivergedError,
    crossing_statistic,
    em_step,
    empirical_invariant_density,
    ensemble_mean,
    member_rng,
    simulate_path,
)

FRICTION = ModelSpec(ModelKind.FRICTION, 100, 1.0, zero_potential())


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


def test_em_step_noise_only():
    """At the origin the friction drift vanishes; only the noise moves y."""
    z = em_step(FRICTION, [0.0, 4.0], dt=0.04, gaussian=1.5)
    assert z == pytest.approx([math.sqrt(0.04) * 1.5, 4.0])


def test_em_step_deterministic_euler():
    spec = ModelSpec(ModelKind.ELASTO_PLASTIC, 2, 1.0, quadratic_potential())
    z = em_step(spec, [1.0, 2.0], dt=0.1, gaussian=0.0)
    assert z == pytest.approx([1.0 - 0.3, 2.0 - 0.1])


def test_em_step_hand_example():
    z = em_step(FRICTION, [2.0, 0.0], dt=0.01, gaussian=0.0)
    assert z == pytest.approx([1.97, 0.02])


def test_em_step_detects_overflow():
    with pytest.raises(SimulationDivergedError):
        em_step(FRICTION, [1e308, 0.0], dt=10.0, gaussian=0.0)


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------


def test_path_determinism():
    cfg = SimConfig(t_final=5.0, dt=1e-3, seed=42, stride=10)
    a = simulate_path(FRICTION, cfg)
    b = simulate_path(FRICTION, cfg)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, b.times)
    assert a.times[0] == 0.0
    assert np.allclose(np.diff(a.times), 10 * 1e-3)


def test_kernel_and_python_paths_agree_bitwise():
    """A custom potential identical to the quadratic one forces the plain
    Python stepping loop; it must reproduce the compiled path exactly
    (the per-step draws consume the same stream)."""
    fast = ModelSpec(ModelKind.ELASTO_PLASTIC, 5, 1.0, quadratic_potential(1.0))
    slow_pot = dataclasses.replace(quadratic_potential(1.0), name="custom")
    slow = ModelSpec(ModelKind.ELASTO_PLASTIC, 5, 1.0, slow_pot)
    cfg = SimConfig(t_final=2.0, dt=1e-2, seed=9, stride=5)
    a = simulate_path(fast, cfg)
    b = simulate_path(slow, cfg)
    assert np.array_equal(a.states, b.states)


def test_path_divergence_carries_step_index():
    stiff = ModelSpec(ModelKind.ELASTO_PLASTIC, 1000, 1.0, quadratic_potential())
    cfg = SimConfig(t_final=200.0, dt=0.5, seed=0, z0=(0.0, 5.0))
    with pytest.raises(SimulationDivergedError) as err:
        simulate_path(stiff, cfg)
    assert err.value.step >= 1


def test_elasto_plastic_confinement():
    """The penalty keeps |x| within ~1 + 3/sqrt(n) almost always."""
    spec = ModelSpec(ModelKind.ELASTO_PLASTIC, 100, 1.0, zero_potential())
    traj = simulate_path(spec, SimConfig(t_final=50.0, dt=1e-3, seed=2, stride=1))
    frac = np.mean(np.abs(traj.states[:, 1]) > 1.0 + 3.0 / math.sqrt(100))
    assert frac < 0.01


def test_obstacle_exceeds_box_but_stays_finite():
    spec = ModelSpec(ModelKind.OBSTACLE, 100, 1.0, zero_potential())
    traj = simulate_path(spec, SimConfig(t_final=50.0, dt=1e-3, seed=2, stride=1))
    m = np.max(np.abs(traj.states[:, 1]))
    assert 1.0 < m < 50.0


def test_member_streams_are_independent_of_query_order():
    a = member_rng(7, 3).standard_normal(4)
    member_rng(7, 999)
    b = member_rng(7, 3).standard_normal(4)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


def test_ensemble_constant_functional():
    stat = ensemble_mean(FRICTION, SimConfig(t_final=0.1, dt=1e-2, seed=1),
                         4, lambda traj: 1.0)
    assert stat.estimate == 1.0
    assert stat.stderr == 0.0
    assert stat.samples == 4


def test_ensemble_velocity_average_vanishes():
    def mean_y(traj):
        return float(np.mean(traj.states[:, 0]))

    stat = ensemble_mean(FRICTION, SimConfig(t_final=100.0, dt=1e-3, seed=3,
                                             stride=10), 24, mean_y)
    assert abs(stat.estimate) <= 3 * stat.stderr


def test_ensemble_ou_second_moment():
    """Time average of eta^2 for the quadratic noise potential: 1/(2 theta)."""
    theta = 2.0
    spec = ModelSpec(ModelKind.FRICTION, 100, 1.0, zero_potential(),
                     ou_noise(theta_v=theta))

    def mean_eta_sq(traj):
        keep = traj.times >= 10.0
        return float(np.mean(traj.states[keep, 0] ** 2))

    stat = ensemble_mean(spec, SimConfig(t_final=110.0, dt=1e-3, seed=8,
                                         stride=10), 24, mean_eta_sq)
    assert abs(stat.estimate - 1.0 / (2 * theta)) <= 3 * stat.stderr


def test_ensemble_requires_two_members():
    with pytest.raises(ValueError):
        ensemble_mean(FRICTION, SimConfig(t_final=1.0, dt=1e-2), 1, lambda t: 0.0)


@pytest.mark.slow
def test_ergodic_average_stability():
    """Time averages over [0, T] and [T/2, T] agree within combined errors."""
    spec = ModelSpec(ModelKind.OBSTACLE, 10, 1.0, quadratic_potential())
    cfg = SimConfig(t_final=400.0, dt=1e-3, seed=13, stride=10)

    def avg_full(traj):
        return float(np.mean(traj.states[:, 0] ** 2))

    def avg_half(traj):
        keep = traj.times >= 200.0
        return float(np.mean(traj.states[keep, 0] ** 2))

    full = ensemble_mean(spec, cfg, 16, avg_full)
    half = ensemble_mean(spec, cfg, 16, avg_half)
    combined = math.hypot(full.stderr, half.stderr)
    assert abs(full.estimate - half.estimate) <= 3 * combined


# ---------------------------------------------------------------------------
# invariant density histograms
# ---------------------------------------------------------------------------


def test_obstacle_histogram_matches_gibbs():
    spec = ModelSpec(ModelKind.OBSTACLE, 2, 1.0, quadratic_potential())
    cfg = SimConfig(t_final=5000.0, dt=1e-3, seed=4, stride=10)
    hist = empirical_invariant_density(spec, cfg, burn_in=500.0,
                                       components=("x", "y"),
                                       bounds=[(-2, 2), (-2, 2)], nbins=20)
    rho = gibbs_density_obstacle(spec)
    xc, yc = np.meshgrid(hist.centers[0], hist.centers[1], indexing="ij")
    expected = rho(xc, yc)
    occupied = hist.counts > 0
    ok = np.abs(hist.density - expected) <= 3 * np.maximum(hist.density_se, 1e-12)
    assert np.mean(ok[occupied]) >= 0.95


def test_colored_noise_marginal_matches_density():
    spec = ModelSpec(ModelKind.FRICTION, 100, 1.0, zero_potential(),
                     ou_noise(theta_v=1.0))
    cfg = SimConfig(t_final=5000.0, dt=1e-3, seed=6, stride=10)
    hist = empirical_invariant_density(spec, cfg, burn_in=500.0,
                                       components=("eta",),
                                       bounds=[(-3, 3)], nbins=30)
    rho = ou_stationary_density(spec.noise.v_prime, beta=2.0)
    expected = rho(hist.centers[0])
    occupied = hist.counts > 0
    ok = np.abs(hist.density - expected) <= 3 * np.maximum(hist.density_se, 1e-12)
    assert np.mean(ok[occupied]) >= 0.95


def test_histogram_symmetry_under_sign_flip():
    """Equivariance of the dynamics under (y, x) -> (-y, -x)."""
    spec = ModelSpec(ModelKind.OBSTACLE, 2, 1.0, quadratic_potential())
    cfg = SimConfig(t_final=5000.0, dt=1e-3, seed=14, stride=10)
    hist = empirical_invariant_density(spec, cfg, burn_in=500.0,
                                       components=("x", "y"),
                                       bounds=[(-2, 2), (-2, 2)], nbins=10)
    flipped = hist.density[::-1, ::-1]
    se = np.sqrt(hist.density_se**2 + hist.density_se[::-1, ::-1] ** 2)
    occupied = (hist.counts > 0) | (hist.counts[::-1, ::-1] > 0)
    ok = np.abs(hist.density - flipped) <= 4 * np.maximum(se, 1e-12)
    assert np.mean(ok[occupied]) >= 0.95


def test_histogram_rejects_everything_outside():
    cfg = SimConfig(t_final=50.0, dt=1e-3, seed=1, stride=10)
    with pytest.raises(ValueError):
        empirical_invariant_density(FRICTION, cfg, burn_in=5.0,
                                    components=("x",), bounds=[(100, 101)],
                                    nbins=5)


def test_histogram_burn_in_validation():
    cfg = SimConfig(t_final=1.0, dt=1e-2, seed=1)
    with pytest.raises(ValueError):
        empirical_invariant_density(FRICTION, cfg, burn_in=2.0,
                                    components=("x",), bounds=[(-1, 1)], nbins=4)


@pytest.mark.slow
def test_weak_order_trend_toward_gibbs():
    """With shared Brownian increments, coarser steps sit farther from the
    stationary second moment than finer ones."""
    spec = ModelSpec(ModelKind.OBSTACLE, 2, 1.0, quadratic_potential())
    rng = np.random.default_rng(123)
    m_paths = 4000
    h = 0.01
    n_fine = 5000  # T = 50
    y = np.zeros((3, m_paths))
    x = np.zeros((3, m_paths))
    acc = np.zeros((2, m_paths))
    sums = np.zeros(3)
    counts = np.zeros(3)

    def step(level, dt, noise):
        du = np.asarray(spec.du_eff(x[level]))
        y_new = y[level] + (-du - spec.cb * y[level]) * dt + noise
        x[level] = x[level] + y[level] * dt
        y[level] = y_new

    for k in range(1, n_fine + 1):
        dw = math.sqrt(h) * rng.standard_normal(m_paths)
        acc += dw
        step(0, h, dw)
        if k % 2 == 0:
            step(1, 2 * h, acc[0].copy())
            acc[0] = 0.0
        if k % 4 == 0:
            step(2, 4 * h, acc[1].copy())
            acc[1] = 0.0
        if k > n_fine // 2:
            for lv, mod in ((0, 1), (1, 2), (2, 4)):
                if k % mod == 0:
                    sums[lv] += float(np.mean(y[lv] ** 2))
                    counts[lv] += 1

    second_moment = sums / counts
    target = 1.0 / (2.0 * spec.cb)
    errs = np.abs(second_moment - target)
    assert errs[2] > errs[1] > errs[0]


# ---------------------------------------------------------------------------
# running-integral statistic
# ---------------------------------------------------------------------------


def test_crossing_statistic_zero_observable():
    cfg = SimConfig(t_final=2.0, dt=1e-2, seed=3)
    assert crossing_statistic(FRICTION, cfg, lambda s: np.zeros(s.shape[0])) == 0.0


def test_crossing_statistic_unit_observable():
    cfg = SimConfig(t_final=2.0, dt=1e-2, seed=3)
    val = crossing_statistic(FRICTION, cfg, lambda s: np.ones(s.shape[0]))
    assert val == pytest.approx(2.0, rel=1e-9)


def test_crossing_statistic_identity_matches_displacement():
    """For the friction model the integrated velocity is the displacement."""
    cfg = SimConfig(t_final=20.0, dt=1e-3, seed=17)
    traj = simulate_path(FRICTION, cfg)
    stat = crossing_statistic(FRICTION, cfg, lambda s: s[:, 0])
    disp = np.max(np.abs(traj.states[:, 1] - traj.states[0, 1]))
    max_y = np.max(np.abs(traj.states[:, 0]))
    assert abs(stat - disp) <= 2 * 1e-3 * max_y


def test_crossing_statistic_monotone_in_horizon():
    base = dict(dt=1e-2, seed=23)
    short = crossing_statistic(FRICTION, SimConfig(t_final=5.0, **base),
                               lambda s: s[:, 0])
    long = crossing_statistic(FRICTION, SimConfig(t_final=10.0, **base),
                              lambda s: s[:, 0])
    assert long >= short


def test_thread_count_env_override(monkeypatch):
    from penosc.simulate import thread_count

    monkeypatch.setenv("PENOSC_THREADS", "5")
    assert thread_count() == 5
    assert thread_count(3) == 3
    monkeypatch.delenv("PENOSC_THREADS")
    assert thread_count() >= 1
