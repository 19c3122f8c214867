import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adhesion1d.core import ModelSpec, ParticleState
from adhesion1d.particles import (
    NoiseStreams,
    SdeConfig,
    SdeSimulator,
    initial_positions,
    interaction_terms,
    pairwise_force,
    particle_drift,
    particle_saturation,
    run_sde,
    step_sde,
)

APS = ModelSpec(kind="aps", gamma=1.0)


def test_pairwise_force_examples():
    assert pairwise_force(0.0, 0.25, APS) == pytest.approx(0.5)
    assert pairwise_force(0.25, 0.0, APS) == pytest.approx(-0.5)
    assert pairwise_force(0.0, 0.0, APS) == 0.0
    assert pairwise_force(0.0, 0.6, APS) == 0.0


def test_particle_drift_matches_pairwise_sum(rng):
    spec = ModelSpec(kind="nonlocal-sat", gamma=3.0, K=0.6)
    x = rng.uniform(-1, 1, 40)
    drift, S = particle_drift(x, spec)
    N = x.size
    state = ParticleState(x, 0.0, 0, 0, None, 1.0)
    cfg = SdeConfig(spec, N=N)
    for i in range(N):
        f = sum(pairwise_force(x[i], x[j], spec) for j in range(N))
        s = particle_saturation(i, state, cfg)
        assert S[i] == pytest.approx(s, abs=1e-13)
        assert drift[i] == pytest.approx(s * f / N, abs=1e-12)


def test_saturation_counts_self():
    spec = ModelSpec(kind="nonlocal-sat", K=1.0, a=0.1)
    x = np.array([-0.9, 0.9])
    _, S = particle_drift(x, spec)
    # each particle only sees itself: 1 - w_hat(0) / (2 a K N)
    assert S == pytest.approx(1 - 1 / (2 * 0.1 * 2))


def test_deterministic_limit_leaves_positions():
    cfg = SdeConfig(APS.with_(gamma=0.0), N=10, eps2=0.0, n_steps=5)
    run = run_sde(cfg)
    assert np.array_equal(run.final.positions, run.positions[0])


def test_two_particles_approach_symmetrically():
    cfg = SdeConfig(APS.with_(gamma=10.0), N=2, eps2=0.0, n_steps=1, dt=0.01)
    sim = SdeSimulator(cfg)
    st0 = sim.initial_state(np.array([-0.1, 0.1]))
    st1 = sim.step(st0, NoiseStreams(0, st0.stream_ids))
    assert st1.positions[0] > -0.1 and st1.positions[1] < 0.1
    assert st1.positions[0] == -st1.positions[1]


def test_clamp_and_reflect_boundary():
    cfg = SdeConfig(APS.with_(gamma=0.0), N=2, eps2=1.0, noise="brownian", n_steps=1, dt=1.0)
    st0 = SdeSimulator(cfg).initial_state(np.array([0.999, -0.999]))
    st1 = step_sde(st0, cfg)
    assert np.all(np.abs(st1.positions) <= 1.0)
    rcfg = SdeConfig(APS.with_(gamma=0.0), N=2, eps2=1.0, noise="brownian", n_steps=1, dt=1.0, boundary="reflect")
    st2 = step_sde(SdeSimulator(rcfg).initial_state(np.array([0.999, -0.999])), rcfg)
    assert np.all(np.abs(st2.positions) <= 1.0)


def test_interaction_preserves_mean_without_walls():
    spec = ModelSpec(kind="aps", gamma=5.0)
    x = np.random.default_rng(4).uniform(-0.5, 0.5, 50)
    drift, _ = particle_drift(x, spec)
    assert abs(drift.sum()) <= 1e-12


@settings(max_examples=15)
@given(st.integers(0, 2**31), st.sampled_from(["aps", "local-sat", "nonlocal-sat"]))
def test_drift_exchangeable(seed, kind):
    spec = ModelSpec(kind=kind, K=0.6 if kind == "nonlocal-sat" else 1.0)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, 60)
    perm = rng.permutation(60)
    d, S = particle_drift(x, spec)
    dp, Sp = particle_drift(x[perm], spec)
    assert np.array_equal(d[perm], dp)
    assert np.array_equal(S[perm], Sp)


def test_run_deterministic_and_seed_dependent():
    cfg = SdeConfig(ModelSpec(kind="nonlocal-sat", K=0.6), N=100, n_steps=50, stride=10, seed=9)
    a, b = run_sde(cfg), run_sde(cfg)
    assert np.array_equal(a.positions, b.positions)
    c = run_sde(SdeConfig(cfg.spec, N=100, n_steps=50, stride=10, seed=10))
    assert not np.array_equal(a.positions, c.positions)
    assert a.steps.tolist() == [0, 10, 20, 30, 40, 50]
    assert a.times[-1] == pytest.approx(0.5)


def test_relabelling_keeps_trajectories():
    # permuting particles together with their stream ids permutes the outcome
    cfg = SdeConfig(ModelSpec(kind="aps"), N=30, n_steps=20, seed=2)
    sim = SdeSimulator(cfg)
    x0 = initial_positions(cfg)
    perm = np.random.default_rng(0).permutation(30)
    a = sim.run(sim.initial_state(x0))
    b = sim.run(sim.initial_state(x0[perm], np.arange(30)[perm]))
    assert np.array_equal(a.final.positions[perm], b.final.positions)


def test_n_steps_zero():
    run = run_sde(SdeConfig(APS, N=5, n_steps=0))
    assert run.positions.shape == (1, 5)
    assert run.final.step == 0


def test_initial_support():
    cfg = SdeConfig(APS, N=1000, init="concentrated", delta=0.3)
    x = initial_positions(cfg)
    assert np.all(np.abs(x) <= 0.3)
    assert np.all(np.abs(run_sde(SdeConfig(APS, N=200, n_steps=30, eps2=5.0, noise="brownian")).final.positions) <= 1.0)


def test_noise_streams_independent_of_block():
    a = NoiseStreams(3, np.arange(4), block=7)
    b = NoiseStreams(3, np.arange(4), block=256)
    for step in range(20):
        assert np.array_equal(a.draw(step), b.draw(step))
    c = NoiseStreams(3, np.arange(4), block=5)
    assert np.array_equal(c.draw(17), NoiseStreams(3, np.arange(4)).draw(17) if False else b_at(3, 17))
    with pytest.raises(ValueError):
        c.draw(2)


def b_at(seed, step):
    s = NoiseStreams(seed, np.arange(4), block=1)
    for k in range(step):
        s.draw(k)
    return s.draw(step)


def test_config_errors():
    with pytest.raises(ValueError, match="N must"):
        SdeConfig(APS, N=1)
    with pytest.raises(ValueError, match="noise"):
        SdeConfig(APS, noise="levy")
    with pytest.raises(ValueError, match="delta"):
        SdeConfig(APS, init="concentrated")
    cfg = SdeConfig(ModelSpec(kind="local-sat"), N=400, a_rule="scaling")
    assert cfg.effective_spec.a == pytest.approx(0.05)
    assert SdeConfig(APS, noise="brownian", eps2=0.4).diffusion == 0.4
    assert SdeConfig(APS, dt=0.01).diffusion == pytest.approx((0.01 * 0.4 * 0.1) ** 2 / 0.02)


def test_interaction_terms_query_points():
    spec = ModelSpec(kind="aps", gamma=1.0)
    f, _ = interaction_terms(np.array([0.0]), np.array([0.25, -0.25, 0.1]), spec)
    assert f[0] == pytest.approx(0.8)
