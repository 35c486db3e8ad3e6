import math

import numpy as np
import pytest
from scipy import stats

from rydpump import qops
from rydpump.errors import InvalidArgumentError, StepSizeError
from rydpump.lindblad import MasterEquationRun, propagate
from rydpump.mcwf import (
    TrajectorySpec,
    default_dt,
    effective_hamiltonian,
    run_ensemble,
    run_trajectory,
    steady_state,
)
from rydpump.model import LatticeGeometry, PumpParams, total_hamiltonian


def make(**kw):
    base = dict(omega1=0.0, omega2=0.0, omega_g=0.0, delta=0.0, gamma=0.0, delta33=1.0, delta34=0.5)
    base.update(kw)
    return PumpParams(**base)


def test_effective_hamiltonian_decay_diagonal():
    p = make(gamma=0.7, omega1=0.2)
    heff = qops.to_dense(effective_hamiltonian(p, LatticeGeometry.pair()))
    h = qops.to_dense(total_hamiltonian(p, LatticeGeometry.pair()))
    anti = heff - h
    assert anti[qops.basis_index("34"), qops.basis_index("34")] == pytest.approx(-0.7j)
    assert anti[qops.basis_index("13"), qops.basis_index("13")] == pytest.approx(-0.35j)
    assert anti[qops.basis_index("12"), qops.basis_index("12")] == 0


def test_default_dt_jump_probability():
    p = make(gamma=0.4)
    dt = default_dt(p, LatticeGeometry.triangle())
    assert 1 - math.exp(-3 * 0.4 * dt) == pytest.approx(0.05)
    with pytest.raises(InvalidArgumentError):
        default_dt(make(), LatticeGeometry.pair())


def test_no_decay_is_schrodinger_evolution():
    w = 1.7
    spec = TrajectorySpec(make(omega1=w), LatticeGeometry.single(), qops.ket("1"), t_final=5.0, dt=0.01,
                          sample_every=10)
    res = run_trajectory(spec)
    assert res.n_jumps == 0
    np.testing.assert_allclose(res.populations[:, 2], np.sin(w * res.times / 2) ** 2, atol=1e-10)
    np.testing.assert_allclose(res.populations.sum(axis=1), 1, atol=1e-12)


def test_jump_times_follow_exponential_law():
    gamma, dt, t_final, n = 1.0, 0.05, 6.0, 10_000
    spec = TrajectorySpec(make(gamma=gamma), LatticeGeometry.single(), qops.ket("3"), t_final=t_final,
                          dt=dt, sample_every=120)
    ens_jumps = []
    for i in range(n):
        res = run_trajectory(TrajectorySpec(**{**spec.__dict__, "trajectory_index": i}))
        assert res.n_jumps <= 1
        ens_jumps.append(res.jump_times[0] if res.n_jumps else np.inf)
        if res.n_jumps:
            assert res.populations[-1, 2] == 0
    jt = np.asarray(ens_jumps)
    k = np.arange(1, spec.n_steps + 1)
    ecdf = np.array([(jt <= kk * dt + 1e-12).mean() for kk in k])
    cdf = 1 - np.exp(-gamma * k * dt)
    d = np.abs(ecdf - cdf).max()
    p_value = stats.kstwo.sf(d, n)
    assert p_value > 0.01, (d, p_value)


def test_decay_channel_branching():
    spec = TrajectorySpec(make(gamma=1.0), LatticeGeometry.single(), qops.ket("4"), t_final=8.0, dt=0.05)
    channels = []
    for i in range(2000):
        res = run_trajectory(TrajectorySpec(**{**spec.__dict__, "trajectory_index": i}))
        channels.extend(res.jump_channels.tolist())
    channels = np.asarray(channels)
    # level 4 decays through channels (4,1) and (4,2) only, equally often
    assert set(channels.tolist()) <= {2, 3}
    frac = (channels == 2).mean()
    assert abs(frac - 0.5) < 4 * math.sqrt(0.25 / len(channels))


def test_step_size_error():
    spec = TrajectorySpec(make(gamma=1.0), LatticeGeometry.single(), qops.ket("3"), t_final=2.0, dt=0.5)
    with pytest.raises(StepSizeError):
        run_trajectory(spec)


def test_spec_validation():
    with pytest.raises(InvalidArgumentError):
        TrajectorySpec(make(), LatticeGeometry.single(), np.array([1, 1, 0, 0]), t_final=1.0, dt=0.1)
    with pytest.raises(InvalidArgumentError):
        TrajectorySpec(make(), LatticeGeometry.pair(), qops.ket("1"), t_final=1.0, dt=0.1)
    with pytest.raises(InvalidArgumentError):
        run_ensemble(TrajectorySpec(make(), LatticeGeometry.single(), qops.ket("1"), 1.0, 0.1), 0)


def _pair_spec(seed=3):
    p = make(omega1=2.0, omega2=2.0, omega_g=0.5, delta=1.0, gamma=0.3, delta33=2.0, delta34=0.5)
    return TrajectorySpec(p, LatticeGeometry.pair(), qops.ket("11"), t_final=6.0, dt=0.02, seed=seed,
                          sample_every=25)


def test_ensemble_is_independent_of_jobs():
    a = run_ensemble(_pair_spec(), 12, jobs=1)
    b = run_ensemble(_pair_spec(), 12, jobs=2)
    np.testing.assert_array_equal(a.populations, b.populations)
    np.testing.assert_array_equal(a.per_trajectory_jumps, b.per_trajectory_jumps)


def test_seed_changes_outcome():
    a = run_ensemble(_pair_spec(seed=1), 8)
    b = run_ensemble(_pair_spec(seed=2), 8)
    assert not np.array_equal(a.populations, b.populations)


def test_single_trajectory_ensemble():
    spec = _pair_spec()
    ens = run_ensemble(spec, 1)
    single = run_trajectory(spec)
    np.testing.assert_array_equal(ens.mean_populations, single.populations)
    assert np.all(np.isnan(ens.std_error))


def test_ensemble_mean_agrees_with_master_equation():
    p = make(omega1=1.5, omega_g=0.8, delta=0.4, gamma=0.5)
    geo = LatticeGeometry.single()
    spec = TrajectorySpec(p, geo, qops.ket("1"), t_final=6.0, dt=0.02, seed=11, sample_every=30)
    ens = run_ensemble(spec, 1500)
    rec = propagate(MasterEquationRun(p, geo, qops.ket("1"), t_final=6.0, dt=0.02,
                                      observables={"p3": qops.projector("3")}, sample_every=30))
    mean, err = ens.mean_and_error([2])
    np.testing.assert_allclose(ens.times, rec.times)
    z = np.abs(mean[1:] - rec.values["p3"][1:]) / err[1:]
    assert z.max() < 4.0, z


def test_steady_state_detects_plateau():
    times = np.linspace(0, 10, 501)
    rng = np.random.default_rng(0)
    base = 0.8 * (1 - np.exp(-3 * times))
    series = base + 0.01 * rng.normal(size=(40, times.size))
    ss = steady_state(times, series, window=1.0)
    assert ss.converged and 1.0 <= ss.t_start <= 3.0
    assert abs(ss.value - 0.8) < 4 * ss.std_error + 1e-3


def test_steady_state_falls_back_without_plateau():
    times = np.linspace(0, 10, 201)
    series = np.tile(times / 10, (5, 1))
    ss = steady_state(times, series, window=1.0)
    assert not ss.converged
    assert ss.t_start == pytest.approx(times[100])
