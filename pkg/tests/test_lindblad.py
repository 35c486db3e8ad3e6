import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydpump import qops
from rydpump.errors import CapacityError, IntegrityError, InvalidArgumentError
from rydpump.lindblad import (
    MasterEquationRun,
    bell_fidelity,
    liouvillian,
    master_rhs,
    populations,
    propagate,
    unvec,
    vec,
)
from rydpump.model import LatticeGeometry, PumpParams, jump_operators, total_hamiltonian


def make(**kw):
    base = dict(omega1=0.0, omega2=0.0, omega_g=0.0, delta=0.0, gamma=0.0, delta33=1.0, delta34=0.5)
    base.update(kw)
    return PumpParams(**base)


def test_vec_roundtrip(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    np.testing.assert_array_equal(unvec(vec(a)), a)
    # column stacking
    np.testing.assert_array_equal(vec(a)[:4], a[:, 0])


@settings(max_examples=20)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(0, 2))
def test_liouvillian_matches_direct_form(w1, w2, wg, d, g):
    p = make(omega1=w1, omega2=w2, omega_g=wg, delta=d, gamma=g, delta33=2.0, delta34=0.7)
    geo = LatticeGeometry.pair()
    rng = np.random.default_rng(7)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    rho = qops.density_matrix(psi / np.linalg.norm(psi))
    h = total_hamiltonian(p, geo)
    chans = [c.operator for c in jump_operators(p, geo)]
    lhs = unvec(liouvillian(p, geo) @ vec(rho))
    assert np.abs(lhs - master_rhs(rho, h, chans)).max() <= 1e-12


def test_liouvillian_trace_preserving():
    p = make(omega1=1.0, omega2=0.7, omega_g=0.3, delta=0.2, gamma=0.5)
    L = liouvillian(p, LatticeGeometry.pair())
    # vec(I)^dagger L = 0 is trace preservation
    assert np.abs(vec(np.eye(16)).conj() @ L).max() <= 1e-12


def test_liouvillian_capacity():
    with pytest.raises(CapacityError):
        liouvillian(make(), LatticeGeometry.triangle())


def test_single_atom_decay_oracle():
    gamma = 0.8
    p = make(gamma=gamma)
    run = MasterEquationRun(p, LatticeGeometry.single(), qops.ket("3"), t_final=3.0, dt=0.01,
                            observables={"p1": qops.projector("1"), "p2": qops.projector("2"),
                                         "p3": qops.projector("3")},
                            sample_every=10)
    rec = propagate(run)
    decayed = 1 - np.exp(-gamma * rec.times)
    np.testing.assert_allclose(rec.values["p3"], np.exp(-gamma * rec.times), atol=1e-12)
    np.testing.assert_allclose(rec.values["p1"], decayed / 2, atol=1e-12)
    np.testing.assert_allclose(rec.values["p2"], decayed / 2, atol=1e-12)


def test_single_atom_rabi_oracle():
    w = 2.3
    run = MasterEquationRun(make(omega1=w), LatticeGeometry.single(), qops.ket("1"), t_final=4.0,
                            dt=0.02, observables={"p3": qops.projector("3")})
    rec = propagate(run)
    np.testing.assert_allclose(rec.values["p3"], np.sin(w * rec.times / 2) ** 2, atol=1e-11)


def test_remainder_step_lands_on_t_final():
    run = MasterEquationRun(make(omega1=1.0), LatticeGeometry.single(), qops.ket("1"),
                            t_final=1.05, dt=0.1, observables={"p3": qops.projector("3")},
                            sample_every=3)
    rec = propagate(run)
    assert rec.times[0] == 0 and rec.times[-1] == pytest.approx(1.05)
    assert rec.values["p3"][-1] == pytest.approx(math.sin(1.05 / 2) ** 2, abs=1e-12)


def _rk4(rho, h, chans, t, n):
    dt = t / n
    for _ in range(n):
        k1 = master_rhs(rho, h, chans)
        k2 = master_rhs(rho + dt / 2 * k1, h, chans)
        k3 = master_rhs(rho + dt / 2 * k2, h, chans)
        k4 = master_rhs(rho + dt * k3, h, chans)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def test_propagator_agrees_with_rk4():
    p = make(omega1=1.2, omega2=0.9, omega_g=0.4, delta=1.5, gamma=0.3, delta33=3.0, delta34=0.6)
    geo = LatticeGeometry.pair()
    dt, steps = 0.05, 40
    run = MasterEquationRun(p, geo, qops.ket("11"), t_final=dt * steps, dt=dt)
    final = propagate(run).final_state
    ref = _rk4(qops.density_matrix(qops.ket("11")), total_hamiltonian(p, geo),
               [c.operator for c in jump_operators(p, geo)], dt * steps, steps * 100)
    assert np.abs(final - ref).max() <= 1e-7


def test_trace_and_positivity_over_run():
    p = make(omega1=1.0, omega2=1.0, omega_g=0.5, delta=0.5, gamma=0.2, delta33=2.0, delta34=0.4)
    run = MasterEquationRun(p, LatticeGeometry.pair(), qops.ket("11"), t_final=20.0, dt=0.1,
                            observables={"tr": lambda r: np.trace(r)})
    rec = propagate(run)
    assert np.abs(rec.values["tr"] - 1).max() <= 1e-9
    qops.check_density_matrix(rec.final_state)


def test_ground_mixture_is_stationary_without_rydberg_drive():
    p = make(omega_g=0.9, delta=0.3, gamma=0.5)
    rho0 = np.diag([0.5, 0.5, 0, 0]).astype(complex)
    L = liouvillian(p, LatticeGeometry.single())
    assert np.abs(L @ vec(rho0)).max() <= 1e-14
    rec = propagate(MasterEquationRun(p, LatticeGeometry.single(), rho0, t_final=5.0, dt=0.5))
    assert np.abs(rec.final_state - rho0).max() <= 1e-12


def test_invalid_initial_state():
    bad = np.diag([0.7, 0.7, 0, 0]).astype(complex)
    with pytest.raises(IntegrityError):
        MasterEquationRun(make(), LatticeGeometry.single(), bad, t_final=1.0, dt=0.1)
    with pytest.raises(InvalidArgumentError):
        MasterEquationRun(make(), LatticeGeometry.pair(), qops.ket("1"), t_final=1.0, dt=0.1)
    with pytest.raises(InvalidArgumentError):
        MasterEquationRun(make(), LatticeGeometry.single(), qops.ket("1"), t_final=1.0, dt=2.0)


def _bell(a, b):
    psi = a * qops.ket("12") + b * qops.ket("21")
    return qops.density_matrix(psi / np.linalg.norm(psi))


@pytest.mark.parametrize(
    "rho, f, overlap",
    [
        (_bell(1, -1), 1.0, 1.0),
        (_bell(1, 1), 1.0, 0.0),  # F is blind to the relative phase
        (_bell(1, 1j), 1.0, 0.5),
        (qops.density_matrix(qops.ket("12")), 0.5, 0.5),
        (qops.density_matrix(qops.ket("11")), 0.0, 0.0),
        (np.eye(16) / 16, 1 / 16, 1 / 16),
    ],
)
def test_bell_fidelity_cases(rho, f, overlap):
    got_f, got_o = bell_fidelity(rho)
    assert got_f == pytest.approx(f, abs=1e-14)
    assert got_o == pytest.approx(overlap, abs=1e-14)


def test_bell_fidelity_shape():
    with pytest.raises(InvalidArgumentError):
        bell_fidelity(np.eye(4))


def test_populations_selectors():
    rho = np.diag(np.arange(16) / 120).astype(complex)
    np.testing.assert_allclose(populations(rho, ["12", "21"]), [1 / 120, 4 / 120])
    np.testing.assert_allclose(populations(rho, [0, 15]), [0, 15 / 120])
    assert populations(rho).sum() == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        populations(rho, ["123"])
