"""Exact density-matrix propagation of the Lindblad master equation.

Density matrices are vectorised column-major (Fortran order), so that
``vec(A X B) = (B^T ⊗ A) vec(X)``.  The Liouvillian is built densely and is
therefore limited to one or two atoms (dimension 256**2 at most).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import qops
from .errors import CapacityError, IntegrityError, InvalidArgumentError
from .model import LatticeGeometry, PumpParams, jump_operators, total_hamiltonian

MAX_MASTER_SITES = 2
RUN_TRACE_TOL = 1e-8

Observable = np.ndarray | Callable[[np.ndarray], complex]


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = math.isqrt(v.size)
    return v.reshape(d, d, order="F")


def liouvillian(params: PumpParams, geometry: LatticeGeometry) -> np.ndarray:
    """Superoperator L with d vec(rho)/dt = L vec(rho)."""
    if geometry.n_sites > MAX_MASTER_SITES:
        raise CapacityError(
            f"master equation limited to {MAX_MASTER_SITES} atoms; use the trajectory solver"
        )
    h = qops.to_dense(total_hamiltonian(params, geometry))
    channels = [qops.to_dense(c.operator) for c in jump_operators(params, geometry)]
    return liouvillian_from_operators(h, channels)


def liouvillian_from_operators(h: np.ndarray, channels) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in channels:
        cdc = c.conj().T @ c
        L += np.kron(c.conj(), c) - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    return L


def master_rhs(rho: np.ndarray, h: np.ndarray, channels) -> np.ndarray:
    """d rho/dt evaluated directly in matrix form (no superoperator)."""
    out = -1j * (h @ rho - rho @ h)
    for c in channels:
        cd = c.conj().T
        cdc = cd @ c
        out += c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
    return out


def default_dt(params: PumpParams) -> float:
    """One twentieth of the pair-shift period 2*pi/Delta33."""
    return 2 * math.pi / abs(params.delta33) / 20


@dataclass
class MasterEquationRun:
    params: PumpParams
    geometry: LatticeGeometry
    initial: np.ndarray
    t_final: float
    dt: float
    observables: Mapping[str, Observable] = field(default_factory=dict)
    sample_every: int = 1

    def __post_init__(self):
        if not (self.t_final > 0 and self.dt > 0 and self.dt <= self.t_final):
            raise InvalidArgumentError("need t_final > 0 and 0 < dt <= t_final")
        if self.sample_every < 1:
            raise InvalidArgumentError("sample_every must be >= 1")
        self.initial = np.asarray(self.initial, dtype=complex)
        if self.initial.ndim == 1:
            self.initial = qops.density_matrix(self.initial)
        if self.initial.shape != (self.geometry.dim, self.geometry.dim):
            raise InvalidArgumentError(
                f"initial state has shape {self.initial.shape}, expected dim {self.geometry.dim}"
            )
        qops.check_density_matrix(self.initial)


@dataclass
class EvolutionRecord:
    times: np.ndarray
    values: dict[str, np.ndarray]
    final_state: np.ndarray


def _measure(obs: Observable, rho: np.ndarray) -> complex:
    if callable(obs):
        return obs(rho)
    return qops.expectation(obs, rho)


def _check(rho: np.ndarray, t: float) -> None:
    try:
        qops.check_density_matrix(rho, trace_tol=RUN_TRACE_TOL)
    except IntegrityError as exc:
        raise IntegrityError(f"at t={t:.6g} us: {exc}") from None


def propagate(run: MasterEquationRun) -> EvolutionRecord:
    """Step rho with a single precomputed propagator exp(L dt).

    Observables and the density-matrix invariants are evaluated every
    ``sample_every`` steps, plus at t=0 and at t_final.
    """
    L = liouvillian(run.params, run.geometry)
    n_full = int(math.floor(run.t_final / run.dt + 1e-9))
    remainder = run.t_final - n_full * run.dt
    if remainder <= 1e-12 * run.t_final:
        remainder = 0.0
    step = qops.matrix_exponential(L, run.dt)
    v = vec(run.initial)

    times = []
    samples: dict[str, list] = {name: [] for name in run.observables}

    def record(t, v):
        rho = unvec(v)
        _check(rho, t)
        times.append(t)
        for name, obs in run.observables.items():
            samples[name].append(_measure(obs, rho))

    record(0.0, v)
    for k in range(1, n_full + 1):
        v = step @ v
        if k % run.sample_every == 0 or (k == n_full and remainder == 0.0):
            record(k * run.dt, v)
    if remainder > 0.0:
        v = qops.matrix_exponential(L, remainder) @ v
        record(run.t_final, v)

    values = {}
    for name, series in samples.items():
        arr = np.asarray(series)
        values[name] = arr.real if np.all(np.abs(arr.imag) < 1e-12) else arr
    final = unvec(v)
    return EvolutionRecord(np.asarray(times), values, final)


def bell_fidelity(rho: np.ndarray) -> tuple[float, float]:
    """Singlet fidelity estimate and exact singlet overlap for two atoms.

    Returns ``(F, overlap)`` with
    ``F = (rho[12,12] + rho[21,21]) / 2 + |rho[12,21]|`` and
    ``overlap = <-|rho|->`` for ``|-> = (|12> - |21>)/sqrt(2)``.
    The modulus makes F blind to the relative phase of the two components;
    the overlap is not.
    """
    if rho.shape != (16, 16):
        raise InvalidArgumentError(f"bell_fidelity needs a 16x16 density matrix, got {rho.shape}")
    a, b = qops.basis_index("12"), qops.basis_index("21")
    pop = 0.5 * (rho[a, a] + rho[b, b]).real
    f = pop + abs(rho[a, b])
    overlap = pop - rho[a, b].real
    return float(f), float(overlap)


def populations(rho: np.ndarray, selectors=None) -> np.ndarray:
    """Diagonal of ``rho`` at the given basis indices or label strings (all if None)."""
    diag = np.diag(rho).real
    if selectors is None:
        return diag.copy()
    n_sites = round(math.log(rho.shape[0], qops.LOCAL_DIM))
    idx = []
    for s in selectors:
        if isinstance(s, str):
            if len(s) != n_sites:
                raise InvalidArgumentError(f"selector {s!r} does not match {n_sites} sites")
            s = qops.basis_index(s)
        if not 0 <= s < rho.shape[0]:
            raise InvalidArgumentError(f"basis index {s} out of range")
        idx.append(s)
    return diag[idx]
