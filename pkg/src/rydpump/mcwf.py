"""Monte-Carlo wavefunction (quantum-jump) trajectories.

Between jumps the state evolves under the non-Hermitian effective
Hamiltonian with one exact step propagator exp(-i H_eff dt).  After every
step a uniform deviate decides whether a jump happened during the step
(probability 1 - |psi|^2); the channel is then drawn in proportion to
<psi|C^dag C|psi>.  Each trajectory owns a random stream derived from
``(seed, trajectory_index)`` alone, so ensembles are reproducible no matter
how the trajectories are distributed over workers.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import qops
from .errors import InvalidArgumentError, NumericError, RydpumpError, StepSizeError
from .model import (
    LatticeGeometry,
    PumpParams,
    decay_rate_diagonal,
    jump_operators,
    site_levels,
    total_hamiltonian,
)

MAX_JUMP_PROBABILITY = 0.1
DEFAULT_STEP_JUMP_PROBABILITY = 0.05
NORM_FLOOR = 1e-150


def effective_hamiltonian(params: PumpParams, geometry: LatticeGeometry):
    """H_eff = H - (i/2) sum_c C^dag C.  The decay part is diagonal."""
    h = total_hamiltonian(params, geometry)
    decay = decay_rate_diagonal(params, geometry)
    if sp.issparse(h):
        return (h - 0.5j * sp.diags(decay)).tocsr()
    return h - 0.5j * np.diag(decay)


def default_dt(params: PumpParams, geometry: LatticeGeometry,
               p_step: float = DEFAULT_STEP_JUMP_PROBABILITY) -> float:
    """Step for which even a fully Rydberg-excited lattice jumps with probability <= p_step."""
    if params.gamma == 0:
        raise InvalidArgumentError("default_dt needs gamma > 0; pass dt explicitly")
    return -math.log1p(-p_step) / (geometry.n_sites * params.gamma)


def trajectory_rng(seed: int, trajectory_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trajectory_index),))
    return np.random.Generator(np.random.PCG64(ss))


class _Uniforms:
    """Buffered uniform stream; values come out in generator order."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self._block:
            self._buf = self._rng.random(self._block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


class TrajectoryKernel:
    """Precomputed step propagator and channel data for one (params, geometry, dt)."""

    def __init__(self, params: PumpParams, geometry: LatticeGeometry, dt: float):
        self.params = params
        self.geometry = geometry
        self.dt = dt
        heff = effective_hamiltonian(params, geometry)
        self.step = qops.matrix_exponential(heff, -1j * dt)
        channels = jump_operators(params, geometry)
        self.channels = [sp.csr_matrix(c.operator) for c in channels]
        lv = site_levels(geometry.n_sites)
        # Boolean masks: basis states where channel c's source level is occupied.
        self.masks = np.array([lv[:, c.site] == c.from_level - 1 for c in channels])
        self.rates = np.array([c.rate for c in channels])


@functools.lru_cache(maxsize=8)
def _cached_kernel(params: PumpParams, n_sites: int, scale_bytes: bytes, dt: float) -> TrajectoryKernel:
    scale = np.frombuffer(scale_bytes, dtype=float).reshape(n_sites, n_sites)
    return TrajectoryKernel(params, LatticeGeometry(n_sites, scale), dt)


def kernel_for(params: PumpParams, geometry: LatticeGeometry, dt: float) -> TrajectoryKernel:
    return _cached_kernel(params, geometry.n_sites, geometry.scale.tobytes(), float(dt))


@dataclass(frozen=True)
class TrajectorySpec:
    params: PumpParams
    geometry: LatticeGeometry
    initial: np.ndarray = field(repr=False)
    t_final: float
    dt: float
    seed: int = 0
    trajectory_index: int = 0
    sample_every: int = 1
    max_jump_probability: float = MAX_JUMP_PROBABILITY

    def __post_init__(self):
        if not (self.t_final > 0 and 0 < self.dt <= self.t_final):
            raise InvalidArgumentError("need t_final > 0 and 0 < dt <= t_final")
        if self.sample_every < 1:
            raise InvalidArgumentError("sample_every must be >= 1")
        psi = np.asarray(self.initial, dtype=complex)
        if psi.shape != (self.geometry.dim,):
            raise InvalidArgumentError(f"initial state must have length {self.geometry.dim}")
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-9:
            raise InvalidArgumentError(f"initial state not normalised (norm {nrm:.12g})")
        object.__setattr__(self, "initial", psi)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    def sample_times(self) -> np.ndarray:
        steps = np.arange(0, self.n_steps + 1, self.sample_every)
        return steps * self.dt


@dataclass
class TrajectoryResult:
    times: np.ndarray
    populations: np.ndarray  # (n_samples, dim)
    jump_times: np.ndarray
    jump_channels: np.ndarray

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)


def run_trajectory(spec: TrajectorySpec, kernel: TrajectoryKernel | None = None) -> TrajectoryResult:
    if kernel is None:
        kernel = kernel_for(spec.params, spec.geometry, spec.dt)
    uniforms = _Uniforms(trajectory_rng(spec.seed, spec.trajectory_index))
    step = kernel.step
    psi = spec.initial.copy()
    times = spec.sample_times()
    pops = np.empty((len(times), psi.size))
    pops[0] = np.abs(psi) ** 2
    row = 1
    jump_t, jump_c = [], []
    cap = spec.max_jump_probability

    for k in range(1, spec.n_steps + 1):
        phi = step @ psi
        n2 = np.vdot(phi, phi).real
        p = 1.0 - n2
        if p > cap:
            raise StepSizeError(
                f"jump probability {p:.3g} per step exceeds {cap} at t={k * spec.dt:.6g} us; reduce dt"
            )
        if uniforms.next() < p:
            prob = np.abs(phi) ** 2
            w = kernel.rates * (kernel.masks @ prob)
            total = w.sum()
            if total <= 0:
                raise NumericError("jump drawn but every channel has zero weight")
            c = int(np.searchsorted(np.cumsum(w) / total, uniforms.next(), side="right"))
            c = min(c, len(w) - 1)
            phi = kernel.channels[c] @ phi
            nrm = np.linalg.norm(phi)
            jump_t.append(k * spec.dt)
            jump_c.append(c)
        else:
            nrm = math.sqrt(n2)
        if nrm < NORM_FLOOR:
            raise NumericError(f"state norm underflow at t={k * spec.dt:.6g} us")
        psi = phi / nrm
        if k % spec.sample_every == 0:
            pops[row] = np.abs(psi) ** 2
            row += 1

    return TrajectoryResult(times, pops, np.asarray(jump_t), np.asarray(jump_c, dtype=int))


@dataclass
class TrajectoryEnsemble:
    n_traj: int
    times: np.ndarray
    mean_populations: np.ndarray  # (n_samples, dim)
    std_error: np.ndarray
    per_trajectory_jumps: np.ndarray
    populations: np.ndarray = field(repr=False)  # (n_traj, n_samples, dim)

    def observable(self, indices) -> np.ndarray:
        """Per-trajectory series of the summed population of ``indices``."""
        return self.populations[:, :, list(indices)].sum(axis=2)

    def mean_and_error(self, indices) -> tuple[np.ndarray, np.ndarray]:
        q = self.observable(indices)
        return q.mean(axis=0), _std_error(q)


def _std_error(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.full(x.shape[1:], np.nan)
    return x.std(axis=0, ddof=1) / math.sqrt(n)


def _run_indexed(spec: TrajectorySpec) -> TrajectoryResult:
    try:
        return run_trajectory(spec)
    except RydpumpError as exc:
        raise type(exc)(f"trajectory {spec.trajectory_index}: {exc}") from None


def run_ensemble(template: TrajectorySpec, n_traj: int, jobs: int = 1) -> TrajectoryEnsemble:
    """Average ``n_traj`` trajectories with indices 0..n_traj-1.

    The result does not depend on ``jobs``: every trajectory is computed
    independently and the reduction runs in index order.
    """
    if n_traj < 1:
        raise InvalidArgumentError("n_traj must be >= 1")
    specs = [replace(template, trajectory_index=i) for i in range(n_traj)]
    if jobs > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_indexed, specs, chunksize=max(1, n_traj // (4 * jobs))))
    else:
        kernel = kernel_for(template.params, template.geometry, template.dt)
        results = []
        for s in specs:
            try:
                results.append(run_trajectory(s, kernel))
            except RydpumpError as exc:
                raise type(exc)(f"trajectory {s.trajectory_index}: {exc}") from None
    pops = np.stack([r.populations for r in results])
    return TrajectoryEnsemble(
        n_traj=n_traj,
        times=results[0].times,
        mean_populations=pops.mean(axis=0),
        std_error=_std_error(pops),
        per_trajectory_jumps=np.array([r.n_jumps for r in results]),
        populations=pops,
    )


@dataclass
class SteadyState:
    value: float
    std_error: float
    t_start: float
    converged: bool
    per_trajectory: np.ndarray


def steady_state(times: np.ndarray, series: np.ndarray, window: float, tol: float = 0.005) -> SteadyState:
    """Late-time average of a per-trajectory series, shape (n_traj, n_samples).

    The plateau starts at the first sample where the ensemble mean averaged
    over the following ``window`` differs from that over the preceding
    ``window`` by less than ``tol``.  If no such sample exists the second half
    of the run is used and ``converged`` is False.  The error is the standard
    error of the per-trajectory time averages.
    """
    mean = series.mean(axis=0)
    start, converged = None, False
    for i, t in enumerate(times):
        if t - window < times[0]:
            continue
        if t + window > times[-1]:
            break
        before = mean[(times >= t - window) & (times < t)].mean()
        after = mean[(times >= t) & (times < t + window)].mean()
        if abs(after - before) < tol:
            start, converged = i, True
            break
    if start is None:
        start = len(times) // 2
    per_traj = series[:, start:].mean(axis=1)
    n = len(per_traj)
    err = per_traj.std(ddof=1) / math.sqrt(n) if n > 1 else float("nan")
    return SteadyState(float(per_traj.mean()), float(err), float(times[start]), converged, per_traj)
