"""Exact diagonalisation of the transverse-field Ising model on small clusters.

H = sum_{i<j} J_ij sz_i sz_j + B sum_i sx_i, with sz = +1 for spin up.
Spin up is atomic level |1> and spin down is |2>, so basis index bit 0
(site 0 most significant) means level |1>.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qops
from .errors import CapacityError, InvalidArgumentError

MAX_SPINS = 12
DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True)
class SpinModel:
    n_sites: int
    couplings: np.ndarray
    field: float

    def __post_init__(self):
        if self.n_sites > MAX_SPINS:
            raise CapacityError(f"exact diagonalisation limited to {MAX_SPINS} spins")
        c = np.array(self.couplings, dtype=float)
        if c.shape != (self.n_sites, self.n_sites):
            raise InvalidArgumentError("couplings must be n_sites x n_sites")
        if not np.array_equal(c, c.T) or np.any(np.diag(c) != 0):
            raise InvalidArgumentError("couplings must be symmetric with zero diagonal")
        c.setflags(write=False)
        object.__setattr__(self, "couplings", c)

    @classmethod
    def from_scale(cls, scale: np.ndarray, j: float, field: float) -> "SpinModel":
        scale = np.asarray(scale, dtype=float)
        return cls(len(scale), j * scale, field)


def spin_index(spins: str) -> int:
    """Basis index of a spin configuration written with atomic labels, e.g. '1212'."""
    return qops.basis_index(spins, local_dim=2)


def build_tfim(model: SpinModel) -> np.ndarray:
    n = model.n_sites
    dim = 2**n
    idx = np.arange(dim)
    # sz = +1 for bit 0 (|1>), -1 for bit 1 (|2>); site 0 is the most significant bit.
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    sz = 1 - 2 * bits
    diag = np.zeros(dim)
    for i in range(n):
        for j in range(i + 1, n):
            if model.couplings[i, j]:
                diag += model.couplings[i, j] * sz[:, i] * sz[:, j]
    h = np.diag(diag)
    for i in range(n):
        flipped = idx ^ (1 << (n - 1 - i))
        h[flipped, idx] += model.field
    return h


def spectrum(model: SpinModel) -> np.ndarray:
    return np.linalg.eigvalsh(build_tfim(model))


def ground_manifold(model: SpinModel) -> tuple[np.ndarray, np.ndarray]:
    """Energies and orthonormal basis of the (quasi-)degenerate ground manifold."""
    h = build_tfim(model)
    w, v = qops.eigensystem(h, hermitian=True)
    scale = max(np.abs(w).max(), 1.0)
    mask = w - w[0] < DEGENERACY_RTOL * scale
    return w[mask], v[:, mask]


def af_ground_population(model: SpinModel) -> float:
    """Population of |1212> and |2121> in the ground state.

    A degenerate ground manifold is averaged uniformly, which is independent
    of the basis chosen inside it.
    """
    if model.n_sites != 4:
        raise InvalidArgumentError("AF population is defined for the 4-site plaquette")
    _, v = ground_manifold(model)
    a, b = spin_index("1212"), spin_index("2121")
    return float(np.mean(np.abs(v[a]) ** 2 + np.abs(v[b]) ** 2))
