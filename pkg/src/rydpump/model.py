"""Physical parameters and N-atom operator builders.

Each atom has two ground levels |1>, |2> and two Rydberg levels |3>, |4>.
Frequencies are angular (rad/us) and times are in microseconds; hbar = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import qops
from .errors import CapacityError, InvalidArgumentError

# Largest lattice the dense/sparse builders accept (4**10 ~ 1e6 states).
MAX_SITES = 10
# Operators for this many atoms or more are built in CSR form.
SPARSE_FROM_SITES = 3

# (from, to) decay channels per atom, in the documented channel order.
DECAY_PAIRS = ((3, 1), (3, 2), (4, 1), (4, 2))


@dataclass(frozen=True)
class PumpParams:
    omega1: float
    omega2: float
    omega_g: float
    delta: float
    gamma: float
    delta33: float
    delta34: float

    def __post_init__(self):
        for name in ("omega1", "omega2", "omega_g", "delta", "gamma", "delta33", "delta34"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")
        if self.gamma < 0:
            raise InvalidArgumentError("gamma must be non-negative")

    @property
    def omega_r(self) -> float:
        """Effective two-atom Rabi frequency 2*Omega1**2/Delta33."""
        if self.delta33 == 0:
            raise InvalidArgumentError("delta33 must be nonzero for the effective Rabi frequency")
        return 2.0 * self.omega1**2 / self.delta33


@dataclass(frozen=True)
class LatticeGeometry:
    """Site count plus symmetric pair coupling multipliers for Delta33/Delta34."""

    n_sites: int
    scale: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.array(self.scale, dtype=float)
        if s.shape != (self.n_sites, self.n_sites):
            raise InvalidArgumentError(f"scale must be {self.n_sites}x{self.n_sites}, got {s.shape}")
        if not np.allclose(s, s.T, atol=0) or np.any(np.diag(s) != 0) or np.any(s < 0):
            raise InvalidArgumentError("scale must be symmetric, non-negative, with zero diagonal")
        s.setflags(write=False)
        object.__setattr__(self, "scale", s)

    @classmethod
    def single(cls) -> "LatticeGeometry":
        return cls(1, np.zeros((1, 1)))

    @classmethod
    def pair(cls) -> "LatticeGeometry":
        return cls(2, np.array([[0.0, 1.0], [1.0, 0.0]]))

    @classmethod
    def triangle(cls) -> "LatticeGeometry":
        return cls(3, np.ones((3, 3)) - np.eye(3))

    @classmethod
    def square(cls, diagonal: float = 1.0 / 8.0) -> "LatticeGeometry":
        """Sites 0-1-2-3 around the square; 0-2 and 1-3 are the diagonals.

        The default diagonal factor follows from 1/R**6 at R = sqrt(2).
        """
        s = np.array(
            [
                [0.0, 1.0, diagonal, 1.0],
                [1.0, 0.0, 1.0, diagonal],
                [diagonal, 1.0, 0.0, 1.0],
                [1.0, diagonal, 1.0, 0.0],
            ]
        )
        return cls(4, s)

    @classmethod
    def preset(cls, name: str) -> "LatticeGeometry":
        presets = {"single": cls.single, "pair": cls.pair, "triangle": cls.triangle, "square": cls.square}
        try:
            return presets[name]()
        except KeyError:
            raise InvalidArgumentError(f"unknown geometry preset {name!r}") from None

    @property
    def dim(self) -> int:
        return qops.LOCAL_DIM**self.n_sites

    @property
    def sparse(self) -> bool:
        return self.n_sites >= SPARSE_FROM_SITES


@dataclass(frozen=True)
class JumpChannel:
    site: int
    from_level: int
    to_level: int
    rate: float
    operator: object = field(repr=False)


def _check_capacity(g: LatticeGeometry) -> None:
    if g.n_sites > MAX_SITES:
        raise CapacityError(f"{g.n_sites} sites exceeds the supported maximum of {MAX_SITES}")


def site_levels(n_sites: int) -> np.ndarray:
    """Array of shape (4**n, n) with the 0-based level of each site per basis state."""
    idx = np.arange(qops.LOCAL_DIM**n_sites)
    powers = qops.LOCAL_DIM ** np.arange(n_sites - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % qops.LOCAL_DIM


def single_atom_hamiltonian(p: PumpParams) -> np.ndarray:
    h = np.zeros((4, 4), dtype=complex)
    h[0, 1] = h[1, 0] = p.omega_g / 2
    h[0, 2] = h[2, 0] = p.omega1 / 2
    h[1, 3] = h[3, 1] = p.omega2 / 2
    h[2, 2] = h[3, 3] = -p.delta
    return h


def interaction_diagonal(p: PumpParams, g: LatticeGeometry) -> np.ndarray:
    """Diagonal of the Rydberg pair interaction in the product basis."""
    _check_capacity(g)
    lv = site_levels(g.n_sites)
    diag = np.zeros(len(lv))
    rydberg = lv >= 2
    for i in range(g.n_sites):
        for j in range(i + 1, g.n_sites):
            s = g.scale[i, j]
            if s == 0:
                continue
            both = rydberg[:, i] & rydberg[:, j]
            same = both & (lv[:, i] == lv[:, j])
            diag += s * (p.delta33 * same + p.delta34 * (both & ~same))
    return diag


def interaction_term(p: PumpParams, g: LatticeGeometry):
    if g.n_sites < 2:
        raise InvalidArgumentError("interaction term needs at least two sites")
    diag = interaction_diagonal(p, g)
    if g.sparse:
        return sp.diags(diag.astype(complex), format="csr")
    return np.diag(diag.astype(complex))


def total_hamiltonian(p: PumpParams, g: LatticeGeometry):
    _check_capacity(g)
    h1 = single_atom_hamiltonian(p)
    if g.n_sites == 1:
        return h1
    h = interaction_term(p, g)
    for site in range(g.n_sites):
        h = h + qops.embed(h1, site, g.n_sites, sparse=g.sparse)
    return h.tocsr() if g.sparse else h


def jump_operators(p: PumpParams, g: LatticeGeometry) -> list[JumpChannel]:
    """Collapse operators sqrt(gamma/2) |to><from| for every site and decay pair.

    Order is site-major, then (3,1), (3,2), (4,1), (4,2).
    """
    _check_capacity(g)
    rate = p.gamma / 2
    amp = math.sqrt(rate)
    out = []
    for site in range(g.n_sites):
        for frm, to in DECAY_PAIRS:
            op = qops.embed(amp * qops.transition(to, frm), site, g.n_sites, sparse=g.sparse)
            out.append(JumpChannel(site, frm, to, rate, op))
    return out


def decay_rate_diagonal(p: PumpParams, g: LatticeGeometry) -> np.ndarray:
    """Diagonal of sum_c C^dag C: gamma times the number of Rydberg-excited atoms."""
    lv = site_levels(g.n_sites)
    return p.gamma * (lv >= 2).sum(axis=1).astype(float)
