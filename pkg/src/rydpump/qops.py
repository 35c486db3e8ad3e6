"""Linear algebra helpers for multi-atom Hilbert spaces.

Operators are plain ``numpy.ndarray`` (dense) or ``scipy.sparse`` matrices.
Atomic levels are labelled 1..4 in user-facing helpers and stored at
indices 0..3.  Multi-atom basis states are big-endian: site 0 is the
leftmost tensor factor, so ``|13>`` has index ``4*0 + 2``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import IntegrityError, InvalidArgumentError, NumericError

LOCAL_DIM = 4

# Tolerances for density-matrix validity checks.
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8


def is_sparse(op) -> bool:
    return sp.issparse(op)


def to_dense(op) -> np.ndarray:
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def basis_index(labels: str | Sequence[int], local_dim: int = LOCAL_DIM) -> int:
    """Index of a product basis state given per-site level labels (1-based).

    >>> basis_index("13")
    2
    >>> basis_index([2, 1])
    4
    """
    if isinstance(labels, str):
        labels = [int(c) for c in labels]
    idx = 0
    for lab in labels:
        if not 1 <= lab <= local_dim:
            raise InvalidArgumentError(f"level label {lab} outside 1..{local_dim}")
        idx = idx * local_dim + (lab - 1)
    return idx


def basis_labels(index: int, n_sites: int, local_dim: int = LOCAL_DIM) -> str:
    """Inverse of :func:`basis_index`; returns e.g. ``"1212"``."""
    digits = []
    for _ in range(n_sites):
        index, r = divmod(index, local_dim)
        digits.append(str(r + 1))
    return "".join(reversed(digits))


def ket(labels: str | Sequence[int], local_dim: int = LOCAL_DIM) -> np.ndarray:
    n = len(labels)
    psi = np.zeros(local_dim**n, dtype=complex)
    psi[basis_index(labels, local_dim)] = 1.0
    return psi


def transition(k: int, l: int, local_dim: int = LOCAL_DIM) -> np.ndarray:
    """Single-atom operator ``|k><l|`` with 1-based level labels."""
    op = np.zeros((local_dim, local_dim), dtype=complex)
    op[k - 1, l - 1] = 1.0
    return op


def projector(labels: str | Sequence[int], local_dim: int = LOCAL_DIM) -> np.ndarray:
    psi = ket(labels, local_dim)
    return np.outer(psi, psi.conj())


def embed(op, site: int, n_sites: int, local_dim: int = LOCAL_DIM, sparse: bool | None = None):
    """Place a single-site operator at ``site`` inside an ``n_sites`` product space.

    Returns ``I ⊗ ... ⊗ op ⊗ ... ⊗ I`` with ``op`` at position ``site``
    (site 0 leftmost).  The result is sparse (CSR) if ``sparse`` is true, or
    if ``sparse`` is None and ``op`` itself is sparse.
    """
    if op.shape != (local_dim, local_dim):
        raise InvalidArgumentError(
            f"operator shape {op.shape} does not match local dimension {local_dim}"
        )
    if not 0 <= site < n_sites:
        raise InvalidArgumentError(f"site {site} outside 0..{n_sites - 1}")
    if sparse is None:
        sparse = sp.issparse(op)
    left = local_dim**site
    right = local_dim ** (n_sites - site - 1)
    if sparse:
        out = sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op), format="csr")
        return sp.kron(out, sp.identity(right, format="csr"), format="csr")
    op = to_dense(op)
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def matrix_exponential(op, scale: complex = 1.0) -> np.ndarray:
    """Dense ``exp(scale * op)`` by Padé scaling-and-squaring."""
    a = to_dense(op) * scale
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix exponential of non-finite matrix")
    out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise NumericError("matrix exponential overflowed")
    return out


def eigensystem(op, hermitian: bool = True):
    """Eigenvalues and eigenvectors (as columns).

    For ``hermitian=True`` the eigenvalues are real and ascending.
    """
    a = to_dense(op)
    if hermitian:
        if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(a).max()):
            raise InvalidArgumentError("eigensystem called with hermitian=True on non-Hermitian input")
        try:
            return np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"Hermitian eigensolver failed: {exc}") from exc
    try:
        return np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc


def expectation(op, rho: np.ndarray) -> complex:
    """``tr(op rho)`` without forming the product."""
    if sp.issparse(op):
        return complex(op.multiply(rho.T).sum())
    return complex(np.einsum("ij,ji->", op, rho))


def density_matrix(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density_matrix(
    rho: np.ndarray,
    trace_tol: float = TRACE_TOL,
    herm_tol: float = HERMITIAN_TOL,
    pos_tol: float = POSITIVITY_TOL,
) -> None:
    """Raise :class:`IntegrityError` unless ``rho`` is a valid density matrix."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise IntegrityError(f"density matrix must be square, got {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise IntegrityError(f"hermiticity violated by {herm:.3e}")
    drift = abs(np.trace(rho) - 1.0)
    if drift > trace_tol:
        raise IntegrityError(f"trace drifted by {drift:.3e}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -pos_tol:
        raise IntegrityError(f"negative eigenvalue {lam:.3e}")
