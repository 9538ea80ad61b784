"""Dense Hermitian linear algebra for small bipartite systems.

All entropies are in bits. Eigenvalues at or below ``EIG_CLAMP`` contribute
nothing to an entropy (the ``0 log 0 = 0`` convention).
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonPhysicalOperator

EIG_CLAMP = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-8


def shannon_bits(values: np.ndarray, axis=-1) -> np.ndarray:
    """-sum v log2 v along ``axis``, with values <= EIG_CLAMP dropped.

    Works on batched arrays; used for spectra and for probability vectors.
    """
    v = np.asarray(values, dtype=float)
    safe = np.where(v > EIG_CLAMP, v, 1.0)
    return -np.sum(np.where(v > EIG_CLAMP, v * np.log2(safe), 0.0), axis=axis)


def hermitian_eigvalsh(op: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending) of a Hermitian matrix or stack of them."""
    op = np.asarray(op)
    return np.linalg.eigvalsh(0.5 * (op + np.conj(np.swapaxes(op, -1, -2))))


def von_neumann_entropy(op: np.ndarray) -> float:
    """Von Neumann entropy of a density operator, in bits.

    Raises
    ------
    NonPhysicalOperator
        If an eigenvalue is below ``-PSD_TOL`` or the trace is off by more
        than ``TRACE_TOL``.
    """
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {op.shape}")
    tr = np.trace(op).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise NonPhysicalOperator(f"trace {tr!r} deviates from 1")
    lam = hermitian_eigvalsh(op)
    if lam[0] < -PSD_TOL:
        raise NonPhysicalOperator(f"negative eigenvalue {lam[0]!r}")
    return float(shannon_bits(lam))


def _check_dims(op: np.ndarray, dA: int, dB: int) -> np.ndarray:
    op = np.asarray(op)
    n = dA * dB
    if op.shape[-2:] != (n, n):
        raise DimensionMismatch(
            f"operator shape {op.shape[-2:]} inconsistent with dims ({dA}, {dB})"
        )
    return op


def partial_trace(op: np.ndarray, dA: int, dB: int, keep: str = "A") -> np.ndarray:
    """Reduced operator of subsystem ``keep`` ('A' or 'B')."""
    op = _check_dims(op, dA, dB)
    t = op.reshape(op.shape[:-2] + (dA, dB, dA, dB))
    if keep == "A":
        return np.einsum("...ijkj->...ik", t)
    if keep == "B":
        return np.einsum("...ijil->...jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(op: np.ndarray, dA: int, dB: int, on: str = "B") -> np.ndarray:
    """Transpose the indices of subsystem ``on`` only."""
    op = _check_dims(op, dA, dB)
    t = op.reshape(op.shape[:-2] + (dA, dB, dA, dB))
    if on == "A":
        t = np.swapaxes(t, -4, -2)
    elif on == "B":
        t = np.swapaxes(t, -3, -1)
    else:
        raise ValueError(f"on must be 'A' or 'B', got {on!r}")
    return t.reshape(op.shape)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def swap_subsystems(op: np.ndarray, dA: int, dB: int) -> np.ndarray:
    """Reorder a (dA x dB) operator into the (dB x dA) ordering."""
    op = _check_dims(op, dA, dB)
    t = op.reshape(op.shape[:-2] + (dA, dB, dA, dB))
    t = np.swapaxes(np.swapaxes(t, -4, -3), -2, -1)
    return t.reshape(op.shape)


def is_hermitian(op: np.ndarray, tol: float = 1e-12) -> bool:
    op = np.asarray(op)
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)
