"""Dense complex linear algebra for 4x4 operators and 16x16 superoperators.

Thin, deterministic wrappers around LAPACK (via numpy) with the checks the
rest of the package relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotHermitian(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class HermitianEig:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns, orthonormal


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def frobenius_inner(a, b) -> complex:
    """Hilbert-Schmidt pairing Tr(a^dagger b)."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # largest-magnitude component (first one on ties) made real positive
    k = int(np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9)))
    return v * (abs(v[k]) / v[k])


def _canonical_cluster_basis(vecs: np.ndarray) -> np.ndarray:
    """Replace an orthonormal basis of a degenerate eigenspace by the one
    obtained from Gram-Schmidt on the projected canonical basis vectors."""
    n, d = vecs.shape
    proj = vecs @ vecs.conj().T
    out: list[np.ndarray] = []
    for k in range(n):
        v = proj[:, k].copy()
        for _ in range(2):
            for u in out:
                v -= u * np.vdot(u, v)
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            out.append(v / norm)
        if len(out) == d:
            break
    return np.column_stack([_fix_phase(u) for u in out])


def hermitian_eig(m, cluster_tol: float = 1e-10) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, ascending eigenvalues.

    Eigenvectors are made reproducible: each non-degenerate vector gets a
    fixed phase, and degenerate clusters (eigenvalues within
    ``cluster_tol * max(1, |m|)``) are re-expressed through Gram-Schmidt on
    the canonical basis.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {a.shape}")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a - a.conj().T) > 1e-9 * scale:
        raise NotHermitian("matrix is not Hermitian")
    h = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(h)
    v = v.copy()
    tol = cluster_tol * scale
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= tol:
            stop += 1
        if stop - start == 1:
            v[:, start] = _fix_phase(v[:, start])
        else:
            v[:, start:stop] = _canonical_cluster_basis(v[:, start:stop])
        start = stop
    return HermitianEig(eigenvalues=w, eigenvectors=v)


def null_space(m, tol: float = 1e-10) -> list[np.ndarray]:
    """Orthonormal basis of the right null space of ``m``.

    Right singular vectors whose singular value is below ``tol`` times the
    largest one. Returned as column vectors of shape (n, 1).
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {a.shape}")
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return [np.eye(a.shape[1], dtype=complex)[:, [k]] for k in range(a.shape[1])]
    basis = vh[s < tol * smax].conj()
    return [row.reshape(-1, 1) for row in basis]


def spectral_norm(m) -> float:
    return float(np.linalg.norm(as_matrix(m), 2))
