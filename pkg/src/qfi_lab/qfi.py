"""Quantum Fisher information of two-qubit states for collective rotations.

For rotations exp(-i phi J_n) the QFI is the quadratic form n^T C n of a real
symmetric 3x3 matrix C built from the spectral decomposition of rho; its
largest eigenvalue divided by the number of qubits is the best achievable
QFI per qubit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import hermitian_eig
from .model import InvalidDensityMatrix, check_density_matrix, collective_j

N_QUBITS = 2
EIG_CLAMP = 1e-9
PAIR_CUTOFF = 1e-12

_J = np.array([collective_j(a) for a in "xyz"])


class InvalidState(ValueError):
    pass


class NotUnit(ValueError):
    pass


class NonPositiveInformation(ValueError):
    pass


@dataclass(frozen=True)
class QfiReport:
    eigenvalues: np.ndarray
    c_matrix: np.ndarray
    c_max: float
    direction: np.ndarray
    f_per_qubit: float

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "c_matrix": self.c_matrix.tolist(),
            "c_max": self.c_max,
            "direction": self.direction.tolist(),
            "f_per_qubit": self.f_per_qubit,
        }


def _unit(n, tol=1e-9) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > tol:
        raise NotUnit(f"direction {n!r} is not a unit 3-vector")
    return n


def _spectrum(rho):
    try:
        rho = check_density_matrix(rho)
    except InvalidDensityMatrix as exc:
        raise InvalidState(str(exc)) from exc
    eig = hermitian_eig(rho)
    w = eig.eigenvalues.copy()
    w[(w < 0) & (w >= -EIG_CLAMP)] = 0.0
    return w, eig.eigenvectors


def c_matrix(rho) -> tuple[np.ndarray, np.ndarray]:
    """Return (clamped eigenvalues of rho, C matrix)."""
    w, v = _spectrum(rho)
    total = w[:, None] + w[None, :]
    diff = w[:, None] - w[None, :]
    weight = np.zeros_like(total)
    keep = total > PAIR_CUTOFF
    weight[keep] = diff[keep] ** 2 / total[keep]
    jm = v.conj().T[None] @ _J @ v[None]  # J_k in the eigenbasis of rho
    # C_kl = 2 Re sum_ij W_ij (J_k)_ij (J_l)_ji
    c = 2 * np.einsum("ij,kij,lji->kl", weight, jm, jm).real
    return w, 0.5 * (c + c.T)


def qfi_report(rho) -> QfiReport:
    w, c = c_matrix(rho)
    eig = hermitian_eig(c.astype(complex))
    n = eig.eigenvectors[:, -1].real.copy()
    n /= np.linalg.norm(n)
    first = np.flatnonzero(np.abs(n) > 1e-12)[0]
    if n[first] < 0:
        n = -n
    c_max = float(eig.eigenvalues[-1])
    return QfiReport(w, c, c_max, n, c_max / N_QUBITS)


def qfi_direction(rho, n) -> float:
    n = _unit(n)
    _, c = c_matrix(rho)
    return float(n @ c @ n)


def collective_generator(n) -> np.ndarray:
    return np.tensordot(np.asarray(n, dtype=float), _J, axes=1)


def pure_state_qfi_oracle(psi, n) -> float:
    """4 Var(J_n) for a pure state."""
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise NotUnit("state vector is not normalised")
    jn = collective_generator(_unit(n))
    mean = np.vdot(psi, jn @ psi).real
    second = np.vdot(psi, jn @ jn @ psi).real
    return float(4 * (second - mean**2))


def rotate_phase(rho, n, phi: float) -> np.ndarray:
    """exp(-i phi J_n) rho exp(i phi J_n)."""
    eig = hermitian_eig(collective_generator(_unit(n)))
    v = eig.eigenvectors
    u = (v * np.exp(-1j * phi * eig.eigenvalues)) @ v.conj().T
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


def cramer_rao_bound(f_total: float, n_measurements: int) -> float:
    """Smallest phase uncertainty 1/sqrt(N_m F) reachable with ``n_measurements``
    repetitions of a probe with total QFI ``f_total``."""
    if f_total <= 0:
        raise NonPositiveInformation(f"QFI must be positive, got {f_total!r}")
    if n_measurements < 1:
        raise ValueError("need at least one measurement")
    return 1.0 / np.sqrt(n_measurements * f_total)
