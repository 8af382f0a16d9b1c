"""Operators and states for two collectively damped qubits.

Product basis order is |ee>, |eg>, |ge>, |gg> with qubit 1 in the first
slot, |e> = (1, 0) and |g> = (0, 1).  The symmetric/antisymmetric basis is
|e> = |ee>, |s> = (|ge> + |eg>)/sqrt2, |g> = |gg>, |a> = (|ge> - |eg>)/sqrt2.
"""
from __future__ import annotations

import dataclasses
import enum
import functools
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
_PAULI = {"x": SX, "y": SY, "z": SZ}

KET_EE = np.array([1, 0, 0, 0], dtype=complex)
KET_EG = np.array([0, 1, 0, 0], dtype=complex)
KET_GE = np.array([0, 0, 1, 0], dtype=complex)
KET_GG = np.array([0, 0, 0, 1], dtype=complex)
KET_S = (KET_GE + KET_EG) / np.sqrt(2)
KET_A = (KET_GE - KET_EG) / np.sqrt(2)

SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]

CONVENTION_ENV = "QFI_LAB_CONVENTION"


class SchemeMismatch(ValueError):
    pass


class NotPositive(ValueError):
    pass


class InvalidDensityMatrix(ValueError):
    pass


class Scheme(str, enum.Enum):
    NO_FEEDBACK = "none"
    SYMMETRIC_F1 = "f1"
    NONSYMMETRIC_F2 = "f2"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        aliases = {
            "nofeedback": cls.NO_FEEDBACK,
            "symmetricf1": cls.SYMMETRIC_F1,
            "nonsymmetricf2": cls.NONSYMMETRIC_F2,
        }
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class ConventionRecord:
    """Normalisation choices fixing the numerical model.

    ``lowering_scale`` is c in sigma_- = c (sigma_x - i sigma_y),
    ``jump_scale`` multiplies the collective jump operator and
    ``drive_scale`` relates the Rabi frequency to the drive Hamiltonian.
    ``f2_axis`` is the axis of the single-qubit terms of the nonsymmetric
    feedback operator.
    """

    lowering_scale: float = 1.0
    jump_scale: float = 1.0
    drive_scale: float = 1.0
    f2_axis: str = "z"

    def __post_init__(self):
        if self.lowering_scale not in (0.5, 1.0):
            raise ValueError("lowering_scale must be 0.5 or 1.0")
        if self.jump_scale <= 0 or self.drive_scale <= 0:
            raise ValueError("jump_scale and drive_scale must be positive")
        if self.f2_axis not in ("x", "z"):
            raise ValueError("f2_axis must be 'x' or 'z'")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ConventionRecord":
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown convention fields: {sorted(unknown)}")
        return cls(**{k: (v if k == "f2_axis" else float(v)) for k, v in d.items()})


def load_convention(path=None) -> ConventionRecord:
    """Convention from ``path``, else $QFI_LAB_CONVENTION, else the shipped
    calibrated record."""
    return _load_convention(str(path or os.environ.get(CONVENTION_ENV) or ""))


@functools.lru_cache(maxsize=8)
def _load_convention(path: str) -> ConventionRecord:
    if path:
        text = Path(path).read_text()
    else:
        text = resources.files("qfi_lab").joinpath("data/convention.json").read_text()
    return ConventionRecord.from_dict(json.loads(text))


@dataclass(frozen=True)
class ModelConfig:
    scheme: Scheme = Scheme.NO_FEEDBACK
    omega: float = 0.0
    gamma: float = 1.0
    lam: float = 0.0
    mu: float = 0.0
    delta: float = 0.0
    convention: ConventionRecord = field(default_factory=load_convention)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        if self.scheme is Scheme.NO_FEEDBACK and (self.lam or self.mu or self.delta):
            raise ValueError("lambda, mu and delta must be zero without feedback")

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)


def pauli(qubit: int, axis: str) -> np.ndarray:
    s = _PAULI[axis]
    if qubit == 1:
        return np.kron(s, I2)
    if qubit == 2:
        return np.kron(I2, s)
    raise ValueError("qubit must be 1 or 2")


def collective_j(axis: str) -> np.ndarray:
    return 0.5 * (pauli(1, axis) + pauli(2, axis))


def lowering(qubit: int, convention: ConventionRecord) -> np.ndarray:
    return convention.lowering_scale * (pauli(qubit, "x") - 1j * pauli(qubit, "y"))


def drive_hamiltonian(cfg: ModelConfig) -> np.ndarray:
    return cfg.convention.drive_scale * cfg.omega * (pauli(1, "x") + pauli(2, "x"))


def jump_operator(cfg: ModelConfig) -> np.ndarray:
    c = cfg.convention
    return -1j * c.jump_scale * np.sqrt(cfg.gamma) * (lowering(1, c) + lowering(2, c))


def _two_body() -> np.ndarray:
    return pauli(1, "x") @ pauli(2, "z") + pauli(1, "z") @ pauli(2, "x")


def feedback_f1(cfg: ModelConfig) -> np.ndarray:
    if cfg.scheme is not Scheme.SYMMETRIC_F1:
        raise SchemeMismatch(f"F1 requested for scheme {cfg.scheme.value}")
    return cfg.lam * (cfg.mu * _two_body() - (pauli(1, "x") + pauli(2, "x")))


def feedback_f2(cfg: ModelConfig) -> np.ndarray:
    if cfg.scheme is not Scheme.NONSYMMETRIC_F2:
        raise SchemeMismatch(f"F2 requested for scheme {cfg.scheme.value}")
    ax = cfg.convention.f2_axis
    single = (1 + cfg.delta) * pauli(1, ax) + (1 - cfg.delta) * pauli(2, ax)
    return cfg.lam * (cfg.mu * _two_body() - single)


def feedback_operator(cfg: ModelConfig) -> np.ndarray:
    if cfg.scheme is Scheme.SYMMETRIC_F1:
        return feedback_f1(cfg)
    if cfg.scheme is Scheme.NONSYMMETRIC_F2:
        return feedback_f2(cfg)
    return np.zeros((4, 4), dtype=complex)


def symmetric_basis_transform() -> np.ndarray:
    """Unitary U with U @ psi_product = coordinates in (|e>, |s>, |g>, |a>)."""
    return np.array([KET_EE, KET_S, KET_GG, KET_A]).conj()


def to_symmetric_basis(rho) -> np.ndarray:
    u = symmetric_basis_transform()
    return u @ np.asarray(rho) @ u.conj().T


def from_symmetric_basis(rho_sym) -> np.ndarray:
    u = symmetric_basis_transform()
    return u.conj().T @ np.asarray(rho_sym) @ u


# --- density matrices ------------------------------------------------------


def check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10, eig_tol=1e-9) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidDensityMatrix(f"expected 4x4, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidDensityMatrix("non-finite entries")
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise InvalidDensityMatrix("not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise InvalidDensityMatrix(f"trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -eig_tol:
        raise InvalidDensityMatrix("not positive semidefinite")
    return rho


SYMMETRIC_STATES = {"e": 0, "s": 1, "g": 2}


def prepare_initial(p44: float, p24: complex = 0.0, symmetric_part="g") -> np.ndarray:
    """Initial state with antisymmetric population ``p44`` and s-a coherence
    ``p24``; the rest of the weight sits in ``symmetric_part``.

    ``symmetric_part`` is either a label from ``SYMMETRIC_STATES`` or a unit
    trace 3x3 density matrix on (|e>, |s>, |g>).
    """
    if not 0.0 <= p44 <= 1.0:
        raise ValueError("p44 must lie in [0, 1]")
    if isinstance(symmetric_part, str):
        block = np.zeros((3, 3), dtype=complex)
        k = SYMMETRIC_STATES[symmetric_part]
        block[k, k] = 1.0
    else:
        block = np.asarray(symmetric_part, dtype=complex)
        if block.shape != (3, 3):
            raise ValueError("symmetric_part must be 3x3")
    sym = np.zeros((4, 4), dtype=complex)
    sym[:3, :3] = (1.0 - p44) * block
    sym[3, 3] = p44
    sym[1, 3] = p24
    sym[3, 1] = np.conj(p24)
    if np.linalg.eigvalsh(sym)[0] < -1e-12:
        raise NotPositive("requested p44/p24/symmetric part is not a valid state")
    return from_symmetric_basis(sym)


def random_density_matrix(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def antisymmetric_population(rho) -> float:
    return float(np.real(KET_A.conj() @ np.asarray(rho) @ KET_A))


# --- JSON ------------------------------------------------------------------


def density_to_json(rho) -> dict:
    rho = np.asarray(rho, dtype=complex)
    return {"re": rho.real.tolist(), "im": rho.imag.tolist()}


def density_from_json(obj: dict) -> np.ndarray:
    if set(obj) != {"re", "im"}:
        raise InvalidDensityMatrix("density matrix JSON needs exactly 're' and 'im'")
    rho = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    return check_density_matrix(rho)


def write_density(path, rho) -> None:
    Path(path).write_text(json.dumps(density_to_json(rho), indent=2) + "\n")


def read_density(path) -> np.ndarray:
    return density_from_json(json.loads(Path(path).read_text()))


def is_hermitian(op, tol=1e-12) -> bool:
    op = np.asarray(op)
    return bool(np.abs(op - op.conj().T).max() <= tol)
