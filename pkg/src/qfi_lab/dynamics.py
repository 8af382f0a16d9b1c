"""Liouvillians, time evolution and steady states of the feedback master
equation

    d rho/dt = -i[H + (A^dag F + F A)/2, rho] + D[A - iF] rho,

with D[X] rho = X rho X^dag - {X^dag X, rho}/2.  F = 0 recovers the plain
driven, collectively damped model.

Operators are vectorised by column stacking, vec(X rho Y) = (Y^T kron X) vec(rho).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .linalg import null_space, spectral_norm
from .model import (
    KET_A,
    KET_S,
    ModelConfig,
    Scheme,
    check_density_matrix,
    drive_hamiltonian,
    feedback_operator,
    from_symmetric_basis,
    jump_operator,
    prepare_initial,
    to_symmetric_basis,
)

DEFAULT_DT = 1e-3
DEFAULT_T_FINAL = 200.0


class StepTooLarge(ValueError):
    pass


class OscillatorySpectrum(RuntimeError):
    pass


class SingularOverlap(RuntimeError):
    pass


def vec(op) -> np.ndarray:
    return np.asarray(op, dtype=complex).reshape(-1, order="F")


def unvec(v) -> np.ndarray:
    return np.asarray(v).reshape(4, 4, order="F")


def _hermitize(rho):
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray
    model: ModelConfig

    def __call__(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))


@dataclass(frozen=True)
class SteadyStateResult:
    rho: np.ndarray
    null_dimension: int
    conserved_overlaps: list
    residual: float


def effective_operators(cfg: ModelConfig):
    """Effective Hamiltonian and jump operator including feedback."""
    h = drive_hamiltonian(cfg)
    a = jump_operator(cfg)
    f = feedback_operator(cfg)
    h_eff = h + 0.5 * (a.conj().T @ f + f @ a)
    return h_eff, a - 1j * f


def lindblad_superoperator(h, jumps) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    out = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in jumps:
        cdc = c.conj().T @ c
        out += np.kron(c.conj(), c) - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    return out


def build_liouvillian(cfg: ModelConfig) -> Liouvillian:
    h_eff, a_eff = effective_operators(cfg)
    return Liouvillian(lindblad_superoperator(h_eff, [a_eff]), cfg)


def master_equation_rhs(cfg: ModelConfig, rho) -> np.ndarray:
    """Right-hand side evaluated directly with matrix products (no
    vectorisation); used to cross-check ``build_liouvillian``."""
    h = drive_hamiltonian(cfg)
    a = jump_operator(cfg)
    f = feedback_operator(cfg)
    h_eff = h + 0.5 * (a.conj().T @ f + f @ a)
    c = a - 1j * f
    cd = c.conj().T
    return -1j * (h_eff @ rho - rho @ h_eff) + c @ rho @ cd - 0.5 * (cd @ c @ rho + rho @ cd @ c)


# --- time evolution --------------------------------------------------------


def _rk4_propagator(lm: np.ndarray, h: float) -> np.ndarray:
    # one classical RK4 step of a linear autonomous system is exactly this
    # degree-4 Taylor polynomial of h*L
    x = h * lm
    eye = np.eye(lm.shape[0], dtype=complex)
    x2 = x @ x
    return eye + x + x2 / 2 + x2 @ x / 6 + x2 @ x2 / 24


def _check_step(l: Liouvillian, dt: float, stability_bound: float):
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt * spectral_norm(l.matrix) > stability_bound:
        raise StepTooLarge(
            f"dt={dt!r} too large: dt*|L|={dt * spectral_norm(l.matrix):.3g} > {stability_bound}"
        )


def trajectory(
    l: Liouvillian,
    rho0,
    t_final: float,
    dt: float = DEFAULT_DT,
    sample_every: int = 1,
    stability_bound: float = 1.0,
    raw: bool = False,
):
    """Fixed-step RK4 integration returning sample times and states.

    Samples are taken every ``sample_every`` steps plus t = 0 and t_final.
    The last step is shortened to land on ``t_final``.  Returned states are
    re-Hermitised and trace normalised unless ``raw`` is set.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    _check_step(l, dt, stability_bound)
    rho0 = np.asarray(rho0, dtype=complex)
    n_full = int(np.floor(t_final / dt + 1e-9))
    rest = t_final - n_full * dt
    if rest <= 1e-12 * max(1.0, t_final):
        rest = 0.0
    step = _rk4_propagator(l.matrix, dt)
    v = vec(rho0)
    times, states = [0.0], [v.copy()]
    for k in range(1, n_full + 1):
        v = step @ v
        if k % sample_every == 0 and not (k == n_full and rest == 0.0):
            times.append(k * dt)
            states.append(v.copy())
    if rest > 0.0:
        v = _rk4_propagator(l.matrix, rest) @ v
    if t_final > 0:
        times.append(float(t_final))
        states.append(v.copy())
    out = [unvec(s) for s in states]
    if not raw:
        out = [_hermitize(s) if t > 0 else rho0.copy() for t, s in zip(times, out)]
    return np.array(times), out


def evolve(l: Liouvillian, rho0, t_final: float, dt: float = DEFAULT_DT, raw: bool = False, **kw):
    if t_final == 0:
        return np.array(rho0, dtype=complex)
    _, states = trajectory(l, rho0, t_final, dt, sample_every=max(1, int(t_final / dt) + 1), raw=raw, **kw)
    return states[-1]


def write_trajectory_csv(path, times, states, basis: str = "product") -> None:
    """Trajectory CSV: ``t`` then re/im of each entry in row-major order
    (1-based indices), in the product or symmetric basis."""
    header = ["t"]
    for i in range(1, 5):
        for j in range(1, 5):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, rho in zip(times, states):
            m = to_symmetric_basis(rho) if basis == "symmetric" else np.asarray(rho)
            row = [f"{t:.17g}"]
            for z in m.reshape(-1):
                row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            w.writerow(row)


# --- steady states ---------------------------------------------------------


def _check_spectrum(l: Liouvillian, tol: float = 1e-8):
    w = np.linalg.eigvals(l.matrix)
    bad = (np.abs(w.real) < tol) & (np.abs(w.imag) > tol)
    if np.any(bad):
        raise OscillatorySpectrum(f"purely imaginary Liouvillian eigenvalues: {w[bad]}")


def conserved_quantities(l: Liouvillian, tol: float = 1e-10) -> list[np.ndarray]:
    """Operators X with Tr(X^dag rho(t)) constant for every trajectory."""
    return [unvec(v[:, 0]) for v in null_space(l.matrix.conj().T, tol)]


def steady_state(l: Liouvillian, rho0, tol: float = 1e-10) -> SteadyStateResult:
    """Long-time limit of rho0 obtained by projecting onto the Liouvillian
    null space along the conserved quantities."""
    _check_spectrum(l)
    right = null_space(l.matrix, tol)
    left = null_space(l.matrix.conj().T, tol)
    if not right or len(right) != len(left):
        raise SingularOverlap(f"left/right null space dimensions {len(left)}/{len(right)}")
    r = np.hstack(right)
    lt = np.hstack(left)
    overlap = lt.conj().T @ r
    if np.linalg.cond(overlap) > 1e8:
        raise SingularOverlap("overlap matrix is ill-conditioned")
    coeffs = lt.conj().T @ vec(rho0)
    rho = _hermitize(unvec(r @ np.linalg.solve(overlap, coeffs)))
    residual = float(np.linalg.norm(l.matrix @ vec(rho)))
    check_density_matrix(rho)
    return SteadyStateResult(rho, len(right), [complex(c) for c in coeffs], residual)


def steady_analytic_nofeedback(omega: float, p44: float = 0.0) -> np.ndarray:
    """Closed-form steady state of the driven, collectively damped pair."""
    if not 0.0 <= p44 <= 1.0:
        raise ValueError("p44 must lie in [0, 1]")
    if p44 == 1.0:
        return np.outer(KET_A, KET_A.conj())
    w = omega
    r = np.zeros((4, 4), dtype=complex)
    r[0, 0] = w**4
    r[0, 1] = -2j * np.sqrt(2) * w**3
    r[0, 2] = -8 * w**2
    r[1, 1] = w**4 + 8 * w**2
    r[1, 2] = -2j * np.sqrt(2) * w * (w**2 + 8)
    r[2, 2] = w**4 + 8 * w**2 + 64
    r = r + np.triu(r, 1).conj().T
    r *= (1 - p44) / (3 * w**4 + 16 * w**2 + 64)
    r[3, 3] = p44
    return from_symmetric_basis(r)


def _f1_normaliser(lam: float, mu: float) -> float:
    # equal to the sum of the three diagonal numerators; note the 3*mu^4
    return (
        (3 + 2 * mu + 6 * mu**2 + 2 * mu**3 + 3 * mu**4) * lam**4
        + 2 * (-5 + 3 * mu - 7 * mu**2 + mu**3) * lam**3
        + 2 * (13 - 6 * mu + 5 * mu**2) * lam**2
        + 8 * (-3 + mu) * lam
        + 8
    )


def steady_analytic_f1(lam: float, mu: float, p44: float = 0.0, p24: complex = 0.0) -> np.ndarray:
    """Closed-form steady state under symmetric feedback at zero drive.

    At (lam, mu) = (1, 1) the symmetric block relaxes to |s><s| and the s-a
    coherence ``p24`` is conserved.  At (1, -1) no closed form exists and
    the null-space solver is used from ``prepare_initial(p44, p24)``.
    """
    if not 0.0 <= p44 <= 1.0:
        raise ValueError("p44 must lie in [0, 1]")
    if np.isclose(lam, 1.0, rtol=0, atol=1e-12) and np.isclose(mu, 1.0, rtol=0, atol=1e-12):
        r = np.zeros((4, 4), dtype=complex)
        r[1, 1] = 1 - p44
        r[3, 3] = p44
        r[1, 3] = p24
        r[3, 1] = np.conj(p24)
        return from_symmetric_basis(r)
    if np.isclose(lam, 1.0, rtol=0, atol=1e-12) and np.isclose(mu, -1.0, rtol=0, atol=1e-12):
        cfg = ModelConfig(Scheme.SYMMETRIC_F1, lam=1.0, mu=-1.0)
        return steady_state(build_liouvillian(cfg), prepare_initial(p44, p24)).rho
    l, m = lam, mu
    r = np.zeros((4, 4), dtype=complex)
    r[0, 0] = (-1 + m**2) ** 2 * l**4
    r[0, 2] = r[2, 0] = -2 * (-1 + m**2) * (-1 + l) * l**2 * (1 + l * m)
    r[1, 1] = (1 + m) ** 2 * l**2 * (2 + 2 * (-1 + m) * l + (1 + m**2) * l**2)
    r[2, 2] = (
        8
        + 8 * (-3 + m) * l
        + 8 * (3 - 2 * m + m**2) * l**2
        - 8 * (1 - m + 2 * m**2) * l**3
        + (1 + 6 * m**2 + m**4) * l**4
    )
    r *= (1 - p44) / _f1_normaliser(l, m)
    r[3, 3] = p44
    return from_symmetric_basis(r)


def symmetric_coherence(rho) -> complex:
    """<s|rho|a>, the s-a coherence."""
    return complex(KET_S.conj() @ np.asarray(rho) @ KET_A)


METHODS = ("analytic", "nullspace", "integrate")


def solve_steady(
    cfg: ModelConfig,
    rho0,
    method: str = "nullspace",
    t_final: float = DEFAULT_T_FINAL,
    dt: float = DEFAULT_DT,
) -> SteadyStateResult:
    """Steady state reached from ``rho0`` by the chosen method.

    The analytic route reads p44 and p24 off ``rho0``; it exists for the
    no-feedback and the zero-drive symmetric feedback models, and is written
    in the units of the calibrated convention.
    """
    l = build_liouvillian(cfg)
    if method == "nullspace":
        return steady_state(l, rho0)
    if method == "integrate":
        rho = evolve(l, rho0, t_final, dt)
        res = float(np.linalg.norm(l.matrix @ vec(rho)))
        return SteadyStateResult(rho, -1, [], res)
    if method != "analytic":
        raise ValueError(f"unknown steady-state method {method!r}")
    p44 = float(np.clip(np.real(KET_A.conj() @ rho0 @ KET_A), 0.0, 1.0))
    if cfg.scheme is Scheme.NO_FEEDBACK:
        rho = steady_analytic_nofeedback(cfg.omega / cfg.gamma, p44)
    elif cfg.scheme is Scheme.SYMMETRIC_F1:
        if cfg.omega != 0 or cfg.gamma != 1:
            raise ValueError("analytic symmetric-feedback state needs omega = 0 and gamma = 1")
        rho = steady_analytic_f1(cfg.lam, cfg.mu, p44, symmetric_coherence(rho0))
    else:
        raise ValueError("no analytic steady state for nonsymmetric feedback")
    res = float(np.linalg.norm(l.matrix @ vec(rho)))
    return SteadyStateResult(rho, -1, [], res)
