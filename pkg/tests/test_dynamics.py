import numpy as np
import pytest

from conftest import random_configs
from qfi_lab.dynamics import (
    OscillatorySpectrum,
    StepTooLarge,
    build_liouvillian,
    conserved_quantities,
    evolve,
    master_equation_rhs,
    solve_steady,
    steady_analytic_f1,
    steady_analytic_nofeedback,
    steady_state,
    symmetric_coherence,
    trajectory,
    unvec,
    vec,
    write_trajectory_csv,
)
from qfi_lab.linalg import frobenius_inner
from qfi_lab.model import (
    KET_A,
    KET_GG,
    KET_S,
    ModelConfig,
    Scheme,
    antisymmetric_population,
    prepare_initial,
    random_density_matrix,
    to_symmetric_basis,
)

GG = np.outer(KET_GG, KET_GG)
AA = np.outer(KET_A, KET_A)
SS = np.outer(KET_S, KET_S)

ALL_SCHEMES = [
    ModelConfig(omega=1.3),
    ModelConfig(Scheme.SYMMETRIC_F1, omega=0.4, lam=0.7, mu=1.4),
    ModelConfig(Scheme.NONSYMMETRIC_F2, omega=0.2, lam=2.0, mu=1.0, delta=0.1),
]


def in_span(x, basis, tol=1e-9):
    b = np.column_stack([vec(q) for q in basis])
    coef, *_ = np.linalg.lstsq(b, vec(x), rcond=None)
    return np.linalg.norm(b @ coef - vec(x)) <= tol * max(1.0, np.linalg.norm(x))


@pytest.mark.parametrize("cfg", ALL_SCHEMES, ids=["none", "f1", "f2"])
def test_liouvillian_matches_direct_rhs(cfg):
    l = build_liouvillian(cfg)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        rho = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert np.abs(l(rho) - master_equation_rhs(cfg, rho)).max() <= 1e-12 * max(1, np.abs(l.matrix).max())


@pytest.mark.parametrize("cfg", ALL_SCHEMES, ids=["none", "f1", "f2"])
def test_trace_and_hermiticity_preservation(cfg):
    l = build_liouvillian(cfg)
    assert np.abs(vec(np.eye(4)).conj() @ l.matrix).max() <= 1e-12 * max(1, np.abs(l.matrix).max())
    rng = np.random.default_rng(1)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(l(x.conj().T), l(x).conj().T, atol=1e-12)
    y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(l(0.3 * x - 2j * y), 0.3 * l(x) - 2j * l(y), atol=1e-12)


def test_liouvillian_examples():
    assert np.allclose(build_liouvillian(ModelConfig(omega=0.0))(GG), 0)
    for w in (0.0, 0.5, 3.0):
        assert np.allclose(build_liouvillian(ModelConfig(omega=w))(AA), 0, atol=1e-14)


def test_evolve_zero_time():
    rho0 = random_density_matrix(2)
    assert np.array_equal(evolve(build_liouvillian(ModelConfig(omega=1.0)), rho0, 0.0), rho0)


def test_evolve_reaches_closed_form():
    rho = evolve(build_liouvillian(ModelConfig(omega=1.0)), GG, 50.0)
    assert np.abs(rho - steady_analytic_nofeedback(1.0)).max() <= 1e-6


def test_antisymmetric_population_conserved():
    rho0 = prepare_initial(0.3, 0.0, "g")
    for w in (0.5, 2.0):
        _, states = trajectory(build_liouvillian(ModelConfig(omega=w)), rho0, 20.0, sample_every=500, raw=True)
        for rho in states:
            assert abs(antisymmetric_population(rho) - 0.3) <= 1e-9


def test_step_too_large():
    l = build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=2.5, mu=2.5))
    with pytest.raises(StepTooLarge):
        evolve(l, GG, 1.0, dt=0.01)


def test_trajectory_sampling_lands_on_t_final():
    times, states = trajectory(build_liouvillian(ModelConfig(omega=1.0)), GG, 1.0005, dt=1e-3, sample_every=250)
    assert times[0] == 0.0 and times[-1] == 1.0005
    assert np.allclose(np.diff(times[:-1]), 0.25)
    assert len(states) == len(times)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_trace_drift_and_positivity(scheme):
    cfg = random_configs(scheme, 1, seed=3)[0]
    _, states = trajectory(build_liouvillian(cfg), random_density_matrix(9), 100.0, sample_every=1000, raw=True)
    for rho in states:
        assert abs(np.trace(rho) - 1) <= 1e-9
        h = 0.5 * (rho + rho.conj().T)
        assert np.linalg.eigvalsh(h)[0] >= -1e-8


@pytest.mark.parametrize("cfg", [
    ModelConfig(omega=0.8),
    ModelConfig(omega=0.0),
    ModelConfig(Scheme.SYMMETRIC_F1, lam=1.0, mu=1.0),
    ModelConfig(Scheme.SYMMETRIC_F1, lam=0.6, mu=0.4),
], ids=["none", "none-undriven", "f1-hl", "f1"])
def test_conserved_quantities_constant(cfg):
    l = build_liouvillian(cfg)
    qs = conserved_quantities(l)
    _, states = trajectory(l, random_density_matrix(4), 30.0, sample_every=2000, raw=True)
    for x in qs:
        vals = [frobenius_inner(x, rho) for rho in states]
        assert np.abs(np.array(vals) - vals[0]).max() <= 1e-8


def test_conserved_quantities_contents():
    for cfg in ALL_SCHEMES:
        assert in_span(np.eye(4), conserved_quantities(build_liouvillian(cfg)))
    nofb = conserved_quantities(build_liouvillian(ModelConfig(omega=1.0)))
    assert in_span(AA, nofb)
    rho = random_density_matrix(5)
    l = build_liouvillian(ModelConfig(omega=1.0))
    assert abs(frobenius_inner(AA, l(rho))) <= 1e-12
    hl = conserved_quantities(build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=1.0, mu=1.0)))
    assert in_span(np.outer(KET_S, KET_A.conj()), hl)


def test_steady_state_nofeedback_closed_form():
    res = steady_state(build_liouvillian(ModelConfig(omega=1.0)), GG)
    assert res.null_dimension == 2
    assert res.residual <= 1e-9
    assert np.abs(res.rho - steady_analytic_nofeedback(1.0, 0.0)).max() <= 1e-10


def test_steady_state_nofeedback_keeps_dark_population():
    rho0 = prepare_initial(0.4, 0.0, "e")
    res = steady_state(build_liouvillian(ModelConfig(omega=1.7)), rho0)
    assert np.abs(res.rho - steady_analytic_nofeedback(1.7, 0.4)).max() <= 1e-10


def test_steady_state_hl_mixture_is_stationary():
    rho0 = 0.7 * SS + 0.3 * AA
    res = steady_state(build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=1.0, mu=1.0)), rho0)
    assert np.abs(res.rho - rho0).max() <= 1e-10
    assert res.null_dimension == 4


def test_steady_state_f2_initial_independent():
    l = build_liouvillian(ModelConfig(Scheme.NONSYMMETRIC_F2, lam=2.0, mu=1.0, delta=0.1))
    ref = steady_state(l, GG)
    assert ref.null_dimension == 1
    for seed in range(10):
        assert np.abs(steady_state(l, random_density_matrix(seed)).rho - ref.rho).max() <= 1e-8


def test_steady_state_oscillatory_spectrum():
    # a purely Hamiltonian Liouvillian has persistent oscillations
    from qfi_lab.dynamics import Liouvillian, lindblad_superoperator
    from qfi_lab.model import pauli
    l = Liouvillian(lindblad_superoperator(pauli(1, "x"), []), ModelConfig())
    with pytest.raises(OscillatorySpectrum):
        steady_state(l, GG)


def test_analytic_nofeedback_examples():
    assert np.allclose(steady_analytic_nofeedback(0.0, 0.0), GG)
    assert np.allclose(steady_analytic_nofeedback(3.0, 1.0), AA)
    pops = np.diag(to_symmetric_basis(steady_analytic_nofeedback(1e4, 0.0))).real
    assert np.allclose(pops[:3], 1 / 3, atol=1e-6)
    for w in (0.0, 0.7, 5.0):
        rho = steady_analytic_nofeedback(w, 0.25)
        assert np.isclose(np.trace(rho), 1)
        assert np.linalg.eigvalsh(rho)[0] >= -1e-12


def test_analytic_f1_examples():
    assert np.allclose(steady_analytic_f1(0.0, 0.3, 0.0), GG)
    assert np.allclose(steady_analytic_f1(1.0, 1.0, 0.0), SS)
    l = build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=0.5, mu=0.5))
    num = steady_state(l, prepare_initial(0.0, 0.0, "s")).rho
    assert np.abs(steady_analytic_f1(0.5, 0.5, 0.0) - num).max() <= 1e-9


def test_analytic_f1_matches_nullspace_with_dark_weight():
    rng = np.random.default_rng(12)
    for _ in range(10):
        lam, mu = rng.uniform(0, 2.5), rng.uniform(-1, 2.5)
        p44 = rng.uniform(0, 1)
        l = build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=lam, mu=mu))
        num = steady_state(l, prepare_initial(p44)).rho
        assert np.abs(steady_analytic_f1(lam, mu, p44) - num).max() <= 1e-9


def test_analytic_f1_hl_point_with_coherence():
    rho0 = prepare_initial(0.3, 0.1 + 0.05j, "s")
    l = build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=1.0, mu=1.0))
    num = steady_state(l, rho0).rho
    assert np.abs(steady_analytic_f1(1.0, 1.0, 0.3, 0.1 + 0.05j) - num).max() <= 1e-10
    assert np.isclose(symmetric_coherence(num), 0.1 + 0.05j)


def test_analytic_f1_other_excluded_point():
    rho = steady_analytic_f1(1.0, -1.0, 0.2)
    l = build_liouvillian(ModelConfig(Scheme.SYMMETRIC_F1, lam=1.0, mu=-1.0))
    assert np.abs(l(rho)).max() <= 1e-10
    assert np.isclose(antisymmetric_population(rho), 0.2)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_steady_state_agrees_with_long_integration(scheme):
    for k, cfg in enumerate(random_configs(scheme, 10, seed=21)):
        rho0 = random_density_matrix(100 + k)
        l = build_liouvillian(cfg)
        ss = steady_state(l, rho0)
        assert ss.residual <= 1e-9
        assert np.abs(evolve(l, rho0, 200.0) - ss.rho).max() <= 1e-6


def test_solve_steady_analytic_rejects_f2():
    with pytest.raises(ValueError):
        solve_steady(ALL_SCHEMES[2], GG, "analytic")


def test_trajectory_csv(tmp_path):
    times, states = trajectory(build_liouvillian(ModelConfig(omega=1.0)), GG, 1.0, sample_every=500)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, times, states)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["t", "re_11", "im_11"] and header[-1] == "im_44" and len(header) == 33
    assert len(lines) == 1 + len(times)
    last = np.array([float(x) for x in lines[-1].split(",")[1:]])
    assert np.array_equal(last[0::2] + 1j * last[1::2], states[-1].reshape(-1))


def test_vec_convention():
    rng = np.random.default_rng(0)
    x, r, y = (rng.standard_normal((4, 4)) for _ in range(3))
    assert np.allclose(np.kron(y.T, x) @ vec(r), vec(x @ r @ y))
    assert np.array_equal(unvec(vec(r)), r)
