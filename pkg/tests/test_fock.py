import numpy as np
import pytest
import scipy.sparse as sp

from atomsqueeze import fock
from atomsqueeze import gaussian as g
from atomsqueeze import models as m


def loss_system(kappa=1.0):
    return g.GaussianSystem(("a",), g.QuadraticHamiltonian.zeros(1),
                            (g.LinearJump.loss(1, 0, kappa),))


# --- basis and operators -----------------------------------------------------


def test_config_guards():
    with pytest.raises(ValueError, match=">= 2"):
        fock.FockConfig((1, 4))
    with pytest.raises(fock.TruncationError):
        fock.FockConfig((30, 30, 30))
    assert fock.FockConfig((2, 3)).dim == 12


def test_destroy_and_embed():
    a = fock.destroy(4).toarray()
    assert np.allclose(a @ np.eye(4)[:, 3], np.sqrt(3) * np.eye(4)[:, 2])
    ops = fock.ladder_operators((3, 4))
    # ladder operators on different modes commute
    assert abs(ops[0] @ ops[1] - ops[1] @ ops[0]).max() == 0
    state = fock.basis_state((3, 4), (1, 2))
    assert state.expect(ops[1].getH() @ ops[1]).real == pytest.approx(2.0)
    assert state.expect(ops[0].getH() @ ops[0]).real == pytest.approx(1.0)


def test_moments_of_simple_states():
    vac = fock.basis_state((6,), (0,))
    assert np.allclose(fock.moments(vac).sigma, np.eye(2))
    one = fock.moments(fock.basis_state((6,), (1,)))
    assert np.allclose(one.sigma, 3 * np.eye(2))
    alpha = 0.6 - 0.3j
    coh = fock.moments(fock.coherent_state((25,), (alpha,)))
    assert np.allclose(coh.sigma, np.eye(2), atol=1e-10)
    assert np.allclose(coh.mean, [2 * alpha.real, 2 * alpha.imag], atol=1e-10)


def test_state_diagnostics():
    state = fock.basis_state((3,), (2,))
    assert state.trace == pytest.approx(1.0)
    assert state.hermiticity_error() == 0.0
    assert state.min_eigenvalue() == pytest.approx(0.0)
    assert np.allclose(state.populations(0), [0, 0, 1])


# --- Liouvillian -------------------------------------------------------------


def test_one_photon_decay_rate():
    kappa = 0.8
    cfg = fock.FockConfig((3,))
    state = fock.basis_state(cfg.dims, (1,))
    drho = fock.liouvillian_apply(loss_system(kappa), cfg, state)
    n_op = (fock.destroy(4).getH() @ fock.destroy(4)).toarray()
    assert np.trace(n_op @ drho).real == pytest.approx(-2 * kappa)


def test_vacuum_is_stationary_without_squeezing():
    system = m.build_single_cavity_ideal(m.IdealParams(1.0, 0.0, 0.0, 1.0, 1.0))
    cfg = fock.FockConfig((2, 2, 2, 2))
    drho = fock.liouvillian_apply(system, cfg, fock.basis_state(cfg.dims, (0, 0, 0, 0)))
    assert np.abs(drho).max() < 1e-15


def test_liouvillian_dimension_mismatch():
    with pytest.raises(ValueError):
        fock.liouvillian_apply(loss_system(), fock.FockConfig((3,)), fock.basis_state((5,), (0,)))


def test_superoperator_matches_apply():
    system = m.build_single_mode(0.4, 0.5, 0.3, 1.0)
    model = fock.build_model(system, fock.FockConfig((3, 3)))
    rng = np.random.default_rng(7)
    rho = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    direct = model.apply(rho)
    via_super = (model.superoperator() @ rho.reshape(-1, order="F")).reshape(16, 16, order="F")
    assert np.abs(direct - via_super).max() < 1e-12


def _direct_cascade_superoperator(s, t, kappa, eta):
    """kappa D[s] + kappa D[t] - 2 kappa sqrt(eta) ([t^dag, s rho] + [rho s^dag, t])."""
    d = s.shape[0]
    eye = sp.identity(d, format="csr")

    def left(A):
        return sp.kron(eye, A)

    def right(B):
        return sp.kron(B.T, eye)

    def dissipator(L):
        LdL = L.getH() @ L
        return 2 * sp.kron(L.conj(), L) - left(LdL) - right(LdL)

    sd, td = s.getH(), t.getH()
    cross = left(td @ s) - sp.kron(td.T, s) + right(sd @ t) - sp.kron(sd.T, t)
    return kappa * dissipator(s) + kappa * dissipator(t) - 2 * kappa * np.sqrt(eta) * cross


@pytest.mark.parametrize("eta", [0.0, 0.25, 0.5, 0.96, 1.0])
def test_cascade_lowering_identity(eta):
    kappa = 1.0
    system = g.GaussianSystem(("s", "t"), g.QuadraticHamiltonian.zeros(2),
                              cascades=(g.CascadeLink(0, 1, kappa, eta),))
    cfg = fock.FockConfig((3, 3))
    lowered = fock.build_model(system, cfg).superoperator().toarray()
    s, t = fock.ladder_operators(cfg.dims)
    direct = _direct_cascade_superoperator(s, t, kappa, eta).toarray()
    assert np.abs(lowered - direct).max() <= 1e-12


# --- charges -----------------------------------------------------------------


def test_mode_charges():
    single = m.build_single_cavity_ideal(m.IdealParams(1.0, 0.5, 0.0, 1.0, 1.0))
    q = fock.mode_charges(single)
    assert q[0] == q[2] == -q[1] == -q[3]
    cascaded = m.build_cascaded(m.CascadeParams(1.0, 0.5, 0.0, 5.0, 0.8))
    q = fock.mode_charges(cascaded)
    assert list(q) == [1, -1, 1, -1, 1, -1]
    assert fock.mode_charges(m.build_single_mode(1.0, 0.5)) is None


# --- integration -------------------------------------------------------------


def test_integrate_pure_decay():
    kappa = 1.0
    cfg = fock.FockConfig((3,))
    traj = fock.integrate(loss_system(kappa), cfg, fock.basis_state(cfg.dims, (1,)), 2.0,
                          n_samples=9)
    n_op = fock.destroy(4).getH() @ fock.destroy(4)
    for t, state in traj:
        assert state.expect(n_op).real == pytest.approx(np.exp(-2 * kappa * t), abs=1e-6)
        assert abs(state.trace - 1) < 1e-8
        assert state.min_eigenvalue() > -1e-7


def test_integrate_matches_moment_equations():
    system = m.build_single_mode(0.3, 0.3, 0.4, 1.0)
    cfg = fock.FockConfig((4, 8))
    traj = fock.integrate(system, cfg, fock.basis_state(cfg.dims, (0, 0)), 3.0, n_samples=4)
    gauss = g.evolve(g.assemble_generator(system), g.vacuum(system.labels), 3.0, n_samples=4)
    for (t, state), (_, ref) in zip(traj, gauss):
        assert np.abs(fock.moments(state).sigma - ref.sigma).max() < 2e-3
        assert abs(state.trace - 1) < 1e-8
        assert state.hermiticity_error() < 1e-10


def test_integrate_rejects_nonpositive_time():
    cfg = fock.FockConfig((2,))
    with pytest.raises(ValueError):
        fock.integrate(loss_system(), cfg, fock.basis_state(cfg.dims, (0,)), 0.0)


# --- steady states -----------------------------------------------------------


def test_gmres_and_direct_agree():
    system = m.build_single_cavity_ideal(m.IdealParams(0.5, 0.4, 0.2, 1.0, 1.0))
    model = fock.build_model(system, fock.FockConfig((2, 2, 3, 3)))
    a = fock.steady_state_model(model, "gmres").rho
    b = fock.steady_state_model(model, "direct").rho
    assert np.abs(a - b).max() < 1e-9


def test_steady_state_unknown_method():
    model = fock.build_model(loss_system(), fock.FockConfig((2,)))
    with pytest.raises(ValueError):
        fock.steady_state_model(model, "magic")


def test_single_mode_scheme_oracle():
    system = m.build_single_mode(0.25, 0.5, 0.0, 1.0)
    state = fock.steady_state(system, fock.FockConfig((3, 16)))
    ref = g.steady_state(g.assemble_generator(system))
    assert np.abs(fock.moments(state).sigma - ref.sigma).max() < 2e-3
    assert state.min_eigenvalue() > -1e-8


def test_cascaded_oracle_at_weak_coupling():
    system = m.build_cascaded(m.CascadeParams(0.25, 0.3, 0.0, 1.0, 0.8))
    state = fock.steady_state(system, fock.FockConfig((2, 2, 2, 2, 3, 3)))
    ref = g.steady_state(g.assemble_generator(system))
    assert np.abs(fock.moments(state).sigma - ref.sigma).max() < 1e-2


# --- truncation control ------------------------------------------------------


def _atomic_x_variance(state):
    return fock.moments(state).sigma[2, 2]


def test_truncation_check_vacuum_converges_immediately():
    system = m.build_single_mode(0.25, 0.0)
    cutoffs, value = fock.truncation_check(system, fock.FockConfig((2, 2)), _atomic_x_variance)
    assert cutoffs == (2, 2)
    assert value == pytest.approx(1.0)


def test_truncation_check_needs_more_photons_for_stronger_squeezing():
    weak, _ = fock.truncation_check(m.build_single_mode(0.25, 0.3), fock.FockConfig((3, 2)),
                                    _atomic_x_variance, modes=[1])
    strong, _ = fock.truncation_check(m.build_single_mode(0.25, 0.7), fock.FockConfig((3, 2)),
                                      _atomic_x_variance, modes=[1])
    assert strong[1] > weak[1]


def test_truncation_check_reports_non_convergence():
    with pytest.raises(fock.NotConverged) as info:
        fock.truncation_check(m.build_single_mode(0.25, 0.95), fock.FockConfig((2, 2)),
                              _atomic_x_variance, modes=[1], max_dim=60)
    assert len(info.value.history) >= 2


# --- collective spins --------------------------------------------------------


def test_dicke_operators():
    assert np.allclose(fock.dicke_lowering(1).toarray(), [[0, 1], [0, 0]])
    for N in (1, 4, 7):
        Jm = fock.dicke_lowering(N)
        Jz = fock.dicke_jz(N)
        comm = (Jm.getH() @ Jm - Jm @ Jm.getH()).toarray()
        assert np.allclose(comm, 2 * Jz.toarray())


def test_spin_model_without_drive_stays_in_ground_state():
    params = fock.SpinModelParams(N1=6, beta_r1=0.0, beta_s1=0.0, kappa_a=1.0, kappa_b=0.0,
                                  shared_mode=True)
    spin = fock.build_spin_model(params, fock.SpinEnsembleConfig((3,)))
    start = fock.basis_state(spin.model.dims, (0, 0), spin.model.labels)
    _, final = fock.integrate_model(spin.model, start, 2.0, n_samples=2)[-1]
    assert spin.excitations(final) == pytest.approx(0.0, abs=1e-12)
    assert final.expect(spin.Jz[0]).real == pytest.approx(-3.0)


def test_spin_model_guard():
    params = fock.SpinModelParams.single_mode_scheme(200, 0.5, 0.4)
    with pytest.raises(fock.TruncationError):
        fock.build_spin_model(params, fock.SpinEnsembleConfig((150,)))


def test_spin_model_approaches_bosonic_limit():
    r = 0.4
    params = fock.SpinModelParams.single_mode_scheme(8, 0.5, r)
    spin = fock.build_spin_model(params, fock.SpinEnsembleConfig((5,)))
    v_spin = spin.moments(spin.steady_state()).sigma[2, 2]
    v_boson = (1 - r) / (1 + r)
    occupancy = r * r / (1 - r * r)
    assert abs(v_spin - v_boson) <= 5 * occupancy / 8
