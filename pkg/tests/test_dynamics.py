import numpy as np
import pytest
from scipy.linalg import expm

from disentangle.dynamics import (
    IntegratorConfig,
    RateParams,
    gibbs_state,
    hermitian_log,
    integrate_to_steady_state,
    mme_rhs,
    pure_state,
    random_density_matrix,
    theta_operator,
)
from disentangle.fockspace import build_basis, fock_state
from disentangle.models import (
    HubbardParams,
    SpinlessParams,
    hubbard_ground_state,
    hubbard_hamiltonian,
    hubbard_xy_states,
    spinless_hamiltonian,
)
from disentangle.observables import measure, purity

RNG = np.random.default_rng(7)


def test_log_of_maximally_mixed():
    assert np.allclose(hermitian_log(np.eye(4) / 4), -np.log(4) * np.eye(4))


def test_log_floor():
    out = hermitian_log(np.diag([1.0, 0.0]), eig_floor=1e-12)
    assert np.allclose(out, np.diag([0.0, np.log(1e-12)]))


def test_log_inverts_expm():
    rho = random_density_matrix(6, RNG)
    assert np.allclose(expm(hermitian_log(rho)), rho)


def test_log_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_log(np.array([[0.5, 0.3], [0.0, 0.5]]))


def test_theta_of_gibbs_is_scalar():
    m = hubbard_hamiltonian(HubbardParams(t=0.1))
    beta = 3.0
    th = theta_operator(gibbs_state(m.hamiltonian, beta), m, RateParams(1.0, 0.0, beta))
    assert np.allclose(th, th[0, 0] * np.eye(m.dim), atol=1e-10)


def test_disentangling_term_vanishes_on_product_state():
    m = hubbard_hamiltonian(HubbardParams(t=0.1))
    rho = pure_state(fock_state(m.basis, "1100"))
    assert np.allclose(theta_operator(rho, m, RateParams(0.0, 5.0, 10.0)), 0)


@pytest.mark.parametrize("rates", [RateParams(1, 0, 10), RateParams(1, 7, 30), RateParams(0.5, 3, 1)])
def test_rhs_is_traceless_and_hermitian(rates):
    m = spinless_hamiltonian(SpinlessParams(L=4, t0=0.6, g0=0.2, nu=0.3))
    rho = random_density_matrix(m.dim, RNG)
    d = mme_rhs(rho, m, rates)
    assert abs(np.trace(d)) < 1e-12
    assert np.allclose(d, d.conj().T)


def test_gibbs_is_fixed_point():
    m = spinless_hamiltonian(SpinlessParams(L=4))
    beta = 5.0
    d = mme_rhs(gibbs_state(m.hamiltonian, beta), m, RateParams(1.0, 0.0, beta))
    assert np.linalg.norm(d) < 1e-10


def test_pure_ground_state_stays_put():
    # with gamma_D = 0 a pure eigenstate commutes with Theta (the floored log
    # is diagonal in the same basis), so it is stationary, though unstable
    p = HubbardParams(t=1e-3)
    m = hubbard_hamiltonian(p)
    rho = pure_state(hubbard_ground_state(p, m.basis))
    assert np.linalg.norm(mme_rhs(rho, m, RateParams(1.0, 0.0, 100.0))) < 1e-12


def test_timeout_is_not_an_error():
    m = hubbard_hamiltonian(HubbardParams(t=0.1))
    rho0 = random_density_matrix(m.dim, RNG)
    rho, rec = integrate_to_steady_state(rho0, m, RateParams(1, 0, 10), IntegratorConfig(t_max=0.01))
    assert not rec.converged
    assert np.isclose(np.trace(rho).real, 1)
    assert rec.times[-1] == pytest.approx(0.01)


def test_subspace_rejects_foreign_state():
    m = hubbard_hamiltonian(HubbardParams(t=0.1))
    x, y = hubbard_xy_states(m.basis)
    V = np.stack([x, y], axis=1)
    with pytest.raises(ValueError):
        integrate_to_steady_state(np.eye(16) / 16, m, RateParams(), subspace=V)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(settle_time=-1)
    with pytest.raises(ValueError):
        RateParams(gamma_D=-1)
    with pytest.raises(ValueError):
        RateParams(beta=0)
    c = IntegratorConfig().scaled(0.5)
    assert c.abs_tol == 5e-11 and c.steady_tol == 5e-9 and c.max_step == 1.0


def _mixed_steady_state(cfg):
    p = HubbardParams(t=1e-3)
    m = hubbard_hamiltonian(p)
    x, y = hubbard_xy_states(m.basis)
    V = np.stack([x, y], axis=1)
    psi = hubbard_ground_state(p, m.basis)
    rho0 = pure_state(psi) * (1 - 1e-4) + 1e-4 * (V @ V.conj().T) / 2
    rates = RateParams(1.0, 8 * 100.0, 100.0)
    rho, rec = integrate_to_steady_state(rho0, m, rates, cfg, subspace=V)
    assert rec.converged
    return measure(rho, m, rates)


def test_eig_floor_and_tolerance_insensitivity():
    ref = _mixed_steady_state(IntegratorConfig())
    assert ref.purity < 0.999
    for cfg in (IntegratorConfig(eig_floor=1e-14), IntegratorConfig().scaled(0.5)):
        o = _mixed_steady_state(cfg)
        for a, b in ((o.energy, ref.energy), (o.purity, ref.purity)):
            assert abs(a - b) <= 1e-6 * abs(b)


def test_gibbs_oracle_small():
    m = hubbard_hamiltonian(HubbardParams(t=0.2))
    rho, rec = integrate_to_steady_state(random_density_matrix(16, RNG), m, RateParams(1, 0, 2.0))
    assert rec.converged
    assert np.abs(np.linalg.eigvalsh(rho - gibbs_state(m.hamiltonian, 2.0))).sum() < 1e-6
    assert purity(rho) < 1
