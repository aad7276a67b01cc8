import numpy as np
import pytest

from disentangle.bloch import (
    BlochModel,
    BlochState,
    SubspaceModel,
    bloch_free_energy,
    bloch_rhs,
    bloch_steady_state,
    bloch_vector,
    find_extrema,
    hubbard_truncation_params,
    log_rho_expect,
    spinless_chain_truncation,
)
from disentangle.dynamics import RateParams, pair_covariances
from disentangle.models import HubbardParams, SpinlessParams, hubbard_floor_ceiling, hubbard_hamiltonian

RNG = np.random.default_rng(5)


def random_ball(n):
    v = RNG.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True) * RNG.uniform(0, 1, size=(n, 1)) ** (1 / 3)


def hub(ratio, beta=100.0, t=1e-3, weight=1.0):
    return hubbard_truncation_params(HubbardParams(t=t), RateParams(1.0, ratio * beta, beta), weight)


def test_state_checks():
    assert BlochState([0, 0, 0]).purity == 0.5
    rho = BlochState([0.3, -0.2, 0.5]).density_matrix()
    assert np.isclose(np.trace(rho).real, 1) and np.allclose(rho, rho.conj().T)
    with pytest.raises(ValueError):
        BlochState([1, 1, 0])
    with pytest.raises(ValueError):
        BlochState([1, 0])


def test_precession_keeps_length():
    m = BlochModel(omega=[0.3, -0.1, 1.0], q0=0.0, q=[0, 0, 0], gamma_H=0.0)
    for k in random_ball(10):
        assert abs(k @ bloch_rhs(k, m)) < 1e-12


def test_pure_states_stay_pure():
    m = hub(6.0)
    for k in random_ball(10):
        k = k / np.linalg.norm(k)
        assert abs(k @ bloch_rhs(k, m)) < 1e-9


def test_gibbs_fixed_point():
    beta = 5.0
    m = hub(0.0, beta=beta, t=0.0)
    k = np.array([0, 0, -np.tanh(beta * 0.5)])
    assert np.linalg.norm(bloch_rhs(k, m)) < 1e-12
    run = bloch_steady_state(m, [0.3, 0.2, 0.1])
    assert run.converged and np.allclose(run.k, k, atol=1e-9)


def test_log_rho():
    assert np.isclose(log_rho_expect(0.0), -np.log(2))
    assert log_rho_expect(1.0) == 0.0
    h = 1e-6
    d = (log_rho_expect(0.5 + h) - log_rho_expect(0.5 - h)) / (2 * h)
    assert np.isclose(d, np.arctanh(0.5))


def test_truncation_params():
    m = hubbard_truncation_params(HubbardParams(t=1e-3), RateParams(1, 0, 100))
    e0 = 0.5 * np.sqrt(1 + 64e-6)
    assert np.allclose(m.omega, [0, 0, e0])
    assert np.allclose(m.q, [-1e-3 / e0, 0, 1 / (8 * e0)])
    m0 = hubbard_truncation_params(HubbardParams(t=0.0), RateParams(1, 0, 100))
    assert np.allclose(m0.q, [0, 0, 0.25]) and m0.q0 == 0
    with pytest.warns(UserWarning):
        hubbard_truncation_params(HubbardParams(mu=0.1), RateParams())


def test_projected_covariance_is_linear_in_k():
    p = HubbardParams(t=0.01)
    full = hubbard_hamiltonian(p)
    f, c = hubbard_floor_ceiling(p, full.basis)
    m = hubbard_truncation_params(p, RateParams())
    B = np.stack([f, c], axis=1)
    for k in random_ball(5):
        rho = B @ BlochState(k).density_matrix() @ B.conj().T
        assert np.allclose(bloch_vector(rho, f, c), k)
        assert np.allclose(pair_covariances(rho, full), m.q0 + m.q @ k)


def test_equator_has_no_disentangling_energy():
    m = hub(8.0, t=0.0)
    m0 = hub(0.0, t=0.0)
    for phi in np.linspace(0, 2 * np.pi, 7):
        k = np.array([np.cos(phi), np.sin(phi), 0.0])
        assert np.isclose(bloch_free_energy(k, m), bloch_free_energy(k, m0))


def test_gradient_matches_finite_differences():
    models = [hub(6.0, t=0.05), spinless_chain_truncation(SpinlessParams(L=3, t0=0, g0=0, mu=0.45), RateParams(1, 300, 100))]
    h = 1e-6
    for m in models:
        for k in random_ball(4) * 0.9:
            fd = [(m.free_energy(k + h * e) - m.free_energy(k - h * e)) / (2 * h) for e in np.eye(3)]
            assert np.allclose(m.gradient(k), fd, atol=1e-6)


def test_noninteracting_extremum_is_gibbs():
    beta = 10.0
    m = hub(0.0, beta=beta, t=0.05)
    ex = find_extrema(m)
    assert len(ex) == 1 and ex[0].kind == "minimum"
    e0 = np.linalg.norm(m.omega)
    assert np.allclose(ex[0].k, -np.tanh(beta * e0) * m.omega / e0, atol=1e-9)


def test_low_temperature_bifurcation():
    def minima(ratio):
        return [e for e in find_extrema(hub(ratio, beta=1e4, t=0.0)) if e.kind == "minimum"]

    below = minima(3.9)
    assert len(below) == 1 and below[0].on_boundary and below[0].k[2] < -0.999
    above = minima(4.1)
    assert len(above) == 1 and not above[0].on_boundary
    # zero-temperature value -4/ratio, shifted by atanh|k| / beta ~ 2e-4
    assert np.isclose(above[0].k[2], -4 / 4.1, atol=1e-3)
    eight = minima(8.0)
    assert np.isclose(eight[0].k[2], -0.5, atol=1e-3)


def test_two_minima_on_the_sphere():
    # restricted to pure states, U_e(theta) at t = 0, ratio 8 has two
    # symmetric minima at cos(theta) = -1/2
    m = hub(8.0, beta=1e4, t=0.0)
    th = np.linspace(0, 2 * np.pi, 3601)[:-1]
    k = np.stack([np.sin(th), np.zeros_like(th), np.cos(th)], axis=1)
    u = bloch_free_energy(k, m)
    lows = th[(u < np.roll(u, 1)) & (u < np.roll(u, -1))]
    assert len(lows) == 2
    assert np.allclose(np.cos(lows), -0.5, atol=1e-3)
    assert np.isclose(lows.sum(), 2 * np.pi, atol=1e-2)


def test_chain_is_bistable():
    m = spinless_chain_truncation(SpinlessParams(L=3, t0=0, g0=0, mu=1.1 * (np.sqrt(2) - 1)), RateParams(1, 300, 100))
    kinds = sorted(e.kind for e in find_extrema(m))
    assert kinds.count("minimum") == 2 and kinds.count("saddle") == 1


def test_energetic_part_ignores_transverse_components():
    m = spinless_chain_truncation(SpinlessParams(L=3, t0=0, g0=0, mu=0.45), RateParams(1, 300, 100))
    assert isinstance(m, SubspaceModel)
    base = m.free_energy(np.array([0, 0, 0.3]), entropy=False)
    for k12 in RNG.uniform(-0.6, 0.6, size=(5, 2)):
        assert np.isclose(m.free_energy(np.array([*k12, 0.3]), entropy=False), base)


def test_dynamics_stops_at_half_ratio_extremum():
    # stationary points of the Bloch flow at gamma_D are extrema of U_e at gamma_D / 2
    beta = 100.0
    run = bloch_steady_state(hub(12.0, beta=beta, t=0.0), [0, 0, -(1 - 1e-12)])
    ex = [e for e in find_extrema(hub(6.0, beta=beta, t=0.0)) if e.kind == "minimum"]
    assert run.converged
    assert np.allclose(run.k, ex[0].k, atol=1e-8)


def test_resolution_floor():
    with pytest.raises(ValueError):
        find_extrema(hub(1.0), resolution=8)
