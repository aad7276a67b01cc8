import numpy as np
import pytest

from disentangle.fockspace import build_basis, fock_state, is_hermitian, total_number_op
from disentangle.models import (
    HUBBARD_DISENT_COEF,
    HubbardParams,
    SpinlessParams,
    hubbard_e0,
    hubbard_floor_ceiling,
    hubbard_ground_state,
    hubbard_hamiltonian,
    hubbard_mixing_angle,
    hubbard_xy_states,
    pseudospin_ops,
    singlet_sector,
    site_pseudospin,
    spinless_hamiltonian,
)


def comm(a, b):
    return a @ b - b @ a


def test_hubbard_basics():
    m = hubbard_hamiltonian(HubbardParams(L=2, t=0.3, U=1.0, mu=0.2))
    assert m.dim == 16
    assert is_hermitian(m.hamiltonian)
    assert np.allclose(comm(m.hamiltonian, total_number_op(m.basis)), 0)
    assert len(m.disent_terms) == 2
    assert np.all(m.coefs == HUBBARD_DISENT_COEF)


def test_hubbard_empty_state_energy():
    m = hubbard_hamiltonian(HubbardParams(L=2, t=0.0, U=1.0))
    e = fock_state(m.basis, "0000")
    assert np.isclose(np.real(e.conj() @ m.hamiltonian @ e), 0.5)


@pytest.mark.parametrize("t", [1e-3, 0.1, 0.7])
def test_floor_and_ceiling_are_eigenstates(t):
    p = HubbardParams(t=t, U=1.0)
    m = hubbard_hamiltonian(p)
    f, c = hubbard_floor_ceiling(p, m.basis)
    e0 = hubbard_e0(p)
    assert np.isclose(e0, 0.5 * np.sqrt(1 + 64 * t * t))
    assert np.isclose(np.tan(2 * hubbard_mixing_angle(p)), -8 * t)
    assert np.allclose(m.hamiltonian @ f, e0 * f)
    assert np.allclose(m.hamiltonian @ c, -e0 * c)
    assert np.allclose(hubbard_ground_state(p, m.basis), c)


def test_xy_span_is_invariant():
    p = HubbardParams(t=0.05, U=1.0)
    m = hubbard_hamiltonian(p)
    x, y = hubbard_xy_states(m.basis)
    B = np.stack([x, y], axis=1)
    P = B @ B.conj().T
    HB = m.hamiltonian @ B
    assert np.allclose(P @ HB, HB)
    assert np.allclose(np.linalg.eigvalsh(B.conj().T @ HB), [-hubbard_e0(p), hubbard_e0(p)])


def test_singlet_sector():
    m = hubbard_hamiltonian(HubbardParams(t=0.1))
    V = singlet_sector(m.basis, 2)
    # two double occupancies and the one-per-site singlet
    assert V.shape == (16, 3)
    assert np.allclose(V.conj().T @ V, np.eye(3))
    P = V @ V.conj().T
    assert np.allclose(P @ m.hamiltonian @ V, m.hamiltonian @ V)
    x, y = hubbard_xy_states(m.basis)
    assert np.allclose(P @ x, x) and np.allclose(P @ y, y)


def test_pseudospin_algebra():
    b = build_basis(4)
    for l in range(2):
        sx, sy, sz = site_pseudospin(b, l)
        assert np.allclose(comm(sx, sy), 2j * sz)
    Sx, Sy, Sz = pseudospin_ops(b)
    e = fock_state(b, "0000")
    assert np.allclose([np.real(e.conj() @ S @ e) for S in (Sx, Sy, Sz)], [0, 0, -2])
    f, _ = hubbard_floor_ceiling(HubbardParams(t=0.02))
    assert np.allclose([np.real(f.conj() @ S @ f) for S in (Sx, Sy, Sz)], 0)
    with pytest.raises(ValueError):
        pseudospin_ops(build_basis(3))


def test_invalid_sizes():
    with pytest.raises(ValueError):
        HubbardParams(L=1)
    with pytest.raises(ValueError):
        SpinlessParams(L=2, t0=0.5)


def test_free_ring_spectrum():
    p = SpinlessParams(L=5, t=1.0, t0=1.0, g=0.0, g0=0.0, mu=0.0, nu=0.0)
    m = spinless_hamiltonian(p)
    one = np.flatnonzero(m.basis.occupations.sum(axis=1) == 1)
    got = np.linalg.eigvalsh(m.hamiltonian[np.ix_(one, one)])
    want = np.sort(-2 * np.cos(2 * np.pi * np.arange(5) / 5))
    assert np.allclose(got, want, atol=1e-12)


def test_flux_periodicity():
    base = dict(L=5, t=1.0, t0=0.8, g=1.0, g0=0.3)
    for nu in (0.0, 0.17, 0.5):
        h0 = spinless_hamiltonian(SpinlessParams(**base, nu=nu)).hamiltonian
        h1 = spinless_hamiltonian(SpinlessParams(**base, nu=nu + 1)).hamiltonian
        assert np.allclose(h0, h1)
    h = spinless_hamiltonian(SpinlessParams(**base, nu=0.0)).hamiltonian
    assert np.allclose(h.imag, 0) and is_hermitian(h)


def test_chain_has_no_closing_bond():
    m = spinless_hamiltonian(SpinlessParams(L=3, t0=0.0, g0=0.0))
    assert len(m.disent_terms) == 2
    m = spinless_hamiltonian(SpinlessParams(L=5))
    assert len(m.disent_terms) == 5
