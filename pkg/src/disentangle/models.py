"""
Lattice Hamiltonians and their disentanglement pair lists.

Two families are provided:

* the spinful Fermi-Hubbard ring, ``H = H0 + V`` with nearest-neighbour
  hopping ``t``, chemical potential ``mu`` and on-site interaction
  ``U (N_up - 1/2)(N_dn - 1/2)``;
* the spinless pairing ring/chain with bond-dependent hopping ``t_l``, flux
  phases ``phi_l`` and nearest-neighbour pairing ``g_l N_l N_{l+1}``.

Every two-particle interaction term ``N_j N_k`` contributes one entry
``(coef, N_j, N_k)`` to :attr:`ModelSpec.disent_terms`.
"""

from dataclasses import dataclass, field

import numpy as np

from .fockspace import (
    FockBasis,
    annihilation_op,
    build_basis,
    creation_op,
    number_op,
    ordered_fock_state,
    total_number_op,
)

# Coefficient of each on-site pair in the Hubbard disentanglement operator.
HUBBARD_DISENT_COEF = 1.0


@dataclass(frozen=True)
class HubbardParams:
    L: int = 2
    t: float = 1e-3
    U: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"Hubbard ring needs L >= 2, got {self.L}")


@dataclass(frozen=True)
class SpinlessParams:
    L: int = 5
    t: float = 1.0
    t0: float = 0.8
    g: float = 1.0
    g0: float = 0.0
    mu: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"spinless lattice needs L >= 2, got {self.L}")
        if self.L < 3 and (self.t0 != 0 or self.g0 != 0):
            raise ValueError("a ring (t0 or g0 nonzero) needs L >= 3")

    @property
    def is_ring(self) -> bool:
        return self.t0 != 0 or self.g0 != 0

    @property
    def phases(self) -> np.ndarray:
        """Bond phases; only the closing bond ``(L, 1)`` carries ``2 pi nu``."""
        phi = np.zeros(self.L)
        phi[-1] = 2 * np.pi * self.nu
        return phi


@dataclass(frozen=True)
class DisentTerm:
    coef: float
    a: np.ndarray
    b: np.ndarray

    @property
    def a_diag(self) -> np.ndarray:
        return np.real(np.diag(self.a))

    @property
    def b_diag(self) -> np.ndarray:
        return np.real(np.diag(self.b))


@dataclass(frozen=True)
class ModelSpec:
    hamiltonian: np.ndarray
    disent_terms: list
    basis: FockBasis
    name: str = ""
    params: object = None
    _pair_diag: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.disent_terms:
            rows = [np.stack([t.a_diag, t.b_diag]) for t in self.disent_terms]
            object.__setattr__(self, "_pair_diag", np.array(rows))
        else:
            object.__setattr__(self, "_pair_diag", np.zeros((0, 2, self.basis.dim)))

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def coefs(self) -> np.ndarray:
        return np.array([t.coef for t in self.disent_terms], dtype=float)

    @property
    def pair_diagonals(self) -> np.ndarray:
        """``(n_terms, 2, dim)`` diagonals of the paired number operators."""
        return self._pair_diag


def spinful_mode(l: int, spin: int) -> int:
    """Mode index of site ``l`` (0-based) and spin ``0=up, 1=down``."""
    return 2 * l + spin


def hubbard_hamiltonian(p: HubbardParams, disent_coef: float = HUBBARD_DISENT_COEF) -> ModelSpec:
    """Fermi-Hubbard ring on ``2L`` modes.

    The ring closure bond ``(L, 1)`` is always added, so for ``L = 2`` the
    bond between the two sites appears twice.
    """
    basis = build_basis(2 * p.L)
    a = [annihilation_op(basis, j) for j in range(basis.n_modes)]
    n = [number_op(basis, j) for j in range(basis.n_modes)]
    eye = np.eye(basis.dim)

    H = np.zeros((basis.dim, basis.dim), dtype=complex)
    for l in range(p.L):
        r = (l + 1) % p.L
        for s in (0, 1):
            i, j = spinful_mode(l, s), spinful_mode(r, s)
            hop = a[i].conj().T @ a[j]
            H -= p.t * (hop + hop.conj().T)
    terms = []
    for l in range(p.L):
        up, dn = n[spinful_mode(l, 0)], n[spinful_mode(l, 1)]
        H -= p.mu * (up + dn)
        H += p.U * (up - 0.5 * eye) @ (dn - 0.5 * eye)
        terms.append(DisentTerm(disent_coef, up, dn))
    return ModelSpec(H, terms, basis, name="hubbard", params=p)


def spinless_hamiltonian(p: SpinlessParams) -> ModelSpec:
    """Spinless pairing chain (``t0 = g0 = 0``) or ring on ``L`` modes."""
    basis = build_basis(p.L)
    a = [annihilation_op(basis, j) for j in range(p.L)]
    n = [number_op(basis, j) for j in range(p.L)]
    eye = np.eye(basis.dim)
    phi = p.phases

    H = np.zeros((basis.dim, basis.dim), dtype=complex)
    terms = []
    for l in range(p.L):
        r = (l + 1) % p.L
        closing = l == p.L - 1
        t_l = p.t0 if closing else p.t
        g_l = p.g0 if closing else p.g
        if closing and not p.is_ring:
            continue
        hop = np.exp(1j * phi[l]) * (a[l].conj().T @ a[r])
        H -= t_l * (hop + hop.conj().T)
        H += g_l * (n[l] @ n[r])
        terms.append(DisentTerm(g_l, n[l], n[r]))
    for l in range(p.L):
        H -= p.mu * (n[l] - 0.5 * eye)
    return ModelSpec(H, terms, basis, name="spinless", params=p)


def pseudospin_ops(basis: FockBasis, L: int | None = None):
    """Total Anderson pseudospin ``(Sx, Sy, Sz)`` of a spinful lattice.

    Per site ``S_+ = 2 B^dag``, ``S_- = 2 B`` and ``S_z = N_l - 1`` with the pair
    annihilator ``B = a_dn a_up``.
    """
    if basis.n_modes % 2:
        raise ValueError("pseudospin needs a spinful basis with an even mode count")
    if L is None:
        L = basis.n_modes // 2
    if 2 * L != basis.n_modes:
        raise ValueError(f"L={L} does not match {basis.n_modes} modes")
    return tuple(sum(ops) for ops in zip(*(site_pseudospin(basis, l) for l in range(L))))


def site_pseudospin(basis: FockBasis, l: int):
    up, dn = spinful_mode(l, 0), spinful_mode(l, 1)
    pair = annihilation_op(basis, dn) @ annihilation_op(basis, up)
    pair_dag = pair.conj().T
    sx = pair_dag + pair
    sy = -1j * (pair_dag - pair)
    sz = number_op(basis, up) + number_op(basis, dn) - np.eye(basis.dim)
    return sx, sy, sz


def total_number(model: ModelSpec) -> np.ndarray:
    return total_number_op(model.basis)


# -- named states of the two-site Hubbard ring -------------------------------

def hubbard_ket(basis: FockBasis, label: str) -> np.ndarray:
    """Occupation ket ``|eta_4 eta_3 eta_2 eta_1>`` with all up creators leftmost.

    This is the phase convention in which ``|X>`` and ``|Y>`` below span the
    spin-singlet, site-symmetric two-particle block.
    """
    L = basis.n_modes // 2
    order = [spinful_mode(l, 0) for l in range(L)] + [spinful_mode(l, 1) for l in range(L)]
    return ordered_fock_state(basis, label, order)


def hubbard_xy_states(basis: FockBasis):
    """``|X> = (|0011> + |1100>)/sqrt 2`` and ``|Y> = (|0110> + |1001>)/sqrt 2``."""
    x = (hubbard_ket(basis, "0011") + hubbard_ket(basis, "1100")) / np.sqrt(2)
    y = (hubbard_ket(basis, "0110") + hubbard_ket(basis, "1001")) / np.sqrt(2)
    return x, y


def hubbard_mixing_angle(p: HubbardParams) -> float:
    return 0.5 * np.arctan(-8 * p.t / p.U)


def hubbard_e0(p: HubbardParams) -> float:
    return 0.5 * np.sqrt(p.U**2 + 64 * p.t**2)


def hubbard_floor_ceiling(p: HubbardParams, basis: FockBasis | None = None):
    """``|f> = cos a |X> + sin a |Y>`` and ``|c> = sin a |X> - cos a |Y>``.

    For ``mu = 0`` these are eigenvectors of the L=2 ring with eigenvalues
    ``+E0`` and ``-E0`` respectively when ``U > 0`` (the signs swap for
    ``U < 0``).  The lower of the two is the ground state of the
    two-particle spin-singlet block.
    """
    basis = basis or build_basis(4)
    x, y = hubbard_xy_states(basis)
    alpha = hubbard_mixing_angle(p)
    f = np.cos(alpha) * x + np.sin(alpha) * y
    c = np.sin(alpha) * x - np.cos(alpha) * y
    return f, c


def hubbard_ground_state(p: HubbardParams, basis: FockBasis | None = None) -> np.ndarray:
    """Lower-energy member of ``(|f>, |c>)``."""
    f, c = hubbard_floor_ceiling(p, basis)
    return c if p.U > 0 else f


def spin_operators(basis: FockBasis):
    """Total electron spin ``(S_plus, S_z)`` of a spinful lattice (hbar = 1)."""
    if basis.n_modes % 2:
        raise ValueError("spin operators need a spinful basis")
    L = basis.n_modes // 2
    s_plus = np.zeros((basis.dim, basis.dim), dtype=complex)
    s_z = np.zeros_like(s_plus)
    for l in range(L):
        up, dn = spinful_mode(l, 0), spinful_mode(l, 1)
        s_plus += creation_op(basis, up) @ annihilation_op(basis, dn)
        s_z += 0.5 * (number_op(basis, up) - number_op(basis, dn))
    return s_plus, s_z


def singlet_sector(basis: FockBasis, n_particles: int) -> np.ndarray:
    """Orthonormal columns spanning the ``N = n_particles``, total-spin-zero states.

    Both labels are conserved by the Hubbard Hamiltonian and by the
    disentanglement terms (double occupancy is spin-rotation invariant), so
    the span is invariant under the full nonlinear dynamics.
    """
    s_plus, s_z = spin_operators(basis)
    s2 = s_plus.conj().T @ s_plus + s_z @ s_z + s_z
    idx = np.flatnonzero(basis.occupations.sum(axis=1) == n_particles)
    if idx.size == 0:
        raise ValueError(f"no states with {n_particles} particles")
    w, v = np.linalg.eigh(s2[np.ix_(idx, idx)])
    keep = v[:, np.abs(w) < 1e-9]
    out = np.zeros((basis.dim, keep.shape[1]), dtype=complex)
    out[idx] = keep
    return out
