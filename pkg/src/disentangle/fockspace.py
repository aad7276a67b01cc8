"""
Fermionic Fock space in the occupation-number basis.

Mode ``j`` lives on bit ``j`` of the basis index, so basis state ``b`` has mode
``j`` occupied iff ``(b >> j) & 1``.  Annihilation operators carry the
Jordan-Wigner string ``(-1)**(number of occupied modes with index < j)``, i.e.
basis states are ``a_{j1}^dag a_{j2}^dag ... |vac>`` with ``j1 < j2 < ...``.

For spinful lattices the modes are site-major with spin up first:
``(site 1, up) -> 0, (site 1, down) -> 1, (site 2, up) -> 2, ...``.
"""

from dataclasses import dataclass, field

import numpy as np

MAX_MODES = 14


@dataclass(frozen=True)
class FockBasis:
    """Occupation basis of ``2**n_modes`` states."""

    n_modes: int
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", 1 << self.n_modes)

    @property
    def occupations(self) -> np.ndarray:
        """``(dim, n_modes)`` 0/1 table; row ``b`` holds the bits of ``b``."""
        b = np.arange(self.dim)[:, None]
        return (b >> np.arange(self.n_modes)[None, :]) & 1

    def index(self, occupied) -> int:
        """Basis index of the state with the given occupied modes."""
        idx = 0
        for j in occupied:
            self._check_mode(j)
            idx |= 1 << j
        return idx

    def label(self, b: int) -> str:
        """Bit string ``eta_M ... eta_1`` for basis state ``b`` (mode 0 rightmost)."""
        return format(b, f"0{self.n_modes}b")

    def from_label(self, label: str) -> int:
        if len(label) != self.n_modes or set(label) - {"0", "1"}:
            raise ValueError(f"bad occupation label {label!r} for {self.n_modes} modes")
        return int(label, 2)

    def _check_mode(self, j):
        if not 0 <= j < self.n_modes:
            raise IndexError(f"mode {j} out of range for {self.n_modes} modes")


def build_basis(n_modes: int) -> FockBasis:
    if not isinstance(n_modes, (int, np.integer)) or not 1 <= n_modes <= MAX_MODES:
        raise ValueError(f"n_modes must be an integer in [1, {MAX_MODES}], got {n_modes!r}")
    return FockBasis(int(n_modes))


def annihilation_op(basis: FockBasis, j: int) -> np.ndarray:
    """Dense matrix of ``a_j``; real-valued, returned as complex for uniform algebra."""
    basis._check_mode(j)
    b = np.arange(basis.dim)
    occupied = (b >> j) & 1 == 1
    src = b[occupied]
    below = src & ((1 << j) - 1)
    sign = 1 - 2 * (np.array([int(x).bit_count() for x in below]) & 1)
    op = np.zeros((basis.dim, basis.dim), dtype=complex)
    op[src ^ (1 << j), src] = sign
    return op


def creation_op(basis: FockBasis, j: int) -> np.ndarray:
    return annihilation_op(basis, j).conj().T


def number_op(basis: FockBasis, j: int) -> np.ndarray:
    basis._check_mode(j)
    diag = ((np.arange(basis.dim) >> j) & 1).astype(float)
    return np.diag(diag).astype(complex)


def total_number_op(basis: FockBasis) -> np.ndarray:
    return np.diag(basis.occupations.sum(axis=1).astype(float)).astype(complex)


def fock_state(basis: FockBasis, label: str) -> np.ndarray:
    """Normalized basis vector for an occupation label such as ``'0011'``."""
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.from_label(label)] = 1.0
    return v


def ordered_fock_state(basis: FockBasis, label: str, creation_order) -> np.ndarray:
    """State ``a_{m1}^dag a_{m2}^dag ... |vac>`` for the occupied modes of ``label``.

    ``creation_order`` lists all modes; the occupied ones are applied with the
    first listed operator leftmost.  With ``creation_order = range(n_modes)``
    this reproduces :func:`fock_state`; other orders give the same occupations
    with the phase of a different normal-ordering convention.
    """
    occ = basis.from_label(label)
    v = np.zeros(basis.dim, dtype=complex)
    v[0] = 1.0
    for m in reversed(list(creation_order)):
        if (occ >> m) & 1:
            v = creation_op(basis, m) @ v
    return v


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) < tol)
