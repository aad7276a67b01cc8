"""
Scalar and vector diagnostics of a density matrix.

Free energies are in the model's energy unit:

    U_H = <H> + <log rho> / beta
    U_e = U_H + (gamma_D / gamma_H) / beta * sum_j c_j <Q_j>^2
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import RateParams, expectation, pair_covariances
from .models import ModelSpec

__all__ = [
    "ObservableSet",
    "circulating_current",
    "covariance",
    "effective_free_energy",
    "entropy",
    "expectation",
    "helmholtz_free_energy",
    "measure",
    "order_parameter",
    "pseudospin_vector",
    "purity",
    "purity_from_spectrum",
]


def purity(rho: np.ndarray) -> float:
    """``Tr rho^2``; for Hermitian ``rho`` this is the squared Frobenius norm."""
    return float(np.real(np.vdot(rho, rho)))


def purity_from_spectrum(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    return float(np.sum(w * w))


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy ``-Tr rho log rho`` with ``0 log 0 = 0``.

    Tiny negative eigenvalues left by roundoff are dropped.
    """
    w = np.linalg.eigvalsh(rho)
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log(w))))


def covariance(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """``<AB> - <A><B>`` for two diagonal (number) operators."""
    for op in (a, b):
        if op.shape != rho.shape:
            raise ValueError(f"dimension mismatch: state {rho.shape} vs operator {op.shape}")
        if np.max(np.abs(op - np.diag(np.diagonal(op)))) > 0:
            raise ValueError("covariance expects diagonal number operators")
    p = np.real(np.diagonal(rho))
    da, db = np.real(np.diagonal(a)), np.real(np.diagonal(b))
    return float((da * db) @ p - (da @ p) * (db @ p))


def helmholtz_free_energy(rho: np.ndarray, H: np.ndarray, beta: float) -> float:
    return float(np.real(expectation(rho, H))) - entropy(rho) / beta


def effective_free_energy(rho: np.ndarray, model: ModelSpec, rates: RateParams) -> float:
    if rates.gamma_H == 0:
        raise ValueError("U_e needs gamma_H > 0 (it scales with gamma_D / gamma_H)")
    u_h = helmholtz_free_energy(rho, model.hamiltonian, rates.beta)
    if not model.disent_terms:
        return u_h
    cov = pair_covariances(rho, model)
    return u_h + (rates.gamma_D / rates.gamma_H) / rates.beta * float(model.coefs @ cov**2)


def pseudospin_vector(rho: np.ndarray, spin_ops) -> np.ndarray:
    return np.array([np.real(expectation(rho, s)) for s in spin_ops])


def order_parameter(rho: np.ndarray, spin_ops) -> float:
    """``<S_x>^2 + <S_y>^2``."""
    sx, sy, _ = pseudospin_vector(rho, spin_ops)
    return float(sx * sx + sy * sy)


@dataclass(frozen=True)
class ObservableSet:
    energy: float
    purity: float
    entropy: float
    S_vec: np.ndarray
    order_param: float
    covariances: tuple
    U_H: float
    U_e: float


def measure(rho: np.ndarray, model: ModelSpec, rates: RateParams, spin_ops=None) -> ObservableSet:
    """Evaluate every diagnostic at once.

    ``spin_ops`` is the pseudospin triple; without it (spinless models)
    ``S_vec`` is NaN and the order parameter is reported as 0.
    """
    energy = float(np.real(expectation(rho, model.hamiltonian)))
    s = entropy(rho)
    if spin_ops is None:
        svec, op = np.full(3, np.nan), 0.0
    else:
        svec = pseudospin_vector(rho, spin_ops)
        op = float(svec[0] ** 2 + svec[1] ** 2)
    cov = pair_covariances(rho, model) if model.disent_terms else np.zeros(0)
    u_h = energy - s / rates.beta
    u_e = u_h
    if rates.gamma_H > 0 and len(cov):
        u_e += (rates.gamma_D / rates.gamma_H) / rates.beta * float(model.coefs @ cov**2)
    elif rates.gamma_D > 0:
        u_e = np.nan
    return ObservableSet(energy, purity(rho), s, svec, op, tuple(float(c) for c in cov), u_h, u_e)


def circulating_current(nu, energy, periodic: bool = False) -> np.ndarray:
    """``I = -d<H>/d nu`` (with ``c / phi_0 = 1``) on a uniform grid.

    Second-order central differences; second-order one-sided stencils at the
    ends, or wrap-around when ``periodic`` (grid covering one period without
    its endpoint, e.g. ``k / n`` for ``k < n``).
    """
    nu = np.asarray(nu, dtype=float)
    e = np.asarray(energy, dtype=float)
    if nu.shape != e.shape or nu.ndim != 1:
        raise ValueError("nu and energy must be 1-D arrays of equal length")
    if nu.size < 3:
        raise ValueError("need at least 3 grid points")
    steps = np.diff(nu)
    h = steps.mean()
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("circulating_current needs a uniform, increasing nu grid")
    if periodic:
        return -(np.roll(e, -1) - np.roll(e, 1)) / (2 * h)
    return -np.gradient(e, h, edge_order=2)
