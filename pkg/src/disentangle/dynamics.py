"""
Modified master equation with thermalization and disentanglement.

    d rho / dt = i [rho, H] - Theta rho - rho Theta + 2 <Theta> rho

with ``hbar = 1`` and the state-dependent operator

    Theta = gamma_H beta (H + log(rho) / beta) + gamma_D sum_j c_j Q_j <Q_j>,
    Q_j   = A_j B_j - <A_j><B_j>,

where ``(c_j, A_j, B_j)`` run over the model's disentanglement terms.  All
``A_j``, ``B_j`` are diagonal number operators, so the disentanglement part
of ``Theta`` is diagonal in the occupation basis and is handled as a vector.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .models import ModelSpec

HERMITIAN_TOL = 1e-9
NEGATIVE_EIG_TOL = 1e-10


@dataclass(frozen=True)
class RateParams:
    gamma_H: float = 1.0
    gamma_D: float = 0.0
    beta: float = 100.0

    def __post_init__(self):
        if self.gamma_H < 0 or self.gamma_D < 0:
            raise ValueError("rates must be non-negative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_step: float = 1.0
    steady_tol: float = 1e-8
    t_max: float = 500.0
    eig_floor: float = 1e-12
    first_step: float = 1e-4
    # the rhs norm must stay below threshold this long before stopping
    settle_time: float = 2.0
    # largest |h * lambda| allowed for the stiffest decay mode (DP5 limit ~3.3)
    stability_factor: float = 2.5

    def __post_init__(self):
        fields = ("abs_tol", "rel_tol", "max_step", "steady_tol", "t_max", "eig_floor", "first_step", "stability_factor")
        if self.settle_time < 0:
            raise ValueError("settle_time must be non-negative")
        for name in fields:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def scaled(self, factor: float) -> "IntegratorConfig":
        """Copy with the error and steady-state tolerances multiplied by ``factor``."""
        return replace(
            self,
            abs_tol=self.abs_tol * factor,
            rel_tol=self.rel_tol * factor,
            steady_tol=self.steady_tol * factor,
        )


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    purity: list = field(default_factory=list)
    tracked: dict = field(default_factory=dict)
    converged: bool = False
    n_steps: int = 0
    n_rejected: int = 0
    rhs_norm: float = np.inf

    def as_arrays(self) -> dict:
        out = {"t": np.array(self.times), "energy": np.array(self.energy), "purity": np.array(self.purity)}
        out.update({k: np.array(v) for k, v in self.tracked.items()})
        return out


def check_hermitian(a: np.ndarray, what: str = "matrix", tol: float = HERMITIAN_TOL):
    dev = np.max(np.abs(a - a.conj().T), initial=0.0)
    if dev > tol:
        raise ValueError(f"{what} is not Hermitian (max |A - A^dag| = {dev:.3e})")


def hermitian_log(rho: np.ndarray, eig_floor: float = 1e-12) -> np.ndarray:
    """Matrix logarithm of a density matrix with eigenvalues floored at ``eig_floor``."""
    check_hermitian(rho, "density matrix")
    w, v = np.linalg.eigh(rho)
    return _log_from_eig(w, v, eig_floor)


def _log_from_eig(w, v, eig_floor):
    logw = np.log(np.maximum(w, eig_floor))
    out = (v * logw) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    if rho.shape != op.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape} vs operator {op.shape}")
    # Tr(A rho) without forming the product
    return np.einsum("ij,ji->", op, rho)


def pair_covariances(rho: np.ndarray, model: ModelSpec) -> np.ndarray:
    """``<A_j B_j> - <A_j><B_j>`` for every disentanglement term."""
    p = np.real(np.diag(rho))
    d = model.pair_diagonals
    mean_a = d[:, 0] @ p
    mean_b = d[:, 1] @ p
    mean_ab = (d[:, 0] * d[:, 1]) @ p
    return mean_ab - mean_a * mean_b


def disent_diagonal(rho: np.ndarray, model: ModelSpec) -> np.ndarray:
    """Diagonal of ``Q^(D) = sum_j c_j Q_j <Q_j>`` in the occupation basis."""
    d = model.pair_diagonals
    if len(d) == 0:
        return np.zeros(model.dim)
    p = np.real(np.diag(rho))
    mean_a = d[:, 0] @ p
    mean_b = d[:, 1] @ p
    cov = (d[:, 0] * d[:, 1]) @ p - mean_a * mean_b
    q_diag = d[:, 0] * d[:, 1] - (mean_a * mean_b)[:, None]
    return (model.coefs * cov) @ q_diag


def _theta(rho, w, v, model, rates, eig_floor):
    theta = rates.gamma_H * (rates.beta * model.hamiltonian + _log_from_eig(w, v, eig_floor))
    if rates.gamma_D:
        theta = theta + np.diag(rates.gamma_D * disent_diagonal(rho, model))
    return theta


def theta_operator(rho, model: ModelSpec, rates: RateParams, cfg: IntegratorConfig = IntegratorConfig()):
    check_hermitian(rho, "density matrix")
    w, v = np.linalg.eigh(rho)
    return _theta(rho, w, v, model, rates, cfg.eig_floor)


def _rhs(rho, model, rates, eig_floor):
    w, v = np.linalg.eigh(rho)
    theta = _theta(rho, w, v, model, rates, eig_floor)
    H = model.hamiltonian
    th_rho = theta @ rho
    mean_theta = np.real(np.trace(th_rho))
    comm = rho @ H - H @ rho
    out = 1j * comm - th_rho - th_rho.conj().T + 2 * mean_theta * rho
    return 0.5 * (out + out.conj().T)


def mme_rhs(rho, model: ModelSpec, rates: RateParams, cfg: IntegratorConfig = IntegratorConfig()):
    """Time derivative of ``rho`` under the modified master equation."""
    check_hermitian(rho, "density matrix")
    return _rhs(rho, model, rates, cfg.eig_floor)


def sanitize(rho: np.ndarray) -> np.ndarray:
    """Re-Hermitize, renormalize, and clip eigenvalues below ``-1e-10``."""
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.real(np.trace(rho))
    w, v = np.linalg.eigh(rho)
    if w[0] < -NEGATIVE_EIG_TOL:
        w = np.where(w < -NEGATIVE_EIG_TOL, 0.0, w)
        rho = (v * w) @ v.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.real(np.trace(rho))
    return rho


def stiffness_bound(model: ModelSpec, rates: RateParams, eig_floor: float = 1e-12) -> float:
    """State-independent upper estimate of the fastest linear decay rate.

    Populations relax at ``2 (Theta_ii - <Theta>)``; the spread of ``Theta`` is
    bounded by the thermal part ``gamma_H (beta * spread(H) + |log floor|)``
    plus the disentanglement part, whose diagonal never exceeds
    ``gamma_D * sum_j |c_j|`` in magnitude.
    """
    w = np.linalg.eigvalsh(model.hamiltonian)
    thermal = rates.gamma_H * (rates.beta * (w[-1] - w[0]) + abs(np.log(eig_floor)))
    disent = rates.gamma_D * np.sum(np.abs(model.coefs))
    return 2.0 * (thermal + disent)


# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class _Flow:
    """Right-hand side on an (optionally) reduced space ``rho = V r V^dag``.

    For a subspace left invariant by the dynamics, evolving ``r`` with
    ``V^dag H V`` and ``V^dag Theta V`` is the same as projecting every
    derivative onto it; the reduced matrices are just smaller.
    """

    def __init__(self, model, rates, eig_floor, subspace=None):
        self.rates, self.floor = rates, eig_floor
        if subspace is None:
            self.V = None
            self.H = model.hamiltonian
        else:
            V = np.asarray(subspace, dtype=complex).reshape(model.dim, -1)
            if np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1]))) > 1e-10:
                raise ValueError("subspace columns must be orthonormal")
            self.V, self.Vh = V, V.conj().T
            self.H = self.Vh @ model.hamiltonian @ V
        w = np.linalg.eigvalsh(self.H)
        self.h_spread = w[-1] - w[0]
        self.thermal = rates.gamma_H * rates.beta * self.H
        d = model.pair_diagonals
        self.da, self.db = d[:, 0], d[:, 1]
        self.q_ab = self.da * self.db
        self.coefs = model.coefs
        self.abs_c = np.abs(self.coefs)
        self.disent = bool(rates.gamma_D) and len(self.coefs) > 0

    def reduce(self, rho):
        return rho if self.V is None else self.Vh @ rho @ self.V

    def embed(self, r):
        return r if self.V is None else self.V @ r @ self.Vh

    def __call__(self, r, stiffness=False):
        rates = self.rates
        w, v = np.linalg.eigh(r)
        logw = np.log(np.maximum(w, self.floor))
        theta = self.thermal + rates.gamma_H * ((v * logw) @ v.conj().T)
        lam = 0.0
        if self.disent:
            if self.V is None:
                p = np.real(np.diagonal(r))
            else:
                p = np.real(((self.V @ r) * self.V.conj()).sum(axis=1))
            q = self.q_ab - ((self.da @ p) * (self.db @ p))[:, None]
            cov = q @ p
            dq = rates.gamma_D * ((self.coefs * cov) @ q)
            if self.V is None:
                theta = theta + np.diag(dq)
            else:
                theta = theta + (self.Vh * dq) @ self.V
            if stiffness:
                # spread of the diagonal plus a trace bound on the feedback
                # through <Q_j>
                lam = (dq.max() - dq.min()) + rates.gamma_D * self.abs_c @ ((q * q) @ p)
        th_r = theta @ r
        mean = np.real(np.trace(th_r))
        # the Hermitian part of i[r,H] - 2 Theta r + 2<Theta> r is the full rhs
        out = 1j * (r @ self.H - self.H @ r) - 2 * th_r + 2 * mean * r
        out = 0.5 * (out + out.conj().T)
        if not stiffness:
            return out
        wmax = max(w[-1], self.floor)
        log_spread = np.log(wmax) - np.log(max(w[0], self.floor))
        lam += rates.gamma_H * (rates.beta * self.h_spread + log_spread + 1.0)
        return out, 2.0 * lam, w[0]


def integrate_to_steady_state(
    rho0,
    model: ModelSpec,
    rates: RateParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    track: dict | None = None,
    record_every: int = 1,
    subspace: np.ndarray | None = None,
):
    """Integrate from ``rho0`` until ``||d rho/dt||_F < steady_tol * gamma_H``.

    The threshold has to hold for ``cfg.settle_time`` before the run stops, so
    a trajectory passing slowly through a saddle is not mistaken for a steady
    state.  Running out of time is not an error; the record's ``converged``
    flag is then ``False`` and ``rho`` is the last state.

    ``track`` maps names to operators whose expectation values are sampled
    along with the energy and purity.

    ``subspace`` (orthonormal columns) restricts the evolution to an
    invariant subspace containing the support of ``rho0``, e.g. a fixed
    particle-number sector.  Integration then runs on the reduced matrices.
    In exact arithmetic nothing changes; in floating point, roundoff can no
    longer seed instabilities transverse to the subspace.

    The step is capped by ``cfg.stability_factor`` over a running estimate of
    the fastest decay rate, which keeps the explicit scheme inside its
    stability region so stiff modes cannot hover at the tolerance level.
    """
    check_hermitian(rho0, "initial state")
    flow = _Flow(model, rates, cfg.eig_floor, subspace)
    rho0 = np.array(rho0, dtype=complex)
    r = sanitize(flow.reduce(rho0))
    if flow.V is not None:
        lost = 1 - np.real(np.trace(flow.reduce(rho0)) / np.trace(rho0))
        if lost > 1e-9:
            raise ValueError(f"initial state has weight {lost:.3e} outside the subspace")
    track = {k: flow.reduce(np.asarray(op)) for k, op in (track or {}).items()}
    rec = TrajectoryRecord(tracked={k: [] for k in track})
    scale = rates.gamma_H if rates.gamma_H > 0 else 1.0
    target = cfg.steady_tol * scale
    H = flow.H

    def sample(t, x):
        rec.times.append(t)
        rec.energy.append(float(np.real(expectation(x, H))))
        rec.purity.append(float(np.real(np.vdot(x, x))))
        for k, op in track.items():
            rec.tracked[k].append(complex(expectation(x, op)).real)

    t = 0.0
    k1, lam, _ = flow(r, stiffness=True)
    h = min(cfg.first_step, cfg.max_step, cfg.stability_factor / lam)
    sample(t, r)
    rec.rhs_norm = float(np.linalg.norm(k1))
    settled_since = 0.0 if rec.rhs_norm < target else None
    a2, a3, a4, a5, a6 = _A[1:]
    b = _B5
    e = _E
    while True:
        if settled_since is not None and t - settled_since >= cfg.settle_time:
            rec.converged = True
            break
        if t >= cfg.t_max:
            break
        h = min(h, cfg.max_step, cfg.stability_factor / lam, cfg.t_max - t)
        k2 = flow(r + h * (a2[0] * k1))
        k3 = flow(r + h * (a3[0] * k1 + a3[1] * k2))
        k4 = flow(r + h * (a4[0] * k1 + a4[1] * k2 + a4[2] * k3))
        k5 = flow(r + h * (a5[0] * k1 + a5[1] * k2 + a5[2] * k3 + a5[3] * k4))
        k6 = flow(r + h * (a6[0] * k1 + a6[1] * k2 + a6[2] * k3 + a6[3] * k4 + a6[4] * k5))
        new = r + h * (b[0] * k1 + b[2] * k3 + b[3] * k4 + b[4] * k5 + b[5] * k6)
        k7, lam7, wmin = flow(new, stiffness=True)
        err = h * (e[0] * k1 + e[2] * k3 + e[3] * k4 + e[4] * k5 + e[5] * k6 + e[6] * k7)
        scale_y = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(r), np.abs(new))
        err_norm = float(np.sqrt(np.mean(np.abs(err / scale_y) ** 2)))
        if err_norm <= 1.0:
            t += h
            if wmin < -NEGATIVE_EIG_TOL:
                r = sanitize(new)
                k1, lam, _ = flow(r, stiffness=True)
            else:
                # re-Hermitize and renormalize; the shift is at roundoff level,
                # so the last stage is reused (FSAL)
                r = 0.5 * (new + new.conj().T)
                r = r / np.real(np.trace(r))
                k1, lam = k7, lam7
            rec.n_steps += 1
            rec.rhs_norm = float(np.linalg.norm(k1))
            if rec.rhs_norm < target:
                if settled_since is None:
                    settled_since = t
            else:
                settled_since = None
            if rec.n_steps % record_every == 0:
                sample(t, r)
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
        else:
            rec.n_rejected += 1
            factor = max(0.2, 0.9 * err_norm ** -0.2)
        h = h * factor
    if rec.times[-1] != t:
        sample(t, r)
    return flow.embed(r), rec


def gibbs_state(H: np.ndarray, beta: float) -> np.ndarray:
    """``exp(-beta H) / Z`` via an exact eigendecomposition."""
    w, v = np.linalg.eigh(H)
    p = np.exp(-beta * (w - w.min()))
    p /= p.sum()
    return (v * p) @ v.conj().T


def pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or given rank) density matrix ``G G^dag / Tr``."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))
