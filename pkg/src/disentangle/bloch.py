"""
Two-level truncation ``rho = (1 + sigma . k) / 2`` on ``span{|up>, |down>}``.

In this basis ``H = sigma . omega`` (plus a constant) and each disentanglement
pair term reduces to ``Q = q0 + q . sigma``.  ``weight`` counts how many
identical copies of ``Q <Q>`` the disentanglement operator holds (the two
sites of the L=2 Hubbard ring give ``weight = 2``).  Then

    Theta = s0 + sigma . s,
    s     = gamma_H (beta omega + atanh|k| k/|k|) + weight gamma_D <Q> q,
    dk/dt = -2 (k x omega + s - (s . k) k).

The ``atanh`` piece is the vector part of ``gamma_H log rho``.  It vanishes on
the sphere ``|k| = 1`` (pure states stay pure) and is what makes
``k = -tanh(beta omega) z`` a fixed point when ``gamma_D = 0``.  The
eigenvalues of ``rho`` are floored at ``eig_floor`` inside the logarithm,
as in the full integrator.

``s`` is the gradient of

    G(k) = gamma_H beta (omega . k) + gamma_H <log rho> + (weight gamma_D / 2) <Q>^2,

whereas the effective free energy carries the full ``<Q>^2``:

    U_e(k) = omega . k + <log rho> / beta + (gamma_D / gamma_H) weight <Q>^2 / beta.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.ndimage import minimum_filter
from scipy.optimize import least_squares
from scipy.special import xlogy

from .dynamics import RateParams
from .models import HubbardParams, ModelSpec, SpinlessParams, spinless_hamiltonian

NORM_TOL = 1e-9
FLAT_TOL = 1e-8
# atanh|k| beyond which a root of the chart is treated as lying on
# the sphere: 1 - tanh(11) ~ 6e-10
EDGE_RADIUS = 11.0


def _as_k(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.shape[-1] != 3:
        raise ValueError(f"Bloch vectors have 3 components, got shape {k.shape}")
    return k


@dataclass(frozen=True)
class BlochState:
    k: np.ndarray

    def __post_init__(self):
        k = _as_k(self.k).copy()
        if k.ndim != 1:
            raise ValueError("BlochState holds a single vector")
        if np.linalg.norm(k) > 1 + NORM_TOL:
            raise ValueError(f"|k| = {np.linalg.norm(k):.12g} exceeds 1")
        object.__setattr__(self, "k", k)

    @property
    def purity(self) -> float:
        return 0.5 * (1 + float(self.k @ self.k))

    def density_matrix(self) -> np.ndarray:
        kx, ky, kz = self.k
        return 0.5 * np.array([[1 + kz, kx - 1j * ky], [kx + 1j * ky, 1 - kz]])


def log_rho_expect(kmag):
    """``<log rho>`` of a two-level state with Bloch radius ``kmag``."""
    kmag = np.asarray(kmag, dtype=float)
    a, b = 0.5 * (1 - kmag), 0.5 * (1 + kmag)
    return xlogy(a, a) + xlogy(b, b)


def _atanh_floored(kmag, floor):
    lo = np.maximum(0.5 * (1 - kmag), floor)
    hi = np.maximum(0.5 * (1 + kmag), floor)
    return 0.5 * (np.log(hi) - np.log(lo))


@dataclass(frozen=True)
class BlochModel:
    omega: np.ndarray
    q0: float
    q: np.ndarray
    gamma_H: float = 1.0
    gamma_D: float = 0.0
    beta: float = 100.0
    weight: float = 1.0
    eig_floor: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "omega", _as_k(self.omega).copy())
        object.__setattr__(self, "q", _as_k(self.q).copy())
        vals = np.concatenate([self.omega, self.q, [self.q0, self.gamma_H, self.gamma_D, self.beta, self.weight]])
        if not np.all(np.isfinite(vals)):
            raise ValueError("BlochModel entries must be finite")
        RateParams(self.gamma_H, self.gamma_D, self.beta)

    def rhs(self, k):
        return bloch_rhs(k, self)

    def free_energy(self, k):
        return bloch_free_energy(k, self)

    def gradient(self, k, entropy: bool = True):
        """``d U_e / d k`` (vectorized over leading axes)."""
        k = _as_k(k)
        qk = self.q0 + k @ self.q
        g = self.omega + _ratio(self) * self.weight * 2 * qk[..., None] * self.q
        return g + _entropy_gradient(k, self.beta) if entropy else g


def _entropy_gradient(k, beta):
    r = np.linalg.norm(k, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0, np.arctanh(np.minimum(r, 1.0)) / r, 1.0) * k / beta


def _ratio(m):
    if m.gamma_H == 0:
        raise ValueError("U_e needs gamma_H > 0 (it scales with gamma_D / gamma_H)")
    return m.gamma_D / m.gamma_H / m.beta


def bloch_rhs(k, m: BlochModel) -> np.ndarray:
    k = _as_k(k)
    r = float(np.linalg.norm(k))
    qk = m.q0 + float(k @ m.q)
    s = m.gamma_H * m.beta * m.omega + m.weight * m.gamma_D * qk * m.q
    out = np.cross(k, m.omega) + s - (s @ k) * k
    if m.gamma_H and r > 0:
        # atanh part of s: along k, so only (1 - |k|^2) of it survives
        out = out + m.gamma_H * _atanh_floored(r, m.eig_floor) * (1 - r * r) / r * k
    out = -2.0 * out
    if r >= 1:
        # the sphere is invariant but can repel; the continuation of the
        # field past it would carry roundoff overshoot off to infinity
        out = out - max(0.0, float(out @ k) / r) * k / r
    return out


def bloch_free_energy(k, m: BlochModel):
    """``U_e(k)`` in energy units; vectorized over leading axes."""
    k = _as_k(k)
    r = np.linalg.norm(k, axis=-1)
    if np.any(r > 1 + NORM_TOL):
        raise ValueError("free energy is defined on the unit ball only")
    r = np.minimum(r, 1.0)
    qk = m.q0 + k @ m.q
    return k @ m.omega + log_rho_expect(r) / m.beta + _ratio(m) * m.weight * qk**2


def hubbard_truncation_params(p: HubbardParams, rates: RateParams, weight: float = 1.0) -> BlochModel:
    """Truncation of the L=2 ring onto ``up = |f>`` (``+E0``) and ``down = |c>``.

    ``omega = E0 z``, ``q0 = 0``, ``q = (-t/E0, 0, U/(8 E0))``.  With
    ``weight=1`` this is the single-``Q`` model; ``weight=2`` reproduces the
    full ring, whose two sites contribute identical projected terms.
    """
    if p.mu != 0:
        warnings.warn("the Hubbard truncation is derived for mu = 0", stacklevel=2)
    e0 = 0.5 * np.sqrt(p.U**2 + 64 * p.t**2)
    return BlochModel(
        omega=np.array([0.0, 0.0, e0]),
        q0=0.0,
        q=np.array([-p.t / e0, 0.0, p.U / (8 * e0)]),
        gamma_H=rates.gamma_H,
        gamma_D=rates.gamma_D,
        beta=rates.beta,
        weight=weight,
    )


def bloch_vector(rho: np.ndarray, up: np.ndarray, down: np.ndarray) -> np.ndarray:
    """``k_i = Tr(rho sigma_i)`` with ``sigma_z |up> = |up>``."""
    B = np.stack([up, down], axis=1)
    r = B.conj().T @ rho @ B
    return np.array([2 * r[1, 0].real, 2 * r[1, 0].imag, (r[0, 0] - r[1, 1]).real])


@dataclass
class BlochRun:
    k: np.ndarray
    converged: bool
    t: float
    rhs_norm: float

    @property
    def purity(self) -> float:
        return 0.5 * (1 + float(self.k @ self.k))


def bloch_steady_state(m: BlochModel, k0, tol: float = 1e-10, t_max: float = 500.0, chunk: float = 5.0) -> BlochRun:
    """Integrate the Bloch equation (implicit Radau) until ``|dk/dt| < tol * gamma_H``."""
    k = _as_k(k0).astype(float).copy()
    scale = m.gamma_H if m.gamma_H > 0 else 1.0
    t = 0.0
    norm = float(np.linalg.norm(bloch_rhs(k, m)))
    while norm >= tol * scale and t < t_max:
        sol = solve_ivp(lambda _, y: bloch_rhs(y, m), (t, t + chunk), k, method="Radau", rtol=1e-11, atol=1e-13)
        if not sol.success:
            break
        k = sol.y[:, -1]
        t = float(sol.t[-1])
        norm = float(np.linalg.norm(bloch_rhs(k, m)))
    return BlochRun(k, norm < tol * scale, t, norm)


# -- truncation of an arbitrary model onto two states ---------------------------

@dataclass(frozen=True)
class SubspaceModel:
    """Truncation of a full model onto ``span{up, down}`` evaluated exactly.

    ``U_e(k)`` is computed from the embedded state ``B rho(k) B^dag``.  The
    diagonal of that state is affine in ``k``, so every ``<Q_j>`` is a
    quadratic polynomial in ``k``; no linear form ``q0 + q . k`` is assumed.
    """

    model: ModelSpec
    up: np.ndarray
    down: np.ndarray
    gamma_H: float = 1.0
    gamma_D: float = 0.0
    beta: float = 100.0
    _p: np.ndarray = field(init=False, repr=False, compare=False)
    _e: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        RateParams(self.gamma_H, self.gamma_D, self.beta)
        B = np.stack([self.up, self.down], axis=1).astype(complex)
        if np.max(np.abs(B.conj().T @ B - np.eye(2))) > 1e-10:
            raise ValueError("up and down must be orthonormal")
        paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
        # occupation-basis populations p(k) = P[0] + sum_i k_i P[i]
        P = np.array([0.5 * np.real(np.einsum("ia,ab,ib->i", B, s, B.conj())) for s in paulis])
        Hs = B.conj().T @ self.model.hamiltonian @ B
        E = np.array([0.5 * np.real(np.trace(Hs @ s)) for s in paulis])
        object.__setattr__(self, "_p", P)
        object.__setattr__(self, "_e", E)

    def populations(self, k):
        k = _as_k(k)
        return self._p[0] + k @ self._p[1:]

    def pair_covariances(self, k):
        """``<Q_j>`` for every pair term, shape ``(..., n_terms)``."""
        d = self.model.pair_diagonals
        p = self.populations(k)
        return p @ (d[:, 0] * d[:, 1]).T - (p @ d[:, 0].T) * (p @ d[:, 1].T)

    def energy(self, k):
        return self._e[0] + _as_k(k) @ self._e[1:]

    def free_energy(self, k, entropy: bool = True):
        k = _as_k(k)
        r = np.linalg.norm(k, axis=-1)
        if np.any(r > 1 + NORM_TOL):
            raise ValueError("free energy is defined on the unit ball only")
        out = self.energy(k) + _ratio(self) * (self.pair_covariances(k) ** 2) @ self.model.coefs
        if entropy:
            out = out + log_rho_expect(np.minimum(r, 1.0)) / self.beta
        return out

    def gradient(self, k, entropy: bool = True):
        k = _as_k(k)
        d = self.model.pair_diagonals
        p = self.populations(k)
        dp = self._p[1:]  # (3, dim)
        ma, mb = p @ d[:, 0].T, p @ d[:, 1].T
        cov = p @ (d[:, 0] * d[:, 1]).T - ma * mb
        dcov = dp @ (d[:, 0] * d[:, 1]).T - (dp @ d[:, 0].T) * mb[..., None, :] - ma[..., None, :] * (dp @ d[:, 1].T)
        g = self._e[1:] + _ratio(self) * 2 * np.einsum("...ij,...j->...i", dcov, cov * self.model.coefs)
        return g + _entropy_gradient(k, self.beta) if entropy else g


def sector_ground_state(model: ModelSpec, n_particles: int) -> tuple:
    """Lowest eigenpair within a particle-number sector, phase fixed so the
    largest-magnitude amplitude is real and positive."""
    occ = model.basis.occupations.sum(axis=1)
    idx = np.flatnonzero(occ == n_particles)
    w, v = np.linalg.eigh(model.hamiltonian[np.ix_(idx, idx)])
    vec = np.zeros(model.dim, dtype=complex)
    vec[idx] = v[:, 0]
    j = np.argmax(np.abs(vec))
    vec *= np.abs(vec[j]) / vec[j]
    return float(w[0]), vec


def spinless_chain_truncation(p: SpinlessParams, rates: RateParams) -> SubspaceModel:
    """Two-level model of the L=3 chain: ``up`` is the one-particle ground
    state, ``down`` the two-particle ground state."""
    model = spinless_hamiltonian(p)
    _, psi1 = sector_ground_state(model, 1)
    _, psi2 = sector_ground_state(model, 2)
    return SubspaceModel(model, psi1, psi2, rates.gamma_H, rates.gamma_D, rates.beta)


# -- extrema of U_e over the unit ball -------------------------------------------

@dataclass(frozen=True)
class Extremum:
    k: np.ndarray
    value: float
    kind: str  # "minimum", "maximum", "saddle" or "degenerate"
    on_boundary: bool = False
    hessian_eigs: tuple = ()


def _point(m, v):
    """``k = tanh(beta |v|) v/|v|``; keeps every iterate in the ball."""
    r = np.linalg.norm(v)
    if r == 0:
        return m.beta * v
    return np.tanh(m.beta * r) * v / r


def _residual(m, v):
    """``grad_k U_e`` at ``k(v)``.

    In this chart the entropy part is exactly ``v`` (``atanh|k| / beta``
    along ``k``), so it stays finite where ``tanh`` rounds to 1 and the
    Jacobian keeps an identity term even where ``U_e`` is otherwise flat.
    """
    return m.gradient(_point(m, v), entropy=False) + v


def _hessian_k(m, k):
    h = min(1e-6, 0.1 * (1 - np.linalg.norm(k)))
    H = np.empty((3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        H[:, i] = (m.gradient(k + e) - m.gradient(k - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _tangent_hessian(m, k, h=1e-5):
    """Hessian of ``U_e`` along the sphere of radius ``|k|`` through ``k``."""
    r = np.linalg.norm(k)
    kh = k / r
    a = np.cross(kh, [1.0, 0, 0] if abs(kh[0]) < 0.9 else [0, 1.0, 0])
    a /= np.linalg.norm(a)
    b = np.cross(kh, a)

    def f(x, y):
        v = kh + x * a + y * b
        return float(m.free_energy(r * v / np.linalg.norm(v)))

    f0 = f(0, 0)
    fxx = (f(h, 0) - 2 * f0 + f(-h, 0)) / h**2
    fyy = (f(0, h) - 2 * f0 + f(0, -h)) / h**2
    fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h)
    return np.array([[fxx, fxy], [fxy, fyy]])


def _kind(eigs, tol):
    if np.any(np.abs(eigs) < tol):
        return "degenerate"
    if np.all(eigs > 0):
        return "minimum"
    if np.all(eigs < 0):
        return "maximum"
    return "saddle"


def find_extrema(m, resolution: int = 32, flat_tol: float = FLAT_TOL, dedup_tol: float = 1e-5) -> list:
    """Locate and classify the stationary points of ``m.free_energy`` on the ball.

    ``m`` is a :class:`BlochModel` or :class:`SubspaceModel` (anything with
    vectorized ``free_energy`` and ``gradient``).  Candidates are grid
    cells where ``|grad U_e|`` is locally smallest; each is refined by a
    root solve of the gradient in the chart ``k = tanh(beta |v|) v/|v|``, which
    keeps iterates inside the ball, and classified by the eigenvalues of
    the Hessian in ``k``.  Roots that run off to the sphere (``beta |v| > 11``,
    i.e. ``1 - |k| < 1e-9``) are reported with ``on_boundary=True``: the
    Hessian is then taken along the sphere; radially ``U_e`` is always
    convex there.
    """
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    x = np.linspace(-1, 1, resolution)
    K = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    inside = np.linalg.norm(K, axis=-1) < 1 - 0.5 / resolution
    g2 = np.full(inside.shape, np.inf)
    g2[inside] = np.sum(m.gradient(K[inside]) ** 2, axis=-1)
    cand = inside & (g2 == minimum_filter(g2, size=3, mode="constant", cval=np.inf))

    found = []
    for k0 in K[cand]:
        r0 = np.linalg.norm(k0)
        v0 = k0 * np.arctanh(r0) / (m.beta * r0) if r0 > 0 else k0
        sol = least_squares(lambda v: _residual(m, v), v0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000, method="lm")
        scale = max(1.0 / m.beta, float(np.abs(m.gradient(k0, entropy=False)).max()))
        if np.linalg.norm(_residual(m, sol.x)) > 1e-8 * scale:
            continue
        edge = m.beta * np.linalg.norm(sol.x) > EDGE_RADIUS
        k = _point(m, sol.x)
        if any(np.linalg.norm(k - e.k) < dedup_tol for e in found):
            continue
        if edge:
            # U_e is convex along the radius (atanh' > 0), so that direction
            # always rises
            eigs = np.append(np.linalg.eigvalsh(_tangent_hessian(m, k)), np.inf)
        else:
            eigs = np.linalg.eigvalsh(_hessian_k(m, k))
        found.append(Extremum(k, float(m.free_energy(k)), _kind(eigs, flat_tol), bool(edge), tuple(eigs)))
    found.sort(key=lambda e: e.value)
    return found
