"""
Drivers for the parameter sweeps and reference curves.

Each driver returns a small result object with a ``table()`` method giving
``(columns, rows)``; :func:`write_csv` and :func:`write_manifest` turn those
into files.  Everything here is deterministic: no random seeds are drawn, and
sweep points are evaluated in grid order.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bloch import spinless_chain_truncation
from .dynamics import (
    IntegratorConfig,
    RateParams,
    TrajectoryRecord,
    gibbs_state,
    integrate_to_steady_state,
    pure_state,
)
from .models import (
    HubbardParams,
    SpinlessParams,
    hubbard_ground_state,
    hubbard_hamiltonian,
    hubbard_ket,
    hubbard_xy_states,
    pseudospin_ops,
    singlet_sector,
    spinless_hamiltonian,
)
from .observables import ObservableSet, circulating_current, measure

MU_C_OVER_T = math.sqrt(2) - 1

# Continuation seeds each flux point from a neighbouring steady state, so a
# short settle window is enough; the longer default only guards trajectories
# that cross a slow saddle on their way in.
CPR_CONFIG = IntegratorConfig(settle_time=0.25)


# -- result containers ------------------------------------------------------------

@dataclass
class SweepResult:
    parameter: str
    grid: np.ndarray
    observables: list
    converged: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.converged = np.asarray(self.converged, dtype=bool)
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("sweep grid must be strictly increasing")
        if not (len(self.grid) == len(self.observables) == len(self.converged)):
            raise ValueError("one record per grid point is required")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(o, name) for o in self.observables])


@dataclass
class CPRCurve:
    nu: np.ndarray
    energy: np.ndarray
    current: np.ndarray
    I_c: float
    converged: np.ndarray

    @property
    def normalized(self) -> np.ndarray:
        return self.current / self.I_c

    def table(self):
        rows = zip(self.nu, self.energy, self.normalized, self.converged)
        return ["nu", "energy", "current_normalized", "converged"], [list(r) for r in rows]


@dataclass
class Landscape:
    """``U_e / t`` on a ``(ratio, k3)`` grid along ``k1 = k2 = 0``."""

    k3: np.ndarray
    ratios: np.ndarray
    values: np.ndarray
    n_minima: np.ndarray

    def table(self):
        rows = [
            [r, k, v, int(n)]
            for r, vals, n in zip(self.ratios, self.values, self.n_minima)
            for k, v in zip(self.k3, vals)
        ]
        return ["ratio", "k3", "U_e_over_t", "n_minima"], rows


@dataclass
class Spectrum:
    mu: np.ndarray
    eigenvalues: np.ndarray  # (n_mu, dim), ascending
    crossing: float

    def table(self):
        cols = ["mu_over_t"] + [f"E{j}" for j in range(self.eigenvalues.shape[1])]
        return cols, [[m, *e] for m, e in zip(self.mu, self.eigenvalues)]


# -- phase transition of the two-site ring ------------------------------------------

def perturbed_ground_state(p: HubbardParams, theta: float = 0.0, eps: float = 1e-4, basis=None) -> np.ndarray:
    """``|g> + eps (|0011> + exp(-i theta) |1100>)``, normalized, with ``|g>``
    the lower member of the floor/ceiling pair."""
    if basis is None:
        basis = hubbard_hamiltonian(p).basis
    psi = hubbard_ground_state(p, basis) + eps * (
        hubbard_ket(basis, "0011") + np.exp(-1j * theta) * hubbard_ket(basis, "1100")
    )
    return psi / np.linalg.norm(psi)


def _phase_point(p, ratio, beta, gamma_H, cfg, confine, eps):
    model = hubbard_hamiltonian(p)
    b = model.basis
    rates = RateParams(gamma_H, ratio * beta * p.U * gamma_H, beta)
    sub = np.stack(hubbard_xy_states(b), axis=1) if confine else None
    rho, rec = integrate_to_steady_state(pure_state(perturbed_ground_state(p, 0.0, eps, b)), model, rates, cfg, subspace=sub)
    return measure(rho, model, rates, pseudospin_ops(b)), rec


def phase_scan(
    p: HubbardParams = HubbardParams(),
    beta: float = 100.0,
    ratio_grid=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0),
    gamma_H: float = 1.0,
    cfg: IntegratorConfig = IntegratorConfig(),
    confine: bool = True,
    eps: float = 1e-4,
) -> SweepResult:
    """Steady states of the two-site ring versus ``gamma_D / (beta U gamma_H)``.

    Every point starts from the weakly perturbed ground state (``theta = 0``).
    With ``confine`` the evolution is restricted to the site-symmetric
    singlet pair ``span{|X>, |Y>}``, which contains that state and is exactly
    invariant; without it the spin-triplet levels, degenerate to within
    ``t^2/U`` of the ground state, are populated by roundoff and the
    steady state ends up near a thermal singlet/triplet mixture.
    """
    obs, conv = [], []
    for ratio in ratio_grid:
        o, rec = _phase_point(p, ratio, beta, gamma_H, cfg, confine, eps)
        obs.append(o)
        conv.append(rec.converged)
    meta = {"p": p, "beta": beta, "gamma_H": gamma_H, "confine": confine, "eps": eps}
    res = SweepResult("ratio", ratio_grid, obs, conv, meta)
    return res


def phase_table(res: SweepResult):
    U = res.metadata["p"].U
    rows = [
        [r, o.energy / U, o.purity, o.order_param, bool(c)]
        for r, o, c in zip(res.grid, res.observables, res.converged)
    ]
    return ["ratio", "energy_over_U", "purity", "order_param", "converged"], rows


def purity_onset(
    p: HubbardParams = HubbardParams(),
    beta: float = 100.0,
    lo: float = 3.0,
    hi: float = 5.0,
    threshold: float = 0.99,
    xtol: float = 0.01,
    cfg: IntegratorConfig = IntegratorConfig(),
    confine: bool = True,
) -> float:
    """Bisect for the ratio at which the steady purity first falls below ``threshold``.

    At finite ``beta`` the kink at the transition is rounded, so the onset is
    defined by a small but finite drop rather than by departure from 1.
    """

    def below(ratio):
        o, _ = _phase_point(p, ratio, beta, 1.0, cfg, confine, 1e-4)
        return o.purity < threshold

    if below(lo) or not below(hi):
        raise ValueError(f"purity onset is not bracketed by [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- order parameter trajectories ---------------------------------------------------

def symmetry_breaking_angles(n: int = 16) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def symmetry_breaking_trajectories(
    p: HubbardParams = HubbardParams(t=0.01),
    rates: RateParams = RateParams(1.0, 50 * 100.0, 100.0),
    theta_count: int = 16,
    eps_s: float = 1e-4,
    cfg: IntegratorConfig = IntegratorConfig(),
    confine: bool = True,
    record_every: int = 50,
) -> list:
    """One trajectory per ``theta_s = 2 pi s / theta_count``, tracking the pseudospin.

    The tracked series are ``"Sx"``, ``"Sy"``, ``"Sz"`` in each record's
    ``tracked``.  ``confine`` restricts the evolution to the two-particle
    spin-singlet sector, which holds every initial state and is invariant.
    """
    model = hubbard_hamiltonian(p)
    b = model.basis
    sx, sy, sz = pseudospin_ops(b)
    sub = singlet_sector(b, 2) if confine else None
    out = []
    for theta in symmetry_breaking_angles(theta_count):
        rho0 = pure_state(perturbed_ground_state(p, theta, eps_s, b))
        _, rec = integrate_to_steady_state(
            rho0, model, rates, cfg, track={"Sx": sx, "Sy": sy, "Sz": sz}, record_every=record_every, subspace=sub
        )
        out.append(rec)
    return out


def final_pseudospin(rec: TrajectoryRecord) -> np.ndarray:
    return np.array([rec.tracked[k][-1] for k in ("Sx", "Sy", "Sz")])


def trajectory_table(records, thetas):
    rows = []
    for s, (rec, th) in enumerate(zip(records, thetas)):
        for j, t in enumerate(rec.times):
            rows.append([s, th, t, rec.tracked["Sx"][j], rec.tracked["Sy"][j], rec.tracked["Sz"][j], rec.converged])
    return ["index", "theta", "t", "Sx", "Sy", "Sz", "converged"], rows


# -- current-phase relation -------------------------------------------------------

def cpr_grid(n: int = 201) -> np.ndarray:
    """``k / n`` for ``k < n``: one flux period without its endpoint."""
    return np.arange(n) / n


def _is_periodic(nu) -> bool:
    h = nu[1] - nu[0]
    return abs(nu[-1] + h - nu[0] - 1.0) < 1e-9


def cpr_sweep(
    p: SpinlessParams = SpinlessParams(),
    rates: RateParams = RateParams(1.0, 10.0, 100.0),
    nu_grid=None,
    cfg: IntegratorConfig = CPR_CONFIG,
) -> CPRCurve:
    """Steady-state energy and circulating current versus flux ``nu``.

    Points are visited in grid order, each seeded from the previous steady
    state; the first from the Gibbs state.  If the grid covers one period
    without its endpoint the derivative wraps around.  ``I_c`` is the
    largest ``|I|`` on the curve.
    """
    nu_grid = cpr_grid() if nu_grid is None else np.asarray(nu_grid, dtype=float)
    rho = None
    energy, conv = [], []
    for nu in nu_grid:
        model = spinless_hamiltonian(SpinlessParams(p.L, p.t, p.t0, p.g, p.g0, p.mu, float(nu)))
        if rho is None:
            rho = gibbs_state(model.hamiltonian, rates.beta)
        rho, rec = integrate_to_steady_state(rho, model, rates, cfg)
        energy.append(rec.energy[-1])
        conv.append(rec.converged)
    energy = np.array(energy)
    current = circulating_current(nu_grid, energy, periodic=_is_periodic(nu_grid))
    I_c = float(np.max(np.abs(current)))
    return CPRCurve(nu_grid, energy, current, I_c if I_c > 0 else 1.0, np.array(conv))


def beenakker_factor(phi, tau: float) -> np.ndarray:
    """Short-channel current-phase factor ``F(phi)`` for transmission ``tau``."""
    if not 0 < tau <= 1:
        raise ValueError(f"transmission must lie in (0, 1], got {tau}")
    phi = np.asarray(phi, dtype=float)
    # with s = sqrt(1 - tau): 2 (1 - s) - tau = (1 - s)^2 and 1 - s = tau / (1 + s)
    # and 1 - tau sin^2(phi/2) = (1 - tau) + tau cos^2(phi/2), which does not
    # cancel near phi = pi
    s = math.sqrt(1 - tau)
    return (1 + s) * np.sin(phi) / (2 * np.sqrt((1 - tau) + tau * np.cos(phi / 2) ** 2))


def beenakker_cpr(tau: float = 0.99, phi_grid=None) -> CPRCurve:
    """Reference curve on ``phi = 2 pi nu``.  ``F`` is already normalized to
    unit maximum, so ``I_c = 1``; there is no energy, so that column is NaN."""
    if phi_grid is None:
        phi_grid = 2 * np.pi * cpr_grid()
    phi = np.asarray(phi_grid, dtype=float)
    f = beenakker_factor(phi, tau)
    return CPRCurve(phi / (2 * np.pi), np.full(phi.shape, np.nan), f, 1.0, np.ones(phi.shape, bool))


def sign_changes(nu, current, center: float = 0.5, width: float = 0.05) -> int:
    """Number of strict sign changes of ``current`` between grid neighbours
    inside ``|nu - center| < width``."""
    nu = np.asarray(nu)
    sel = np.flatnonzero(np.abs(nu - center) < width)
    s = np.sign(np.asarray(current)[sel])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def antisymmetry_defect(nu, current, I_c: float, center: float = 0.5) -> float:
    """``max |I(c + x) + I(c - x)| / I_c`` over grid points whose mirror
    image about ``center`` is also on the grid (modulo 1 for a periodic grid)."""
    nu = np.asarray(nu, dtype=float)
    current = np.asarray(current, dtype=float)
    h = nu[1] - nu[0]
    target = 2 * center - nu
    if _is_periodic(nu):
        target = nu[0] + (target - nu[0]) % 1.0
    j = np.rint((target - nu[0]) / h).astype(int)
    ok = (j >= 0) & (j < len(nu))
    ok[ok] &= np.abs(nu[j[ok]] - target[ok]) < 1e-9
    return float(np.max(np.abs(current[ok] + current[j[ok]]))) / I_c


# -- L=3 chain: spectrum and effective free energy -------------------------------------

def chain_params(mu: float, t: float = 1.0, g: float = 1.0) -> SpinlessParams:
    return SpinlessParams(L=3, t=t, t0=0.0, g=g, g0=0.0, mu=mu)


def eigenvalues_vs_mu(mu_grid, t: float = 1.0, g: float = 1.0) -> Spectrum:
    mu_grid = np.asarray(mu_grid, dtype=float)
    ev = np.array([np.linalg.eigvalsh(spinless_hamiltonian(chain_params(m, t, g)).hamiltonian) for m in mu_grid])
    return Spectrum(mu_grid, ev, level_crossing(t, g))


def _sector_min(H, occ, n):
    idx = np.flatnonzero(occ == n)
    return np.linalg.eigvalsh(H[np.ix_(idx, idx)])[0]


def level_crossing(t: float = 1.0, g: float = 1.0, lo: float = 0.0, hi: float = 2.0) -> float:
    """``mu`` at which the one- and two-particle ground levels cross (brentq)."""

    def gap(mu):
        m = spinless_hamiltonian(chain_params(mu, t, g))
        occ = m.basis.occupations.sum(axis=1)
        H = m.hamiltonian
        return _sector_min(H, occ, 2) - _sector_min(H, occ, 1)

    return brentq(gap, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def k3_profile(m, k3) -> np.ndarray:
    k3 = np.asarray(k3, dtype=float)
    k = np.zeros(k3.shape + (3,))
    k[..., 2] = k3
    return m.free_energy(k)


def count_profile_minima(m, n: int = 4001) -> int:
    """Local minima of ``U_e`` along the ``k3`` axis (``k1 = k2 = 0``).

    ``dU_e/dk3`` runs from ``-inf`` at ``k3 = -1`` to ``+inf`` at ``+1``
    (entropy), so minima are the ``-`` to ``+`` sign changes of the slope.
    It is sampled uniformly in ``atanh(k3)``, which resolves minima that sit
    exponentially close to the poles at low temperature.
    """
    g_max = np.abs(m.gradient(np.array([[0, 0, -1.0], [0, 0, 1.0]]), entropy=False)[:, 2]).max()
    xmax = m.beta * (g_max + 1.0) + 5.0
    k3 = np.tanh(np.linspace(-xmax, xmax, n))
    k3 = k3[np.abs(k3) < 1]
    k = np.zeros((len(k3), 3))
    k[:, 2] = k3
    # the entropy slope is atanh(k3) / beta exactly on the axis
    slope = m.gradient(k, entropy=False)[:, 2] + np.arctanh(k3) / m.beta
    s = np.sign(slope)
    return int(np.count_nonzero((s[:-1] < 0) & (s[1:] > 0)))


def grid_minima(values) -> int:
    """Discrete local minima of a sampled profile, endpoints included."""
    v = np.asarray(values)
    left = np.r_[np.inf, v[:-1]]
    right = np.r_[v[1:], np.inf]
    return int(np.count_nonzero((v < left) & (v < right)))


def chain_truncation(ratio: float, mu_over_mu_c: float = 1.1, beta: float = 100.0, t: float = 1.0, g: float = 1.0, gamma_H: float = 1.0):
    rates = RateParams(gamma_H, ratio * beta * t * gamma_H, beta)
    return spinless_chain_truncation(chain_params(mu_over_mu_c * MU_C_OVER_T * t, t, g), rates)


def free_energy_landscape(
    ratio_grid=(0.1, 0.5, 1.0, 2.0, 3.0),
    k3_grid=None,
    mu_over_mu_c: float = 1.1,
    beta: float = 100.0,
    t: float = 1.0,
    g: float = 1.0,
) -> Landscape:
    """Truncated ``U_e / t`` of the L=3 chain versus ``k3`` for each
    ``gamma_D / (beta t gamma_H)``; ``n_minima`` counts discrete minima on
    the ``k3`` grid."""
    k3 = np.linspace(-1, 1, 401) if k3_grid is None else np.asarray(k3_grid, dtype=float)
    ratios = np.asarray(ratio_grid, dtype=float)
    vals = np.array([k3_profile(chain_truncation(r, mu_over_mu_c, beta, t, g), k3) / t for r in ratios])
    n_min = np.array([grid_minima(v) for v in vals])
    return Landscape(k3, ratios, vals, n_min)


def bistability_boundary(
    lo: float = 0.1, hi: float = 3.0, mu_over_mu_c: float = 1.1, beta: float = 100.0, xtol: float = 1e-4
) -> float:
    """Smallest ratio with two minima along ``k3`` (bisection on the slope-based count)."""

    def bistable(r):
        return count_profile_minima(chain_truncation(r, mu_over_mu_c, beta)) >= 2

    if bistable(lo) or not bistable(hi):
        raise ValueError(f"bistability boundary is not bracketed by [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if bistable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- output ----------------------------------------------------------------------

def format_cell(x) -> str:
    """Round-trip text for a table cell: ``repr`` for floats, ``true``/``false``
    for flags."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_cell(x) for x in row])


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = [
    "CPRCurve",
    "CPR_CONFIG",
    "Landscape",
    "MU_C_OVER_T",
    "ObservableSet",
    "Spectrum",
    "SweepResult",
    "antisymmetry_defect",
    "beenakker_cpr",
    "beenakker_factor",
    "bistability_boundary",
    "chain_params",
    "chain_truncation",
    "count_profile_minima",
    "cpr_grid",
    "cpr_sweep",
    "eigenvalues_vs_mu",
    "final_pseudospin",
    "free_energy_landscape",
    "grid_minima",
    "k3_profile",
    "level_crossing",
    "perturbed_ground_state",
    "phase_scan",
    "phase_table",
    "purity_onset",
    "sign_changes",
    "symmetry_breaking_angles",
    "symmetry_breaking_trajectories",
    "trajectory_table",
    "write_csv",
    "write_manifest",
]
