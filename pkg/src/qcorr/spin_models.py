"""Transverse-field XY chain and the two-qubit XY thermal state.

Chain Hamiltonian (periodic, L even, h = 1 so lambda = J):

    H = (J/2) sum_i [(1+g) X_i X_{i+1} + (1-g) Y_i Y_{i+1}] + h sum_i Z_i

Rotating every spin by pi about x (Z -> -Z, Y -> -Y) and every other spin
by pi about z (X, Y -> -X, -Y) maps H onto the ferromagnetic form
-(J/2) sum [...] - h sum Z, whose free-fermion solution is standard. Under
that map m_z and the nearest-neighbour c_xx, c_yy change sign while c_zz
does not.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import minimize_scalar

from .closed_forms import x_state_cqd, x_state_cqwd
from .errors import DegenerateFit, GridTooCoarse
from .states import BipartiteDensityMatrix, XStateParams, make_x_state, x_params_from_correlators


@dataclass(frozen=True)
class XYChainParams:
    L: int
    g: float
    lam: float

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise ValueError(f"L must be even and >= 2, got {self.L}")
        if not -1.0 <= self.g <= 1.0:
            raise ValueError(f"g must lie in [-1, 1], got {self.g}")
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


def _majorana_g(L: int, g: float, lam: float, r: int) -> float:
    """<B_i A_{i+r}> in the even-parity (antiperiodic) sector, ferro form."""
    k = np.pi * (2 * np.arange(L) + 1) / L
    om = np.hypot(g * lam * np.sin(k), 1 + lam * np.cos(k))
    return float(np.mean((np.cos(k * r) * (1 + lam * np.cos(k)) - g * lam * np.sin(k) * np.sin(k * r)) / om))


def xy_ground_correlators(p: XYChainParams) -> tuple[float, float, float, float]:
    """(m_z, c_xx, c_yy, c_zz) for nearest neighbours of the finite chain."""
    g0 = _majorana_g(p.L, p.g, p.lam, 0)
    gp = _majorana_g(p.L, p.g, p.lam, 1)
    gm = _majorana_g(p.L, p.g, p.lam, -1)
    # ferromagnetic form: <Z> = G0, <XX> = G(-1), <YY> = G(1), <ZZ> = G0^2 - G1 G-1
    mz_f, cxx_f, cyy_f = g0, gm, gp
    czz = g0 * g0 - gp * gm
    return -mz_f, -cxx_f, -cyy_f, czz


def xy_x_params(p: XYChainParams) -> XStateParams:
    mz, cxx, cyy, czz = xy_ground_correlators(p)
    return x_params_from_correlators(mz, mz, cxx, cyy, czz)


def xy_two_site_rdm(p: XYChainParams) -> BipartiteDensityMatrix:
    """Nearest-neighbour reduced state; an X state by symmetry."""
    return make_x_state(xy_x_params(p))


# -- exact diagonalisation (validation oracle) --------------------------------------

def _site_op(op: np.ndarray, i: int, L: int) -> sparse.csr_matrix:
    return sparse.kron(sparse.kron(sparse.identity(2**i), op), sparse.identity(2 ** (L - i - 1)), format="csr")


def xy_chain_hamiltonian(L: int, g: float, lam: float, h: float = 1.0) -> np.ndarray:
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    J = lam * h
    H = sparse.csr_matrix((2**L, 2**L), dtype=complex)
    for i in range(L):
        j = (i + 1) % L
        H = H + J / 2 * (1 + g) * (_site_op(X, i, L) @ _site_op(X, j, L))
        H = H + J / 2 * (1 - g) * (_site_op(Y, i, L) @ _site_op(Y, j, L))
        H = H + h * _site_op(Z, i, L)
    return H.toarray()


def xy_ground_state_ed(L: int, g: float, lam: float, even_sector: bool = True) -> np.ndarray:
    """Ground-state vector by dense diagonalisation.

    With ``even_sector`` the search is restricted to states with an even
    number of up spins (the sector containing the fully polarised state).
    """
    H = xy_chain_hamiltonian(L, g, lam)
    if not even_sector:
        w, v = np.linalg.eigh(H)
        return v[:, 0]
    ups = np.array([bin(s).count("1") for s in range(2**L)])
    # basis index bit = 0 means spin up (|0>)
    idx = np.flatnonzero((L - ups) % 2 == 0)
    w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
    psi = np.zeros(2**L, dtype=complex)
    psi[idx] = v[:, 0]
    return psi


def rdm_from_vector(psi: np.ndarray, L: int, sites=(0, 1)) -> np.ndarray:
    t = psi.reshape([2] * L)
    rest = [i for i in range(L) if i not in sites]
    t = np.transpose(t, list(sites) + rest).reshape(4, -1)
    return t @ t.conj().T


# -- phase-transition scan ---------------------------------------------------------

OBSERVABLES: dict[str, Callable[[XStateParams], float]] = {
    "CQD": x_state_cqd,
    "CQWD": x_state_cqwd,
}


def _observable(measure: str) -> Callable[[XStateParams], float]:
    key = measure.upper()
    if key in ("QD", "QWD"):
        key = "C" + key
    return OBSERVABLES[key]


def chain_observable(g: float, L: int, lam: float, measure: str) -> float:
    return _observable(measure)(xy_x_params(XYChainParams(L, g, lam)))


def default_derivative_step(L: int) -> float:
    # peak width shrinks like 1/L; keep the stencil well inside it
    return min(1e-3, 1e-2 / L)


def qpt_scan(
    g: float,
    L: int,
    lambda_grid: Sequence[float],
    measure: str = "CQWD",
    step: float | None = None,
    refine: bool = True,
) -> tuple[float, list[tuple[float, float, float]]]:
    """Locate the maximum of dQ/dlambda for an L-site chain.

    dQ/dlambda comes from central differences. The discrete maximum over
    ``lambda_grid`` is refined by quadratic interpolation through its two
    neighbours, then (``refine``) by a bounded scalar search inside that
    bracket. Returns (lambda_c^L, [(lambda, Q, dQ/dlambda), ...]).
    """
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.size < 5 or np.any(np.diff(lam) <= 0):
        raise ValueError("lambda_grid must be sorted with at least 5 points")
    h = default_derivative_step(L) if step is None else step
    q = _observable(measure)

    def Q(x):
        return q(xy_x_params(XYChainParams(L, g, x)))

    def dQ(x):
        return (Q(x + h) - Q(x - h)) / (2 * h)

    vals = np.array([Q(x) for x in lam])
    der = np.array([dQ(x) for x in lam])
    i = int(np.argmax(der))
    if i == 0 or i == lam.size - 1:
        raise GridTooCoarse(f"dQ/dlambda maximal at grid boundary lambda={lam[i]}")
    x0, x1, x2 = lam[i - 1 : i + 2]
    y0, y1, y2 = der[i - 1 : i + 2]
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    Bc = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / den
    peak = -Bc / (2 * A) if A < 0 else x1
    peak = float(np.clip(peak, x0, x2))
    if refine:
        res = minimize_scalar(lambda x: -dQ(x), bounds=(x0, x2), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun >= dQ(peak):
            peak = float(res.x)
    curve = list(zip(lam.tolist(), vals.tolist(), der.tolist()))
    return peak, curve


def default_lambda_grid(L: int, points: int = 201) -> np.ndarray:
    half = min(0.5, 40.0 / L)
    return np.linspace(1 - half, 1 + half, points)


@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    gamma: float
    alpha_err: float
    gamma_err: float


def finite_size_fit(points: Sequence[tuple[float, float]], lambda_c: float = 1.0) -> ScalingFit:
    """Fit lambda_c^L = lambda_c + alpha L^-gamma on a log-log scale."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 4:
        raise ValueError("need at least 4 points")
    dev = np.abs(pts[:, 1] - lambda_c)
    if np.any(dev == 0):
        raise DegenerateFit("some lambda_c^L equals lambda_c exactly")
    x, y = np.log(pts[:, 0]), np.log(dev)
    A = np.vstack([np.ones_like(x), x]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    cov = np.linalg.inv(A.T @ A) * (resid @ resid) / dof
    log_a, slope = coef
    alpha = float(np.exp(log_a))
    return ScalingFit(alpha, float(-slope), float(alpha * np.sqrt(cov[0, 0])), float(np.sqrt(cov[1, 1])))


# -- two-qubit thermal state -------------------------------------------------------

@dataclass(frozen=True)
class ThermalTwoQubitParams:
    g: float
    h1_over_J: float
    h2_over_J: float
    betaJ: float


def thermal_two_qubit(p: ThermalTwoQubitParams) -> XStateParams:
    """Gibbs state of the two-qubit XY model in a staggered field.

    Energies are in units of J. The square roots (h+^2 - 4g^2)^(1/2) and
    (h-^2 - 4)^(1/2) of the usual closed form are taken with the signs of
    (h1 + h2) and (h2 - h1); with unsigned roots a1/a4 (or a2/a3) swap
    whenever h1 + h2 < 0 (or h2 < h1).
    """
    g, bJ = p.g, p.betaJ
    hp = np.sqrt(4 * g * g + (p.h1_over_J + p.h2_over_J) ** 2)
    hm = np.sqrt(4 + (p.h2_over_J - p.h1_over_J) ** 2)
    u = np.cosh(bJ * hp) + np.cosh(bJ * hm)
    rp = p.h1_over_J + p.h2_over_J
    rm = p.h2_over_J - p.h1_over_J
    # sinh(beta h) / h, finite as h -> 0
    shp = bJ * np.sinc(1j * bJ * hp / np.pi).real
    shm = bJ * np.sinc(1j * bJ * hm / np.pi).real
    a1 = (np.cosh(bJ * hp) - rp * shp) / (2 * u)
    a2 = (np.cosh(bJ * hm) + rm * shm) / (2 * u)
    a3 = (np.cosh(bJ * hm) - rm * shm) / (2 * u)
    a4 = (np.cosh(bJ * hp) + rp * shp) / (2 * u)
    b1 = -g * shp / u
    b2 = -shm / u
    return XStateParams(float(a1), float(a2), float(a3), float(a4), float(b1), float(b2))


def thermal_hamiltonian(p: ThermalTwoQubitParams) -> np.ndarray:
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    I = np.eye(2)
    return (
        (1 + p.g) * np.kron(X, X)
        + (1 - p.g) * np.kron(Y, Y)
        + p.h1_over_J * np.kron(Z, I)
        + p.h2_over_J * np.kron(I, Z)
    )


def gibbs_state(p: ThermalTwoQubitParams) -> np.ndarray:
    """exp(-beta H) / Z by direct diagonalisation."""
    w, v = np.linalg.eigh(thermal_hamiltonian(p))
    e = np.exp(-p.betaJ * (w - w.min()))
    return (v * (e / e.sum())) @ v.conj().T
