"""Analytic constrained (triad) discord and work deficit.

X states use the computational ordering |00>, |01>, |10>, |11> (see
:class:`qcorr.states.XStateParams`). Every expression here is locked
against the numeric triad minimum in the test suite.
"""
from __future__ import annotations

import numpy as np

from .errors import OutOfRange
from .linalg import shannon_bits
from .states import XStateParams, be_2x4


def _xlog2x(v):
    v = np.asarray(v, dtype=float)
    return np.where(v > 1e-12, v * np.log2(np.where(v > 1e-12, v, 1.0)), 0.0)


def x_alphas(p: XStateParams) -> tuple[np.ndarray, np.ndarray]:
    """(alpha^+_1, alpha^+_2), (alpha^-_1, alpha^-_2)."""
    d = p.a1 - p.a2 + p.a3 - p.a4
    out = []
    for sgn in (1, -1):
        r = np.sqrt(d * d + 4 * (p.b1 + sgn * p.b2) ** 2)
        out.append(np.array([1 - r, 1 + r]))
    return out[0], out[1]


def x_state_entropy(p: XStateParams) -> float:
    lam = [
        0.5 * (p.a1 + p.a4) + s * np.hypot(0.5 * (p.a1 - p.a4), p.b1) for s in (1, -1)
    ] + [
        0.5 * (p.a2 + p.a3) + s * np.hypot(0.5 * (p.a2 - p.a3), p.b2) for s in (1, -1)
    ]
    return float(shannon_bits(np.array(lam)))


def x_state_cqd_terms(p: XStateParams) -> dict[str, float]:
    """The three conditional-entropy candidates S' (sigma^z), S'_+ (sigma^x), S'_- (sigma^y)."""
    a = np.array([p.a1, p.a2, p.a3, p.a4])
    al_p, al_m = x_alphas(p)
    s_z = float(_xlog2x(p.a1 + p.a2) + _xlog2x(p.a3 + p.a4) - _xlog2x(a).sum())
    s_plus = float(1 - 0.5 * _xlog2x(al_p).sum())
    s_minus = float(1 - 0.5 * _xlog2x(al_m).sum())
    return {"z": s_z, "x": s_plus, "y": s_minus}


def x_state_cqd(p: XStateParams) -> float:
    p.validate()
    s_a = float(shannon_bits(np.array([p.a1 + p.a2, p.a3 + p.a4])))
    return s_a - x_state_entropy(p) + min(x_state_cqd_terms(p).values())


def x_state_cqwd_terms(p: XStateParams) -> dict[str, float]:
    a = np.array([p.a1, p.a2, p.a3, p.a4])
    al_p, al_m = x_alphas(p)
    return {
        "z": float(shannon_bits(a)),
        "x": float(2 * shannon_bits(al_p / 4)),
        "y": float(2 * shannon_bits(al_m / 4)),
    }


def x_state_cqwd(p: XStateParams) -> float:
    p.validate()
    return min(x_state_cqwd_terms(p).values()) - x_state_entropy(p)


# -- the 2 x 4 bound-entangled family ------------------------------------------------

def _check_b(b: float) -> None:
    if not 0.0 <= b <= 1.0:
        raise OutOfRange(f"b={b} outside [0, 1]")


def _be24_pieces(b: float):
    root = np.sqrt(max(1 - b * b, 0.0))
    zeta = np.array([1 + b - root, 1 + b + root])
    w = np.array([
        np.sqrt(max(2 * (1 - 3 * b + 12 * b * b + s * (1 - 3 * b) * root), 0.0))
        for s in (-1, 1)
    ])
    wp = np.array([
        np.sqrt(max(2 * (1 + b + 8 * b * b + s * (1 + b) * root), 0.0)) for s in (-1, 1)
    ])
    norm = 4 * (1 + 7 * b)
    tau = np.array([
        [(1 + 9 * b + si * root + sj * w[i]) / norm for sj in (-1, 1)]
        for i, si in enumerate((-1, 1))
    ])
    taup = np.array([
        [(1 + 5 * b + si * root + sj * wp[i]) / norm for sj in (-1, 1)]
        for i, si in enumerate((-1, 1))
    ])
    return zeta, tau, taup


def be24_state_entropy(b: float) -> float:
    """S(rho_b), from the spectrum of the assembled matrix."""
    _check_b(b)
    return be_2x4(b).entropy()


def be24_marginal_entropy(b: float) -> float:
    """Entropy of the qubit marginal, diag(4b, 3b + 1) / (7b + 1)."""
    _check_b(b)
    return float(shannon_bits(np.array([4 * b, 3 * b + 1]) / (7 * b + 1)))


def be24_cqd_terms(b: float) -> dict[str, float]:
    """Conditional-entropy candidates: S-bar_1 (sigma^z) and S-bar_2 (sigma^x)."""
    _check_b(b)
    zeta, tau, taup = _be24_pieces(b)
    s1 = (
        1 + 9 * b + _xlog2x(1 + 3 * b) - 2 * _xlog2x(b) - 0.5 * _xlog2x(zeta).sum()
    ) / (1 + 7 * b)
    s2 = -0.5 * (_xlog2x(tau).sum() + _xlog2x(taup).sum())
    return {"z": float(s1), "x": float(s2)}


def be24_cqd(b: float) -> float:
    terms = be24_cqd_terms(b)
    return be24_marginal_entropy(b) - be24_state_entropy(b) + min(terms.values())


def be24_cqwd_terms(b: float) -> dict[str, float]:
    """Entropies of the dephased state: S-tilde_1 (sigma^z) and S-tilde_2 (sigma^x)."""
    _check_b(b)
    zeta, tau, taup = _be24_pieces(b)
    s1 = (
        1 + b + _xlog2x(1 + 7 * b) - 6 * _xlog2x(b) - 0.5 * _xlog2x(zeta).sum()
    ) / (1 + 7 * b)
    s2 = -0.5 * (
        _xlog2x(tau).sum() + _xlog2x(taup).sum() - tau.sum() - taup.sum()
    )
    return {"z": float(s1), "x": float(s2)}


def be24_cqwd(b: float) -> float:
    # work deficit is S(dephased) - S(rho); the state entropy is subtracted
    return min(be24_cqwd_terms(b).values()) - be24_state_entropy(b)
