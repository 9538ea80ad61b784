"""Quantum discord and quantum work deficit for measurements on subsystem A.

For a basis {|v_k>} on A, write M_k = <v_k| rho |v_k> for the (unnormalised)
conditional operator on B, p_k = Tr M_k, and H(.) for the Shannon entropy in
bits. Then

    QD(basis)  = S(rho_A) - S(rho) + H(spec M) - H(p)
    QWD(basis) = H(spec M) - S(rho)

where ``spec M`` collects the eigenvalues of all the M_k: the dephased state
sum_k |v_k><v_k| (x) M_k is block diagonal, and p_k S(M_k / p_k) sums to
H(spec M) - H(p). Both quantities are minimised over bases.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DimensionMismatch, EmptySet, UnsupportedDim
from .measurements import (
    EarmarkedSet,
    MeasurementBasis,
    QubitProjectorParams,
    axis_to_params,
    bloch_axis,
    qubit_basis,
    triad,
)
from .optimize import batched_nelder_mead
from .states import PAULI, BipartiteDensityMatrix, haar_unitary, rng_for

MEASURES = ("QD", "QWD")
P_NULL = 1e-12


def _measure(m: str) -> str:
    m = m.upper()
    if m not in MEASURES:
        raise ValueError(f"measure must be QD or QWD, got {m!r}")
    return m


@dataclass
class CorrelationEval:
    measure: str
    value_constrained: float | None = None
    value_actual: float | None = None
    optimal_basis_index: int | None = None
    optimal_params: QubitProjectorParams | None = None
    optimal_basis: MeasurementBasis | None = field(default=None, repr=False)

    @property
    def ve(self) -> float | None:
        if self.value_constrained is None or self.value_actual is None:
            return None
        return abs(self.value_constrained - self.value_actual)

    def to_dict(self) -> dict:
        out = {
            "measure": self.measure,
            "value_constrained": self.value_constrained,
            "value_actual": self.value_actual,
            "optimal_basis_index": self.optimal_basis_index,
            "ve": self.ve,
        }
        if self.optimal_params is not None:
            out["optimal_params"] = {
                "f_theta": self.optimal_params.f_theta,
                "phi": self.optimal_params.phi,
            }
        return out


# -- single-basis evaluation -------------------------------------------------------

def conditional_blocks(matrix: np.ndarray, dA: int, dB: int, vecs: np.ndarray) -> np.ndarray:
    """M_k = <v_k| rho |v_k> for bases stacked as ``vecs[..., :, k]``.

    Returns shape (..., dA, dB, dB).
    """
    r = np.asarray(matrix).reshape(dA, dB, dA, dB)
    return np.einsum("...ik,iajb,...jk->...kab", np.conj(vecs), r, vecs)


def post_measurement_ensemble(rho: BipartiteDensityMatrix, basis: MeasurementBasis):
    """[(p_k, rho_k)] after measuring A; rho_k is None when p_k < 1e-12."""
    if basis.dim != rho.dA:
        raise DimensionMismatch(f"basis dim {basis.dim} != dA {rho.dA}")
    out = []
    for proj in basis.projectors():
        big = np.kron(proj, np.eye(rho.dB))
        post = big @ rho.matrix @ big
        p = float(np.trace(post).real)
        out.append((p, BipartiteDensityMatrix(rho.dA, rho.dB, post / p) if p >= P_NULL else None))
    return out


def _values_from_blocks(blocks: np.ndarray, s_a, s_ab, measure: str) -> np.ndarray:
    lam = linalg.hermitian_eigvalsh(blocks)
    h_all = linalg.shannon_bits(lam.reshape(lam.shape[:-2] + (-1,)))
    if measure == "QWD":
        return h_all - s_ab
    p = np.trace(blocks, axis1=-2, axis2=-1).real
    return s_a - s_ab + h_all - linalg.shannon_bits(p)


def _given_basis(rho: BipartiteDensityMatrix, basis: MeasurementBasis, measure: str) -> float:
    if basis.dim != rho.dA:
        raise DimensionMismatch(f"basis dim {basis.dim} != dA {rho.dA}")
    blocks = conditional_blocks(rho.matrix, rho.dA, rho.dB, basis.vectors)
    s_a = linalg.shannon_bits(linalg.hermitian_eigvalsh(rho.reduced("A")))
    return float(_values_from_blocks(blocks, s_a, rho.entropy(), measure))


def discord_given_basis(rho: BipartiteDensityMatrix, basis: MeasurementBasis) -> float:
    """S(rho_A) - S(rho) + sum_k p_k S(rho_k) for the given basis on A."""
    return _given_basis(rho, basis, "QD")


def workdeficit_given_basis(rho: BipartiteDensityMatrix, basis: MeasurementBasis) -> float:
    """S(sum_k p_k rho_k) - S(rho) for the given basis on A."""
    return _given_basis(rho, basis, "QWD")


def value_given_basis(rho, basis, measure: str) -> float:
    return _given_basis(rho, basis, _measure(measure))


# -- batched evaluator --------------------------------------------------------------

def _eig2(blocks: np.ndarray) -> np.ndarray:
    """Closed-form eigenvalues of stacked 2x2 Hermitian matrices."""
    a = blocks[..., 0, 0].real
    d = blocks[..., 1, 1].real
    off = np.abs(blocks[..., 0, 1]) ** 2
    mid = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + off)
    return np.stack([mid - rad, mid + rad], axis=-1)


class Evaluator:
    """Correlation values for a stack of states sharing (dA, dB).

    Qubit-A states can be evaluated directly from Bloch axes: with
    T_i = Tr_A[(sigma_i (x) 1) rho], the conditional blocks for the axis n
    are (rho_B +/- n.T) / 2.
    """

    def __init__(self, states: Sequence[BipartiteDensityMatrix] | BipartiteDensityMatrix):
        if isinstance(states, BipartiteDensityMatrix):
            states = [states]
        dA, dB = states[0].dA, states[0].dB
        if any((s.dA, s.dB) != (dA, dB) for s in states):
            raise DimensionMismatch("all states in a batch must share dimensions")
        self.dA, self.dB = dA, dB
        self.mats = np.stack([s.matrix for s in states])
        self.s_ab = linalg.shannon_bits(linalg.hermitian_eigvalsh(self.mats))
        rho_a = linalg.partial_trace(self.mats, dA, dB, "A")
        self.s_a = linalg.shannon_bits(linalg.hermitian_eigvalsh(rho_a))
        self.rho_b = linalg.partial_trace(self.mats, dA, dB, "B")
        if dA == 2:
            r = self.mats.reshape(-1, 2, dB, 2, dB)
            # T_i[a, b] = sum_{jk} sigma_i[k, j] rho[j a, k b]
            self.T = np.stack(
                [np.einsum("kj,sjakb->sab", PAULI[c], r) for c in "xyz"], axis=1
            )

    def __len__(self):
        return self.mats.shape[0]

    def axis_values(self, axes: np.ndarray, measure: str, idx: np.ndarray | None = None) -> np.ndarray:
        """Values for Bloch axes ``axes`` of shape (S, m, 3) (or (m, 3), shared)."""
        if self.dA != 2:
            raise UnsupportedDim("axis evaluation needs a qubit on A")
        measure = _measure(measure)
        if idx is None:
            idx = np.arange(len(self))
        axes = np.asarray(axes, dtype=float)
        if axes.ndim == 2:
            axes = np.broadcast_to(axes, (len(idx),) + axes.shape)
        nT = np.einsum("smi,siab->smab", axes, self.T[idx])
        rb = self.rho_b[idx][:, None]
        blocks = np.stack([rb + nT, rb - nT], axis=2) * 0.5
        lam = _eig2(blocks) if self.dB == 2 else linalg.hermitian_eigvalsh(blocks)
        h_all = linalg.shannon_bits(lam.reshape(lam.shape[:-2] + (-1,)))
        s_ab = self.s_ab[idx][:, None]
        if measure == "QWD":
            return h_all - s_ab
        p = np.trace(blocks, axis1=-2, axis2=-1).real
        return self.s_a[idx][:, None] - s_ab + h_all - linalg.shannon_bits(p)

    def basis_values(self, vecs: np.ndarray, measure: str, idx: np.ndarray | None = None) -> np.ndarray:
        """Values for bases ``vecs`` of shape (S, m, dA, dA) (or (m, dA, dA))."""
        measure = _measure(measure)
        if idx is None:
            idx = np.arange(len(self))
        vecs = np.asarray(vecs)
        if vecs.ndim == 3:
            vecs = np.broadcast_to(vecs, (len(idx),) + vecs.shape)
        r = self.mats[idx].reshape(-1, self.dA, self.dB, self.dA, self.dB)
        blocks = np.einsum("smik,siajb,smjk->smkab", np.conj(vecs), r, vecs)
        lam = linalg.hermitian_eigvalsh(blocks)
        h_all = linalg.shannon_bits(lam.reshape(lam.shape[:-2] + (-1,)))
        s_ab = self.s_ab[idx][:, None]
        if measure == "QWD":
            return h_all - s_ab
        p = np.trace(blocks, axis1=-2, axis2=-1).real
        return self.s_a[idx][:, None] - s_ab + h_all - linalg.shannon_bits(p)

    def set_values(self, eset: EarmarkedSet, measure: str) -> np.ndarray:
        """(S, n) values over every basis of an earmarked set."""
        if self.dA == 2 and eset.dim == 2:
            return self.axis_values(eset.axes(), measure)
        if eset.dim != self.dA:
            raise DimensionMismatch(f"set dim {eset.dim} != dA {self.dA}")
        vecs = np.stack([b.vectors for b in eset.bases])
        return self.basis_values(vecs, measure)

    def set_min(self, eset: EarmarkedSet, measure: str, budget: int = 1 << 20) -> np.ndarray:
        """Per-state minimum over ``eset``, evaluated in memory-bounded chunks.

        ``budget`` caps the number of (state, basis) pairs per call.
        """
        S = len(self)
        if self.dA == 2 and eset.dim == 2:
            items = eset.axes()
            call = self.axis_values
        else:
            if eset.dim != self.dA:
                raise DimensionMismatch(f"set dim {eset.dim} != dA {self.dA}")
            items = np.stack([b.vectors for b in eset.bases])
            call = self.basis_values
        m_step = min(len(items), budget)
        s_step = max(1, budget // m_step)
        out = np.full(S, np.inf)
        for lo in range(0, S, s_step):
            idx = np.arange(lo, min(S, lo + s_step))
            for mlo in range(0, len(items), m_step):
                v = call(items[mlo : mlo + m_step], measure, idx)
                out[idx] = np.minimum(out[idx], v.min(axis=1))
        return out


# -- constrained and reference minima -----------------------------------------------

def _argmin_lowest(vals: np.ndarray, tie: float = 1e-12) -> np.ndarray:
    best = vals.min(axis=-1, keepdims=True)
    return np.argmax(vals <= best + tie, axis=-1)


def constrained_min(rho: BipartiteDensityMatrix, eset: EarmarkedSet, measure: str) -> CorrelationEval:
    """Minimum of the measure over the bases of ``eset``.

    Ties within 1e-12 resolve to the lowest basis index.
    """
    measure = _measure(measure)
    if eset is None or eset.n == 0:
        raise EmptySet("earmarked set is empty")
    vals = Evaluator(rho).set_values(eset, measure)[0]
    k = int(_argmin_lowest(vals))
    params = None
    if eset.points is not None:
        params = QubitProjectorParams(*eset.points[k])
    return CorrelationEval(measure, float(vals[k]), None, k, params, eset.bases[k])


def constrained_values(states: Sequence[BipartiteDensityMatrix] | Evaluator, eset: EarmarkedSet, measure: str) -> np.ndarray:
    ev = states if isinstance(states, Evaluator) else Evaluator(states)
    return ev.set_values(eset, measure).min(axis=1)


@dataclass
class RefineSettings:
    n_ftheta: int = 60
    n_phi: int = 120
    n_starts: int = 5
    xatol: float = 1e-9
    max_iter: int = 400
    # qudit (dA = 3) options
    n_random_starts: int = 50
    qudit_xatol: float = 1e-7
    qudit_max_iter: int = 3000
    include_triad_starts: bool = True
    seed: int = 0
    chunk: int = 512


def _qubit_grid(n_f: int, n_phi: int) -> np.ndarray:
    """Distinct measurement axes of the (f, phi) grid.

    phi and phi + pi give the same measurement when f -> -f, and the grid is
    symmetric under that map, so only phi in [0, pi) is kept; each pole is
    kept once.
    """
    fs = np.linspace(-1.0, 1.0, n_f)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    phis = phis[phis < np.pi - 1e-12]
    pts = [(f, p) for f in fs if abs(abs(f) - 1) > 1e-15 for p in phis]
    pts += [(f, 0.0) for f in fs if abs(abs(f) - 1) <= 1e-15]
    f, p = np.array(pts).T
    return bloch_axis(f, p)


def _tangent_frame(n0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.where(np.abs(n0[..., 2:3]) < 0.9, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    e1 = np.cross(n0, helper)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(n0, e1)
    return e1, e2


def _chart_axes(n0, e1, e2, x):
    """Axis at local coordinates x (B, m, 2) around n0 (B, 3)."""
    v = n0[:, None, :] + x[..., :1] * e1[:, None, :] + x[..., 1:2] * e2[:, None, :]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def qubit_reference_batch(ev: Evaluator, measure: str, opts: RefineSettings | None = None):
    """Grid + batched Nelder-Mead minimum for every state of ``ev`` (dA = 2).

    Returns (values, optimal axes).
    """
    opts = opts or RefineSettings()
    measure = _measure(measure)
    grid = _qubit_grid(opts.n_ftheta, opts.n_phi)
    S = len(ev)
    best_val = np.empty(S)
    best_axis = np.empty((S, 3))
    step = np.pi / opts.n_ftheta
    for lo in range(0, S, opts.chunk):
        sl = np.arange(lo, min(S, lo + opts.chunk))
        gv = ev.axis_values(grid, measure, sl)
        k = min(opts.n_starts, grid.shape[0])
        top = np.argsort(gv, axis=1, kind="stable")[:, :k]
        n0 = grid[top].reshape(-1, 3)
        state_of = np.repeat(sl, k)
        e1, e2 = _tangent_frame(n0)

        def fun(x, idx):
            axes = _chart_axes(n0[idx], e1[idx], e2[idx], x)
            return ev.axis_values(axes, measure, state_of[idx])

        x, fx, _ = batched_nelder_mead(
            fun, np.zeros((n0.shape[0], 2)), step, opts.xatol, opts.max_iter
        )
        axes = _chart_axes(n0, e1, e2, x[:, None, :])[:, 0]
        fx = fx.reshape(-1, k)
        axes = axes.reshape(-1, k, 3)
        j = np.argmin(fx, axis=1)
        r = np.arange(len(sl))
        gbest = gv.min(axis=1)
        use_grid = gbest < fx[r, j]
        best_val[sl] = np.where(use_grid, gbest, fx[r, j])
        best_axis[sl] = np.where(use_grid[:, None], grid[np.argmin(gv, axis=1)], axes[r, j])
    return best_val, best_axis


def _cayley(h_params: np.ndarray, d: int) -> np.ndarray:
    """Unitary (1 - iH)(1 + iH)^-1 for off-diagonal Hermitian H.

    Diagonal phases do not change the projectors, so the d(d-1) real
    parameters of the off-diagonal part chart the space of measurements.
    """
    shp = h_params.shape[:-1]
    H = np.zeros(shp + (d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    z = h_params[..., :m] + 1j * h_params[..., m:]
    H[..., iu[0], iu[1]] = z
    H = H + np.conj(np.swapaxes(H, -1, -2))
    eye = np.eye(d)
    return np.linalg.solve((eye + 1j * H).swapaxes(-1, -2), (eye - 1j * H).swapaxes(-1, -2)).swapaxes(-1, -2)


def qudit_reference_batch(ev: Evaluator, measure: str, opts: RefineSettings | None = None):
    """Multi-start local refinement over all orthonormal bases of A.

    Starts are Haar-random bases (plus the spin triad when enabled); each is
    refined by Nelder-Mead in a Cayley chart centred on the start. Returns
    (values, optimal basis vectors).
    """
    opts = opts or RefineSettings()
    measure = _measure(measure)
    d = ev.dA
    S = len(ev)
    starts = [haar_unitary(d, rng_for(opts.seed, i)) for i in range(opts.n_random_starts)]
    if opts.include_triad_starts and d in (2, 3):
        starts += [b.vectors for b in triad(d).bases]
    U0 = np.stack(starts)
    k = U0.shape[0]
    npar = d * (d - 1)
    U0_all = np.tile(U0, (S, 1, 1))
    state_of = np.repeat(np.arange(S), k)

    def fun(x, idx):
        U = U0_all[idx][:, None] @ _cayley(x, d)
        return ev.basis_values(U, measure, state_of[idx])

    x, fx, _ = batched_nelder_mead(
        fun, np.zeros((S * k, npar)), 0.2, opts.qudit_xatol, opts.qudit_max_iter
    )
    U = U0_all @ _cayley(x, d)
    fx = fx.reshape(S, k)
    j = np.argmin(fx, axis=1)
    r = np.arange(S)
    return fx[r, j], U.reshape(S, k, d, d)[r, j]


def reference_min(rho: BipartiteDensityMatrix, measure: str, opts: RefineSettings | None = None) -> CorrelationEval:
    """Numerical minimum over all rank-1 projective measurements on A."""
    measure = _measure(measure)
    ev = Evaluator(rho)
    if rho.dA == 2:
        vals, axes = qubit_reference_batch(ev, measure, opts)
        f, phi = axis_to_params(axes[0])
        params = QubitProjectorParams(float(f), float(phi))
        return CorrelationEval(measure, None, float(vals[0]), None, params, qubit_basis(params))
    if rho.dA == 3:
        vals, U = qudit_reference_batch(ev, measure, opts)
        return CorrelationEval(measure, None, float(vals[0]), None, None, MeasurementBasis(U[0]))
    raise UnsupportedDim(f"reference_min supports dA in (2, 3), got {rho.dA}")


def reference_values(states, measure: str, opts: RefineSettings | None = None):
    """Batched reference minima; returns (values, optimisers).

    Optimisers are Bloch axes for qubit A and basis matrices for a qutrit.
    """
    ev = states if isinstance(states, Evaluator) else Evaluator(states)
    if ev.dA == 2:
        return qubit_reference_batch(ev, measure, opts)
    if ev.dA == 3:
        return qudit_reference_batch(ev, measure, opts)
    raise UnsupportedDim(f"reference_min supports dA in (2, 3), got {ev.dA}")


def voluntary_error(rho: BipartiteDensityMatrix, eset: EarmarkedSet, measure: str, opts: RefineSettings | None = None) -> CorrelationEval:
    """|Q_c - Q_a|: constrained minimum against the reference minimum."""
    ev = constrained_min(rho, eset, measure)
    ref = reference_min(rho, measure, opts)
    ev.value_actual = ref.value_actual
    return ev
