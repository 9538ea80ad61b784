"""Density-matrix families: Haar-random fixed-rank states, correlator states,
X states and three bound-entangled families.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import linalg
from .errors import InvalidRank, InvalidXState, NonPhysicalOperator, NotPositive, OutOfRange

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class BipartiteDensityMatrix:
    """A density operator on C^dA (x) C^dB, stored as a dense complex matrix."""

    dA: int
    dB: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.dA * self.dB
        if m.shape != (n, n):
            raise linalg.DimensionMismatch(
                f"matrix shape {m.shape} inconsistent with dims ({self.dA}, {self.dB})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.dA * self.dB

    def validate(self, psd_tol: float = linalg.PSD_TOL) -> "BipartiteDensityMatrix":
        m = self.matrix
        if not linalg.is_hermitian(m, 1e-12):
            raise NonPhysicalOperator("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) > 1e-10:
            raise NonPhysicalOperator(f"trace {tr!r} != 1")
        lam_min = linalg.hermitian_eigvalsh(m)[0]
        if lam_min < -psd_tol:
            raise NotPositive(f"minimum eigenvalue {lam_min!r}")
        return self

    def eigenvalues(self) -> np.ndarray:
        return linalg.hermitian_eigvalsh(self.matrix)

    def entropy(self) -> float:
        return float(linalg.shannon_bits(self.eigenvalues()))

    def reduced(self, keep: str = "A") -> np.ndarray:
        return linalg.partial_trace(self.matrix, self.dA, self.dB, keep)

    def partial_transpose(self, on: str = "B") -> np.ndarray:
        return linalg.partial_transpose(self.matrix, self.dA, self.dB, on)

    def swapped(self) -> "BipartiteDensityMatrix":
        """Same state with the roles of A and B exchanged."""
        return BipartiteDensityMatrix(
            self.dB, self.dA, linalg.swap_subsystems(self.matrix, self.dA, self.dB)
        )

    def to_json(self) -> str:
        entries = [[float(z.real), float(z.imag)] for z in self.matrix.ravel()]
        return json.dumps({"dA": self.dA, "dB": self.dB, "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "BipartiteDensityMatrix":
        doc = json.loads(text)
        dA, dB = int(doc["dA"]), int(doc["dB"])
        flat = np.array([complex(re, im) for re, im in doc["entries"]])
        return cls(dA, dB, flat.reshape(dA * dB, dA * dB)).validate()


def _physical(dA: int, dB: int, m: np.ndarray) -> BipartiteDensityMatrix:
    return BipartiteDensityMatrix(dA, dB, m).validate()


# -- random states -----------------------------------------------------------

def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, index).

    Streams for different indices are independent, so sample ``i`` of an
    experiment never depends on how many samples were drawn before it.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return np.random.Generator(np.random.Philox(ss))


def haar_mixed_matrix(d: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def sample_haar_mixed(dA: int, dB: int, rank: int, seed: int, index: int = 0) -> BipartiteDensityMatrix:
    """Fixed-rank state from the induced measure.

    A Ginibre matrix G of shape (dA*dB, rank) gives G G^dag / Tr, which is the
    marginal of a Haar-random pure state on (dA*dB) x rank.
    """
    d = dA * dB
    if not 1 <= rank <= d:
        raise InvalidRank(f"rank must lie in [1, {d}], got {rank}")
    return BipartiteDensityMatrix(dA, dB, haar_mixed_matrix(d, rank, rng_for(seed, index)))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def classify_ppt(rho: BipartiteDensityMatrix, tol: float = linalg.PSD_TOL) -> Literal["PPT", "NPPT"]:
    lam = linalg.hermitian_eigvalsh(rho.partial_transpose("B"))
    return "PPT" if lam[0] >= -tol else "NPPT"


# -- two-qubit parametrised families ------------------------------------------

@dataclass(frozen=True)
class CorrelatorStateParams:
    c_xx: float = 0.0
    c_yy: float = 0.0
    c_zz: float = 0.0
    cA_x: float = 0.0
    cA_y: float = 0.0
    cA_z: float = 0.0
    cB_x: float = 0.0
    cB_y: float = 0.0
    cB_z: float = 0.0


def correlator_matrix(p: CorrelatorStateParams) -> np.ndarray:
    m = np.kron(I2, I2)
    for a in "xyz":
        s = PAULI[a]
        m = m + getattr(p, f"c_{a}{a}") * np.kron(s, s)
        m = m + getattr(p, f"cA_{a}") * np.kron(s, I2)
        m = m + getattr(p, f"cB_{a}") * np.kron(I2, s)
    return m / 4


def make_correlator_state(p: CorrelatorStateParams) -> BipartiteDensityMatrix:
    return _physical(2, 2, correlator_matrix(p))


def make_rho_m(c_xx: float, c_yy: float, c_zz: float, beta_axis: str, mA: float, mB: float) -> BipartiteDensityMatrix:
    if beta_axis not in ("x", "y", "z"):
        raise ValueError(f"beta_axis must be x, y or z, got {beta_axis!r}")
    kw = {f"cA_{beta_axis}": mA, f"cB_{beta_axis}": mB}
    return make_correlator_state(CorrelatorStateParams(c_xx, c_yy, c_zz, **kw))


_TETRA = np.array([[1, -1, 1], [-1, 1, 1], [1, 1, -1], [-1, -1, -1]], dtype=float)
_PAULI_STACK = np.stack([PAULI[a] for a in "xyz"])
_CC = np.einsum("aij,akl->aikjl", _PAULI_STACK, _PAULI_STACK).reshape(3, 4, 4)
_CA = np.stack([np.kron(s, I2) for s in _PAULI_STACK])
_CB = np.stack([np.kron(I2, s) for s in _PAULI_STACK])


def _ball(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(0.0, 1.0, (n, 1)) ** (1.0 / dim)


def sample_correlator_params(
    rng: np.random.Generator,
    beta_axis: str | None = None,
    batch: int | None = None,
    max_rounds: int = 10000,
) -> CorrelatorStateParams:
    """Uniform draw from the admissible (positive) parameter region.

    Every free parameter ranges over [-1, 1]; the target is the uniform
    distribution on the positive subset. Proposals come from a smaller
    superset that every valid state satisfies: diagonal correlators in the
    Bell-diagonal tetrahedron (the state twirled by sigma^a (x) sigma^a
    must be positive) and each magnetisation vector in the unit ball
    (positive marginals). Rejection from the superset keeps the target.

    With ``beta_axis`` set only the three correlators and the two
    magnetisations along that axis are free (the rho_m family).
    """
    if beta_axis is not None and beta_axis not in ("x", "y", "z"):
        raise ValueError(f"beta_axis must be x, y or z, got {beta_axis!r}")
    dim = 3 if beta_axis is None else 1
    # acceptance is about 1% (nine parameters) and 25% (five)
    batch = batch or (512 if beta_axis is None else 32)
    for _ in range(max_rounds):
        c = rng.dirichlet(np.ones(4), batch) @ _TETRA
        mA = _ball(rng, batch, dim)
        mB = _ball(rng, batch, dim)
        if beta_axis is not None:
            k = "xyz".index(beta_axis)
            mA = np.eye(3)[k] * mA
            mB = np.eye(3)[k] * mB
        m = (np.eye(4) + np.einsum("na,aij->nij", c, _CC)
             + np.einsum("na,aij->nij", mA, _CA) + np.einsum("na,aij->nij", mB, _CB)) / 4
        ok = np.flatnonzero(np.linalg.eigvalsh(m)[:, 0] >= -linalg.PSD_TOL)
        if ok.size:
            i = ok[0]
            return CorrelatorStateParams(*c[i], *mA[i], *mB[i])
    raise RuntimeError("rejection sampler exhausted")


@dataclass(frozen=True)
class XStateParams:
    """Real X state in the computational ordering |00>, |01>, |10>, |11>.

    Diagonal (a1, a2, a3, a4); b1 couples |00>,|11> and b2 couples |01>,|10>.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    b1: float
    b2: float

    def validate(self, tol: float = 1e-12) -> "XStateParams":
        a = (self.a1, self.a2, self.a3, self.a4)
        if abs(sum(a) - 1.0) > tol or min(a) < -tol:
            raise InvalidXState(f"diagonal {a} is not a probability vector")
        if self.a1 * self.a4 < self.b1**2 - tol or self.a2 * self.a3 < self.b2**2 - tol:
            raise InvalidXState("coherences violate positivity")
        return self


def x_matrix(p: XStateParams) -> np.ndarray:
    m = np.diag([p.a1, p.a2, p.a3, p.a4]).astype(complex)
    m[0, 3] = m[3, 0] = p.b1
    m[1, 2] = m[2, 1] = p.b2
    return m


def make_x_state(p: XStateParams) -> BipartiteDensityMatrix:
    p.validate()
    return _physical(2, 2, x_matrix(p))


def x_params_from_correlators(mA: float, mB: float, c_xx: float, c_yy: float, c_zz: float) -> XStateParams:
    """X-state elements of the correlator state with z magnetisations only."""
    return XStateParams(
        a1=(1 + mA + mB + c_zz) / 4,
        a2=(1 + mA - mB - c_zz) / 4,
        a3=(1 - mA + mB - c_zz) / 4,
        a4=(1 - mA - mB + c_zz) / 4,
        b1=(c_xx - c_yy) / 4,
        b2=(c_xx + c_yy) / 4,
    )


def random_x_params(rng: np.random.Generator) -> XStateParams:
    """Valid X state: Dirichlet diagonal, coherences uniform in their disc."""
    a = rng.dirichlet(np.ones(4))
    b1 = rng.uniform(-1, 1) * np.sqrt(a[0] * a[3])
    b2 = rng.uniform(-1, 1) * np.sqrt(a[1] * a[2])
    return XStateParams(*a, b1, b2)


# -- bound-entangled families ---------------------------------------------------

def _check_range(name: str, v: float, lo: float, hi: float) -> None:
    if not lo <= v <= hi:
        raise OutOfRange(f"{name}={v} outside [{lo}, {hi}]")


def be_2x4(b: float) -> BipartiteDensityMatrix:
    """The 2x4 PPT bound-entangled family, qubit first."""
    _check_range("b", b, 0.0, 1.0)
    f = (1 + b) / 2
    g = np.sqrt(1 - b * b) / 2
    m = np.zeros((8, 8))
    for i in range(4):
        m[i, i] = b
    m[5, 5] = m[6, 6] = b
    for i, j in ((0, 5), (1, 6), (2, 7)):
        m[i, j] = m[j, i] = b
    m[4, 4] = m[7, 7] = f
    m[4, 7] = m[7, 4] = g
    return _physical(2, 4, m / (7 * b + 1))


def be_3x3_tiles(a: float) -> BipartiteDensityMatrix:
    _check_range("a", a, 0.0, 1.0)
    f = (1 + a) / 2
    g = np.sqrt(1 - a * a) / 2
    m = np.zeros((9, 9))
    for i in range(9):
        m[i, i] = a
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            m[i, j] = a
    m[6, 6] = f
    m[8, 8] = f
    m[6, 8] = m[8, 6] = g
    return _physical(3, 3, m / (8 * a + 1))


def be_3x3_horodecki(alpha: float) -> BipartiteDensityMatrix:
    _check_range("alpha", alpha, 0.0, 5.0)

    def proj(i, j):
        v = np.zeros(9)
        v[3 * i + j] = 1.0
        return np.outer(v, v)

    psi = np.zeros(9)
    psi[[0, 4, 8]] = 1 / np.sqrt(3)
    plus = (proj(0, 1) + proj(1, 2) + proj(2, 0)) / 3
    minus = (proj(1, 0) + proj(2, 1) + proj(0, 2)) / 3
    m = 2 / 7 * np.outer(psi, psi) + alpha / 7 * plus + (5 - alpha) / 7 * minus
    return _physical(3, 3, m)


def bell_state(which: str = "phi+") -> BipartiteDensityMatrix:
    s = 1 / np.sqrt(2)
    vecs = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    v = np.array(vecs[which], dtype=complex)
    return BipartiteDensityMatrix(2, 2, np.outer(v, v.conj()))


def pure_state(vec: np.ndarray, dA: int, dB: int) -> BipartiteDensityMatrix:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return BipartiteDensityMatrix(dA, dB, np.outer(v, v.conj()))
