"""Rank-1 local projective measurements and earmarked (restricted) sets."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EvenN2, OutOfRange, UnsupportedDim
from .states import haar_unitary, rng_for


@dataclass(frozen=True)
class QubitProjectorParams:
    f_theta: float
    phi: float

    def __post_init__(self):
        if not -1.0 <= self.f_theta <= 1.0:
            raise OutOfRange(f"f_theta={self.f_theta} outside [-1, 1]")


@dataclass(frozen=True)
class MeasurementBasis:
    """Orthonormal basis; ``vectors[:, k]`` is the k-th basis vector."""

    vectors: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def projectors(self) -> np.ndarray:
        v = self.vectors
        return np.einsum("ik,jk->kij", v, v.conj())

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        g = self.vectors.conj().T @ self.vectors
        return bool(np.max(np.abs(g - np.eye(self.dim))) < tol)

    def same_measurement(self, other: "MeasurementBasis", tol: float = 1e-10) -> bool:
        """True when both bases define the same set of projectors."""
        p, q = self.projectors(), other.projectors()
        used = set()
        for a in p:
            for j, b in enumerate(q):
                if j not in used and np.max(np.abs(a - b)) < tol:
                    used.add(j)
                    break
            else:
                return False
        return True


def qubit_unitary(f_theta: float, phi: float) -> np.ndarray:
    theta = np.arccos(np.clip(f_theta, -1.0, 1.0))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, s * np.exp(1j * phi)], [-s * np.exp(-1j * phi), c]], dtype=complex
    )


def qubit_basis(p: QubitProjectorParams) -> MeasurementBasis:
    """{U|0>, U|1>} with U the SU(2) rotation at theta = arccos(f_theta)."""
    return MeasurementBasis(qubit_unitary(p.f_theta, p.phi), label=f"f={p.f_theta:.6g},phi={p.phi:.6g}")


def bloch_axis(f_theta, phi) -> np.ndarray:
    """Bloch vector of U|0>; the measurement is the axis {+n, -n}."""
    f = np.asarray(f_theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sqrt(np.clip(1 - f * f, 0.0, None))
    return np.stack([-s * np.cos(phi), s * np.sin(phi), f], axis=-1)


def axis_to_params(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`bloch_axis`, folded to phi in [0, pi).

    The antipodal points (f, phi) and (-f, phi + pi) give the same projector
    pair, so every measurement has exactly one representative with
    phi in [0, pi) (poles map to phi = 0).
    """
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    phi = np.arctan2(n[..., 1], -n[..., 0])
    flip = (phi < 0) | (phi >= np.pi)
    n = np.where(flip[..., None], -n, n)
    phi = np.mod(np.arctan2(n[..., 1], -n[..., 0]), np.pi)
    rho = np.hypot(n[..., 0], n[..., 1])
    phi = np.where(rho < 1e-12, 0.0, phi)
    f = np.clip(n[..., 2], -1.0, 1.0)
    return f, phi


@dataclass
class EarmarkedSet:
    kind: str
    params: dict
    bases: list[MeasurementBasis]
    # (f_theta, phi) per basis for the qubit constructions
    points: list[tuple[float, float]] | None = None

    @property
    def n(self) -> int:
        return len(self.bases)

    @property
    def dim(self) -> int:
        return self.bases[0].dim

    def axes(self) -> np.ndarray:
        """Bloch axes (n, 3) of a qubit set."""
        if self.dim != 2:
            raise UnsupportedDim("Bloch axes only exist for qubit sets")
        if self.points is not None:
            f, phi = np.array(self.points).T
            return bloch_axis(f, phi)
        out = []
        for b in self.bases:
            v = b.vectors[:, 0]
            out.append([
                2 * (v[0].conj() * v[1]).real,
                2 * (v[0].conj() * v[1]).imag,
                abs(v[0]) ** 2 - abs(v[1]) ** 2,
            ])
        return np.array(out)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "params": self.params, "n": self.n})

    @classmethod
    def from_json(cls, text: str) -> "EarmarkedSet":
        doc = json.loads(text)
        return build_set(doc["kind"], **doc["params"])


def _qubit_set(kind: str, params: dict, pts: Sequence[tuple[float, float]]) -> EarmarkedSet:
    pts = [(float(f), float(p)) for f, p in pts]
    bases = [qubit_basis(QubitProjectorParams(f, p)) for f, p in pts]
    return EarmarkedSet(kind, params, bases, pts)


def circle_fixed_ftheta(f_theta: float, n: int) -> EarmarkedSet:
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = [(f_theta, 2 * np.pi * k / n) for k in range(n)]
    return _qubit_set("CircleFixedFTheta", {"f_theta": f_theta, "n": n}, pts)


def circle_fixed_phi(phi: float, n: int, spacing: str = "inclusive") -> EarmarkedSet:
    """n values of f_theta at fixed phi.

    ``inclusive`` places f = -1 + 2j/(n-1), both poles included. ``divisions``
    cuts [-1, 1] into n equal steps, f = -1 + 2j/n; the dropped f = 1 is the
    same measurement as f = -1, so all n elements are distinct.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if spacing == "inclusive":
        fs = [-1 + 2 * j / (n - 1) for j in range(n)]
    elif spacing == "divisions":
        fs = [-1 + 2 * j / n for j in range(n)]
    else:
        raise ValueError(f"spacing must be inclusive or divisions, got {spacing!r}")
    pts = [(f, phi) for f in fs]
    params = {"phi": phi, "n": n}
    if spacing != "inclusive":
        params["spacing"] = spacing
    return _qubit_set("CircleFixedPhi", params, pts)


def disc_stack(f_center: float, n1: int, n2: int) -> EarmarkedSet:
    """n2 parallel circles f_center + j h (|j| <= (n2-1)/2, h = 2/(n2-1)),
    each carrying n1 equispaced phi values. Out-of-range discs are clamped.
    """
    if n2 < 1 or n2 % 2 == 0:
        raise EvenN2(f"n2 must be odd and positive, got {n2}")
    if n2 == 1:
        fs = [f_center]
    else:
        h = 2.0 / (n2 - 1)
        half = (n2 - 1) // 2
        fs = [float(np.clip(f_center + j * h, -1.0, 1.0)) for j in range(-half, half + 1)]
    pts = [(f, 2 * np.pi * k / n1) for f in fs for k in range(n1)]
    return _qubit_set("DiscStack", {"f_center": f_center, "n1": n1, "n2": n2}, pts)


def sphere_grid(n1: int, n2: int) -> EarmarkedSet:
    """n1 phi values 2 pi k / n1 times the n2 bin midpoints of f in [-1, 1]."""
    if n1 < 1 or n2 < 1:
        raise ValueError("n1, n2 must be >= 1")
    fs = [-1 + (2 * j + 1) / n2 for j in range(n2)]
    pts = [(f, 2 * np.pi * k / n1) for f in fs for k in range(n1)]
    return _qubit_set("SphereGrid", {"n1": n1, "n2": n2}, pts)


def spin_operators(dim: int) -> dict[str, np.ndarray]:
    """Spin-(dim-1)/2 operators S^x, S^y, S^z (hbar = 1)."""
    s = (dim - 1) / 2
    m = s - np.arange(dim)
    sp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        sp[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / 2j
    sz = np.diag(m).astype(complex)
    return {"x": sx, "y": sy, "z": sz}


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        i = np.flatnonzero(np.abs(col) > 1e-12)[0]
        out[:, k] = col * (abs(col[i]) / col[i])
    return out


def spin_eigenbasis(dim: int, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and phase-fixed eigenvectors of S^axis."""
    op = spin_operators(dim)[axis]
    if axis == "z":
        return np.real(np.diag(op)), np.eye(dim, dtype=complex)
    w, v = np.linalg.eigh(op)
    order = np.argsort(-w)
    return w[order], _fix_phases(v[:, order])


def triad(dim: int) -> EarmarkedSet:
    """Eigenbases of the three Cartesian spin observables (x, y, z order)."""
    if dim not in (2, 3):
        raise UnsupportedDim(f"triad defined for dim 2 or 3, got {dim}")
    bases = [MeasurementBasis(spin_eigenbasis(dim, a)[1], label=f"S{a}") for a in "xyz"]
    kind = "Triad" if dim == 2 else "SpinTriad"
    pts = [(0.0, 0.0), (0.0, np.pi / 2), (1.0, 0.0)] if dim == 2 else None
    return EarmarkedSet(kind, {"dim": dim}, bases, pts)


def random_basis(dim: int, seed: int, index: int = 0) -> MeasurementBasis:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return MeasurementBasis(haar_unitary(dim, rng_for(seed, index)), label=f"haar:{seed}:{index}")


_BUILDERS = {
    "CircleFixedFTheta": lambda p: circle_fixed_ftheta(p["f_theta"], p["n"]),
    "CircleFixedPhi": lambda p: circle_fixed_phi(p["phi"], p["n"], p.get("spacing", "inclusive")),
    "DiscStack": lambda p: disc_stack(p["f_center"], p["n1"], p["n2"]),
    "SphereGrid": lambda p: sphere_grid(p["n1"], p["n2"]),
    "Triad": lambda p: triad(2),
    "SpinTriad": lambda p: triad(3),
}


def build_set(kind: str, **params) -> EarmarkedSet:
    try:
        return _BUILDERS[kind](params)
    except KeyError:
        raise ValueError(f"unknown earmarked set kind {kind!r}") from None
