import json

import numpy as np
import pytest

from qcorr import measurements as ms
from qcorr.errors import EvenN2, OutOfRange, UnsupportedDim
from qcorr.states import PAULI


def eigenbasis(op):
    return ms.MeasurementBasis(np.linalg.eigh(op)[1])


def test_qubit_basis_examples():
    z = ms.qubit_basis(ms.QubitProjectorParams(1.0, 0.0))
    assert z.same_measurement(ms.MeasurementBasis(np.eye(2)))
    x = ms.qubit_basis(ms.QubitProjectorParams(0.0, 0.0))
    assert x.same_measurement(eigenbasis(PAULI["x"]))
    y = ms.qubit_basis(ms.QubitProjectorParams(0.0, np.pi / 2))
    assert y.same_measurement(eigenbasis(PAULI["y"]))


def test_qubit_params_range():
    with pytest.raises(OutOfRange):
        ms.QubitProjectorParams(1.5, 0.0)


def test_bloch_axis_matches_projector():
    for f, phi in [(0.3, 1.0), (-0.7, 4.0), (1.0, 2.0)]:
        v = ms.qubit_unitary(f, phi)[:, 0]
        n = ms.bloch_axis(f, phi)
        proj = np.outer(v, v.conj())
        expected = 0.5 * (np.eye(2) + sum(n[i] * PAULI[a] for i, a in enumerate("xyz")))
        assert np.allclose(proj, expected, atol=1e-14)


def test_axis_to_params_round_trip_and_folding():
    rng = np.random.default_rng(0)
    n = rng.normal(size=(500, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    f, phi = ms.axis_to_params(n)
    assert np.all((phi >= 0) & (phi < np.pi))
    back = ms.bloch_axis(f, phi)
    # same measurement: back = +/- n
    assert np.allclose(np.abs(np.sum(back * n, axis=1)), 1.0, atol=1e-12)


def test_circle_fixed_ftheta():
    s = ms.circle_fixed_ftheta(0.0, 4)
    assert s.n == 4 and s.kind == "CircleFixedFTheta"
    assert np.allclose([p[1] for p in s.points], [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    two = ms.circle_fixed_ftheta(0.0, 2)
    # literal construction keeps phi = pi, the same measurement as phi = 0
    assert two.bases[0].same_measurement(two.bases[1])


def test_circle_fixed_phi():
    s = ms.circle_fixed_phi(0.0, 2)
    assert [p[0] for p in s.points] == [-1.0, 1.0]
    assert s.bases[0].same_measurement(ms.MeasurementBasis(np.eye(2)))
    s3 = ms.circle_fixed_phi(0.0, 3)
    assert s3.bases[1].same_measurement(eigenbasis(PAULI["x"]))


def test_circle_fixed_phi_divisions():
    s = ms.circle_fixed_phi(0.0, 4, spacing="divisions")
    assert [p[0] for p in s.points] == [-1.0, -0.5, 0.0, 0.5]
    # four distinct measurements, none repeated
    for i in range(4):
        for j in range(i):
            assert not s.bases[i].same_measurement(s.bases[j])
    back = ms.EarmarkedSet.from_json(s.to_json())
    assert back.points == s.points
    with pytest.raises(ValueError):
        ms.circle_fixed_phi(0.0, 4, spacing="odd")


def test_disc_stack():
    one = ms.disc_stack(0.2, 6, 1)
    ref = ms.circle_fixed_ftheta(0.2, 6)
    assert one.points == ref.points
    three = ms.disc_stack(0.0, 5, 3)
    assert sorted({p[0] for p in three.points}) == [-1.0, 0.0, 1.0]
    assert three.n == 15
    clipped = ms.disc_stack(0.5, 2, 5)
    assert max(p[0] for p in clipped.points) == 1.0
    with pytest.raises(EvenN2):
        ms.disc_stack(0.0, 4, 2)


def test_sphere_grid():
    s = ms.sphere_grid(1, 1)
    assert s.points == [(0.0, 0.0)]
    assert s.bases[0].same_measurement(eigenbasis(PAULI["x"]))
    g = ms.sphere_grid(7, 9)
    assert g.n == 63
    assert np.allclose(sorted({p[0] for p in g.points}), -1 + (2 * np.arange(9) + 1) / 9)


def test_triad_qubit():
    t = ms.triad(2)
    assert t.n == 3 and t.kind == "Triad"
    for i in range(3):
        for j in range(i + 1, 3):
            ov = np.abs(t.bases[i].vectors.conj().T @ t.bases[j].vectors) ** 2
            assert np.allclose(ov, 0.5)
    for b, a in zip(t.bases, "xyz"):
        assert b.same_measurement(eigenbasis(PAULI[a]))


def test_triad_qutrit():
    t = ms.triad(3)
    assert t.kind == "SpinTriad"
    assert np.allclose(t.bases[2].vectors, np.eye(3))
    w, v = ms.spin_eigenbasis(3, "x")
    assert np.allclose(w, [1, 0, -1])
    sx = ms.spin_operators(3)["x"]
    assert np.allclose(sx @ v, v * w, atol=1e-14)
    with pytest.raises(UnsupportedDim):
        ms.triad(4)


def test_spin_commutators():
    s = ms.spin_operators(3)
    assert np.allclose(s["x"] @ s["y"] - s["y"] @ s["x"], 1j * s["z"])
    casimir = sum(s[a] @ s[a] for a in "xyz")
    assert np.allclose(casimir, 2 * np.eye(3))


def test_random_basis():
    a = ms.random_basis(3, seed=1)
    b = ms.random_basis(3, seed=2)
    assert a.is_orthonormal() and b.is_orthonormal()
    assert np.max(np.abs(a.vectors.conj().T @ b.vectors)) < 1 - 1e-6
    assert np.array_equal(a.vectors, ms.random_basis(3, seed=1).vectors)


def test_every_set_is_complete():
    sets = [ms.circle_fixed_ftheta(0.3, 7), ms.circle_fixed_phi(1.0, 5), ms.disc_stack(0.0, 4, 5),
            ms.sphere_grid(3, 4), ms.triad(2), ms.triad(3)]
    for s in sets:
        for b in s.bases:
            assert b.is_orthonormal()
            assert np.allclose(b.projectors().sum(axis=0), np.eye(b.dim), atol=1e-10)


def test_set_json_round_trip():
    s = ms.disc_stack(0.0, 10, 5)
    doc = json.loads(s.to_json())
    assert doc == {"kind": "DiscStack", "params": {"f_center": 0.0, "n1": 10, "n2": 5}, "n": 50}
    back = ms.EarmarkedSet.from_json(s.to_json())
    assert back.points == s.points
    with pytest.raises(ValueError):
        ms.build_set("Nope")


def test_axes_match_points():
    s = ms.sphere_grid(5, 3)
    pts = np.array(s.points)
    assert np.allclose(s.axes(), ms.bloch_axis(pts[:, 0], pts[:, 1]))
    with pytest.raises(UnsupportedDim):
        ms.triad(3).axes()
