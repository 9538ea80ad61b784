import numpy as np
import pytest

from qcorr import closed_forms as cf
from qcorr import correlations as cr
from qcorr import measurements as ms
from qcorr import spin_models as sm
from qcorr.errors import DegenerateFit, GridTooCoarse
from qcorr.states import make_x_state, x_matrix


@pytest.mark.parametrize("L", [4, 6, 8, 10])
@pytest.mark.parametrize("g,lam", [(0.5, 0.7), (0.5, 1.0), (1.0, 1.3), (0.2, 2.0)])
def test_correlators_match_exact_diagonalisation(L, g, lam):
    psi = sm.xy_ground_state_ed(L, g, lam)
    ed = sm.rdm_from_vector(psi, L)
    ff = x_matrix(sm.xy_x_params(sm.XYChainParams(L, g, lam)))
    assert np.max(np.abs(ed - ff)) < 1e-8


def test_rdm_is_x_state():
    rho = sm.xy_two_site_rdm(sm.XYChainParams(12, 0.5, 0.9))
    m = rho.matrix
    mask = np.ones((4, 4), bool)
    mask[np.arange(4), np.arange(4)] = False
    mask[np.arange(4), 3 - np.arange(4)] = False
    assert np.all(m[mask] == 0)


def test_weak_coupling_limit():
    # lambda -> 0: fully polarised, m_z -> -1 (field term +h Z), no correlations
    mz, cxx, cyy, czz = sm.xy_ground_correlators(sm.XYChainParams(40, 0.5, 1e-6))
    assert mz == pytest.approx(-1.0, abs=1e-6)
    assert czz == pytest.approx(1.0, abs=1e-6)
    assert abs(cxx) < 1e-5 and abs(cyy) < 1e-5


def test_chain_params_validation():
    with pytest.raises(ValueError):
        sm.XYChainParams(5, 0.5, 1.0)
    with pytest.raises(ValueError):
        sm.XYChainParams(8, 1.5, 1.0)
    with pytest.raises(ValueError):
        sm.XYChainParams(8, 0.5, 0.0)


def test_qpt_scan_peak_approaches_critical_point():
    peaks = []
    for L in (20, 40, 80):
        lc, curve = sm.qpt_scan(0.5, L, sm.default_lambda_grid(L, 101), "CQWD")
        assert len(curve) == 101
        peaks.append(lc)
    dev = np.abs(np.array(peaks) - 1.0)
    assert np.all(np.diff(dev) < 0)


def test_qpt_scan_boundary_raises():
    with pytest.raises(GridTooCoarse):
        sm.qpt_scan(0.5, 20, np.linspace(0.2, 0.5, 11), "CQWD")
    with pytest.raises(ValueError):
        sm.qpt_scan(0.5, 20, [0.9, 1.0, 1.1], "CQWD")


def test_finite_size_fit_recovers_synthetic_law():
    Ls = np.array([20, 40, 80, 160, 320])
    pts = list(zip(Ls, 1.0 + 1.3 * Ls ** -1.5))
    fit = sm.finite_size_fit(pts)
    assert fit.alpha == pytest.approx(1.3, rel=1e-9)
    assert fit.gamma == pytest.approx(1.5, rel=1e-9)
    assert fit.gamma_err < 1e-9


def test_finite_size_fit_degenerate():
    with pytest.raises(DegenerateFit):
        sm.finite_size_fit([(10, 1.0), (20, 1.1), (40, 1.05), (80, 1.01)])


def test_thermal_state_matches_gibbs():
    hs = np.linspace(-2, 2, 20)
    worst = 0.0
    for g in (0.0, 0.5, 1.0):
        for h1 in hs:
            for h2 in hs:
                p = sm.ThermalTwoQubitParams(g, h1, h2, 1.0)
                worst = max(worst, np.max(np.abs(x_matrix(sm.thermal_two_qubit(p)) - sm.gibbs_state(p))))
    assert worst < 1e-10


@pytest.mark.parametrize("betaJ", [0.1, 2.0, 5.0])
def test_thermal_state_other_temperatures(betaJ):
    p = sm.ThermalTwoQubitParams(0.3, 0.7, -1.2, betaJ)
    assert np.allclose(x_matrix(sm.thermal_two_qubit(p)), sm.gibbs_state(p), atol=1e-10)


def test_thermal_zero_field_sum_is_finite():
    # h1 + h2 = 0 with g = 0 makes the h+ root vanish
    p = sm.ThermalTwoQubitParams(0.0, 0.4, -0.4, 1.0)
    assert np.allclose(x_matrix(sm.thermal_two_qubit(p)), sm.gibbs_state(p), atol=1e-12)


def test_thermal_high_temperature_limit():
    x = sm.thermal_two_qubit(sm.ThermalTwoQubitParams(0.5, 1.0, -0.3, 1e-9))
    assert np.allclose(x_matrix(x), np.eye(4) / 4, atol=1e-8)


def test_thermal_field_exchange_symmetry():
    for h1, h2 in [(0.3, 1.1), (-1.45, 0.55), (2.0, -0.5)]:
        a = make_x_state(sm.thermal_two_qubit(sm.ThermalTwoQubitParams(0.5, h1, h2, 1.0)))
        b = make_x_state(sm.thermal_two_qubit(sm.ThermalTwoQubitParams(0.5, h2, h1, 1.0)))
        assert np.allclose(a.swapped().matrix, b.matrix, atol=1e-14)


def test_thermal_closed_form_matches_triad():
    p = sm.thermal_two_qubit(sm.ThermalTwoQubitParams(0.5, 1.45, 0.55, 1.0))
    rho = make_x_state(p)
    for m, f in (("QD", cf.x_state_cqd), ("QWD", cf.x_state_cqwd)):
        num = cr.constrained_min(rho, ms.triad(2), m).value_constrained
        assert f(p) == pytest.approx(num, abs=1e-10)


def test_chain_observable_dispatch():
    v = sm.chain_observable(0.5, 20, 0.9, "qwd")
    assert v == pytest.approx(sm.chain_observable(0.5, 20, 0.9, "CQWD"))
    with pytest.raises(KeyError):
        sm.chain_observable(0.5, 20, 0.9, "negativity")
