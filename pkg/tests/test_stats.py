import numpy as np
import pytest

from qcorr import measurements as ms
from qcorr import stats as S
from qcorr.correlations import RefineSettings, reference_values
from qcorr.errors import InsufficientSamples, NegativeResidual
from qcorr.states import PAULI, BipartiteDensityMatrix

FAST = RefineSettings(n_ftheta=20, n_phi=40, n_starts=2)


def test_power_law_fit_recovers_synthetic():
    ns = [2, 4, 8, 16, 32, 64]
    pts = [(n, 0.12 + 0.5 * n**-1.9) for n in ns]
    fit = S.fit_power_law(pts, 0.12)
    assert fit.tau == pytest.approx(1.9, abs=1e-6)
    assert fit.kappa == pytest.approx(0.5, abs=1e-6)
    assert fit.resid_se < 1e-10 and not fit.flagged


def test_power_law_negative_residual():
    with pytest.raises(NegativeResidual):
        S.fit_power_law([(2, 0.3), (4, 0.2), (8, 0.1), (16, 0.09)], 0.1)
    with pytest.raises(ValueError):
        S.fit_power_law([(2, 0.3), (4, 0.2)], 0.1)


def test_power_law_flag_on_noisy_data():
    rng = np.random.default_rng(1)
    pts = [(n, 0.1 + 0.5 * n**-1.5 * np.exp(rng.normal(0, 1.0))) for n in (2, 4, 8, 16)]
    assert S.fit_power_law(pts, 0.1).flagged


def test_linear_fit_exact():
    m, c = S.fit_linear([(x, 3.0 - 0.25 * x) for x in (1, 3, 5, 7)])
    assert m == pytest.approx(-0.25, abs=1e-12)
    assert c == pytest.approx(3.0, abs=1e-12)


def test_ensemble_spec_validation():
    with pytest.raises(ValueError):
        S.EnsembleSpec(ppt="BE")
    with pytest.raises(ValueError):
        S.EnsembleSpec(family="gaussian")
    with pytest.raises(ValueError):
        S.EnsembleSpec(family="rho_m", dA=2, dB=3)
    with pytest.raises(ValueError):
        S.EnsembleSpec(samples=0)


def test_sampling_is_deterministic_and_index_addressed():
    spec = S.EnsembleSpec(rank=3, samples=50, seed=11)
    a, _ = S.sample_ensemble(spec)
    b, _ = S.sample_ensemble(spec)
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a, b))
    assert np.array_equal(S.draw_state(spec, 17).matrix, a[17].matrix)


def test_ppt_filter_and_insufficient_samples():
    states, idx = S.sample_ensemble(S.EnsembleSpec(rank=4, samples=300, seed=2, ppt="NPPT"))
    assert len(states) == len(idx) and len(states) > 100
    with pytest.raises(InsufficientSamples):
        S.sample_ensemble(S.EnsembleSpec(rank=2, samples=200, seed=2, ppt="PPT"))


@pytest.mark.parametrize("family", ["correlator", "rho_m"])
def test_correlator_families_sample(family):
    states, _ = S.sample_ensemble(S.EnsembleSpec(samples=20, seed=3, family=family))
    for s in states:
        assert np.min(s.eigenvalues()) > -1e-12


def test_error_stats_and_histogram():
    E = S.EnsembleErrors(S.EnsembleSpec(rank=2, samples=150, seed=5), FAST)
    st = E.stats(ms.circle_fixed_ftheta(0.0, 4), "QD")
    assert st.samples == 150 and st.rank == 2
    width = np.diff(st.edges)
    assert np.sum(st.density * width) == pytest.approx(1.0, abs=1e-12)
    lo, hi = st.ci()
    assert lo <= st.mean <= hi
    assert np.all(st.values >= 0)


def test_parallel_reference_matches_serial():
    states, _ = S.sample_ensemble(S.EnsembleSpec(rank=3, samples=60, seed=4))
    opts = RefineSettings(n_ftheta=20, n_phi=40, n_starts=2, chunk=16)
    serial = S.parallel_reference(states, "QWD", opts, jobs=1)
    par = S.parallel_reference(states, "QWD", opts, jobs=2)
    assert np.array_equal(serial[0], par[0])


def test_bootstrap_verdicts():
    rng = np.random.default_rng(0)
    a = rng.normal(1.0, 0.1, 500)
    b = rng.normal(1.1, 0.1, 500)
    assert S.bootstrap_less(a, b)[0]
    assert not S.bootstrap_less(b, a)[0]
    assert S.bootstrap_paired_greater(b, a)[0]
    same = rng.normal(0, 1, 400)
    assert not S.bootstrap_paired_greater(same, same)[0]
    assert S.bootstrap_means(a, 50, 3).shape == (50,)


def _haar_axes(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_landscape_uniform_for_isotropic_axes():
    land = S.Landscape.from_axes(_haar_axes(20000, 0), "QD")
    p_f, p_phi = land.uniformity_pvalues()
    assert p_f > 0.01 and p_phi > 0.01
    area = np.outer(np.diff(land.f_edges), np.diff(land.phi_edges))
    assert np.sum(land.density * area) == pytest.approx(1.0, abs=1e-12)
    m1, m2 = land.marginals()
    assert np.sum(m1 * np.diff(land.f_edges)) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(m2 * np.diff(land.phi_edges)) == pytest.approx(1.0, abs=1e-12)


def test_landscape_concentrates_on_triad_for_bell_diagonal():
    states, _ = S.sample_ensemble(S.EnsembleSpec(samples=80, seed=6, family="correlator"))
    # twirl away the magnetisations and off-diagonal correlators
    bd = []
    for s in states:
        m = s.matrix
        for p in PAULI.values():
            m = 0.5 * (m + np.kron(p, p) @ m @ np.kron(p, p))
        bd.append(BipartiteDensityMatrix(2, 2, m))
    axes = reference_values(bd, "QD", FAST)[1]
    frac = S.region_fractions(S.Landscape.from_axes(axes, "QD"))
    assert frac["union"] == pytest.approx(1.0)


def test_region_geometry():
    f = np.array([-0.95, 0.95, 0.0, 0.0, 0.0, 0.5])
    phi = np.array([1.0, 2.0, 0.1, np.pi - 0.1, np.pi / 2, np.pi / 2])
    masks = S.region_masks(f, phi)
    assert masks[1].tolist() == [True, False, False, False, False, False]
    assert masks[2].tolist() == [False, True, False, False, False, False]
    assert masks[3].tolist() == [False, False, True, False, False, False]
    assert masks[4].tolist() == [False, False, False, True, False, False]
    assert masks[5].tolist() == [False, False, False, False, True, False]


def test_csv_writers(tmp_path):
    p = tmp_path / "errors.csv"
    S.write_errors_csv(p, np.array([0, 3]), np.array([0.1, 1 / 3]), 2, "ALL", "QD", "CircleFixedFTheta", 8)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "sample_id,rank,ppt,measure,set_kind,n,ve"
    assert lines[2] == "3,2,ALL,QD,CircleFixedFTheta,8,0.3333333333333333"
    q = tmp_path / "land.csv"
    S.write_landscape_csv(q, S.Landscape.from_axes(_haar_axes(100, 1)))
    assert len(q.read_text().splitlines()) == 1 + S.LANDSCAPE_BINS**2


def test_be_sweep_be24_onsets():
    grid = np.round(np.arange(0.0, 0.31, 0.01), 10)
    qd = S.be_sweep("be24", grid, "QD")
    assert qd.onset(1e-6) == pytest.approx(0.15, abs=0.011)
    assert qd.ve[grid < 0.14].max() < 1e-9
    # at b = 0 all three elements tie; the sigma^z -> sigma^x change follows
    assert qd.switches()[-1] == pytest.approx(0.145)


def test_be_sweep_validation():
    with pytest.raises(ValueError):
        S.be_sweep("werner", [0.1], "QD")
    with pytest.raises(ValueError):
        S.be_sweep("be24", [0.1], "QD", side="C")


def test_thermal_scan_small_grid():
    scan = S.thermal_scan(0.5, 1.0, h_max=0.5, h_step=0.25)
    assert scan.h1.size == 25
    assert np.allclose(scan.closed_form, scan.constrained, atol=1e-10)
    h1, h2, ve = scan.argmax()
    assert ve == pytest.approx(scan.ve.max())
