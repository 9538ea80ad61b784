"""Voluntary-error statistics over state ensembles.

Ensembles are drawn one state per sample index from a counter-based
generator, so any subset (or any worker split) of the indices reproduces
the same states.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .closed_forms import x_state_cqd, x_state_cqwd
from .correlations import Evaluator, RefineSettings, _measure, reference_values
from .errors import InsufficientSamples, NegativeResidual
from .measurements import EarmarkedSet, axis_to_params, triad
from .spin_models import ThermalTwoQubitParams, thermal_two_qubit
from .states import (
    BipartiteDensityMatrix,
    be_2x4,
    be_3x3_horodecki,
    be_3x3_tiles,
    classify_ppt,
    make_correlator_state,
    make_x_state,
    rng_for,
    sample_correlator_params,
    sample_haar_mixed,
)

VE_BINS = 100
LANDSCAPE_BINS = 40
BOOTSTRAP = 1000
MIN_CLASS_SAMPLES = 100
FAMILIES = ("haar", "correlator", "rho_m")


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for a reproducible state ensemble.

    ``family`` is ``haar`` (fixed-rank induced measure), ``correlator``
    (nine free correlators and magnetisations) or ``rho_m`` (magnetisations
    along ``beta_axis`` only). ``ppt`` filters after sampling.
    """

    dA: int = 2
    dB: int = 2
    rank: int = 4
    ppt: str = "ALL"
    samples: int = 10_000
    seed: int = 0
    family: str = "haar"
    beta_axis: str = "x"

    def __post_init__(self):
        if self.ppt not in ("ALL", "PPT", "NPPT"):
            raise ValueError(f"ppt filter must be ALL, PPT or NPPT, got {self.ppt!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown ensemble family {self.family!r}")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.family != "haar" and (self.dA, self.dB) != (2, 2):
            raise ValueError(f"{self.family} ensemble is two-qubit only")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def draw_state(spec: EnsembleSpec, index: int) -> BipartiteDensityMatrix:
    if spec.family == "haar":
        return sample_haar_mixed(spec.dA, spec.dB, spec.rank, spec.seed, index)
    axis = spec.beta_axis if spec.family == "rho_m" else None
    return make_correlator_state(sample_correlator_params(rng_for(spec.seed, index), axis))


def sample_ensemble(spec: EnsembleSpec) -> tuple[list[BipartiteDensityMatrix], np.ndarray]:
    """States passing the PPT filter, with their sample indices."""
    states, kept = [], []
    for i in range(spec.samples):
        rho = draw_state(spec, i)
        if spec.ppt == "ALL" or classify_ppt(rho) == spec.ppt:
            states.append(rho)
            kept.append(i)
    if spec.ppt != "ALL" and len(states) < MIN_CLASS_SAMPLES:
        raise InsufficientSamples(
            f"{spec.ppt} filter kept {len(states)} of {spec.samples} states (< {MIN_CLASS_SAMPLES})"
        )
    return states, np.array(kept, dtype=int)


def _reference_chunk(args):
    mats, dA, dB, measure, opts = args
    states = [BipartiteDensityMatrix(dA, dB, m) for m in mats]
    return reference_values(states, measure, opts)


def parallel_reference(
    states: Sequence[BipartiteDensityMatrix],
    measure: str,
    opts: RefineSettings | None = None,
    jobs: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """reference_values split over ``jobs`` processes; output order is fixed."""
    opts = opts or RefineSettings()
    if jobs <= 1 or len(states) < 2 * opts.chunk:
        return reference_values(states, measure, opts)
    dA, dB = states[0].dA, states[0].dB
    mats = np.stack([s.matrix for s in states])
    parts = [
        (mats[lo : lo + opts.chunk], dA, dB, measure, opts)
        for lo in range(0, len(states), opts.chunk)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        res = list(pool.map(_reference_chunk, parts))
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])


class EnsembleErrors:
    """Sampled ensemble with cached reference minima per measure."""

    def __init__(self, spec: EnsembleSpec, opts: RefineSettings | None = None, jobs: int = 1):
        self.spec = spec
        self.opts = opts or RefineSettings()
        self.jobs = jobs
        self.states, self.indices = sample_ensemble(spec)
        self.ev = Evaluator(self.states)
        self._ref: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self):
        return len(self.states)

    def reference(self, measure: str) -> tuple[np.ndarray, np.ndarray]:
        m = _measure(measure)
        if m not in self._ref:
            self._ref[m] = parallel_reference(self.states, m, self.opts, self.jobs)
        return self._ref[m]

    def ve(self, eset: EarmarkedSet, measure: str) -> np.ndarray:
        ref = self.reference(measure)[0]
        return np.abs(self.ev.set_min(eset, measure) - ref)

    def stats(self, eset: EarmarkedSet, measure: str) -> "ErrorStats":
        return ErrorStats.from_values(self.ve(eset, measure), self.spec.rank, self.spec.ppt)


@dataclass
class ErrorStats:
    samples: int
    mean: float
    stderr: float
    max: float
    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    rank: int
    ppt_class: str
    values: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, ve: np.ndarray, rank: int, ppt_class: str = "ALL") -> "ErrorStats":
        ve = np.asarray(ve, dtype=float)
        density, edges = np.histogram(np.clip(ve, 0.0, 1.0), bins=VE_BINS, range=(0.0, 1.0), density=True)
        se = float(ve.std(ddof=1) / np.sqrt(ve.size)) if ve.size > 1 else 0.0
        return cls(ve.size, float(ve.mean()), se, float(ve.max()), edges, density, rank, ppt_class, ve)

    def ci(self, level: float = 0.95, seed: int = 0) -> tuple[float, float]:
        return bootstrap_mean_ci(self.values, level=level, seed=seed)


def average_ve(
    spec: EnsembleSpec,
    eset: EarmarkedSet,
    measure: str,
    opts: RefineSettings | None = None,
    jobs: int = 1,
) -> ErrorStats:
    """Monte Carlo mean voluntary error of ``eset`` over the ensemble."""
    return EnsembleErrors(spec, opts, jobs).stats(eset, measure)


# -- bootstrap --------------------------------------------------------------------

def bootstrap_means(values: np.ndarray, n_boot: int = BOOTSTRAP, seed: int = 0) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    return values[idx].mean(axis=1)


def bootstrap_mean_ci(values, level: float = 0.95, n_boot: int = BOOTSTRAP, seed: int = 0) -> tuple[float, float]:
    m = bootstrap_means(values, n_boot, seed)
    a = (1 - level) / 2
    return float(np.quantile(m, a)), float(np.quantile(m, 1 - a))


def bootstrap_less(a, b, level: float = 0.95, n_boot: int = BOOTSTRAP, seed: int = 0) -> tuple[bool, float]:
    """Is mean(a) < mean(b) at ``level``? Independent samples.

    Returns the verdict and the bootstrap fraction of resamples with
    mean(a) < mean(b).
    """
    ma = bootstrap_means(a, n_boot, seed)
    mb = bootstrap_means(b, n_boot, seed + 1)
    frac = float(np.mean(ma < mb))
    return frac >= level, frac


def bootstrap_paired_greater(a, b, level: float = 0.95, n_boot: int = BOOTSTRAP, seed: int = 0) -> tuple[bool, float]:
    """Is mean(a) > mean(b) for paired samples (same states)?"""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    frac = float(np.mean(bootstrap_means(d, n_boot, seed) > 0))
    return frac >= level, frac


# -- fits ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    kappa: float
    tau: float
    eps_inf: float
    kappa_err: float
    tau_err: float
    resid_se: float

    @property
    def flagged(self) -> bool:
        """Loose fit: tau uncertainty above 10% of tau."""
        return self.tau_err > 0.1 * abs(self.tau)


def fit_power_law(points: Iterable[tuple[float, float]], eps_inf: float) -> PowerLawFit:
    """Fit mean_ve(n) = eps_inf + kappa n^-tau with eps_inf held fixed."""
    pts = np.asarray(list(points), dtype=float)
    if pts.shape[0] < 4:
        raise ValueError("need at least 4 points")
    excess = pts[:, 1] - eps_inf
    if np.any(excess <= 0):
        bad = pts[excess <= 0, 0].tolist()
        raise NegativeResidual(f"mean ve <= eps_inf at n = {bad}")
    x, y = np.log(pts[:, 0]), np.log(excess)
    res = sps.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    dof = max(len(x) - 2, 1)
    kappa = float(np.exp(res.intercept))
    return PowerLawFit(
        kappa=kappa,
        tau=float(-res.slope),
        eps_inf=float(eps_inf),
        kappa_err=float(kappa * res.intercept_stderr),
        tau_err=float(res.stderr),
        resid_se=float(np.sqrt(resid @ resid / dof)),
    )


def fit_linear(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares slope and intercept."""
    pts = np.asarray(list(points), dtype=float)
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 points")
    m, c = np.polyfit(pts[:, 0], pts[:, 1], 1)
    return float(m), float(c)


# -- optimizer landscape --------------------------------------------------------------

@dataclass
class Landscape:
    f_theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    f_edges: np.ndarray = field(repr=False)
    phi_edges: np.ndarray = field(repr=False)
    measure: str = ""

    @classmethod
    def from_axes(cls, axes: np.ndarray, measure: str = "", bins: int = LANDSCAPE_BINS) -> "Landscape":
        f, phi = axis_to_params(axes)
        counts, fe, pe = np.histogram2d(f, phi, bins=bins, range=[[-1.0, 1.0], [0.0, np.pi]])
        return cls(f, phi, counts, fe, pe, measure)

    @property
    def density(self) -> np.ndarray:
        area = np.outer(np.diff(self.f_edges), np.diff(self.phi_edges))
        return self.counts / (self.counts.sum() * area)

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        """Densities P1(f_theta) and P2(phi) on the landscape bins."""
        n = self.counts.sum()
        p1 = self.counts.sum(axis=1) / (n * np.diff(self.f_edges))
        p2 = self.counts.sum(axis=0) / (n * np.diff(self.phi_edges))
        return p1, p2

    def uniformity_pvalues(self) -> tuple[float, float]:
        """Chi-square p-values of both marginals against uniform."""
        return (
            float(sps.chisquare(self.counts.sum(axis=1)).pvalue),
            float(sps.chisquare(self.counts.sum(axis=0)).pvalue),
        )


def optimizer_landscape(
    spec: EnsembleSpec | EnsembleErrors,
    measure: str,
    opts: RefineSettings | None = None,
    jobs: int = 1,
) -> Landscape:
    """Histogram of reference optimizer locations over folded (f_theta, phi)."""
    ens = spec if isinstance(spec, EnsembleErrors) else EnsembleErrors(spec, opts, jobs)
    if ens.spec.dA != 2:
        raise ValueError("optimizer landscape needs a qubit on A")
    return Landscape.from_axes(ens.reference(measure)[1], _measure(measure))


def region_masks(f: np.ndarray, phi: np.ndarray, omega: float = 0.3) -> dict[int, np.ndarray]:
    """Marked regions 1-5 around the sigma^z poles and the sigma^x, sigma^y loci."""
    f, phi = np.asarray(f), np.asarray(phi)
    w2 = omega * omega
    return {
        1: f <= -0.9,
        2: f >= 0.9,
        3: f**2 + phi**2 <= w2,
        4: f**2 + (phi - np.pi) ** 2 <= w2,
        5: f**2 + (phi - np.pi / 2) ** 2 <= w2,
    }


def region_fractions(landscape: Landscape, omega: float = 0.3) -> dict[str, float]:
    masks = region_masks(landscape.f_theta, landscape.phi, omega)
    out = {str(k): float(v.mean()) for k, v in masks.items()}
    out["union"] = float(np.logical_or.reduce(list(masks.values())).mean())
    return out


# -- CSV output -------------------------------------------------------------------------

def _write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_errors_csv(path, sample_ids, ve, rank, ppt, measure, set_kind, n) -> None:
    rows = ((int(i), rank, ppt, measure, set_kind, n, float(e)) for i, e in zip(sample_ids, ve))
    _write_csv(path, ("sample_id", "rank", "ppt", "measure", "set_kind", "n", "ve"), rows)


def write_scaling_csv(path, rows: Iterable[tuple[int, float, float]]) -> None:
    _write_csv(path, ("n", "mean_ve", "stderr"), rows)


def write_landscape_csv(path, landscape: Landscape) -> None:
    dens = landscape.density
    rows = (
        (i, j, float(dens[i, j]))
        for i in range(dens.shape[0])
        for j in range(dens.shape[1])
    )
    _write_csv(path, ("f_theta_bin", "phi_bin", "density"), rows)


# -- parameter sweeps ---------------------------------------------------------------------

@dataclass
class Sweep:
    """Triad-constrained against reference values along a one-parameter family."""

    param: np.ndarray
    constrained: np.ndarray  # (P, 3) values per triad element (x, y, z)
    reference: np.ndarray
    measure: str
    side: str = "A"

    @property
    def cmin(self) -> np.ndarray:
        return self.constrained.min(axis=1)

    @property
    def ve(self) -> np.ndarray:
        return np.abs(self.cmin - self.reference)

    @property
    def argmin_label(self) -> list[str]:
        """Optimal triad element; near-ties (1e-10) go to the earlier one."""
        best = self.constrained.min(axis=1, keepdims=True)
        return ["xyz"[k] for k in np.argmax(self.constrained <= best + 1e-10, axis=1)]

    def onset(self, threshold: float) -> float | None:
        """First parameter with ve above ``threshold``."""
        hit = np.flatnonzero(self.ve > threshold)
        return float(self.param[hit[0]]) if hit.size else None

    def switches(self) -> list[float]:
        """Midpoints where the optimal triad element changes."""
        lab = self.argmin_label
        return [
            float(0.5 * (self.param[i] + self.param[i + 1]))
            for i in range(len(lab) - 1)
            if lab[i] != lab[i + 1]
        ]


BE_FAMILIES = ("be24", "tiles", "horodecki")


def be_sweep(
    family: str,
    grid: Sequence[float],
    measure: str,
    side: str = "A",
    opts: RefineSettings | None = None,
) -> Sweep:
    """Spin-triad VE along a bound-entangled family.

    ``side = "B"`` measures the second party by swapping subsystems first.
    """
    build = {"be24": be_2x4, "tiles": be_3x3_tiles, "horodecki": be_3x3_horodecki}
    if family not in build:
        raise ValueError(f"family must be one of {BE_FAMILIES}, got {family!r}")
    if side not in ("A", "B"):
        raise ValueError("side must be A or B")
    grid = np.asarray(grid, dtype=float)
    states = [build[family](float(x)) for x in grid]
    if side == "B":
        states = [s.swapped() for s in states]
    ev = Evaluator(states)
    m = _measure(measure)
    cons = ev.set_values(triad(states[0].dA), m)
    ref = reference_values(ev, m, opts)[0]
    return Sweep(grid, cons, ref, m, side)


@dataclass
class ThermalScan:
    h1: np.ndarray
    h2: np.ndarray
    closed_form: np.ndarray
    constrained: np.ndarray
    reference: np.ndarray
    measure: str

    @property
    def ve(self) -> np.ndarray:
        return np.abs(self.constrained - self.reference)

    def argmax(self) -> tuple[float, float, float]:
        i = int(np.argmax(self.ve))
        return float(self.h1[i]), float(self.h2[i]), float(self.ve[i])


def thermal_scan(
    g: float,
    betaJ: float,
    h_max: float = 2.0,
    h_step: float = 0.05,
    measure: str = "QWD",
    eset: EarmarkedSet | None = None,
    opts: RefineSettings | None = None,
) -> ThermalScan:
    """VE of an earmarked set (triad by default) over the (h1/J, h2/J) grid."""
    m = _measure(measure)
    k = int(round(h_max / h_step))
    hs = np.round(np.arange(-k, k + 1) * h_step, 12)
    H1, H2 = np.meshgrid(hs, hs, indexing="ij")
    xs = [thermal_two_qubit(ThermalTwoQubitParams(g, a, b, betaJ)) for a, b in zip(H1.ravel(), H2.ravel())]
    closed = x_state_cqd if m == "QD" else x_state_cqwd
    cf = np.array([closed(x) for x in xs])
    ev = Evaluator([make_x_state(x) for x in xs])
    cons = ev.set_min(eset or triad(2), m)
    ref = reference_values(ev, m, opts)[0]
    return ThermalScan(H1.ravel(), H2.ravel(), cf, cons, ref, m)
