"""Batch driver: ``qcorr <subcommand> [flags]``.

Every run writes CSV files under ``--out`` and prints a JSON manifest
(parameters, seed, versions, wall time, outputs) to stdout. Exit status is
2 for invalid flags and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, closed_forms, spin_models, stats
from .correlations import constrained_min, reference_min, voluntary_error
from .errors import (
    DegenerateFit,
    GridTooCoarse,
    InsufficientSamples,
    NegativeResidual,
    NonPhysicalOperator,
    QCorrError,
)
from .measurements import (
    circle_fixed_ftheta,
    circle_fixed_phi,
    disc_stack,
    sphere_grid,
    triad,
)
from .states import BipartiteDensityMatrix, XStateParams, make_x_state, random_x_params, rng_for

NUMERICAL = (NonPhysicalOperator, GridTooCoarse, DegenerateFit, NegativeResidual, InsufficientSamples,
             np.linalg.LinAlgError, FloatingPointError)


log = logging.getLogger("qcorr")


class UsageError(Exception):
    """Flag combination rejected after parsing."""


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _jobs(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("QCORR_JOBS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise UsageError(f"QCORR_JOBS must be an integer, got {env!r}") from None


def _make_set(args, n: int | None = None, n2: int | None = None):
    kind = args.set
    if kind == "circle":
        return circle_fixed_ftheta(args.ftheta, n or args.n)
    if kind == "circle-phi":
        return circle_fixed_phi(args.phi, n or args.n, args.f_spacing)
    if kind == "disc":
        return disc_stack(args.ftheta, args.n1, n2 or args.n2)
    if kind == "sphere":
        return sphere_grid(args.n1, n2 or args.n2)
    if kind == "triad":
        return triad(2)
    raise UsageError(f"unknown set {kind!r}")


def _spec(args) -> stats.EnsembleSpec:
    return stats.EnsembleSpec(
        dA=2, dB=2, rank=args.rank, ppt=args.ppt.upper(), samples=args.samples,
        seed=args.seed, family=args.family, beta_axis=args.beta_axis,
    )


def _out(args, name: str) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _write_rows(path: Path, header, rows) -> None:
    stats._write_csv(path, header, rows)


# -- subcommands -------------------------------------------------------------------

def _ensemble(args) -> stats.EnsembleErrors:
    log.info("sampling %d states (seed %d)", args.samples, args.seed)
    ens = stats.EnsembleErrors(_spec(args), jobs=args.jobs)
    log.info("kept %d states; computing reference minima on %d worker(s)", len(ens), args.jobs)
    return ens


def cmd_sample_errors(args) -> dict:
    eset = _make_set(args)
    ens = _ensemble(args)
    st = ens.stats(eset, args.measure)
    path = _out(args, "errors.csv")
    stats.write_errors_csv(path, ens.indices, st.values, args.rank, args.ppt.upper(),
                           args.measure.upper(), eset.kind, eset.n)
    lo, hi = st.ci(seed=args.seed)
    hist = _out(args, "histogram.csv")
    _write_rows(hist, ("bin_lo", "bin_hi", "density"),
                zip(st.edges[:-1], st.edges[1:], st.density))
    return {
        "outputs": [str(path), str(hist)],
        "result": {"samples": st.samples, "mean_ve": st.mean, "stderr": st.stderr,
                   "ci95": [lo, hi], "max_ve": st.max, "set": eset.to_json()},
    }


def cmd_fit_scaling(args) -> dict:
    ens = _ensemble(args)
    rows = []
    if args.set == "disc":
        sizes = args.n2_list
        for n2 in sizes:
            log.info("n2 = %d", n2)
            st = ens.stats(_make_set(args, n2=n2), args.measure)
            rows.append((n2, st.mean, st.stderr))
        m, c = stats.fit_linear([(r[0], r[1]) for r in rows])
        fit = {"model": "linear", "m": m, "c": c}
    else:
        for n in args.n_list:
            log.info("n = %d", n)
            st = ens.stats(_make_set(args, n=n), args.measure)
            rows.append((n, st.mean, st.stderr))
        eps_inf = ens.stats(_make_set(args, n=args.n_inf), args.measure).mean
        pl = stats.fit_power_law([(r[0], r[1]) for r in rows], eps_inf)
        fit = {"model": "power_law", "kappa": pl.kappa, "tau": pl.tau, "eps_inf": pl.eps_inf,
               "kappa_err": pl.kappa_err, "tau_err": pl.tau_err, "resid_se": pl.resid_se,
               "flagged": pl.flagged, "n_inf": args.n_inf}
    path = _out(args, "scaling.csv")
    stats.write_scaling_csv(path, rows)
    fpath = _out(args, "fit.json")
    fpath.write_text(json.dumps(fit, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"outputs": [str(path), str(fpath)], "result": fit}


def cmd_landscape(args) -> dict:
    ens = _ensemble(args)
    land = stats.optimizer_landscape(ens, args.measure)
    path = _out(args, "landscape.csv")
    stats.write_landscape_csv(path, land)
    p1, p2 = land.uniformity_pvalues()
    return {
        "outputs": [str(path)],
        "result": {"regions": stats.region_fractions(land, args.omega),
                   "chi2_p_ftheta": p1, "chi2_p_phi": p2},
    }


def cmd_xstate_eval(args) -> dict:
    if args.random:
        xs = [random_x_params(rng_for(args.seed, i)) for i in range(args.random)]
    else:
        vals = [args.a1, args.a2, args.a3, args.a4, args.b1, args.b2]
        if any(v is None for v in vals):
            raise UsageError("give --a1 .. --b2 or --random N")
        xs = [XStateParams(*vals).validate()]
    rows = []
    for i, x in enumerate(xs):
        rho = make_x_state(x)
        cqd, cqwd = closed_forms.x_state_cqd(x), closed_forms.x_state_cqwd(x)
        qd = reference_min(rho, "QD").value_actual
        qwd = reference_min(rho, "QWD").value_actual
        rows.append((i, x.a1, x.a2, x.a3, x.a4, x.b1, x.b2, cqd, qd, abs(cqd - qd), cqwd, qwd, abs(cqwd - qwd)))
    path = _out(args, "xstates.csv")
    _write_rows(path, ("index", "a1", "a2", "a3", "a4", "b1", "b2",
                       "cqd", "qd", "ve_qd", "cqwd", "qwd", "ve_qwd"), rows)
    return {"outputs": [str(path)],
            "result": {"states": len(rows), "max_ve_qd": max(r[9] for r in rows),
                       "max_ve_qwd": max(r[12] for r in rows)}}


def cmd_spin_scan(args) -> dict:
    measure = "CQWD" if args.measure.lower() in ("qwd", "cqwd") else "CQD"
    curve_rows, peak_rows = [], []
    for L in args.L_list:
        log.info("L = %d", L)
        grid = spin_models.default_lambda_grid(L, args.points)
        peak, curve = spin_models.qpt_scan(args.g, L, grid, measure)
        curve_rows += [(L, lam, q, dq) for lam, q, dq in curve]
        peak_rows.append((L, peak))
    fit = spin_models.finite_size_fit(peak_rows)
    cpath, ppath = _out(args, "scan.csv"), _out(args, "peaks.csv")
    _write_rows(cpath, ("L", "lambda", "Q", "dQ_dlambda"), curve_rows)
    _write_rows(ppath, ("L", "lambda_cL"), peak_rows)
    return {"outputs": [str(cpath), str(ppath)],
            "result": {"measure": measure, "alpha": fit.alpha, "gamma": fit.gamma,
                       "alpha_err": fit.alpha_err, "gamma_err": fit.gamma_err}}


def cmd_thermal_scan(args) -> dict:
    eset = triad(2) if args.set == "triad" else sphere_grid(args.n1, args.n2)
    sc = stats.thermal_scan(args.g, args.betaJ, args.h_max, args.h_step, args.measure, eset)
    path = _out(args, "thermal.csv")
    _write_rows(path, ("h1_over_J", "h2_over_J", "closed_form", "constrained", "reference", "ve"),
                zip(sc.h1, sc.h2, sc.closed_form, sc.constrained, sc.reference, sc.ve))
    h1, h2, vmax = sc.argmax()
    return {"outputs": [str(path)],
            "result": {"max_ve": vmax, "at": [h1, h2], "set": eset.to_json()}}


def cmd_be_sweep(args) -> dict:
    lo, hi = {"be24": (0.0, 1.0), "tiles": (0.0, 1.0), "horodecki": (0.0, 5.0)}[args.state]
    k = int(round((hi - lo) / args.step))
    grid = np.round(lo + args.step * np.arange(k + 1), 12)
    sw = stats.be_sweep(args.state, grid, args.measure, args.side)
    path = _out(args, "sweep.csv")
    c = sw.constrained
    _write_rows(path, ("param", "triad_x", "triad_y", "triad_z", "constrained", "reference", "ve", "argmin"),
                zip(sw.param, c[:, 0], c[:, 1], c[:, 2], sw.cmin, sw.reference, sw.ve, sw.argmin_label))
    return {"outputs": [str(path)],
            "result": {"onset": sw.onset(args.threshold), "switches": sw.switches(),
                       "max_ve": float(sw.ve.max()), "argmax": float(sw.param[np.argmax(sw.ve)])}}


def cmd_eval_state(args) -> dict:
    rho = BipartiteDensityMatrix.from_json(Path(args.file).read_text(encoding="utf-8")).validate()
    eset = triad(rho.dA) if args.set == "triad" else _make_set(args)
    ev = voluntary_error(rho, eset, args.measure) if args.with_reference else constrained_min(rho, eset, args.measure)
    result = ev.to_dict()
    path = _out(args, "eval.json")
    path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"outputs": [str(path)], "result": result}


COMMANDS = {
    "sample-errors": cmd_sample_errors,
    "fit-scaling": cmd_fit_scaling,
    "landscape": cmd_landscape,
    "xstate-eval": cmd_xstate_eval,
    "spin-scan": cmd_spin_scan,
    "thermal-scan": cmd_thermal_scan,
    "be-sweep": cmd_be_sweep,
    "eval-state": cmd_eval_state,
}


def _set_flags(default: str) -> argparse.ArgumentParser:
    # a fresh parent per default: parents share their action objects
    sets = argparse.ArgumentParser(add_help=False)
    sets.add_argument("--set", default=default, choices=["circle", "circle-phi", "disc", "sphere", "triad"])
    sets.add_argument("--ftheta", type=float, default=0.0)
    sets.add_argument("--phi", type=float, default=0.0)
    sets.add_argument("--f-spacing", default="inclusive", choices=["inclusive", "divisions"],
                      help="f_theta placement for circle-phi")
    sets.add_argument("--n", type=int, default=8)
    sets.add_argument("--n1", type=int, default=8)
    sets.add_argument("--n2", type=int, default=1)
    return sets


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="experiment seed")
    common.add_argument("--samples", type=int, default=10_000, help="ensemble size")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default $QCORR_JOBS or 1)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--quiet", action="store_true", help="no progress messages on stderr")

    ens = argparse.ArgumentParser(add_help=False)
    ens.add_argument("--rank", type=int, default=2)
    ens.add_argument("--ppt", default="ALL", type=str.upper, choices=["ALL", "PPT", "NPPT"])
    ens.add_argument("--family", default="haar", choices=list(stats.FAMILIES))
    ens.add_argument("--beta-axis", default="x", choices=["x", "y", "z"])
    ens.add_argument("--measure", default="qd", type=str.lower, choices=["qd", "qwd"])

    sets = _set_flags("circle")

    p = argparse.ArgumentParser(prog="qcorr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qcorr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("sample-errors", parents=[common, ens, sets], help="VE distribution of one earmarked set")

    fs = sub.add_parser("fit-scaling", parents=[common, ens, sets], help="mean VE against set size, with fit")
    fs.add_argument("--n-list", type=_int_list, default=[2, 4, 8, 16, 32, 64])
    fs.add_argument("--n2-list", type=_int_list, default=[1, 3, 5, 7, 9, 11])
    fs.add_argument("--n-inf", type=int, default=4096, help="set size standing in for n -> infinity")

    ls = sub.add_parser("landscape", parents=[common, ens], help="optimizer (f_theta, phi) histogram")
    ls.add_argument("--omega", type=float, default=0.3)

    xs = sub.add_parser("xstate-eval", parents=[common], help="closed-form CQD/CQWD against reference")
    for name in ("a1", "a2", "a3", "a4", "b1", "b2"):
        xs.add_argument(f"--{name}", type=float)
    xs.add_argument("--random", type=int, default=0, help="evaluate N random X states instead")

    sp = sub.add_parser("spin-scan", parents=[common], help="XY-chain QPT finite-size scaling")
    sp.add_argument("--g", type=float, default=0.5)
    sp.add_argument("--L-list", type=_int_list, default=[20, 40, 80, 160, 320, 640, 1280, 2560])
    sp.add_argument("--measure", default="cqwd", type=str.lower, choices=["qd", "qwd", "cqd", "cqwd"])
    sp.add_argument("--points", type=int, default=101, help="lambda grid points per L")

    th = sub.add_parser("thermal-scan", parents=[common], help="two-qubit thermal XY state VE map")
    th.add_argument("--g", type=float, default=0.5)
    th.add_argument("--betaJ", type=float, default=1.0)
    th.add_argument("--h-max", type=float, default=2.0)
    th.add_argument("--h-step", type=float, default=0.05)
    th.add_argument("--measure", default="qwd", type=str.lower, choices=["qd", "qwd"])
    th.add_argument("--set", default="triad", choices=["triad", "sphere"])
    th.add_argument("--n1", type=int, default=8)
    th.add_argument("--n2", type=int, default=1)

    be = sub.add_parser("be-sweep", parents=[common], help="triad VE along a bound-entangled family")
    be.add_argument("--state", default="be24", choices=list(stats.BE_FAMILIES))
    be.add_argument("--measure", default="qd", type=str.lower, choices=["qd", "qwd"])
    be.add_argument("--step", "--b-step", dest="step", type=float, default=0.01)
    be.add_argument("--side", default="A", type=str.upper, choices=["A", "B"])
    be.add_argument("--threshold", type=float, default=1e-4, help="VE level counted as nonzero")

    es = sub.add_parser("eval-state", parents=[common, _set_flags("triad")], help="evaluate one state from JSON")
    es.add_argument("--file", required=True)
    es.add_argument("--measure", default="qd", type=str.lower, choices=["qd", "qwd"])
    es.add_argument("--with-reference", action="store_true", help="also compute the reference minimum")
    return p


def _manifest(args, argv, started: float, payload: dict) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "command"}
    return {
        "command": args.command,
        "argv": argv,
        "parameters": params,
        "seed": args.seed,
        "versions": {"qcorr": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time_s": round(time.perf_counter() - started, 3),
        **payload,
    }


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="qcorr: %(message)s", stream=sys.stderr)
    started = time.perf_counter()
    try:
        args.jobs = _jobs(args.jobs)
        if args.samples < 1 or args.jobs < 1:
            raise UsageError("--samples and --jobs must be positive")
        with np.errstate(divide="ignore", invalid="ignore"):
            payload = COMMANDS[args.command](args)
    except NUMERICAL as exc:
        print(f"qcorr: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (UsageError, QCorrError, ValueError, FileNotFoundError) as exc:
        print(f"qcorr: invalid arguments: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(_manifest(args, argv, started, payload), indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
