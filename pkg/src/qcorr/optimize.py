"""Nelder-Mead run simultaneously on a batch of independent problems.

Each batch member has its own simplex; the objective is called on stacked
trial points so one numpy call serves every active member.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

# fun(x, idx) -> values; x has shape (len(idx), m, d), result (len(idx), m)
BatchObjective = Callable[[np.ndarray, np.ndarray], np.ndarray]


def batched_nelder_mead(
    fun: BatchObjective,
    x0: np.ndarray,
    step: float | np.ndarray,
    xatol: float = 1e-9,
    max_iter: int = 500,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimise ``fun`` from each row of ``x0`` (shape (B, d)).

    Returns the best vertex, its value and the iteration count per member.
    Standard coefficients: reflection 1, expansion 2, contraction 1/2,
    shrink 1/2. A member stops once every vertex lies within ``xatol``
    (max-norm) of its best vertex.
    """
    x0 = np.asarray(x0, dtype=float)
    B, d = x0.shape
    step = np.broadcast_to(np.asarray(step, dtype=float), (B,))
    sim = np.repeat(x0[:, None, :], d + 1, axis=1)
    for j in range(d):
        sim[:, j + 1, j] += step
    all_idx = np.arange(B)
    fs = fun(sim, all_idx)
    iters = np.zeros(B, dtype=int)
    active = np.ones(B, dtype=bool)

    for it in range(max_iter):
        order = np.argsort(fs, axis=1, kind="stable")
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        diam = np.max(np.abs(sim[:, 1:, :] - sim[:, :1, :]), axis=(1, 2))
        active &= diam >= xatol
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1
        s = sim[idx]
        f = fs[idx]
        cen = s[:, :-1, :].mean(axis=1)
        worst = s[:, -1, :]
        xr = cen + (cen - worst)
        fr = fun(xr[:, None, :], idx)[:, 0]

        new_x = worst.copy()
        new_f = f[:, -1].copy()
        shrink = np.zeros(idx.size, dtype=bool)

        exp_m = fr < f[:, 0]
        if exp_m.any():
            xe = cen[exp_m] + 2.0 * (cen[exp_m] - worst[exp_m])
            fe = fun(xe[:, None, :], idx[exp_m])[:, 0]
            take_e = fe < fr[exp_m]
            new_x[exp_m] = np.where(take_e[:, None], xe, xr[exp_m])
            new_f[exp_m] = np.where(take_e, fe, fr[exp_m])

        acc_m = ~exp_m & (fr < f[:, -2])
        new_x[acc_m] = xr[acc_m]
        new_f[acc_m] = fr[acc_m]

        con_m = ~exp_m & ~acc_m
        if con_m.any():
            outside = fr[con_m] < f[con_m, -1]
            c = cen[con_m]
            xc = np.where(
                outside[:, None],
                c + 0.5 * (xr[con_m] - c),
                c + 0.5 * (worst[con_m] - c),
            )
            fc = fun(xc[:, None, :], idx[con_m])[:, 0]
            ok = np.where(outside, fc <= fr[con_m], fc < f[con_m, -1])
            sub = np.flatnonzero(con_m)
            good = sub[ok]
            new_x[good] = xc[ok]
            new_f[good] = fc[ok]
            shrink[sub[~ok]] = True

        s[:, -1, :] = new_x
        f[:, -1] = new_f
        if shrink.any():
            sh = np.flatnonzero(shrink)
            best = s[sh, :1, :]
            pts = best + 0.5 * (s[sh, 1:, :] - best)
            s[sh, 1:, :] = pts
            f[sh, 1:] = fun(pts, idx[sh])
        sim[idx] = s
        fs[idx] = f

    order = np.argmin(fs, axis=1)
    return sim[all_idx, order], fs[all_idx, order], iters
