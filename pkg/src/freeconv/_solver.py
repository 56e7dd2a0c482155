"""Damped fixed-point driver with Newton fallback and continuation ladders.

All three subordination systems reduce to a fixed point w = T(w; z) whose
map preserves the relevant region (Im w >= Im z on the half-plane, |w| < 1
on the disk).  The driver iterates a whole batch of query points at once:

* plain iteration with per-point damping theta, halved when the update size
  grows twice in a row (oscillation detection), starting from w0 = z;
* after `newton_after` sweeps, unconverged points switch to Newton on
  H(w) = w - T(w) with a numerically differenced derivative;
* convergence: |w_{k+1} - w_k| < fp_tol * (1 + |w_k|), cap fp_maxiter.

Evaluation near the boundary (small Im z, or |z| -> 1 on the disk) walks a
geometric continuation ladder, reusing the previous rung's solution as seed.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT, SolverConfig
from .errors import NoConvergence


def fixed_point(make_map, z, w0=None, cfg: SolverConfig = DEFAULT, require_converged=True):
    """Solve w = T(w) for a batch of points.

    make_map(w) -> T(w), vectorized.  Returns (w, iterations, converged).
    """
    z = np.asarray(z, dtype=complex)
    w = np.array(z if w0 is None else w0, dtype=complex, copy=True)
    theta = np.ones(len(w))
    last_step = np.full(len(w), np.inf)
    grow = np.zeros(len(w), dtype=int)
    active = np.ones(len(w), dtype=bool)
    iters = np.zeros(len(w), dtype=int)

    k = 0
    while k < cfg.fp_maxiter and np.any(active):
        k += 1
        tw = make_map(w)
        step = tw - w
        wn = w + theta * step
        size = np.abs(step)
        grew = size > last_step * (1.0 + 1e-15)
        grow = np.where(grew, grow + 1, 0)
        osc = grow >= 2
        theta = np.where(osc & active, np.maximum(theta / 2.0, 1.0 / 64.0), theta)
        grow = np.where(osc, 0, grow)
        done = size <= cfg.fp_tol * (1.0 + np.abs(w))
        w = np.where(active, wn, w)
        iters = np.where(active, iters + 1, iters)
        last_step = np.where(active, size, last_step)
        active &= ~done

        if k == cfg.newton_after and np.any(active):
            w_newton, newton_ok = _newton_residual(make_map, w, active, cfg)
            w = np.where(active & newton_ok, w_newton, w)
            active &= ~newton_ok

    if np.any(active):
        w_newton, newton_ok = _newton_residual(make_map, w, active, cfg)
        w = np.where(active & newton_ok, w_newton, w)
        active &= ~newton_ok
    if require_converged and np.any(active):
        bad = np.flatnonzero(active)
        raise NoConvergence(f"fixed point failed at {len(bad)} points, e.g. z = {z[bad[:3]]}")
    return w, iters, ~active


def _newton_residual(make_map, w, active, cfg, maxiter=60):
    """Newton on H(w) = w - T(w), derivative by finite differences."""
    w = np.array(w, dtype=complex, copy=True)
    ok = np.zeros(len(w), dtype=bool)
    idx = np.flatnonzero(active)
    if len(idx) == 0:
        return w, ok
    h = w[idx]
    for _ in range(maxiter):
        res = h - make_map(h)
        tol = cfg.fp_tol * (1.0 + np.abs(h))
        good = np.abs(res) <= tol
        if np.all(good):
            break
        delta = 1e-7 * (1.0 + np.abs(h))
        res2 = (h + delta) - make_map(h + delta)
        dres = (res2 - res) / delta
        step = np.where(np.abs(dres) > 1e-300, res / dres, 0.0)
        hn = h - step
        resn = hn - make_map(hn)
        for _ in range(25):
            worse = (~good) & (np.abs(resn) > np.abs(res)) & (np.abs(step) > 1e-300)
            if not np.any(worse):
                break
            step = np.where(worse, step / 2.0, step)
            hn = h - step
            resn = hn - make_map(hn)
        h = np.where(good, h, hn)
    res = h - make_map(h)
    converged = np.abs(res) <= cfg.fp_tol * (1.0 + np.abs(h))
    w[idx] = np.where(converged, h, w[idx])
    ok[idx] = converged
    return w, ok


def ladder_half_plane(solve_at, z, cfg: SolverConfig = DEFAULT):
    """Continuation in Im z: solve from height ladder_top down to the target.

    solve_at(z_batch, w_seed) -> w.  All points share the dyadic height
    ladder; points whose target height exceeds a rung skip it.
    """
    z = np.asarray(z, dtype=complex)
    y_target = np.imag(z)
    y_top = max(cfg.ladder_top, float(np.max(y_target)))
    heights = [y_top]
    while heights[-1] > float(np.min(y_target)):
        heights.append(max(heights[-1] * cfg.ladder_ratio, float(np.min(y_target))))
        if len(heights) > 60:
            break
    w = None
    for y in heights:
        zy = np.real(z) + 1j * np.maximum(y_target, y)
        seed = zy if w is None else w
        w = solve_at(zy, seed)
    return w


def ladder_disk(solve_at, z, cfg: SolverConfig = DEFAULT):
    """Continuation in |z| toward the unit circle, along fixed arguments."""
    z = np.asarray(z, dtype=complex)
    r_target = np.abs(z)
    s_target = 1.0 - r_target
    s_top = max(0.5, float(np.max(s_target)))
    esses = [s_top]
    while esses[-1] > float(np.min(s_target)):
        esses.append(max(esses[-1] * cfg.ladder_ratio, float(np.min(s_target))))
        if len(esses) > 60:
            break
    unit = np.exp(1j * np.angle(np.where(z == 0, 1.0, z)))
    w = None
    for s in esses:
        zr = unit * np.minimum(r_target, 1.0 - s)
        seed = zr if w is None else w
        w = solve_at(zr, seed)
    return w
