"""Additive free convolution via the subordination system.

For measures mu1, mu2 on the line the subordination pair (Z1, Z2) solves

    z = Z1 + Z2 - F_{mu1}(Z1),   F_{mu1}(Z1) = F_{mu2}(Z2),

computed as the fixed point of  w -> z + g1(z - (w - F2(w))),
g1(u) = F1(u) - u, which preserves {Im w >= Im z}.  The convolution's
reciprocal Cauchy transform is the common value F1(Z1(z)); densities come
from Stieltjes inversion of 1/F1(Z1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._solver import fixed_point, ladder_half_plane
from .config import DEFAULT, SolverConfig
from .errors import DomainMismatch, TLessThanOne
from .measures import CIRCLE, Measure, validate
from .transforms import DensityTable, _as_z, stieltjes_invert, transforms


@dataclass
class SubordinationResult:
    z: complex
    Z1: complex
    Z2: complex
    common_value: complex
    residual_system: float
    residual_match: float
    iterations: int


def _check_real_line(*ms):
    for m in ms:
        if m.domain == CIRCLE:
            raise DomainMismatch("additive convolution expects real-line measures")


def _subord_core(f1, f2, z, cfg, w0=None):
    """Solve the pair system at a batch of points; returns (Z1, Z2, common, iters)."""
    z = np.asarray(z, dtype=complex)

    def T(w):
        u = z - (w - f2(w))
        return z + f1(u) - u

    w, iters, _ = fixed_point(T, z, w0=w0, cfg=cfg)
    Z2 = w
    Z1 = z - (Z2 - f2(Z2))
    return Z1, Z2, f1(Z1), iters


def _add_batch(m1: Measure, m2: Measure, z, cfg: SolverConfig = DEFAULT, use_ladder=False):
    tr1, tr2 = transforms(m1), transforms(m2)
    if not use_ladder:
        return _subord_core(tr1.f, tr2.f, z, cfg)

    def solve_at(zb, seed):
        def T(w):
            u = zb - (w - tr2.f(w))
            return zb + tr1.f(u) - u
        w, _, _ = fixed_point(T, zb, w0=seed, cfg=cfg)
        return w

    w = ladder_half_plane(solve_at, z, cfg)
    z = np.asarray(z, dtype=complex)
    Z2 = w
    Z1 = z - (Z2 - tr2.f(Z2))
    return Z1, Z2, tr1.f(Z1), np.zeros(len(Z1), dtype=int)


def subord_add(m1: Measure, m2: Measure, z, cfg: SolverConfig = DEFAULT) -> SubordinationResult:
    """Subordination pair for mu1 [+] mu2 at one query point z in C+."""
    m1, m2 = validate(m1), validate(m2)
    _check_real_line(m1, m2)
    arr, _ = _as_z(z)
    Z1, Z2, common, iters = _add_batch(m1, m2, arr, cfg)
    zc = complex(arr[0])
    return SubordinationResult(
        z=zc, Z1=complex(Z1[0]), Z2=complex(Z2[0]), common_value=complex(common[0]),
        residual_system=float(abs(zc - Z1[0] - Z2[0] + common[0])),
        residual_match=float(abs(common[0] - transforms(m2).f(Z2)[0])),
        iterations=int(iters[0]),
    )


def conv_add_evaluator(m1: Measure, m2: Measure, cfg: SolverConfig = DEFAULT):
    """G_{mu1 [+] mu2} as a vectorized evaluator on C+ (eta-continuation inside)."""
    m1, m2 = validate(m1), validate(m2)
    _check_real_line(m1, m2)

    def g(z):
        _, _, common, _ = _add_batch(m1, m2, z, cfg, use_ladder=True)
        return 1.0 / common

    return g


def free_add(m1: Measure, m2: Measure, grid, eta_schedule=None, cfg: SolverConfig = DEFAULT) -> DensityTable:
    """Density table of the free additive convolution on the given grid."""
    return stieltjes_invert(conv_add_evaluator(m1, m2, cfg), grid, eta_schedule, cfg)


class _PairF:
    """F-evaluator of a convolution pair, usable as one side of another pair."""

    def __init__(self, f1, f2, cfg):
        self.f1, self.f2, self.cfg = f1, f2, cfg

    def f(self, z):
        _, _, common, _ = _subord_core(self.f1, self.f2, z, self.cfg)
        return common

    def subordinators(self, z):
        Z1, Z2, _, _ = _subord_core(self.f1, self.f2, z, self.cfg)
        return Z1, Z2


def subord_add_multi(ms, z, cfg: SolverConfig = DEFAULT):
    """n-way subordination: Z_1..Z_n and the common value F_{mu1}(Z1).

    Computed by folding pairwise systems: the tail convolution is an
    F-evaluator, the outer pair is solved at z, and the inner pairs are
    solved at the chained subordination arguments.
    """
    ms = [validate(m) for m in ms]
    if len(ms) < 2:
        raise ValueError("need at least two measures")
    _check_real_line(*ms)
    arr, _ = _as_z(z)

    evals = [transforms(m) for m in ms]
    tails = [None] * len(ms)
    tails[-1] = evals[-1]
    for j in range(len(ms) - 2, 0, -1):
        tails[j] = _PairF(evals[j].f, tails[j + 1].f, cfg)

    Zs = [None] * len(ms)
    outer = _PairF(evals[0].f, tails[1].f, cfg)
    Z1, w = outer.subordinators(arr)
    Zs[0] = Z1
    for j in range(1, len(ms) - 1):
        Zj, w_next = tails[j].subordinators(w)
        Zs[j] = Zj
        w = w_next
    Zs[-1] = w
    common = evals[0].f(Z1)
    return [(_out_scalar(Zj)) for Zj in Zs], _out_scalar(common)


def _out_scalar(v):
    return complex(v[0]) if len(v) == 1 else v


def power_add_evaluator(m: Measure, t: float, cfg: SolverConfig = DEFAULT):
    """F_{mu^{[+]t}} via z = t Z - (t-1) F(Z) for real t >= 1."""
    m = validate(m)
    _check_real_line(m)
    if t < 1:
        raise TLessThanOne("additive convolution powers require t >= 1")
    tr = transforms(m)

    def solve_at(zb, seed):
        def T(w):
            return (zb + (t - 1.0) * tr.f(w)) / t
        w, _, _ = fixed_point(T, zb, w0=seed, cfg=cfg)
        return w

    def f_eval(z):
        z = np.asarray(z, dtype=complex)
        if t == 1.0:
            return tr.f(z)
        w = ladder_half_plane(solve_at, z, cfg)
        return tr.f(w)

    return f_eval


def free_add_power(m: Measure, t: float, grid, eta_schedule=None, cfg: SolverConfig = DEFAULT) -> DensityTable:
    """Density of the free additive convolution power mu^{[+]t}, t >= 1."""
    f_eval = power_add_evaluator(m, t, cfg)
    return stieltjes_invert(lambda z: 1.0 / f_eval(z), grid, eta_schedule, cfg)


def boolean_add_evaluator(m1: Measure, m2: Measure):
    """F_rho(z) = z - E1(z) - E2(z), E(z) = z - F(z) (Boolean convolution)."""
    m1, m2 = validate(m1), validate(m2)
    _check_real_line(m1, m2)
    tr1, tr2 = transforms(m1), transforms(m2)

    def f_eval(z):
        z = np.asarray(z, dtype=complex)
        return tr1.f(z) + tr2.f(z) - z

    return f_eval


def boolean_add(m1: Measure, m2: Measure, grid, eta_schedule=None, cfg: SolverConfig = DEFAULT) -> DensityTable:
    f_eval = boolean_add_evaluator(m1, m2)
    return stieltjes_invert(lambda z: 1.0 / f_eval(z), grid, eta_schedule, cfg)
