"""Analytic transforms of measures and their inversion back to densities.

Evaluators
----------
`transforms(m)` returns the cached per-measure evaluator exposing G, F,
psi, K, Q (and exact z-derivatives) as vectorized callables.  Formulas are
valid on both half-planes and on the real axis off the support: atoms and
named families use closed forms, tabulated densities the exact segment
integration from the kernel backend, circle tables a Fourier-moment series.

Inversion
---------
`stieltjes_invert` recovers a density table from a Cauchy-transform
evaluator by Richardson extrapolation of -Im g(x+i eta)/pi over a dyadic
eta schedule, with atom detection (eta|g| plateau), sub-grid atom location
refinement and mass accounting.  `herglotz_invert` is the Poisson-kernel
analogue on the circle.  `invert_f`/`phi` implement the right inverse of F
on truncated cones, `sigma_rplus`/`sigma_circle` the Sigma-transforms via
certified Newton inversion of K and Q.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _backend as knl
from .config import DEFAULT, SolverConfig
from .errors import (
    ConeTooLow,
    DomainMismatch,
    ExtrapolationUnstable,
    NoConvergence,
    OutsideImage,
    PointOnCut,
    PsiPoleHit,
)
from .measures import CIRCLE, REAL, RPLUS, Atom, Measure, Table, circle_moments, validate


# ---------------------------------------------------------------------------
# point types

@dataclass(frozen=True)
class HalfPlanePoint:
    value: complex

    def __post_init__(self):
        if not np.imag(self.value) > 0:
            raise PointOnCut(f"{self.value} is not in the open upper half-plane")


@dataclass(frozen=True)
class DiskPoint:
    value: complex

    def __post_init__(self):
        if not abs(self.value) < 1:
            raise PointOnCut(f"{self.value} is not in the open unit disk")


@dataclass(frozen=True)
class ConeParams:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("cone aperture and height must be positive")

    def contains(self, w):
        return (np.imag(w) > self.beta) & (np.abs(np.real(w)) < self.alpha * np.imag(w))


def _as_z(z):
    """Normalize scalar/array input; unwrap point types."""
    if isinstance(z, (HalfPlanePoint, DiskPoint)):
        z = z.value
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    return arr, np.isscalar(z) or getattr(z, "ndim", 1) == 0 or isinstance(z, (complex, float, int))


def _out(v, scalar):
    return complex(v[0]) if scalar else v


# ---------------------------------------------------------------------------
# measure-backed evaluator

class Transforms:
    """Vectorized transform evaluation for one validated measure."""

    def __init__(self, m: Measure):
        self.m = validate(m)
        self.ax, self.aw = self.m.atom_arrays()
        self.table = self.m.continuous if isinstance(self.m.continuous, Table) else None
        self.family = self.m.continuous if (self.m.continuous is not None and self.table is None) else None
        self._seg_C = self.table.segment_coeffs() if (self.table is not None and self.m.domain != CIRCLE) else None
        self._series = None      # (coeffs, r_ok) for circle table psi
        self._series_d = None

    # ---- real-line / half-line -------------------------------------------
    def g(self, z):
        if self.m.domain == CIRCLE:
            raise DomainMismatch("Cauchy transform undefined for circle measures")
        out = knl.cauchy_atoms(z, self.ax, self.aw)
        if self._seg_C is not None:
            out = out + knl.cauchy_segments(z, self.table.grid, self._seg_C)
        if self.family is not None:
            out = out + self.family.g_and_dg(z)[0]
        return out

    def dg(self, z):
        out = knl.cauchy_atoms_d(z, self.ax, self.aw)
        if self._seg_C is not None:
            out = out + knl.cauchy_segments_d(z, self.table.grid, self._seg_C)
        if self.family is not None:
            out = out + self.family.g_and_dg(z)[1]
        return out

    def f(self, z):
        return 1.0 / self.g(z)

    def f_df(self, z):
        gv, dgv = self.g(z), self.dg(z)
        return 1.0 / gv, -dgv / gv**2

    def e(self, z):
        """E(z) = z - F(z), the self-energy used by Boolean convolution."""
        return z - self.f(z)

    # ---- psi / K on the half-line ----------------------------------------
    def psi(self, z):
        if self.m.domain == CIRCLE:
            return self._psi_circle(z)
        u = 1.0 / z
        return self.g(u) * u - 1.0

    def dpsi(self, z):
        if self.m.domain == CIRCLE:
            return self._dpsi_circle(z)
        u = 1.0 / z
        # psi(z) = u G(u) - 1 with u = 1/z, so psi'(z) = -u^2 (u G'(u) + G(u))
        return -(u * self.dg(u) + self.g(u)) * u**2

    def k(self, z):
        p = self.psi(z)
        if np.any(np.abs(1.0 + p) < 1e-14):
            raise PsiPoleHit("1 + psi vanished at an evaluation point")
        return p / (1.0 + p)

    def k_dk(self, z):
        p, dp = self.psi(z), self.dpsi(z)
        if np.any(np.abs(1.0 + p) < 1e-14):
            raise PsiPoleHit("1 + psi vanished at an evaluation point")
        return p / (1.0 + p), dp / (1.0 + p) ** 2

    # ---- circle ------------------------------------------------------------
    def _ensure_series(self, r_needed):
        """Fourier-moment series of the table part, long enough for |z| <= r_needed."""
        if self.table is None:
            return np.zeros(1, dtype=complex)
        r_needed = min(max(float(r_needed), 0.5), 0.99999)
        if self._series is not None and self._series[1] >= r_needed:
            return self._series[0]
        n = 2048 if self._series is None else 2 * (len(self._series[0]) - 1)
        table_measure = Measure(CIRCLE, (), self.table, validated=True, mean=self.m.mean)
        while True:
            mom = circle_moments(table_measure, n)
            tail = float(np.max(np.abs(mom[-64:])))
            ok = tail * r_needed**n / (1.0 - r_needed) < 1e-13
            if ok or n >= 2**17:
                break
            n *= 2
        c = np.zeros(n + 1, dtype=complex)
        c[1:] = mom
        self._series = (c, r_needed if ok else 0.0)
        self._series_d = np.arange(n + 1, dtype=complex) * c
        return c

    def _psi_circle(self, z):
        out = knl.psi_circle_atoms(z, self.ax, self.aw)
        if self.table is not None:
            c = self._ensure_series(float(np.max(np.abs(z))))
            out = out + knl.horner(c, z)
        return out

    def _dpsi_circle(self, z):
        out = knl.psi_circle_atoms_d(z, self.ax, self.aw)
        if self.table is not None:
            self._ensure_series(float(np.max(np.abs(z))))
            out = out + knl.horner(self._series_d[1:], z)
        return out

    def psi_over_z(self, z):
        """psi(z)/z, finite at z = 0 (value: the mean)."""
        out = np.zeros_like(z)
        if len(self.ax):
            xi = np.exp(1j * self.ax)
            out = (self.aw[None, :] * xi[None, :] / (1.0 - z[:, None] * xi[None, :])).sum(axis=1)
        if self.table is not None:
            c = self._ensure_series(float(np.max(np.abs(z))))
            out = out + knl.horner(c[1:], z)
        return out

    def q(self, z):
        p = self._psi_circle(z)
        return p / (1.0 + p)

    def q_dq(self, z):
        p, dp = self._psi_circle(z), self._dpsi_circle(z)
        return p / (1.0 + p), dp / (1.0 + p) ** 2

    def q_over_z(self, z):
        """Q(z)/z, finite at 0 (value: the mean)."""
        return self.psi_over_z(z) / (1.0 + self._psi_circle(z))

    def h(self, z):
        return 1.0 + 2.0 * self._psi_circle(z)


def transforms(m: Measure) -> Transforms:
    m = validate(m)
    tr = m._cache.get("transforms")
    if tr is None:
        tr = Transforms(m)
        m._cache["transforms"] = tr
    return tr


# ---------------------------------------------------------------------------
# public transform operations

def cauchy_g(m: Measure, z):
    """G(z) = int dmu(t)/(z-t) for measures on R or R+; z in C+."""
    m = validate(m)
    if m.domain == CIRCLE:
        raise DomainMismatch("Cauchy transform is defined for real-line measures")
    arr, scalar = _as_z(z)
    if np.any(np.imag(arr) <= 0):
        raise PointOnCut("cauchy_g expects points in the open upper half-plane")
    return _out(transforms(m).g(arr), scalar)


def recip_f(m: Measure, z):
    """F(z) = 1/G(z); satisfies Im F(z) >= Im z."""
    m = validate(m)
    if m.domain == CIRCLE:
        raise DomainMismatch("reciprocal Cauchy transform needs a real-line measure")
    arr, scalar = _as_z(z)
    if np.any(np.imag(arr) <= 0):
        raise PointOnCut("recip_f expects points in the open upper half-plane")
    return _out(transforms(m).f(arr), scalar)


def psi(m: Measure, z):
    """psi(z) = int z t/(1 - z t) dmu: half-line (z off [0, inf)) or circle (|z|<1)."""
    m = validate(m)
    arr, scalar = _as_z(z)
    if m.domain == CIRCLE:
        if np.any(np.abs(arr) >= 1):
            raise DomainMismatch("circle psi expects |z| < 1")
    elif m.domain == RPLUS:
        on_cut = (np.imag(arr) == 0) & (np.real(arr) >= 0)
        if np.any(on_cut):
            raise PointOnCut("psi is undefined on the cut [0, inf)")
    else:
        raise DomainMismatch("psi is defined for half-line and circle measures")
    return _out(transforms(m).psi(arr), scalar)


def k_transform(m: Measure, z):
    """K(z) = psi(z)/(1 + psi(z)) on C minus [0, inf); Krein class."""
    m = validate(m)
    if m.domain != RPLUS:
        raise DomainMismatch("K transform needs a measure on the positive half-line")
    arr, scalar = _as_z(z)
    on_cut = (np.imag(arr) == 0) & (np.real(arr) >= 0)
    if np.any(on_cut):
        raise PointOnCut("K is undefined on the cut [0, inf)")
    return _out(transforms(m).k(arr), scalar)


def q_transform(m: Measure, z):
    """Q(z) = psi/(1+psi) = (H-1)/(H+1) on the disk; Schur class, Q(0)=0."""
    m = validate(m)
    if m.domain != CIRCLE:
        raise DomainMismatch("Q transform needs a circle measure")
    arr, scalar = _as_z(z)
    if np.any(np.abs(arr) >= 1):
        raise DomainMismatch("Q expects |z| < 1")
    return _out(transforms(m).q(arr), scalar)


# ---------------------------------------------------------------------------
# Newton machinery

def _newton(fun, w, z0, cfg: SolverConfig, maxiter=80, inside=None):
    """Vectorized damped Newton for fun(z) = (value, derivative) = w.

    Returns (z, ok_mask).  `inside` optionally constrains iterates to a
    region (step is halved until the iterate stays inside).
    """
    z = np.array(z0, dtype=complex, copy=True)
    w = np.asarray(w, dtype=complex)
    val, der = fun(z)
    res = val - w
    tol = cfg.residual_tol * (1.0 + np.abs(w))
    for _ in range(maxiter):
        act = np.abs(res) > tol
        if not np.any(act):
            break
        step = np.zeros_like(z)
        safe = np.abs(der) > 1e-300
        step[act & safe] = (res / der)[act & safe]
        zn = z - step
        # backtrack: keep inside the region and do not let the residual blow up
        for _ in range(50):
            bad = act & (~np.isfinite(zn) | ((~inside(zn)) if inside is not None else False))
            if not np.any(bad):
                break
            step = np.where(bad, step / 2.0, step)
            zn = z - step
        valn, dern = fun(zn)
        resn = valn - w
        for _ in range(30):
            worse = act & (np.abs(resn) > np.abs(res)) & (np.abs(step) > 1e-300)
            if not np.any(worse):
                break
            step = np.where(worse, step / 2.0, step)
            zn = z - step
            valn, dern = fun(zn)
            resn = valn - w
        z = np.where(act, zn, z)
        res = np.where(act, resn, res)
        der = np.where(act, dern, der)
    return z, np.abs(res) <= tol


def invert_f(m: Measure, w, cone: ConeParams = None, cfg: SolverConfig = DEFAULT):
    """Right inverse of F: the z in C+ with F(z) = w, |F(z)-w| < tol*(1+|w|)."""
    m = validate(m)
    tr = transforms(m)
    arr, scalar = _as_z(w)
    z, ok = _newton(tr.f_df, arr, arr, cfg, inside=lambda q: np.imag(q) > 0)
    if not np.all(ok):
        raise ConeTooLow(f"Newton inversion of F failed at {arr[~ok][:3]}; raise the cone")
    return _out(z, scalar)


def phi(m: Measure, w, cone: ConeParams = None, cfg: SolverConfig = DEFAULT):
    """Voiculescu transform phi(w) = F^{(-1)}(w) - w on a cone."""
    arr, scalar = _as_z(w)
    z = invert_f(m, arr, cone, cfg)
    return _out(z - arr, scalar)


def auto_cone(m: Measure, alpha: float = 1.0, cfg: SolverConfig = DEFAULT) -> ConeParams:
    """Find a cone height beta for which F is reliably right-invertible.

    beta doubles from 1 until, at 32 probe points of Gamma_{alpha,beta},
    Newton from z0 = w converges with certified residual, F' is bounded away
    from zero at the root, and Im F is monotone along the vertical ray above
    the root (uniqueness heuristic).
    """
    m = validate(m)
    key = ("cone", alpha)
    if key in m._cache:
        return m._cache[key]
    tr = transforms(m)
    beta = 1.0
    while beta < 2**24:
        ratios = np.linspace(-0.95, 0.95, 8) * alpha
        heights = beta * np.array([1.05, 2.0, 8.0, 32.0])
        ws = (ratios[None, :] * heights[:, None] + 1j * heights[:, None]).ravel()
        z, ok = _newton(tr.f_df, ws, ws, cfg, inside=lambda q: np.imag(q) > 0)
        good = bool(np.all(ok))
        if good:
            _, der = tr.f_df(z)
            good = bool(np.all(np.abs(der) > 1e-10))
        if good:
            ts = np.geomspace(1.0, 100.0, 12)
            ray = np.real(z)[:, None] + 1j * np.imag(z)[:, None] * ts[None, :]
            imf = np.imag(tr.f(ray.ravel()).reshape(ray.shape))
            good = bool(np.all(np.diff(imf, axis=1) > -1e-12))
        if good:
            cone = ConeParams(alpha, beta)
            m._cache[key] = cone
            return cone
        beta *= 2.0
    raise ConeTooLow("no cone height up to 2^24 passed the invertibility probes")


# ---------------------------------------------------------------------------
# Sigma transforms

def _with_fd(fun, dfun):
    """Pack (value, derivative) with a finite-difference fallback."""
    if dfun is not None:
        return lambda q: (fun(q), dfun(q))

    def pair(q):
        val = fun(q)
        delta = 1e-7 * (1.0 + np.abs(q))
        return val, (fun(q + delta) - val) / delta

    return pair


def _invert_k_real(k_eval, x, cfg):
    """Solve K(u) = x for u < 0 real (K is increasing with K(0-) = 0)."""
    if x >= 0:
        raise OutsideImage("real Sigma targets must be negative")
    kk = lambda u: float(np.real(k_eval(np.array([complex(u, 0.0)]))[0]))
    lo = -1.0
    for _ in range(80):
        if kk(lo) < x:
            break
        lo *= 2.0
        if lo < -1e14:
            raise OutsideImage(f"{x} below the range of K on the negative axis")
    hi = -1e-12 * max(1.0, abs(lo))
    if kk(hi) < x:
        raise OutsideImage(f"{x} not bracketed by K on the negative axis")
    return brentq(lambda u: kk(u) - x, lo, hi, xtol=1e-15, rtol=8.9e-16)


def sigma_from_k(k_eval, dk_eval, z, cfg: SolverConfig = DEFAULT):
    """Sigma(z) = K^{(-1)}(z)/z for an arbitrary Krein-class evaluator.

    Real negative targets are bracketed on the negative axis; complex
    targets are reached by rotating the target from -|z| while Newton
    tracks the root (K is univalent on the left half-plane)."""
    fun = _with_fd(k_eval, dk_eval)
    zc = complex(z)
    if np.imag(zc) == 0:
        u = _invert_k_real(k_eval, np.real(zc), cfg)
        return u / zc
    conj_flip = np.imag(zc) < 0
    zt = np.conj(zc) if conj_flip else zc
    u = complex(_invert_k_real(k_eval, -abs(zt), cfg), 0.0)
    args = np.linspace(np.pi, np.angle(zt), 12)[1:]
    for a in args:
        target = abs(zt) * np.exp(1j * a)
        un, ok = _newton(fun, np.array([target]), np.array([u]), cfg,
                         inside=lambda q: np.real(q) < np.abs(q) * 1e-9 + 1e-300)
        if not ok[0]:
            raise OutsideImage(f"K inversion lost the root on the way to {zc}")
        u = un[0]
    sig = u / zt
    return np.conj(sig) if conj_flip else sig


def sigma_rplus(m: Measure, z, cfg: SolverConfig = DEFAULT):
    """Sigma(z) = K^{(-1)}(z)/z; certified residual |K(z Sigma) - z| < tol."""
    m = validate(m)
    if m.domain != RPLUS:
        raise DomainMismatch("sigma_rplus needs a measure on the positive half-line")
    tr = transforms(m)
    return sigma_from_k(tr.k, lambda q: tr.k_dk(q)[1], z, cfg)


def sigma_from_q(q_eval, dq_eval, mean, z, cfg: SolverConfig = DEFAULT):
    """Sigma(z) = Q^{(-1)}(z)/z for an arbitrary S*-class evaluator."""
    fun = _with_fd(q_eval, dq_eval)
    zc = complex(z)
    if zc == 0:
        return 1.0 / complex(mean)
    w = 0.125 * zc / complex(mean)
    if abs(w) >= 0.9:
        w = 0.5 * w / abs(w)
    for t in (0.125, 0.25, 0.5, 1.0):
        target = np.array([t * zc])
        wn, ok = _newton(fun, target, np.array([w]), cfg,
                         inside=lambda q: np.abs(q) < 1.0)
        if not ok[0]:
            raise OutsideImage(f"Q inversion failed on the way to {zc}")
        w = wn[0]
    return w / zc


def sigma_circle(m: Measure, z, cfg: SolverConfig = DEFAULT):
    """Sigma(z) = Q^{(-1)}(z)/z near 0; |Sigma| >= 1 by the Schwarz lemma."""
    m = validate(m)
    if m.domain != CIRCLE:
        raise DomainMismatch("sigma_circle needs a circle measure")
    tr = transforms(m)
    return sigma_from_q(tr.q, lambda q: tr.q_dq(q)[1], complex(m.mean), z, cfg)


# ---------------------------------------------------------------------------
# density tables and inversion

@dataclass
class DensityTable:
    """Recovered density: grid + values + detected atoms + mass accounting."""

    domain: str
    grid: np.ndarray
    density: np.ndarray
    atoms: tuple = ()
    mass_deficit: float = 0.0
    meta: dict = field(default_factory=dict)

    def continuous_mass(self):
        w = np.trapezoid(self.density, self.grid)
        return w / (2 * np.pi) if self.domain == CIRCLE else w

    def total_mass(self):
        return self.continuous_mass() + sum(a.w for a in self.atoms)

    def cdf(self, x):
        """CDF at points x (atoms included as jumps)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        dx = np.diff(self.grid)
        seg = (self.density[:-1] + self.density[1:]) / 2 * dx
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if self.domain == CIRCLE:
            cum = cum / (2 * np.pi)
        out = np.interp(x, self.grid, cum, left=0.0, right=cum[-1])
        # piecewise-linear correction inside segments is below grid tolerance
        for a in self.atoms:
            out = out + np.where(x >= a.x, a.w, 0.0)
        return out

    def moment(self, k: int):
        x = self.grid
        if self.domain == CIRCLE:
            val = np.trapezoid(np.exp(1j * k * x) * self.density, x) / (2 * np.pi)
            return complex(val + sum(a.w * np.exp(1j * k * a.x) for a in self.atoms))
        return float(np.trapezoid(x**k * self.density, x) + sum(a.w * a.x**k for a in self.atoms))

    def as_measure(self) -> Measure:
        """Renormalized Measure (positive deficit spread proportionally)."""
        total = self.total_mass()
        dens = np.maximum(self.density, 0.0) / total
        atoms = tuple(Atom(a.x, a.w / total) for a in self.atoms)
        tab = Table(self.grid, dens, circle=(self.domain == CIRCLE)) if np.any(dens > 0) else None
        return validate(Measure(self.domain, atoms, tab))

    def write_csv(self, path, sidecar_path=None, extra_meta=None):
        cols = ("theta", "density") if self.domain == CIRCLE else ("point", "density")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for x, d in zip(self.grid, self.density):
                wr.writerow([f"{x:.17g}", f"{d:.17g}"])
        if sidecar_path:
            payload = {
                "domain": self.domain,
                "atoms": [{"x": a.x, "w": a.w} for a in self.atoms],
                "mass_deficit": self.mass_deficit,
                "meta": {**self.meta, **(extra_meta or {})},
            }
            with open(sidecar_path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)


def _richardson_pair(d_prev, d_last):
    """Linear-in-step Richardson for a step halving: 2*last - prev."""
    return 2.0 * d_last - d_prev


def _detect_atoms_half_plane(g, grid, etas, vals, cfg):
    s_prev = etas[-2] * np.abs(vals[-2])
    s_last = etas[-1] * np.abs(vals[-1])
    cand = (s_last > cfg.atom_threshold) & (np.abs(s_last - s_prev) <= cfg.atom_stability * np.maximum(s_last, cfg.atom_threshold))
    atoms = []
    idx = np.flatnonzero(cand)
    if len(idx) == 0:
        return atoms
    # split into contiguous clusters
    breaks = np.flatnonzero(np.diff(idx) > 1)
    clusters = np.split(idx, breaks + 1)
    dx = np.median(np.diff(grid))
    for cl in clusters:
        i0 = cl[np.argmax(s_last[cl])]
        lo = grid[max(cl[0] - 1, 0)]
        hi = grid[min(cl[-1] + 1, len(grid) - 1)]
        eta_min = etas[-1]
        res = minimize_scalar(lambda x: -abs(g(np.array([x + 1j * eta_min]))[0]),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(grid[i0]))})
        a = float(res.x)
        s1 = etas[-1] * abs(g(np.array([a + 1j * etas[-1]]))[0])
        s2 = etas[-2] * abs(g(np.array([a + 1j * etas[-2]]))[0])
        w = float(_richardson_pair(s2, s1))
        if w > cfg.atom_report_min:
            atoms.append(Atom(a, w))
    return atoms


def stieltjes_invert(g, grid, eta_schedule=None, cfg: SolverConfig = DEFAULT,
                     domain: str = REAL, check_stability: bool = True) -> DensityTable:
    """Recover a density from a Cauchy-transform evaluator.

    `g` must accept a complex numpy array and return the transform values;
    it is probed on grid + i*eta over the (decreasing) eta schedule and at
    refined points near detected atoms.
    """
    grid = np.asarray(grid, dtype=float)
    etas = np.sort(np.asarray(eta_schedule if eta_schedule is not None else cfg.eta_schedule(), dtype=float))[::-1]
    if len(etas) < 3:
        raise ValueError("eta schedule needs at least 3 levels")
    vals = [g(grid + 1j * eta) for eta in etas]

    atoms = _detect_atoms_half_plane(g, grid, etas, vals, cfg)

    if atoms:
        ax = np.array([a.x for a in atoms])
        aw = np.array([a.w for a in atoms])
        vals = [v - knl.cauchy_atoms(grid + 1j * eta, ax, aw) for eta, v in zip(etas, vals)]

    dens_levels = [-np.imag(v) / np.pi for v in vals]
    rich = [_richardson_pair(dens_levels[k - 1], dens_levels[k]) for k in range(1, len(dens_levels))]
    density = rich[-1]

    mask = np.ones(len(grid), dtype=bool)
    dx = np.median(np.diff(grid))
    for a in atoms:
        mask &= np.abs(grid - a.x) > 4 * max(dx, etas[-1])
    if check_stability and len(rich) >= 3:
        d1 = np.max(np.abs((rich[-2] - rich[-3])[mask])) if np.any(mask) else 0.0
        d2 = np.max(np.abs((rich[-1] - rich[-2])[mask])) if np.any(mask) else 0.0
        if d2 > cfg.unstable_factor * max(d1, 1e-12) and d2 > 1e-2:
            raise ExtrapolationUnstable(f"Richardson differences grew from {d1:.3g} to {d2:.3g}")

    density = np.maximum(density, 0.0)
    table = DensityTable(domain, grid, density, tuple(atoms), 0.0,
                         meta={"eta_schedule": etas.tolist(), "tolerances": cfg.as_dict()})
    table.mass_deficit = float(1.0 - table.total_mass())
    return table


def herglotz_invert(h, theta_grid, r_schedule=None, cfg: SolverConfig = DEFAULT,
                    check_stability: bool = True) -> DensityTable:
    """Recover a circle density (w.r.t. normalized arclength) from H = 1+2psi.

    density(theta) = lim_{r->1} Re H(r e^{i theta}); atoms show up as
    Poisson-kernel peaks with mass ~ Re H * (1-r)/(1+r).
    """
    theta = np.asarray(theta_grid, dtype=float)
    rs = np.asarray(r_schedule if r_schedule is not None else cfg.r_schedule(), dtype=float)
    rs = np.sort(rs)
    if len(rs) < 3:
        raise ValueError("r schedule needs at least 3 levels")
    vals = [h(r * np.exp(1j * theta)) for r in rs]
    ss = 1.0 - rs

    # atom candidates from the two largest radii
    s_prev = np.real(vals[-2]) * ss[-2] / (1.0 + rs[-2])
    s_last = np.real(vals[-1]) * ss[-1] / (1.0 + rs[-1])
    cand = (s_last > cfg.atom_threshold) & (np.abs(s_last - s_prev) <= cfg.atom_stability * np.maximum(s_last, cfg.atom_threshold))
    atoms = []
    idx = np.flatnonzero(cand)
    if len(idx):
        clusters = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        for cl in clusters:
            i0 = cl[np.argmax(s_last[cl])]
            lo = theta[max(cl[0] - 1, 0)]
            hi = theta[min(cl[-1] + 1, len(theta) - 1)]
            res = minimize_scalar(lambda t: -np.real(h(np.array([rs[-1] * np.exp(1j * t)]))[0]),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            a = float(res.x)
            m1 = np.real(h(np.array([rs[-1] * np.exp(1j * a)]))[0]) * ss[-1] / (1.0 + rs[-1])
            m2 = np.real(h(np.array([rs[-2] * np.exp(1j * a)]))[0]) * ss[-2] / (1.0 + rs[-2])
            w = float(_richardson_pair(m2, m1))
            if w > cfg.atom_report_min:
                atoms.append(Atom(a, w))
    if atoms:
        def h_atoms(z):
            out = np.zeros_like(z)
            for a in atoms:
                xi = np.exp(1j * a.x)
                out = out + a.w * (xi + z) / (xi - z)
            return out
        vals = [v - h_atoms(r * np.exp(1j * theta)) for r, v in zip(rs, vals)]

    dens_levels = [np.real(v) for v in vals]
    rich = [_richardson_pair(dens_levels[k - 1], dens_levels[k]) for k in range(1, len(dens_levels))]
    density = np.maximum(rich[-1], 0.0)

    if check_stability and len(rich) >= 3:
        mask = np.ones(len(theta), dtype=bool)
        for a in atoms:
            mask &= np.abs(theta - a.x) > 4 * max(np.median(np.diff(theta)), ss[-1])
        d1 = np.max(np.abs((rich[-2] - rich[-3])[mask])) if np.any(mask) else 0.0
        d2 = np.max(np.abs((rich[-1] - rich[-2])[mask])) if np.any(mask) else 0.0
        if d2 > cfg.unstable_factor * max(d1, 1e-12) and d2 > 1e-2:
            raise ExtrapolationUnstable(f"Richardson differences grew from {d1:.3g} to {d2:.3g}")

    table = DensityTable(CIRCLE, theta, density, tuple(atoms), 0.0,
                         meta={"r_schedule": rs.tolist(), "tolerances": cfg.as_dict()})
    table.mass_deficit = float(1.0 - table.total_mass())
    return table


def recover_from_psi_rplus(psi_eval, grid, eta_schedule=None, cfg: SolverConfig = DEFAULT) -> DensityTable:
    """Measure recovery on R+ from a psi evaluator via G(w) = (psi(1/w)+1)/w.

    The evaluator only needs to cover the upper half-plane; lower-half
    arguments are reached through psi(conj z) = conj psi(z).  The atom at 0
    is estimated from 1 + lim_{x -> -inf} psi(x) (probed at x = -psi_limit_x).
    """
    def g(w):
        u = 1.0 / w
        flip = np.imag(u) < 0
        u_eval = np.where(flip, np.conj(u), u)
        val = psi_eval(u_eval)
        val = np.where(flip, np.conj(val), val)
        return (val + 1.0) / w

    x_far = -cfg.psi_limit_x
    tail = psi_eval(np.array([complex(x_far, abs(x_far) * 1e-8)]))[0]
    p0 = float(1.0 + np.real(tail))

    table = stieltjes_invert(g, grid, eta_schedule, cfg, domain=RPLUS)
    atoms = list(table.atoms)
    if p0 > cfg.atom_report_min:
        atoms = [Atom(0.0, p0)] + [a for a in atoms if abs(a.x) > 10 * cfg.eta_schedule()[-1]]
    table.atoms = tuple(atoms)
    table.meta["atom_at_zero_estimate"] = p0
    table.mass_deficit = float(1.0 - table.total_mass())
    return table
