"""Probability measures on the real line, the positive half-line and the
unit circle: validation, moments, sampling, JSON round trip.

A measure is atoms + an optional continuous part.  Continuous parts are
either a named family (closed-form transforms) or a tabulated density,
piecewise linear on a strictly increasing grid and zero outside it.  Circle
measures store locations as angles in (-pi, pi]; tabulated circle densities
are taken w.r.t. normalized arclength d(theta)/2pi.

Measures are immutable after `validate`; transform evaluators cache
per-measure data on a private slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainViolation, MassNotOne, ValidationError, ZeroMeanOnCircle

REAL = "real"
RPLUS = "rplus"
CIRCLE = "circle"
DOMAINS = (REAL, RPLUS, CIRCLE)

MASS_TOL = 1e-9


@dataclass(frozen=True)
class Atom:
    """Point mass; `x` is an angle in radians for circle measures."""

    x: float
    w: float


def _sqrt2(z, lo, hi):
    """sqrt(z-lo)*sqrt(z-hi): branch cut only on [lo, hi], ~ z at infinity."""
    return np.sqrt(z - lo) * np.sqrt(z - hi)


@dataclass(frozen=True)
class Semicircle:
    center: float = 0.0
    radius: float = 2.0

    name = "semicircle"

    def mass(self):
        return 1.0

    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        r2 = self.radius**2 - (x - self.center) ** 2
        return np.where(r2 > 0, 2.0 / (np.pi * self.radius**2) * np.sqrt(np.maximum(r2, 0)), 0.0)

    def sample(self, rng, n):
        return self.center + self.radius * (2.0 * rng.beta(1.5, 1.5, size=n) - 1.0)

    def g_and_dg(self, z):
        zeta = z - self.center
        lo, hi = -self.radius, self.radius
        s = _sqrt2(zeta, lo, hi)
        g = 2.0 * (zeta - s) / self.radius**2
        dg = 2.0 * (1.0 - zeta / s) / self.radius**2
        return g, dg

    def params(self):
        return {"center": self.center, "radius": self.radius}


@dataclass(frozen=True)
class Arcsine:
    center: float = 0.0
    halfwidth: float = 2.0

    name = "arcsine"

    def mass(self):
        return 1.0

    def support(self):
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        r2 = self.halfwidth**2 - (x - self.center) ** 2
        with np.errstate(divide="ignore"):
            return np.where(r2 > 0, 1.0 / (np.pi * np.sqrt(np.maximum(r2, 1e-300))), 0.0)

    def sample(self, rng, n):
        return self.center + self.halfwidth * (2.0 * rng.beta(0.5, 0.5, size=n) - 1.0)

    def g_and_dg(self, z):
        zeta = z - self.center
        s = _sqrt2(zeta, -self.halfwidth, self.halfwidth)
        return 1.0 / s, -zeta / s**3

    def params(self):
        return {"center": self.center, "halfwidth": self.halfwidth}


@dataclass(frozen=True)
class Cauchy:
    scale: float = 1.0

    name = "cauchy"

    def mass(self):
        return 1.0

    def support(self):
        return (-np.inf, np.inf)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale / (np.pi * (x**2 + self.scale**2))

    def sample(self, rng, n):
        return self.scale * rng.standard_cauchy(size=n)

    def g_and_dg(self, z):
        # 1/(z + ib) on C+, reflected below
        s = np.where(np.imag(z) >= 0, 1.0, -1.0)
        d = z + 1j * self.scale * s
        return 1.0 / d, -1.0 / d**2

    def params(self):
        return {"scale": self.scale}


@dataclass(frozen=True)
class Uniform:
    lo: float = 0.0
    hi: float = 1.0

    name = "uniform"

    def mass(self):
        return 1.0

    def support(self):
        return (self.lo, self.hi)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=n)

    def g_and_dg(self, z):
        g = (np.log(z - self.lo) - np.log(z - self.hi)) / (self.hi - self.lo)
        dg = (1.0 / (z - self.lo) - 1.0 / (z - self.hi)) / (self.hi - self.lo)
        return g, dg

    def params(self):
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class MarchenkoPastur:
    """Continuous Marchenko-Pastur part; for ratio > 1 its mass is 1/ratio
    and the atom at 0 (mass 1 - 1/ratio) must be added separately."""

    ratio: float = 1.0

    name = "marchenko_pastur"

    def edges(self):
        s = np.sqrt(self.ratio)
        return ((1.0 - s) ** 2, (1.0 + s) ** 2)

    def mass(self):
        return min(1.0, 1.0 / self.ratio)

    def support(self):
        return self.edges()

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.edges()
        inside = (x > lo) & (x < hi)
        val = np.zeros_like(x)
        xi = x[inside]
        val[inside] = np.sqrt((hi - xi) * (xi - lo)) / (2.0 * np.pi * self.ratio * xi)
        return val

    def sample(self, rng, n):
        grid, cdf = self._cdf_table()
        return np.interp(rng.uniform(0.0, self.mass(), size=n), cdf, grid)

    def _cdf_table(self):
        lo, hi = self.edges()
        grid = np.linspace(lo, hi, 4097)
        dens = self.density(grid)
        cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0 * np.diff(grid))])
        cdf *= self.mass() / cdf[-1]
        return grid, cdf

    def g_and_dg(self, z):
        lam = self.ratio
        lo, hi = self.edges()
        s = _sqrt2(z, lo, hi)
        ds = (z - (1.0 + lam)) / s
        g = (z - 1.0 + lam - s) / (2.0 * lam * z)
        dg = (-ds * z + 1.0 - lam + s) / (2.0 * lam * z**2)
        if lam > 1.0:
            # remove the atom pole so only the continuous part is represented
            p = 1.0 - 1.0 / lam
            g = g - p / z
            dg = dg + p / z**2
        return g, dg

    def params(self):
        return {"ratio": self.ratio}


FAMILIES = {f.name: f for f in (Semicircle, Arcsine, Cauchy, Uniform, MarchenkoPastur)}


@dataclass(frozen=True, eq=False)
class Table:
    """Piecewise-linear density on a strictly increasing grid, zero outside.

    For circle measures `grid` holds angles and `density` is w.r.t.
    normalized arclength.
    """

    grid: np.ndarray
    density: np.ndarray
    circle: bool = False

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "density", np.asarray(self.density, dtype=float))
        if self.grid.ndim != 1 or self.grid.shape != self.density.shape or len(self.grid) < 2:
            raise ValidationError("table grid/density must be equal-length 1-D arrays (>= 2 points)")
        if not np.all(np.diff(self.grid) > 0):
            raise ValidationError("table grid must be strictly increasing")
        if np.any(self.density < -1e-12):
            raise ValidationError("table density must be nonnegative")

    def mass(self):
        w = np.trapezoid(self.density, self.grid)
        return w / (2.0 * np.pi) if self.circle else w

    def support(self):
        return (self.grid[0], self.grid[-1])

    def density_at(self, x):
        return np.interp(np.asarray(x, dtype=float), self.grid, self.density, left=0.0, right=0.0)

    def segment_coeffs(self):
        """(n,4) local polynomial coefficients of the density per segment."""
        d = self.density
        slope = np.diff(d) / np.diff(self.grid)
        C = np.zeros((len(self.grid) - 1, 4))
        C[:, 0] = d[:-1]
        C[:, 1] = slope
        return C

    def scaled(self, factor):
        return Table(self.grid, self.density * factor, circle=self.circle)

    def sample(self, rng, n):
        """Exact inverse-CDF sampling for the piecewise-linear model."""
        t, d = self.grid, self.density
        dt = np.diff(t)
        seg_mass = (d[:-1] + d[1:]) / 2.0 * dt
        cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
        total = cum[-1]
        q = rng.uniform(0.0, total, size=n)
        idx = np.clip(np.searchsorted(cum, q, side="right") - 1, 0, len(dt) - 1)
        q0 = q - cum[idx]
        d0 = d[:-1][idx]
        s = (d[1:] - d[:-1])[idx] / dt[idx]
        disc = np.maximum(d0**2 + 2.0 * s * q0, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(np.abs(s) > 1e-14, (-d0 + np.sqrt(disc)) / np.where(s == 0, 1, s), q0 / np.where(d0 == 0, 1, d0))
        return t[idx] + np.clip(v, 0.0, dt[idx])


@dataclass(frozen=True, eq=False)
class Measure:
    domain: str
    atoms: tuple = ()
    continuous: object = None
    validated: bool = False
    mean: complex = None
    _cache: dict = field(default_factory=dict, repr=False)

    def atom_arrays(self):
        if not self.atoms:
            return np.zeros(0), np.zeros(0)
        return (np.array([a.x for a in self.atoms], dtype=float),
                np.array([a.w for a in self.atoms], dtype=float))

    def total_mass(self):
        m = sum(a.w for a in self.atoms)
        if self.continuous is not None:
            m += self.continuous.mass()
        return m

    def is_atomic(self):
        return self.continuous is None


def validate(m: Measure) -> Measure:
    """Check domain/mass invariants, renormalize drift, cache the mean.

    Idempotent; raises MassNotOne / DomainViolation / ZeroMeanOnCircle.
    """
    if m.validated:
        return m
    if m.domain not in DOMAINS:
        raise DomainViolation(f"unknown domain {m.domain!r}")
    for a in m.atoms:
        if a.w <= 0:
            raise DomainViolation(f"atom at {a.x} has nonpositive mass {a.w}")
        if m.domain == RPLUS and a.x < 0:
            raise DomainViolation(f"atom at {a.x} < 0 on the positive half-line")
        if m.domain == CIRCLE and not (-np.pi < a.x <= np.pi):
            raise DomainViolation(f"circle atom angle {a.x} outside (-pi, pi]")
    if m.continuous is not None:
        if m.domain == CIRCLE:
            if not isinstance(m.continuous, Table) or not m.continuous.circle:
                raise DomainViolation("circle measures support tabulated continuous parts only")
            lo, hi = m.continuous.support()
            if lo <= -np.pi or hi > np.pi:
                raise DomainViolation("circle table grid must lie in (-pi, pi]")
        elif m.domain == RPLUS:
            lo, _ = m.continuous.support()
            if lo < 0:
                raise DomainViolation("continuous support extends below 0 on the positive half-line")

    total = m.total_mass()
    if abs(total - 1.0) > MASS_TOL:
        raise MassNotOne(f"total mass {total!r} differs from 1 beyond {MASS_TOL}")

    atoms = tuple(Atom(a.x, a.w / total) for a in m.atoms)
    continuous = m.continuous
    if continuous is not None and abs(total - 1.0) > 0:
        if isinstance(continuous, Table):
            continuous = continuous.scaled(1.0 / total)
        # named families are exactly normalized already

    if m.domain == RPLUS:
        w0 = sum(a.w for a in atoms if a.x == 0.0)
        if w0 >= 1.0 - 1e-15:
            raise DomainViolation("mass at 0 must be strictly less than 1 on the positive half-line")

    mean = None
    if m.domain == CIRCLE:
        mean = _circle_mean(atoms, continuous)
        if abs(mean) < 1e-12:
            raise ZeroMeanOnCircle("circle measure has (numerically) zero mean; outside M*")

    return Measure(m.domain, atoms, continuous, validated=True, mean=mean)


def _circle_mean(atoms, continuous):
    mean = sum(a.w * np.exp(1j * a.x) for a in atoms)
    if continuous is not None:
        t, d = continuous.grid, continuous.density
        # exact per-segment integral of (a + b*theta) e^{i theta} / (2 pi)
        mean += _circle_table_moments(t, d, np.array([1]))[0]
    return complex(mean)


def _circle_table_moments(t, d, ns):
    """m_n = (1/2pi) int e^{i n theta} rho(theta) dtheta for each n >= 1."""
    dt = np.diff(t)
    slope = np.diff(d) / dt
    alpha = d[:-1] - slope * t[:-1]
    out = np.zeros(len(ns), dtype=complex)
    chunk = max(1, int(2**22 / max(len(dt), 1)))
    for lo in range(0, len(ns), chunk):
        n = np.asarray(ns[lo:lo + chunk], dtype=float)[:, None]
        e1 = np.exp(1j * n * t[None, 1:])
        e0 = np.exp(1j * n * t[None, :-1])
        i0 = (e1 - e0) / (1j * n)
        i1 = (t[None, 1:] * e1 - t[None, :-1] * e0) / (1j * n) + (e1 - e0) / n**2
        out[lo:lo + chunk] = (alpha[None, :] * i0 + slope[None, :] * i1).sum(axis=1) / (2.0 * np.pi)
    return out


def circle_moments(m: Measure, n_max: int) -> np.ndarray:
    """First n_max circle moments m_n = int xi^n dmu, n = 1..n_max."""
    x, w = m.atom_arrays()
    ns = np.arange(1, n_max + 1)
    out = (w[None, :] * np.exp(1j * ns[:, None] * x[None, :])).sum(axis=1) if len(x) else np.zeros(n_max, dtype=complex)
    if m.continuous is not None:
        out = out + _circle_table_moments(m.continuous.grid, m.continuous.density, ns)
    return out


def moment(m: Measure, k: int):
    """int t^k dmu (real domains) or int xi^k dmu (circle), k <= 16.

    Exact for atoms and tabulated parts; adaptive quadrature for named
    families (error < 1e-10).
    """
    m = validate(m)
    if k < 0 or k > 16:
        raise ValueError("moment order must be in 0..16")
    if k == 0:
        return 1.0 if m.domain != CIRCLE else 1.0 + 0.0j
    if m.domain == CIRCLE:
        val = complex(circle_moments(m, k)[k - 1])
        return val
    val = sum(a.w * a.x**k for a in m.atoms)
    c = m.continuous
    if c is None:
        return float(val)
    if isinstance(c, Table):
        t, d = c.grid, c.density
        slope = np.diff(d) / np.diff(t)
        alpha = d[:-1] - slope * t[:-1]
        beta = slope
        t_hi, t_lo = t[1:], t[:-1]
        val += np.sum(alpha * (t_hi ** (k + 1) - t_lo ** (k + 1)) / (k + 1)
                      + beta * (t_hi ** (k + 2) - t_lo ** (k + 2)) / (k + 2))
        return float(val)
    from scipy.integrate import quad

    lo, hi = c.support()
    if np.isinf(hi):  # heavy tails: integrate on a transformed interval
        res, _ = quad(lambda u: c.density(np.array([u]))[0] * u**k, -np.inf, np.inf, limit=400)
    else:
        res, _ = quad(lambda u: c.density(np.array([u]))[0] * u**k, lo, hi, limit=400,
                      points=[lo, hi], epsabs=1e-13, epsrel=1e-13)
    return float(val + res)


def sample(m: Measure, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws (angles for circle measures), deterministic per seed."""
    m = validate(m)
    rng = np.random.default_rng(seed)
    weights = [a.w for a in m.atoms]
    parts = len(weights)
    if m.continuous is not None:
        weights = weights + [m.continuous.mass()]
    choice = rng.choice(len(weights), size=n, p=np.array(weights) / np.sum(weights))
    out = np.zeros(n)
    for i, a in enumerate(m.atoms):
        out[choice == i] = a.x
    if m.continuous is not None:
        mask = choice == parts
        out[mask] = m.continuous.sample(rng, int(mask.sum()))
    return out


# ---------------------------------------------------------------------------
# constructors and JSON round trip

def dirac(a: float, domain: str = REAL) -> Measure:
    return validate(Measure(domain, (Atom(float(a), 1.0),)))


def atomic(pairs, domain: str = REAL) -> Measure:
    return validate(Measure(domain, tuple(Atom(float(x), float(w)) for x, w in pairs)))


def bernoulli_pm1() -> Measure:
    return atomic([(-1.0, 0.5), (1.0, 0.5)])


def with_family(family, domain: str = REAL, atoms=()) -> Measure:
    return validate(Measure(domain, tuple(Atom(float(x), float(w)) for x, w in atoms), family))


def measure_from_json(obj) -> Measure:
    """Canonical on-disk format; see README for the schema."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    domain = obj.get("domain", REAL)
    atoms = tuple(Atom(float(a["x"]), float(a["w"])) for a in obj.get("atoms", []))
    cont = None
    spec = obj.get("continuous")
    if spec:
        if "family" in spec:
            name = spec["family"]
            if name not in FAMILIES:
                raise ValidationError(f"unknown family {name!r}")
            cont = FAMILIES[name](**spec.get("params", {}))
            if domain == CIRCLE:
                raise DomainViolation("named families are real-line objects")
        else:
            cont = Table(np.asarray(spec["grid"], dtype=float),
                         np.asarray(spec["density"], dtype=float),
                         circle=(domain == CIRCLE))
    return validate(Measure(domain, atoms, cont))


def measure_to_json(m: Measure) -> dict:
    out = {"domain": m.domain, "atoms": [{"x": a.x, "w": a.w} for a in m.atoms]}
    c = m.continuous
    if c is None:
        return out
    if isinstance(c, Table):
        out["continuous"] = {"grid": c.grid.tolist(), "density": c.density.tolist()}
    else:
        out["continuous"] = {"family": c.name, "params": c.params()}
    return out


def load_measure(path) -> Measure:
    with open(path) as fh:
        return measure_from_json(json.load(fh))
