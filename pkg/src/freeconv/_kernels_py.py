"""Pure numpy implementation of the evaluation kernels.

These eight primitives carry the hot inner work of every transform
evaluation: Cauchy-type sums over atoms, exact integrals of piecewise
polynomial densities against the 1/(z-t) kernel, the circle analogue, and
plain ascending-power series evaluation.  `freeconv._backend` picks the
compiled twin from `_kernels.pyx` when it imported successfully; both
implementations must agree to ~1e-13 (tests/test_backends.py).

Conventions
-----------
* ``z`` is always a 1-D complex128 array of evaluation points.
* Segment tables: ``t`` is the (n+1,) increasing breakpoint array and ``C``
  the (n, 4) array of local polynomial coefficients, density on segment i
  being ``p_i(v) = C[i,0] + C[i,1] v + C[i,2] v^2 + C[i,3] v^3`` with
  ``v = u - t[i]``.  The integral computed is exactly
  ``sum_i int_0^{dt_i} p_i(v) / (zeta_i - v) dv`` with ``zeta_i = z - t[i]``,
  via synthetic division against the log kernel (valid anywhere off the
  support, uniformly in the distance to it).
"""

from __future__ import annotations

import numpy as np


def cauchy_atoms(z, x, w):
    """sum_k w_k / (z - x_k)."""
    if len(x) == 0:
        return np.zeros_like(z)
    return (w[None, :] / (z[:, None] - x[None, :])).sum(axis=1)


def cauchy_atoms_d(z, x, w):
    """d/dz of `cauchy_atoms`."""
    if len(x) == 0:
        return np.zeros_like(z)
    return -(w[None, :] / (z[:, None] - x[None, :]) ** 2).sum(axis=1)


def _segment_pieces(z, t, C):
    dt = np.diff(t)                                   # (n,)
    zeta = z[:, None] - t[None, :-1]                  # (m, n)
    ell = np.log(zeta) - np.log(zeta - dt[None, :])   # branch-safe off support
    c0, c1, c2, c3 = C[:, 0], C[:, 1], C[:, 2], C[:, 3]
    p = c0 + zeta * (c1 + zeta * (c2 + zeta * c3))
    r0 = c1 + zeta * (c2 + zeta * c3)
    r1 = c2 + zeta * c3
    return dt, zeta, ell, p, r0, r1, c3


def cauchy_segments(z, t, C):
    """Exact integral of the tabulated density against 1/(z-u)."""
    if len(t) < 2:
        return np.zeros_like(z)
    dt, zeta, ell, p, r0, r1, c3 = _segment_pieces(z, t, C)
    tail = r0 * dt + r1 * dt**2 / 2.0 + c3 * dt**3 / 3.0
    return (p * ell - tail).sum(axis=1)


def cauchy_segments_d(z, t, C):
    """d/dz of `cauchy_segments`."""
    if len(t) < 2:
        return np.zeros_like(z)
    dt, zeta, ell, p, r0, r1, c3 = _segment_pieces(z, t, C)
    rz = r0 + r1 * zeta + c3 * zeta**2
    s0 = r1 + c3 * zeta
    inner = p * (1.0 / (zeta - dt) - 1.0 / zeta) - (rz * ell - (s0 * dt + c3 * dt**2 / 2.0))
    return -inner.sum(axis=1)


def psi_circle_atoms(z, theta, w):
    """sum_k w_k * z xi_k / (1 - z xi_k) with xi_k = exp(i theta_k)."""
    if len(theta) == 0:
        return np.zeros_like(z)
    xi = np.exp(1j * theta)
    zx = z[:, None] * xi[None, :]
    return (w[None, :] * zx / (1.0 - zx)).sum(axis=1)


def psi_circle_atoms_d(z, theta, w):
    """d/dz of `psi_circle_atoms`: sum_k w_k xi_k / (1 - z xi_k)^2."""
    if len(theta) == 0:
        return np.zeros_like(z)
    xi = np.exp(1j * theta)
    return (w[None, :] * xi[None, :] / (1.0 - z[:, None] * xi[None, :]) ** 2).sum(axis=1)


def horner(coef, z):
    """sum_n coef[n] z^n, coefficients ascending."""
    out = np.zeros_like(z)
    for c in coef[::-1]:
        out = out * z + c
    return out
