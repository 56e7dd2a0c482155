# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels; see _kernels_py.py for the reference
implementation and the segment/table conventions."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

cdef extern from "complex.h" nogil:
    cplx clog(cplx)
    cplx cexp(cplx)


def cauchy_atoms(cnp.ndarray[cplx, ndim=1] z,
                 cnp.ndarray[double, ndim=1] x,
                 cnp.ndarray[double, ndim=1] w):
    cdef Py_ssize_t m = z.shape[0], n = x.shape[0], i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cplx acc, zi
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n):
            acc = acc + w[k] / (zi - x[k])
        out[i] = acc
    return out


def cauchy_atoms_d(cnp.ndarray[cplx, ndim=1] z,
                   cnp.ndarray[double, ndim=1] x,
                   cnp.ndarray[double, ndim=1] w):
    cdef Py_ssize_t m = z.shape[0], n = x.shape[0], i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cplx acc, d, zi
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n):
            d = zi - x[k]
            acc = acc - w[k] / (d * d)
        out[i] = acc
    return out


def cauchy_segments(cnp.ndarray[cplx, ndim=1] z,
                    cnp.ndarray[double, ndim=1] t,
                    cnp.ndarray[double, ndim=2] C):
    cdef Py_ssize_t m = z.shape[0], n = t.shape[0] - 1, i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cplx acc, zeta, ell, p, r0, r1, zi
    cdef double dt, c0, c1, c2, c3
    if n < 1:
        return out
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n):
            dt = t[k + 1] - t[k]
            c0 = C[k, 0]; c1 = C[k, 1]; c2 = C[k, 2]; c3 = C[k, 3]
            zeta = zi - t[k]
            ell = clog(zeta) - clog(zeta - dt)
            p = c0 + zeta * (c1 + zeta * (c2 + zeta * c3))
            r0 = c1 + zeta * (c2 + zeta * c3)
            r1 = c2 + zeta * c3
            acc = acc + p * ell - (r0 * dt + r1 * dt * dt / 2.0 + c3 * dt * dt * dt / 3.0)
        out[i] = acc
    return out


def cauchy_segments_d(cnp.ndarray[cplx, ndim=1] z,
                      cnp.ndarray[double, ndim=1] t,
                      cnp.ndarray[double, ndim=2] C):
    cdef Py_ssize_t m = z.shape[0], n = t.shape[0] - 1, i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cplx acc, zeta, ell, p, r0, r1, rz, s0, inner, zi
    cdef double dt, c0, c1, c2, c3
    if n < 1:
        return out
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n):
            dt = t[k + 1] - t[k]
            c0 = C[k, 0]; c1 = C[k, 1]; c2 = C[k, 2]; c3 = C[k, 3]
            zeta = zi - t[k]
            ell = clog(zeta) - clog(zeta - dt)
            p = c0 + zeta * (c1 + zeta * (c2 + zeta * c3))
            r0 = c1 + zeta * (c2 + zeta * c3)
            r1 = c2 + zeta * c3
            rz = r0 + r1 * zeta + c3 * zeta * zeta
            s0 = r1 + c3 * zeta
            inner = p * (1.0 / (zeta - dt) - 1.0 / zeta) - (rz * ell - (s0 * dt + c3 * dt * dt / 2.0))
            acc = acc - inner
        out[i] = acc
    return out


def psi_circle_atoms(cnp.ndarray[cplx, ndim=1] z,
                     cnp.ndarray[double, ndim=1] theta,
                     cnp.ndarray[double, ndim=1] w):
    cdef Py_ssize_t m = z.shape[0], n = theta.shape[0], i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] xi = np.exp(1j * theta)
    cdef cplx acc, zx, zi
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n):
            zx = zi * xi[k]
            acc = acc + w[k] * zx / (1.0 - zx)
        out[i] = acc
    return out


def psi_circle_atoms_d(cnp.ndarray[cplx, ndim=1] z,
                       cnp.ndarray[double, ndim=1] theta,
                       cnp.ndarray[double, ndim=1] w):
    cdef Py_ssize_t m = z.shape[0], n = theta.shape[0], i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] xi = np.exp(1j * theta)
    cdef cplx acc, d, zi
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n):
            d = 1.0 - zi * xi[k]
            acc = acc + w[k] * xi[k] / (d * d)
        out[i] = acc
    return out


def horner(cnp.ndarray[cplx, ndim=1] coef, cnp.ndarray[cplx, ndim=1] z):
    cdef Py_ssize_t m = z.shape[0], n = coef.shape[0], i, k
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(m, dtype=np.complex128)
    cdef cplx acc, zi
    for i in range(m):
        zi = z[i]
        acc = 0
        for k in range(n - 1, -1, -1):
            acc = acc * zi + coef[k]
        out[i] = acc
    return out
