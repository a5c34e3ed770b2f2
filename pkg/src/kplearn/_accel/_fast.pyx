# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the ragged-data hot loops.

Contracts match ``_fallback``; see that module for the data layout.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p, tanh

cnp.import_array()

BACKEND = "compiled"

cdef double LOG2 = log(2.0)


def nu_columns(double[::1] values, long long[::1] offsets, double[:, ::1] atoms):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t d = atoms.shape[1]
    out_arr = np.zeros((d, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, p, l, lo, hi
    cdef double scaled
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        for p in range(lo, hi):
            scaled = values[p] / (hi - lo)
            for l in range(d):
                out[l, i] += atoms[p, l] * scaled
    return out_arr


def gram_blocks(long long[::1] offsets, double[:, ::1] atoms):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t d = atoms.shape[1]
    out_arr = np.zeros((n, d, d))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, p, l, s, lo, hi
    cdef double inv_m, a
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        inv_m = 1.0 / (hi - lo)
        for p in range(lo, hi):
            for l in range(d):
                a = atoms[p, l] * inv_m
                for s in range(l, d):
                    out[i, l, s] += a * atoms[p, s]
        for l in range(d):
            for s in range(l + 1, d):
                out[i, s, l] = out[i, l, s]
    return out_arr


def loss_and_columns(double[::1] values, long long[::1] offsets,
                     double[:, ::1] atoms, double[:, ::1] w,
                     int kind, double gamma):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t d = atoms.shape[1]
    losses_arr = np.zeros(n)
    cols_arr = np.zeros((d, n))
    cdef double[::1] losses = losses_arr
    cdef double[:, ::1] cols = cols_arr
    cdef Py_ssize_t i, p, l, lo, hi
    cdef double pred, resid, deriv, t, inv_m, acc
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        inv_m = 1.0 / (hi - lo)
        acc = 0.0
        for p in range(lo, hi):
            pred = 0.0
            for l in range(d):
                pred += atoms[p, l] * w[l, i]
            resid = values[p] - pred
            if kind == 0:
                acc += resid * resid
                deriv = -2.0 * resid
            else:
                t = fabs(gamma * resid)
                acc += (t + log1p(exp(-2.0 * t)) - LOG2) / gamma
                deriv = tanh(-gamma * resid)
            deriv *= inv_m
            for l in range(d):
                cols[l, i] += deriv * atoms[p, l]
        losses[i] = acc * inv_m
    return losses_arr, cols_arr


def integral_gaussian_gram(double[:, :, ::1] x, double sigma):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = x.shape[1]
    cdef Py_ssize_t c = x.shape[2]
    out_arr = np.ones((n, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p, k
    cdef double inv = 1.0 / (sigma * sigma)
    cdef double acc, sq, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for p in range(m):
                sq = 0.0
                for k in range(c):
                    diff = x[i, p, k] - x[j, p, k]
                    sq += diff * diff
                acc += exp(-sq * inv)
            out[i, j] = acc / m
            out[j, i] = out[i, j]
    return out_arr


def integral_gaussian_cross(double[:, :, ::1] x0, double[:, :, ::1] x1,
                            double sigma):
    cdef Py_ssize_t n0 = x0.shape[0]
    cdef Py_ssize_t n1 = x1.shape[0]
    cdef Py_ssize_t m = x0.shape[1]
    cdef Py_ssize_t c = x0.shape[2]
    out_arr = np.empty((n0, n1))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p, k
    cdef double inv = 1.0 / (sigma * sigma)
    cdef double acc, sq, diff
    for i in range(n0):
        for j in range(n1):
            acc = 0.0
            for p in range(m):
                sq = 0.0
                for k in range(c):
                    diff = x0[i, p, k] - x1[j, p, k]
                    sq += diff * diff
                acc += exp(-sq * inv)
            out[i, j] = acc / m
    return out_arr
