# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def bb84_outcomes(r, s, basis, received, flip_u, coin_u, double p_err):
    cdef const unsigned char[::1] rv = np.ascontiguousarray(r, dtype=np.uint8)
    cdef const unsigned char[::1] sv = np.ascontiguousarray(s, dtype=np.uint8)
    cdef const unsigned char[::1] bv = np.ascontiguousarray(basis, dtype=np.uint8)
    cdef const unsigned char[::1] recv = np.ascontiguousarray(received, dtype=np.uint8)
    cdef const double[::1] fu = np.ascontiguousarray(flip_u, dtype=np.float64)
    cdef const double[::1] cu = np.ascontiguousarray(coin_u, dtype=np.float64)
    cdef Py_ssize_t i, N = rv.shape[0]
    out = np.empty(N, dtype=np.int8)
    cdef signed char[::1] ov = out
    for i in range(N):
        if not recv[i]:
            ov[i] = -1
        elif bv[i] == sv[i]:
            ov[i] = rv[i] ^ (1 if fu[i] < p_err else 0)
        else:
            ov[i] = 1 if cu[i] < 0.5 else 0
    return out


def projective_outcomes(a0, a1, double theta, u):
    cdef const double complex[::1] av0 = np.ascontiguousarray(a0, dtype=np.complex128)
    cdef const double complex[::1] av1 = np.ascontiguousarray(a1, dtype=np.complex128)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t i, N = uv.shape[0]
    cdef double c = cos(theta), sn = sin(theta), p0
    cdef double complex amp
    out = np.empty(N, dtype=np.int8)
    cdef signed char[::1] ov = out
    for i in range(N):
        amp = c * av0[i] + sn * av1[i]
        p0 = amp.real * amp.real + amp.imag * amp.imag
        ov[i] = 0 if uv[i] < p0 else 1
    return out


def group_errors(r, s, outcomes, claimed, ks, Py_ssize_t n):
    cdef const unsigned char[::1] rv = np.ascontiguousarray(r, dtype=np.uint8)
    cdef const unsigned char[::1] sv = np.ascontiguousarray(s, dtype=np.uint8)
    cdef const signed char[::1] ov = np.ascontiguousarray(outcomes, dtype=np.int8)
    cdef const unsigned char[::1] cv = np.ascontiguousarray(claimed, dtype=np.uint8)
    cdef const long long[::1] kv = np.ascontiguousarray(ks, dtype=np.int64)
    cdef Py_ssize_t j, l, base, G = kv.shape[0]
    cdef long long a, w, hit
    cdef unsigned char c
    omega = np.zeros(G, dtype=np.int64)
    wrong = np.zeros(G, dtype=np.int64)
    cdef long long[::1] om = omega
    cdef long long[::1] wr = wrong
    for j in range(G):
        base = kv[j] * n
        c = cv[j]
        a = 0
        w = 0
        # branch-free: the sign and basis tests become 0/1 masks
        for l in range(base, base + n):
            hit = (ov[l] >= 0) & (sv[l] == c)
            a += hit
            w += hit & (ov[l] != rv[l])
        om[j] = a
        wr[j] = w
    return omega, wrong
