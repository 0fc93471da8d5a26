# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixation-decision kernel; contract documented in the package
__init__. One flat pass per (candidate, sample) pair, tracking the top two
base scores so every hypothetical target placement is scored in O(cells)."""

from libc.math cimport INFINITY

import numpy as np


def decision_objectives(
    const double[::1] log_w,
    const double[::1] probs,
    const double[:, ::1] d2,
    const double[:, ::1] mu0,
    const double[:, ::1] dmu,
    const double[:, ::1] sigma,
    const double[:, ::1] z,
):
    cdef Py_ssize_t n_k = d2.shape[0]
    cdef Py_ssize_t n = d2.shape[1]
    cdef Py_ssize_t n_s = z.shape[0]
    if log_w.shape[0] != n or probs.shape[0] != n or z.shape[1] != n:
        raise ValueError("kernel input shapes disagree")
    if mu0.shape[0] != n_k or dmu.shape[0] != n_k or sigma.shape[0] != n_k:
        raise ValueError("kernel input shapes disagree")

    out_arr = np.empty(n_k)
    buf_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] b = buf_arr
    cdef Py_ssize_t k, s, i, jm
    cdef double v, m1, m2, thr, acc, total

    with nogil:
        for k in range(n_k):
            total = 0.0
            for s in range(n_s):
                m1 = -INFINITY
                m2 = -INFINITY
                jm = 0
                for i in range(n):
                    v = log_w[i] + d2[k, i] * (mu0[k, i] + sigma[k, i] * z[s, i])
                    b[i] = v
                    if v > m1:
                        m2 = m1
                        m1 = v
                        jm = i
                    elif v > m2:
                        m2 = v
                acc = 0.0
                for i in range(n):
                    thr = m2 if i == jm else m1
                    if b[i] + d2[k, i] * dmu[k, i] > thr:
                        acc = acc + probs[i]
                total = total + acc
            out[k] = total / n_s
    return out_arr
