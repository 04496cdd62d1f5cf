# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the hot kernels (see _pure.py for semantics)."""
import numpy as np

from libc.math cimport cos, sin

BACKEND = "compiled"


def bracket_values(double tan_psi, double cos_delta, double cross, double sign,
                   theta1, theta2, out=None):
    shape = np.broadcast_shapes(np.shape(theta1), np.shape(theta2))
    t1_arr = np.array(
        np.broadcast_to(np.asarray(theta1, dtype=np.float64), shape), dtype=np.float64
    ).ravel()
    t2_arr = np.array(
        np.broadcast_to(np.asarray(theta2, dtype=np.float64), shape), dtype=np.float64
    ).ravel()
    res_arr = np.empty(t1_arr.shape[0], dtype=np.float64)

    cdef double[::1] t1 = t1_arr
    cdef double[::1] t2 = t2_arr
    cdef double[::1] res = res_arr
    cdef Py_ssize_t i, n = t1.shape[0]
    cdef double c1, s1, c2, s2
    cdef double tp2 = tan_psi * tan_psi
    cdef double xterm = sign * 2.0 * tan_psi * cos_delta * cross
    for i in range(n):
        c1 = cos(t1[i]); s1 = sin(t1[i])
        c2 = cos(t2[i]); s2 = sin(t2[i])
        res[i] = (tp2 * c1 * c1 * s2 * s2 + s1 * s1 * c2 * c2
                  + xterm * c1 * c2 * s1 * s2)

    result = res_arr.reshape(shape) if shape else res_arr[0]
    if out is not None:
        out[...] = result
        return out
    return result


def time_average_intensity(amp_fwd, amp_rev, detuning, d_grid):
    a_arr = np.array(amp_fwd, dtype=np.complex128, order="C")
    b_arr = np.array(amp_rev, dtype=np.complex128, order="C")
    q_arr = np.array(detuning, dtype=np.float64, order="C")
    d_arr = np.array(d_grid, dtype=np.float64, order="C")

    cdef double complex[::1] a = a_arr
    cdef double complex[::1] b = b_arr
    cdef double[::1] q = q_arr
    cdef double[::1] d = d_arr
    cdef Py_ssize_t n_modes = a.shape[0]
    cdef Py_ssize_t n_time = d.shape[0]
    cdef Py_ssize_t it, m
    cdef double ph, c, s
    cdef double ar, ai, br, bi
    cdef double re_tot, im_tot, acc = 0.0
    for it in range(n_time):
        re_tot = 0.0
        im_tot = 0.0
        for m in range(n_modes):
            ph = d[it] * q[m]
            c = cos(ph); s = sin(ph)
            ar = a[m].real; ai = a[m].imag
            br = b[m].real; bi = b[m].imag
            # a_m * e^{-i ph} + b_m * e^{+i ph}
            re_tot += ar * c + ai * s + br * c - bi * s
            im_tot += ai * c - ar * s + bi * c + br * s
        acc += re_tot * re_tot + im_tot * im_tot
    return acc / n_time
