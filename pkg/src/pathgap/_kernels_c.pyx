# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Same contracts as the pure-numpy twin ``_kernels_py``: a geodesic random
walk over batches of paths, and RK4 integration of the damping matrix ODE
per start column.  Loops are written out per path/step so no temporaries are
allocated in the inner loop.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, cosh, sin, sinh, sqrt

cnp.import_array()

KIND_FLAT = 0
KIND_SPHERE = 1
KIND_HYPERBOLOID = 2

DEF MAX_AMB = 16


def simulate_paths(int kind, double kappa, int dim, start_pos, start_frame,
                   increments, record):
    """Geodesic random walk driven by per-path increment arrays.

    increments: (P, n, d); record: sorted int64 indices into 0..n.  Returns
    (positions (P, m, amb), frames (P, m, d, amb)).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=3] inc = np.ascontiguousarray(increments, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sp = np.ascontiguousarray(start_pos, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sf = np.ascontiguousarray(start_frame, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rec = np.ascontiguousarray(record, dtype=np.int64)

    cdef Py_ssize_t n_paths = inc.shape[0]
    cdef Py_ssize_t n_steps = inc.shape[1]
    cdef Py_ssize_t d = inc.shape[2]
    cdef Py_ssize_t amb = sp.shape[0]
    cdef Py_ssize_t m = rec.shape[0]

    cdef cnp.ndarray[cnp.float64_t, ndim=3] out_pos = np.empty((n_paths, m, amb))
    cdef cnp.ndarray[cnp.float64_t, ndim=4] out_frames = np.empty((n_paths, m, d, amb))

    cdef double[MAX_AMB] pos
    cdef double[MAX_AMB] new_pos
    cdef double[MAX_AMB] direction
    cdef double[MAX_AMB] correction
    cdef double[MAX_AMB * MAX_AMB] frame
    cdef double[MAX_AMB] coeffs
    cdef double[MAX_AMB] g
    cdef double radius, r2, arc, theta, cos_t, sin_t, acc, nrm, disp_a
    cdef Py_ssize_t p, k, i, j, a, rec_ptr

    if amb > MAX_AMB:
        raise ValueError("ambient dimension too large for compiled kernel")

    for a in range(amb):
        g[a] = 1.0
    if kind == 2:
        g[0] = -1.0
    if kind == 1:
        radius = 1.0 / sqrt(kappa)
    elif kind == 2:
        radius = 1.0 / sqrt(-kappa)
    else:
        radius = 0.0
    r2 = radius * radius

    for p in range(n_paths):
        for a in range(amb):
            pos[a] = sp[a]
        for i in range(d):
            for a in range(amb):
                frame[i * amb + a] = sf[i, a]
        rec_ptr = 0
        if rec_ptr < m and rec[rec_ptr] == 0:
            for a in range(amb):
                out_pos[p, 0, a] = pos[a]
            for i in range(d):
                for a in range(amb):
                    out_frames[p, 0, i, a] = frame[i * amb + a]
            rec_ptr += 1
        for k in range(n_steps):
            # ambient displacement: sum_i w_i e_i
            for a in range(amb):
                acc = 0.0
                for i in range(d):
                    acc += inc[p, k, i] * frame[i * amb + a]
                direction[a] = acc
            if kind == 0:
                for a in range(amb):
                    pos[a] += direction[a]
            else:
                arc = 0.0
                for a in range(amb):
                    arc += direction[a] * g[a] * direction[a]
                arc = sqrt(arc)
                if arc > 0.0:
                    for a in range(amb):
                        direction[a] /= arc
                    theta = arc / radius
                    if kind == 1:
                        cos_t = cos(theta)
                        sin_t = sin(theta)
                        for a in range(amb):
                            new_pos[a] = cos_t * pos[a] + radius * sin_t * direction[a]
                            correction[a] = (cos_t - 1.0) * direction[a] - sin_t * pos[a] / radius
                    else:
                        cos_t = cosh(theta)
                        sin_t = sinh(theta)
                        for a in range(amb):
                            new_pos[a] = cos_t * pos[a] + radius * sin_t * direction[a]
                            correction[a] = (cos_t - 1.0) * direction[a] + sin_t * pos[a] / radius
                    for i in range(d):
                        acc = 0.0
                        for a in range(amb):
                            acc += frame[i * amb + a] * g[a] * direction[a]
                        coeffs[i] = acc
                    for i in range(d):
                        for a in range(amb):
                            frame[i * amb + a] += coeffs[i] * correction[a]
                    # snap position back to the surface
                    if kind == 1:
                        nrm = 0.0
                        for a in range(amb):
                            nrm += new_pos[a] * new_pos[a]
                        nrm = radius / sqrt(nrm)
                    else:
                        nrm = 0.0
                        for a in range(amb):
                            nrm -= new_pos[a] * g[a] * new_pos[a]
                        nrm = radius / sqrt(nrm)
                    for a in range(amb):
                        pos[a] = new_pos[a] * nrm
                    # project rows to the tangent space at the new position
                    for i in range(d):
                        acc = 0.0
                        for a in range(amb):
                            acc += frame[i * amb + a] * g[a] * pos[a]
                        acc /= r2
                        if kind == 1:
                            for a in range(amb):
                                frame[i * amb + a] -= acc * pos[a]
                        else:
                            for a in range(amb):
                                frame[i * amb + a] += acc * pos[a]
                    # modified Gram-Schmidt in the ambient metric
                    for i in range(d):
                        for j in range(i):
                            acc = 0.0
                            for a in range(amb):
                                acc += frame[i * amb + a] * g[a] * frame[j * amb + a]
                            for a in range(amb):
                                frame[i * amb + a] -= acc * frame[j * amb + a]
                        nrm = 0.0
                        for a in range(amb):
                            nrm += frame[i * amb + a] * g[a] * frame[i * amb + a]
                        nrm = 1.0 / sqrt(nrm)
                        for a in range(amb):
                            frame[i * amb + a] *= nrm
            if rec_ptr < m and rec[rec_ptr] == k + 1:
                for a in range(amb):
                    out_pos[p, rec_ptr, a] = pos[a]
                for i in range(d):
                    for a in range(amb):
                        out_frames[p, rec_ptr, i, a] = frame[i * amb + a]
                rec_ptr += 1
    return out_pos, out_frames


cdef inline void _matmul_scaled(double* a, double* b, double* out,
                                Py_ssize_t d, double scale) nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += a[i * d + k] * b[k * d + j]
            out[i * d + j] = scale * acc


cdef void _rk4_advance(double* a0, double* a1, double* a2, double* q,
                       double h, Py_ssize_t d, double* work) nogil:
    """In-place RK4 step of dQ/dt = -1/2 A(t) Q for one d x d matrix."""
    cdef double* k1 = work
    cdef double* k2 = work + d * d
    cdef double* k3 = work + 2 * d * d
    cdef double* k4 = work + 3 * d * d
    cdef double* tmp = work + 4 * d * d
    cdef Py_ssize_t i
    _matmul_scaled(a0, q, k1, d, -0.5)
    for i in range(d * d):
        tmp[i] = q[i] + 0.5 * h * k1[i]
    _matmul_scaled(a1, tmp, k2, d, -0.5)
    for i in range(d * d):
        tmp[i] = q[i] + 0.5 * h * k2[i]
    _matmul_scaled(a1, tmp, k3, d, -0.5)
    for i in range(d * d):
        tmp[i] = q[i] + h * k3[i]
    _matmul_scaled(a2, tmp, k4, d, -0.5)
    for i in range(d * d):
        q[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def resolvent_triangle(ric_stages, dts):
    """All propagators Q_{t_i, t_j}, i >= j, packed at index i*(i+1)/2 + j."""
    cdef cnp.ndarray[cnp.float64_t, ndim=4] stages = np.ascontiguousarray(ric_stages, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.ascontiguousarray(dts, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t d = stages.shape[2]
    cdef Py_ssize_t n_pairs = (n + 1) * (n + 2) // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((n_pairs, d, d))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] work_arr = np.empty((5, d * d))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cur = np.empty((n + 1, d * d))
    cdef double* work = &work_arr[0, 0]
    cdef Py_ssize_t k, j, i, base
    cdef double dt

    for i in range(d):
        for j in range(d):
            cur[0, i * d + j] = 1.0 if i == j else 0.0
            out[0, i, j] = cur[0, i * d + j]
    for k in range(n):
        dt = h[k]
        for j in range(k + 1):
            _rk4_advance(&stages[k, 0, 0, 0], &stages[k, 1, 0, 0],
                         &stages[k, 2, 0, 0], &cur[j, 0], dt, d, work)
        for i in range(d):
            for j in range(d):
                cur[k + 1, i * d + j] = 1.0 if i == j else 0.0
        base = (k + 1) * (k + 2) // 2
        for j in range(k + 2):
            for i in range(d * d):
                out[base + j, i // d, i % d] = cur[j, i]
    return out


def resolvent_column(ric_stages, dts, Py_ssize_t j0):
    """Propagators Q_{t_i, t_{j0}} for i = j0..n: shape (n+1-j0, d, d)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=4] stages = np.ascontiguousarray(ric_stages, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.ascontiguousarray(dts, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t d = stages.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((n + 1 - j0, d, d))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] work_arr = np.empty((5, d * d))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = np.empty(d * d)
    cdef double* work = &work_arr[0, 0]
    cdef Py_ssize_t k, i, j

    for i in range(d):
        for j in range(d):
            q[i * d + j] = 1.0 if i == j else 0.0
            out[0, i, j] = q[i * d + j]
    for k in range(j0, n):
        _rk4_advance(&stages[k, 0, 0, 0], &stages[k, 1, 0, 0],
                     &stages[k, 2, 0, 0], &q[0], h[k], d, work)
        for i in range(d):
            for j in range(d):
                out[k + 1 - j0, i, j] = q[i * d + j]
    return out
