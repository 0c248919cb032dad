# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler-Maruyama trial kernels; twin of _kernels_py.

Same contracts as the fallback: each function advances one trial given
pre-drawn noise and returns (trajectory, blow_step), blow_step = 0 on a
completed trial.  Inner loops use fixed summation order so a trial's result
never depends on batching or scheduling.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, sin, tanh

cnp.import_array()

PAIR_INDEX = tuple((m, n) for m in range(1, 6) for n in range(m, 6))

cdef double TWO_PI = 6.283185307179586


cdef inline double _sig(double v, double tmax, double slope, double vt) noexcept nogil:
    return tmax * 0.5 * (1.0 + tanh(0.5 * slope * (v - vt)))


def exact_path(double[::1] v0, double[:, ::1] jm, double[:, ::1] jz, bint use_z,
               double i0, double s5, bint use_h, double tau, double tmax,
               double slope, double vt, double dt, double[:, ::1] noise,
               double limit):
    cdef Py_ssize_t n = v0.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[0]
    traj_arr = np.empty((n_steps + 1, n))
    cdef double[:, ::1] traj = traj_arr
    v_arr = np.array(v0, copy=True)
    s_arr = np.empty(n)
    cdef double[::1] v = v_arr
    cdef double[::1] s = s_arr
    cdef Py_ssize_t i, j, k
    cdef double t, acc, h, zf, vnew, vmax

    for i in range(n):
        traj[0, i] = v[i]
    for k in range(n_steps):
        t = k * dt
        h = s5 * sin(TWO_PI * t) if use_h else 0.0
        zf = exp(-t) if use_z else 0.0
        for i in range(n):
            s[i] = _sig(v[i], tmax, slope, vt)
        vmax = 0.0
        for i in range(n):
            acc = 0.0
            if use_z:
                for j in range(n):
                    acc += (jm[i, j] + zf * jz[i, j]) * s[j]
            else:
                for j in range(n):
                    acc += jm[i, j] * s[j]
            vnew = v[i] + (-v[i] / tau + acc + i0 + h) * dt + noise[k, i]
            traj[k + 1, i] = vnew
            if fabs(vnew) > vmax:
                vmax = fabs(vnew)
        if vmax > limit:
            return traj_arr, k + 1
        for i in range(n):
            v[i] = traj[k + 1, i]
    return traj_arr, 0


cdef inline void _matvec(double[:, ::1] mat, double[:, ::1] src, Py_ssize_t row,
                         double[::1] out) noexcept nogil:
    # out = mat @ src[row, :]
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += mat[i, j] * src[row, j]
        out[i] = acc


def order1_path(double[::1] y20, double[:, ::1] jeff, double[::1] w_src,
                double[::1] z_src, double[::1] h_src, double tau, double dt,
                double[:, ::1] noise, double limit):
    cdef Py_ssize_t n = y20.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[0]
    traj_arr = np.empty((n_steps + 1, 5, n))
    cdef double[:, :, ::1] traj = traj_arr
    y_arr = np.zeros((5, n))
    dy_arr = np.empty((5, n))
    tmp_arr = np.empty(n)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] dy = dy_arr
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t i, k, m
    cdef double ymax, val

    for i in range(n):
        y[1, i] = y20[i]
    for m in range(5):
        for i in range(n):
            traj[0, m, i] = y[m, i]
    for k in range(n_steps):
        for m in range(5):
            _matvec(jeff, y, m, tmp)
            for i in range(n):
                dy[m, i] = -y[m, i] / tau + tmp[i]
        for i in range(n):
            dy[2, i] += w_src[i]
            dy[3, i] += z_src[k]
            dy[4, i] += h_src[k]
        ymax = 0.0
        for m in range(5):
            for i in range(n):
                val = y[m, i] + dy[m, i] * dt
                if m == 0:
                    val += noise[k, i]
                y[m, i] = val
                traj[k + 1, m, i] = val
                if fabs(val) > ymax:
                    ymax = fabs(val)
        if ymax > limit:
            return traj_arr, k + 1
    return traj_arr, 0


def order2_path(double[::1] y20, double[:, ::1] jeff, double[:, ::1] j2,
                double[:, ::1] w_eff, double[::1] w_src, double[::1] z_src,
                double[::1] zpair, double[::1] h_src, double tau, double dt,
                double[:, ::1] noise, double limit):
    cdef Py_ssize_t n = y20.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[0]
    traj_arr = np.empty((n_steps + 1, 20, n))
    cdef double[:, :, ::1] traj = traj_arr
    y_arr = np.zeros((5, n))
    yp_arr = np.zeros((15, n))
    dy_arr = np.empty((5, n))
    dyp_arr = np.empty((15, n))
    tmp_arr = np.empty(n)
    prod_arr = np.empty(n)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] yp = yp_arr
    cdef double[:, ::1] dy = dy_arr
    cdef double[:, ::1] dyp = dyp_arr
    cdef double[::1] tmp = tmp_arr
    cdef double[::1] prod = prod_arr
    # unpack the (m, n) pair table to C arrays (1-based member indices)
    cdef int[15] pm
    cdef int[15] pn
    cdef Py_ssize_t idx = 0
    cdef int m_, n_
    for m_ in range(1, 6):
        for n_ in range(m_, 6):
            pm[idx] = m_
            pn[idx] = n_
            idx += 1

    cdef Py_ssize_t i, j, k, p, other
    cdef double ymax, val, coeff, zk, acc

    for i in range(n):
        y[1, i] = y20[i]
    for p in range(5):
        for i in range(n):
            traj[0, p, i] = y[p, i]
    for p in range(15):
        for i in range(n):
            traj[0, 5 + p, i] = 0.0

    for k in range(n_steps):
        zk = zpair[k]
        for p in range(5):
            _matvec(jeff, y, p, tmp)
            for i in range(n):
                dy[p, i] = -y[p, i] / tau + tmp[i]
        for i in range(n):
            dy[2, i] += w_src[i]
            dy[3, i] += z_src[k]
            dy[4, i] += h_src[k]
        for p in range(15):
            _matvec(jeff, yp, p, tmp)
            for i in range(n):
                dyp[p, i] = -yp[p, i] / tau + tmp[i]
            coeff = 0.5 if pm[p] == pn[p] else 1.0
            for i in range(n):
                prod[i] = y[pm[p] - 1, i] * y[pn[p] - 1, i]
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += j2[i, j] * prod[j]
                dyp[p, i] += coeff * acc
            if pm[p] == 3 or pn[p] == 3:
                other = pn[p] - 1 if pm[p] == 3 else pm[p] - 1
                _matvec(w_eff, y, other, tmp)
                for i in range(n):
                    dyp[p, i] += tmp[i]
            if zk != 0.0 and (pm[p] == 4 or pn[p] == 4):
                other = pn[p] - 1 if pm[p] == 4 else pm[p] - 1
                _matvec(jeff, y, other, tmp)
                for i in range(n):
                    dyp[p, i] += zk * tmp[i]
        ymax = 0.0
        for p in range(5):
            for i in range(n):
                val = y[p, i] + dy[p, i] * dt
                if p == 0:
                    val += noise[k, i]
                y[p, i] = val
                traj[k + 1, p, i] = val
                if fabs(val) > ymax:
                    ymax = fabs(val)
        for p in range(15):
            for i in range(n):
                val = yp[p, i] + dyp[p, i] * dt
                yp[p, i] = val
                traj[k + 1, 5 + p, i] = val
                if fabs(val) > ymax:
                    ymax = fabs(val)
        if ymax > limit:
            return traj_arr, k + 1
    return traj_arr, 0
