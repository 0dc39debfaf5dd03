# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels mirroring ``_numpy``.

The uniform-consumption order, sweep order, and on/off decision rule
(switch on when u < p) match the numpy backend, so sampled spins agree
bit for bit across backends and float outputs agree to rounding.
"""
from libc.math cimport exp, fabs, tanh

import numpy as np


cdef inline double _sigmoid_scaled(double x, bint pm1) nogil:
    # p(on | field x): sigmoid(2x) for pm1 units, sigmoid(x) for zero_one
    cdef double y = 2.0 * x if pm1 else x
    cdef double t = exp(-fabs(y))
    if y >= 0.0:
        return 1.0 / (1.0 + t)
    return t / (1.0 + t)


cdef inline double _mean_on(double x, bint pm1) nogil:
    if pm1:
        return tanh(x)
    return _sigmoid_scaled(x, False)


def cd_stats(double[::1] a, double[::1] b, double[:, ::1] w,
             double[:, ::1] batch, double[:, ::1] v_start, int cd_steps,
             bint pm1, double[:, :, ::1] u_h, double[:, :, ::1] u_v,
             u_data=None):
    """Contrastive-divergence statistics for one batch; see _numpy.cd_stats."""
    cdef Py_ssize_t B = batch.shape[0]
    cdef Py_ssize_t nv = a.shape[0]
    cdef Py_ssize_t nh = b.shape[0]
    cdef double off = -1.0 if pm1 else 0.0

    da_arr = np.zeros(nv)
    db_arr = np.zeros(nh)
    dw_arr = np.zeros((nv, nh))
    cdef double[::1] da = da_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] dw = dw_arr

    v_arr = np.empty((B, nv))
    h_arr = np.empty((B, nh))
    cdef double[:, ::1] v = v_arr
    cdef double[:, ::1] h = h_arr

    cdef double[:, ::1] ud
    cdef bint faithful = u_data is not None
    if faithful:
        ud = u_data

    cdef Py_ssize_t r, i, j, k
    cdef double act, hm, mism
    cdef long mismatches = 0

    with nogil:
        # data-side moments
        for r in range(B):
            for j in range(nh):
                act = b[j]
                for i in range(nv):
                    act += batch[r, i] * w[i, j]
                if faithful:
                    hm = 1.0 if ud[r, j] < _sigmoid_scaled(act, pm1) else off
                else:
                    hm = _mean_on(act, pm1)
                db[j] += hm
                for i in range(nv):
                    dw[i, j] += batch[r, i] * hm
            for i in range(nv):
                da[i] += batch[r, i]
            for i in range(nv):
                v[r, i] = v_start[r, i]

        # model-side chain
        for k in range(cd_steps):
            for r in range(B):
                for j in range(nh):
                    act = b[j]
                    for i in range(nv):
                        act += v[r, i] * w[i, j]
                    h[r, j] = 1.0 if u_h[k, r, j] < _sigmoid_scaled(act, pm1) else off
                for i in range(nv):
                    act = a[i]
                    for j in range(nh):
                        act += w[i, j] * h[r, j]
                    v[r, i] = 1.0 if u_v[k, r, i] < _sigmoid_scaled(act, pm1) else off
            if k == 0:
                for r in range(B):
                    for i in range(nv):
                        if v[r, i] != batch[r, i]:
                            mismatches += 1

        for r in range(B):
            for j in range(nh):
                act = b[j]
                for i in range(nv):
                    act += v[r, i] * w[i, j]
                hm = _mean_on(act, pm1)
                db[j] -= hm
                for i in range(nv):
                    dw[i, j] -= v[r, i] * hm
            for i in range(nv):
                da[i] -= v[r, i]

    da_arr /= B
    db_arr /= B
    dw_arr /= B
    cdef double recon = mismatches / <double>(B * nv)
    return da_arr, db_arr, dw_arr, recon


def gibbs_chain(double[::1] a, double[::1] b, double[:, ::1] w, bint pm1,
                double[::1] v0, Py_ssize_t n_keep, Py_ssize_t burn_in,
                Py_ssize_t thinning, double[:, ::1] u_h, double[:, ::1] u_v):
    """Single block-Gibbs chain; see _numpy.gibbs_chain."""
    cdef Py_ssize_t nv = a.shape[0]
    cdef Py_ssize_t nh = b.shape[0]
    cdef double off = -1.0 if pm1 else 0.0

    out_arr = np.empty((n_keep, nv), dtype=np.int8)
    cdef signed char[:, ::1] out = out_arr
    v_arr = np.empty(nv)
    h_arr = np.empty(nh)
    cdef double[::1] v = v_arr
    cdef double[::1] h = h_arr

    cdef Py_ssize_t t, i, j, k = 0
    cdef Py_ssize_t total = burn_in + n_keep * thinning
    cdef double act

    with nogil:
        for i in range(nv):
            v[i] = v0[i]
        for t in range(total):
            for j in range(nh):
                act = b[j]
                for i in range(nv):
                    act += v[i] * w[i, j]
                h[j] = 1.0 if u_h[t, j] < _sigmoid_scaled(act, pm1) else off
            for i in range(nv):
                act = a[i]
                for j in range(nh):
                    act += w[i, j] * h[j]
                v[i] = 1.0 if u_v[t, i] < _sigmoid_scaled(act, pm1) else off
            if t >= burn_in and (t - burn_in + 1) % thinning == 0:
                for i in range(nv):
                    out[k, i] = <signed char>v[i]
                k += 1
    return out_arr


def wht_inplace(double[::1] f):
    """Unnormalized Walsh-Hadamard transform, in place over length 2**n."""
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t h = 1
    cdef Py_ssize_t base, i
    cdef double x, y
    with nogil:
        while h < n:
            base = 0
            while base < n:
                for i in range(base, base + h):
                    x = f[i]
                    y = f[i + h]
                    f[i] = x + y
                    f[i + h] = x - y
                base += 2 * h
            h *= 2


def moebius_inplace(double[::1] f):
    """Subset-lattice inversion in place: f[S] <- sum_{T<=S} (-1)^(|S|-|T|) f[T]."""
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t step = 1
    cdef Py_ssize_t base, i
    with nogil:
        while step < n:
            base = 0
            while base < n:
                for i in range(base + step, base + 2 * step):
                    f[i] -= f[i - step]
                base += 2 * step
            step *= 2
