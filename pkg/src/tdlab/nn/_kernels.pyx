# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense-MLP kernels.

Parameter layout per layer: weight (out x in, row-major) followed by bias (out).
Hidden layers use ReLU with a zero subgradient at 0; the output layer is linear.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def forward(const double[::1] values, const long[::1] sizes, const double[:, ::1] X):
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t batch = X.shape[0]
    cdef Py_ssize_t width = 0
    cdef Py_ssize_t i
    for i in range(sizes.shape[0]):
        if sizes[i] > width:
            width = sizes[i]
    out = np.empty((batch, sizes[n_layers]), dtype=np.float64)
    cdef double[:, ::1] Y = out
    cdef double[::1] a = np.empty(width, dtype=np.float64)
    cdef double[::1] z = np.empty(width, dtype=np.float64)
    cdef Py_ssize_t j, l, r, c, off, n_in, n_out
    cdef double acc
    for j in range(batch):
        for c in range(sizes[0]):
            a[c] = X[j, c]
        off = 0
        for l in range(n_layers):
            n_in = sizes[l]
            n_out = sizes[l + 1]
            for r in range(n_out):
                acc = values[off + n_out * n_in + r]
                for c in range(n_in):
                    acc += values[off + r * n_in + c] * a[c]
                z[r] = acc
            off += n_out * n_in + n_out
            if l < n_layers - 1:
                for r in range(n_out):
                    a[r] = z[r] if z[r] > 0.0 else 0.0
            else:
                for r in range(n_out):
                    Y[j, r] = z[r]
    return out


def backward(const double[::1] values, const long[::1] sizes,
             const double[:, ::1] X, const double[:, ::1] G):
    """Sum over samples of J_j^T G_j, accumulated one sample at a time."""
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t batch = X.shape[0]
    cdef Py_ssize_t n_params = values.shape[0]
    cdef Py_ssize_t total_units = 0
    cdef Py_ssize_t width = 0
    cdef Py_ssize_t i
    for i in range(sizes.shape[0]):
        total_units += sizes[i]
        if sizes[i] > width:
            width = sizes[i]
    grad_arr = np.zeros(n_params, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    # acts holds every layer's post-activation, concatenated
    cdef double[::1] acts = np.empty(total_units, dtype=np.float64)
    cdef long[::1] act_off = np.empty(n_layers + 1, dtype=np.int64)
    cdef long[::1] par_off = np.empty(n_layers, dtype=np.int64)
    cdef double[::1] d = np.empty(width, dtype=np.float64)
    cdef double[::1] d_prev = np.empty(width, dtype=np.float64)
    cdef Py_ssize_t j, l, r, c, n_in, n_out, a_in, a_out, off
    cdef double acc, dr
    act_off[0] = 0
    off = 0
    for l in range(n_layers):
        act_off[l + 1] = act_off[l] + sizes[l]
        par_off[l] = off
        off += sizes[l + 1] * sizes[l] + sizes[l + 1]
    for j in range(batch):
        for c in range(sizes[0]):
            acts[c] = X[j, c]
        for l in range(n_layers):
            n_in = sizes[l]
            n_out = sizes[l + 1]
            off = par_off[l]
            a_in = act_off[l]
            a_out = act_off[l + 1]
            for r in range(n_out):
                acc = values[off + n_out * n_in + r]
                for c in range(n_in):
                    acc += values[off + r * n_in + c] * acts[a_in + c]
                if l < n_layers - 1 and acc <= 0.0:
                    acc = 0.0
                acts[a_out + r] = acc
        for r in range(sizes[n_layers]):
            d[r] = G[j, r]
        for l in range(n_layers - 1, -1, -1):
            n_in = sizes[l]
            n_out = sizes[l + 1]
            off = par_off[l]
            a_in = act_off[l]
            if l > 0:
                for c in range(n_in):
                    d_prev[c] = 0.0
            for r in range(n_out):
                dr = d[r]
                if dr != 0.0:
                    for c in range(n_in):
                        grad[off + r * n_in + c] += dr * acts[a_in + c]
                    grad[off + n_out * n_in + r] += dr
                    if l > 0:
                        for c in range(n_in):
                            d_prev[c] += values[off + r * n_in + c] * dr
            if l > 0:
                for c in range(n_in):
                    d[c] = d_prev[c] if acts[a_in + c] > 0.0 else 0.0
    return grad_arr
