#cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-chain stepping kernel.

Draws normals straight from the chain's bit generator with the same ziggurat
numpy uses, so the noise stream (and hence every iterate) matches the
pure-python backend bit for bit on pow-free potentials.
"""

from libc.math cimport sqrt, fabs, pow

from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

import numpy as np

cdef int LMC = 0
cdef int PLMC = 1
cdef int SLMC = 2
cdef int LMC_MATCHED = 3

cdef double NORM_LIMIT_SQ = 1.0e24


cdef inline double _power_term(double t, double gamma1, double alpha) nogil:
    # derivative of gamma |t|^(1+alpha); minimum-norm (zero) at the kink
    cdef double s
    if alpha == 0.0:
        s = 0.0 if t == 0.0 else (1.0 if t > 0.0 else -1.0)
    elif alpha == 1.0:
        s = t
    else:
        s = 0.0 if t == 0.0 else (pow(fabs(t), alpha) if t > 0.0 else -pow(fabs(t), alpha))
    return gamma1 * s


def run_chain(bit_generator, double[::1] y, int variant,
              double eta, double mu, long K,
              double quad_a, double[::1] quad_c, bint has_quad,
              double gamma, double alpha, bint has_power,
              double[:, ::1] A, double[::1] b, bint has_data,
              double lam, double[::1] xprime,
              long record_every, double[:, ::1] records, bint do_record):
    """Advance one chain in place; returns the abort step, or -1."""
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")
    cdef Py_ssize_t d = y.shape[0]
    cdef Py_ssize_t n = A.shape[0] if has_data else 0
    cdef double gamma1 = gamma * (1.0 + alpha)
    cdef double c = sqrt(2.0 * eta)
    cdef bint use_omega = variant != LMC
    cdef bint perturb = variant == PLMC or variant == SLMC
    cdef bint slmc = variant == SLMC

    scratch = np.empty((3, d), dtype=np.float64)
    cdef double[:, ::1] buf = scratch
    cdef double[::1] q = buf[0]
    cdef double[::1] g = buf[1]
    cdef double[::1] omega = buf[2]
    resid_arr = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] resid = resid_arr

    cdef long k, abort = -1
    cdef Py_ssize_t i, j
    cdef double base_j, acc, val, ssq, xi

    if do_record:
        for j in range(d):
            records[0, j] = y[j]

    with bit_generator.lock, nogil:
        if use_omega:
            for j in range(d):
                omega[j] = random_standard_normal(rng)
        for k in range(K):
            if perturb:
                for j in range(d):
                    q[j] = y[j] + mu * omega[j]
            else:
                for j in range(d):
                    q[j] = y[j]
            # subgradient at q: base term plus lam (q - xprime), then data term
            for j in range(d):
                if has_quad:
                    base_j = quad_a * (q[j] - quad_c[j])
                elif has_power:
                    base_j = _power_term(q[j], gamma1, alpha)
                else:
                    base_j = 0.0
                g[j] = base_j + lam * (q[j] - xprime[j])
            if has_data:
                for i in range(n):
                    acc = 0.0
                    for j in range(d):
                        acc += A[i, j] * q[j]
                    resid[i] = acc - b[i]
                for j in range(d):
                    acc = 0.0
                    for i in range(n):
                        acc += A[i, j] * resid[i]
                    g[j] = g[j] + 2.0 * acc
            if use_omega:
                for j in range(d):
                    omega[j] = random_standard_normal(rng)
            ssq = 0.0
            for j in range(d):
                xi = random_standard_normal(rng)
                base_j = q[j] if slmc else y[j]
                val = (base_j - eta * g[j]) + c * xi
                y[j] = val
                ssq += val * val
            if ssq != ssq or ssq > NORM_LIMIT_SQ:
                abort = k
                break
            if do_record and (k + 1) % record_every == 0:
                for j in range(d):
                    records[(k + 1) / record_every, j] = y[j]
    return abort
