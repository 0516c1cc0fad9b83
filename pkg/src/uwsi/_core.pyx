# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``uwsi._fallback`` for the reference semantics.

The sliding least-squares recursion is built on level-2/3 BLAS calls from
scipy so it runs at the same vector speed as numpy without per-step Python
overhead.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport zgemm, zgemv

cnp.import_array()

ctypedef double complex cplx


def tv_convolve(const cplx[::1] x, const cplx[:, :] taps, Py_ssize_t stride, cplx[::1] out):
    # row by row, skipping all-zero rows; same summation order as the fallback
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t M = taps.shape[0]
    cdef Py_ssize_t C = taps.shape[1]
    cdef Py_ssize_t n, m, c
    cdef bint active
    cdef double hr, hi, xr, xi
    with nogil:
        for n in range(T):
            out[n] = 0
        for m in range(M if M < T else T):
            active = False
            for c in range(C):
                if taps[m, c].real != 0.0 or taps[m, c].imag != 0.0:
                    active = True
                    break
            if not active:
                continue
            for n in range(m, T):
                hr = taps[m, n // stride].real
                hi = taps[m, n // stride].imag
                xr = x[n - m].real
                xi = x[n - m].imag
                out[n] = (out[n].real + (hr * xr - hi * xi)) + 1j * (out[n].imag + (hr * xi + hi * xr))
    return np.asarray(out)


def ls_run(const cplx[::1] xp, const cplx[::1] yp, Py_ssize_t off, Py_ssize_t M, Py_ssize_t L,
           Py_ssize_t n0, Py_ssize_t n1, Py_ssize_t stride,
           cplx[::1, :] P, cplx[::1] h, double[::1] tr, cplx[:, ::1] out,
           double denom_tol, double cond_limit):
    # P must be Fortran-ordered (column-major) for the BLAS calls.
    cdef int m = <int> M, two = 2, one = 1
    cdef cplx c_one = 1.0, c_zero = 0.0
    cdef char *notrans = b"N"
    cdef char *ctrans = b"C"
    cdef cplx *buf = <cplx *> malloc(6 * M * sizeof(cplx))
    if buf == NULL:
        raise MemoryError()
    cdef cplx *uv = buf            # [u | v], M x 2 column-major
    cdef cplx *wz = buf + 2 * M    # [w | z] = P [u | v]
    cdef cplx *sc = buf + 4 * M    # [-w/alpha | z'/beta]
    cdef cplx *pp = &P[0, 0]
    cdef cplx *hp = &h[0]
    cdef Py_ssize_t n, i, done = 0
    cdef double alpha, beta, tr_p, tr_g, nu, nv, nw, nz
    cdef cplx gamma, e, xv
    try:
        with nogil:
            for n in range(n0, n1):
                nu = 0.0
                nv = 0.0
                for i in range(M):
                    xv = xp[off + n - i]
                    uv[i] = xv.real - 1j * xv.imag
                    nu = nu + xv.real * xv.real + xv.imag * xv.imag
                    xv = xp[off + n - L - i]
                    uv[M + i] = xv.real - 1j * xv.imag
                    nv = nv + xv.real * xv.real + xv.imag * xv.imag
                zgemv(notrans, &m, &m, &c_one, pp, &m, uv, &one, &c_zero, wz, &one)
                zgemv(notrans, &m, &m, &c_one, pp, &m, uv + M, &one, &c_zero, wz + M, &one)
                alpha = 1.0
                gamma = 0.0
                tr_p = 0.0
                for i in range(M):
                    alpha = alpha + uv[i].real * wz[i].real + uv[i].imag * wz[i].imag
                    gamma = gamma + (wz[i].real - 1j * wz[i].imag) * uv[M + i]
                    tr_p = tr_p + pp[i * M + i].real
                gamma = gamma / alpha
                beta = 1.0
                nw = 0.0
                nz = 0.0
                for i in range(M):
                    wz[M + i] = wz[M + i] - wz[i] * gamma
                    beta = beta - (uv[M + i].real * wz[M + i].real + uv[M + i].imag * wz[M + i].imag)
                    nw = nw + wz[i].real * wz[i].real + wz[i].imag * wz[i].imag
                    nz = nz + wz[M + i].real * wz[M + i].real + wz[M + i].imag * wz[M + i].imag
                if not beta > denom_tol:
                    break
                tr_p = tr_p - nw / alpha + nz / beta
                tr_g = tr[0] + nu - nv
                if not (tr_p > 0 and tr_g * tr_p <= cond_limit):
                    break
                # entering row: h += (w / alpha) (y[n] - u^H h)
                e = yp[off + n]
                for i in range(M):
                    e = e - (uv[i].real - 1j * uv[i].imag) * hp[i]
                for i in range(M):
                    hp[i] = hp[i] + wz[i] * (e / alpha)
                # leaving row: h += (z' / beta) (v^H h - y[n - L])
                e = -yp[off + n - L]
                for i in range(M):
                    e = e + (uv[M + i].real - 1j * uv[M + i].imag) * hp[i]
                for i in range(M):
                    hp[i] = hp[i] + wz[M + i] * (e / beta)
                    sc[i] = wz[i] * (-1.0 / alpha)
                    sc[M + i] = wz[M + i] * (1.0 / beta)
                # P += [w z'] [-w/alpha  z'/beta]^H
                zgemm(notrans, ctrans, &m, &m, &two, &c_one, wz, &m, sc, &m, &c_one, pp, &m)
                tr[0] = tr_g
                if n % stride == 0:
                    for i in range(M):
                        out[n // stride, i] = hp[i]
                done = done + 1
    finally:
        free(buf)
    return done
