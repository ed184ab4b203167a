# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled iteration loops.

One call runs a whole solve: sampling, row reflections, the momentum or
adaptive update, the squared-error stopping check and trace recording all
happen at C speed with the GIL released. Uniforms are pulled straight from a
NumPy bit generator, so index sequences match the pure-Python loop exactly.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt
from numpy.random cimport bitgen_t
from posix.time cimport CLOCK_MONOTONIC, clock_gettime, timespec

cdef enum:
    METH_RK = 0
    METH_DR = 1
    METH_MRDR = 2
    METH_AMPRDR = 3

cdef enum:
    SAMP_IID = 0
    SAMP_WOR = 1
    SAMP_VOL = 2

cdef enum:
    STATUS_CONVERGED = 0
    STATUS_MAX_ITERS = 1
    STATUS_STALLED = 2
    STATUS_STALL_CONVERGED = 3

cdef double DENOM_GUARD = 1e-14


cdef inline double _now() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return <double>ts.tv_sec + 1e-9 * <double>ts.tv_nsec


cdef inline double _dot(const double* a, const double* x, Py_ssize_t n) noexcept nogil:
    # four accumulators so the compiler can keep the reduction in SIMD lanes
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t n4 = n - (n & 3)
    while i < n4:
        s0 += a[i] * x[i]
        s1 += a[i + 1] * x[i + 1]
        s2 += a[i + 2] * x[i + 2]
        s3 += a[i + 3] * x[i + 3]
        i += 4
    while i < n:
        s0 += a[i] * x[i]
        i += 1
    return (s0 + s1) + (s2 + s3)


cdef inline double _dist_sq(const double* x, const double* y, Py_ssize_t n) noexcept nogil:
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef double d0, d1, d2, d3
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t n4 = n - (n & 3)
    while i < n4:
        d0 = x[i] - y[i]
        d1 = x[i + 1] - y[i + 1]
        d2 = x[i + 2] - y[i + 2]
        d3 = x[i + 3] - y[i + 3]
        s0 += d0 * d0
        s1 += d1 * d1
        s2 += d2 * d2
        s3 += d3 * d3
        i += 4
    while i < n:
        d0 = x[i] - y[i]
        s0 += d0 * d0
        i += 1
    return (s0 + s1) + (s2 + s3)


cdef inline Py_ssize_t _search(const double* cum, Py_ssize_t n, double t) noexcept nogil:
    # first index with cum[idx] > t (np.searchsorted side="right")
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > t:
            hi = mid
        else:
            lo = mid + 1
    if lo >= n:
        lo = n - 1
    return lo


cdef inline Py_ssize_t _pick(const double* cum, const double* w, Py_ssize_t n,
                             double t) noexcept nogil:
    cdef Py_ssize_t i = _search(cum, n, t)
    while w[i] == 0.0 and i > 0:
        i -= 1
    return i


cdef inline void _sample_pair(int samp, bitgen_t* rng,
                              const double* row_cum, const double* w,
                              Py_ssize_t m, double row_total,
                              const double* pair_cum, const double* pair_w,
                              const int* pi, const int* pj,
                              Py_ssize_t npairs, double pair_total,
                              Py_ssize_t* i1, Py_ssize_t* i2) noexcept nogil:
    cdef double u1 = rng.next_double(rng.state)
    cdef double u2 = rng.next_double(rng.state)
    cdef Py_ssize_t i, j, k
    cdef double t, cum_before
    if samp == SAMP_VOL:
        k = _pick(pair_cum, pair_w, npairs, u1 * pair_total)
        i = pi[k]
        j = pj[k]
        if u2 < 0.5:
            i1[0] = i; i2[0] = j
        else:
            i1[0] = j; i2[0] = i
    elif samp == SAMP_WOR:
        i = _pick(row_cum, w, m, u1 * row_total)
        t = u2 * (row_total - w[i])
        cum_before = row_cum[i] - w[i]
        if t >= cum_before:
            t += w[i]
        j = _pick(row_cum, w, m, t)
        if j == i:  # boundary rounding: nearest admissible row
            j = i - 1
            while j >= 0 and w[j] == 0.0:
                j -= 1
            if j < 0:
                j = i + 1
                while j < m and w[j] == 0.0:
                    j += 1
        i1[0] = i; i2[0] = j
    else:
        i1[0] = _pick(row_cum, w, m, u1 * row_total)
        i2[0] = _pick(row_cum, w, m, u2 * row_total)


def run_solve(int method, int samp,
              double[:, ::1] A, double[::1] b,
              double[::1] x, double[::1] x_prev, double[::1] z_buf,
              double[::1] x_ref,
              double ref_denom,
              double[::1] w, double[::1] row_cum, double row_total,
              double[::1] pair_cum, double[::1] pair_w,
              int[::1] pair_i, int[::1] pair_j, double pair_total,
              double[:, ::1] gram,
              object bit_generator,
              double alpha, double beta,
              double rse_tol, long max_iters, double zero_tol,
              long resample_limit, double resid_tol, long trace_stride,
              long[::1] tr_iter, double[::1] tr_rse, double[::1] tr_sec):
    """Run one full solve; fills the trace buffers and updates x in place.

    Returns (status, iterations, final_rse, trace_len, uniform_draws).
    """
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef double* A_p = &A[0, 0]
    cdef const double* b_p = &b[0]
    cdef double* x_p = &x[0]
    cdef double* xp_p = &x_prev[0]
    cdef double* z_p = &z_buf[0]
    cdef const double* ref_p = &x_ref[0]
    cdef const double* w_p = &w[0]
    cdef const double* rc_p = &row_cum[0]
    cdef const double* pc_p = NULL
    cdef const double* pw_p = NULL
    cdef const int* pi_p = NULL
    cdef const int* pj_p = NULL
    cdef Py_ssize_t npairs = 0
    if samp == SAMP_VOL:
        pc_p = &pair_cum[0]
        pw_p = &pair_w[0]
        pi_p = &pair_i[0]
        pj_p = &pair_j[0]
        npairs = pair_cum.shape[0]
    cdef const double* gram_p = NULL
    if gram is not None:
        gram_p = &gram[0, 0]

    cdef bitgen_t* rng = <bitgen_t*> PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")

    cdef Py_ssize_t cap = tr_iter.shape[0]
    cdef long* ti_p = &tr_iter[0]
    cdef double* trse_p = &tr_rse[0]
    cdef double* tsec_p = &tr_sec[0]

    cdef long k = 0
    cdef long ndraws = 0
    cdef long attempts
    cdef int status = STATUS_MAX_ITERS
    cdef Py_ssize_t i1 = 0, i2 = 0, i
    cdef Py_ssize_t tlen = 0
    cdef double u, v, t1, t2, g12, w1, w2
    cdef double c1, c2, xo, diff
    cdef double hh, dd, hd, s1, s2, den, e, ak, bk, di, rr
    cdef double rse
    cdef const double* a1
    cdef const double* a2
    cdef double t0 = _now()
    cdef bint stop

    with nogil:
        rse = _dist_sq(x_p, ref_p, n) / ref_denom
        ti_p[tlen] = 0
        trse_p[tlen] = rse
        tsec_p[tlen] = 0.0
        tlen += 1

        stop = False
        while not stop and rse > rse_tol and k < max_iters:
            if method == METH_RK:
                ndraws += 1
                i1 = _pick(rc_p, w_p, m, rng.next_double(rng.state) * row_total)
                a1 = A_p + i1 * n
                u = (_dot(a1, x_p, n) - b_p[i1]) / w_p[i1]
                for i in range(n):
                    x_p[i] -= u * a1[i]
                rse = _dist_sq(x_p, ref_p, n) / ref_denom
            elif method == METH_DR or method == METH_MRDR:
                ndraws += 2
                _sample_pair(samp, rng, rc_p, w_p, m, row_total,
                             pc_p, pw_p, pi_p, pj_p, npairs, pair_total, &i1, &i2)
                a1 = A_p + i1 * n
                a2 = A_p + i2 * n
                w1 = w_p[i1]
                w2 = w_p[i2]
                t1 = _dot(a1, x_p, n)
                t2 = _dot(a2, x_p, n)
                if gram_p != NULL:
                    g12 = gram_p[i2 * m + i1]
                else:
                    g12 = _dot(a2, a1, n)
                u = (t1 - b_p[i1]) / w1
                v = (t2 - b_p[i2] - 2.0 * g12 * u) / w2
                c1 = 2.0 * alpha * u
                c2 = 2.0 * alpha * v
                if method == METH_DR:
                    for i in range(n):
                        x_p[i] -= c1 * a1[i] + c2 * a2[i]
                else:
                    for i in range(n):
                        xo = x_p[i]
                        x_p[i] = xo - c1 * a1[i] - c2 * a2[i] + beta * (xo - xp_p[i])
                        xp_p[i] = xo
                rse = _dist_sq(x_p, ref_p, n) / ref_denom
            else:  # METH_AMPRDR
                attempts = 0
                while True:
                    ndraws += 2
                    _sample_pair(samp, rng, rc_p, w_p, m, row_total,
                                 pc_p, pw_p, pi_p, pj_p, npairs, pair_total, &i1, &i2)
                    a1 = A_p + i1 * n
                    a2 = A_p + i2 * n
                    w1 = w_p[i1]
                    w2 = w_p[i2]
                    t1 = _dot(a1, x_p, n)
                    t2 = _dot(a2, x_p, n)
                    if gram_p != NULL:
                        g12 = gram_p[i2 * m + i1]
                    else:
                        g12 = _dot(a2, a1, n)
                    u = (t1 - b_p[i1]) / w1
                    v = (t2 - b_p[i2] - 2.0 * g12 * u) / w2
                    # materialize z = x - 2u a1 - 2v a2 with the same
                    # expression shape as the reference implementation
                    c1 = 2.0 * u
                    c2 = 2.0 * v
                    for i in range(n):
                        z_p[i] = (x_p[i] - c1 * a1[i]) - c2 * a2[i]
                    if sqrt(_dist_sq(z_p, x_p, n)) > zero_tol:
                        break
                    attempts += 1
                    if attempts >= resample_limit:
                        rr = 0.0
                        for i in range(m):
                            diff = _dot(A_p + i * n, x_p, n) - b_p[i]
                            rr += diff * diff
                        if sqrt(rr) <= resid_tol:
                            status = STATUS_STALL_CONVERGED
                        else:
                            status = STATUS_STALLED
                        stop = True
                        break
                if stop:
                    break
                hh = u * u * w1 + 2.0 * u * v * g12 + v * v * w2
                if hh < 0.0:
                    hh = 0.0
                dd = 0.0
                s1 = 0.0
                s2 = 0.0
                for i in range(n):
                    di = x_p[i] - xp_p[i]
                    dd += di * di
                    s1 += a1[i] * di
                    s2 += a2[i] * di
                hd = u * s1 + v * s2
                den = dd * hh - hd * hd
                if den <= DENOM_GUARD * dd * (4.0 * hh):
                    ak = 0.5
                    bk = 0.0
                else:
                    e = u * (t1 - b_p[i1]) + v * (t2 - b_p[i2])
                    ak = dd * e / (2.0 * den)
                    bk = hd * e / den
                for i in range(n):
                    xo = x_p[i]
                    x_p[i] = (1.0 - ak) * xo + ak * z_p[i] + bk * (xo - xp_p[i])
                    xp_p[i] = xo
                rse = _dist_sq(x_p, ref_p, n) / ref_denom
            k += 1
            if k % trace_stride == 0 and tlen < cap:
                ti_p[tlen] = k
                trse_p[tlen] = rse
                tsec_p[tlen] = _now() - t0
                tlen += 1
        if status == STATUS_MAX_ITERS and rse <= rse_tol:
            status = STATUS_CONVERGED
        if ti_p[tlen - 1] != k and tlen < cap:
            ti_p[tlen] = k
            trse_p[tlen] = rse
            tsec_p[tlen] = _now() - t0
            tlen += 1

    return status, k, rse, tlen, ndraws
