# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: counter-based uniforms, row sampling and window maxima.

Every function here has a numpy twin in :mod:`poisson_lab._purepy` with the
same signature and bitwise-identical integer output.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, floor
from libc.stdint cimport uint32_t, uint64_t, int64_t

cnp.import_array()

cdef uint32_t M0 = 0xD2511F53u
cdef uint32_t M1 = 0xCD9E8D57u
cdef uint32_t W0 = 0x9E3779B9u
cdef uint32_t W1 = 0xBB67AE85u
cdef double TWO_M53 = 1.0 / 9007199254740992.0

BACKEND = "cython"


cdef inline void _philox(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t a0, a1, a2, a3
    cdef int r
    for r in range(10):
        p0 = <uint64_t>M0 * c[0]
        p1 = <uint64_t>M1 * c[2]
        a0 = <uint32_t>(p1 >> 32) ^ c[1] ^ k0
        a1 = <uint32_t>p1
        a2 = <uint32_t>(p0 >> 32) ^ c[3] ^ k1
        a3 = <uint32_t>p0
        c[0] = a0
        c[1] = a1
        c[2] = a2
        c[3] = a3
        k0 = k0 + W0
        k1 = k1 + W1


cdef inline double _uniform(uint64_t seed, uint64_t rep, uint64_t k,
                            uint32_t stream) noexcept nogil:
    cdef uint32_t c[4]
    cdef uint64_t x
    c[0] = <uint32_t>k
    c[1] = <uint32_t>rep
    c[2] = <uint32_t>(rep >> 32)
    c[3] = stream
    _philox(c, <uint32_t>seed, <uint32_t>(seed >> 32))
    x = (<uint64_t>c[0] << 32) | c[1]
    return ((x >> 11) + 0.5) * TWO_M53


cdef inline int64_t _variate(double u, double rate, double logq,
                             int kind) noexcept nogil:
    if kind == 0:
        return 1 if u < rate else 0
    return <int64_t>floor(log(u) / logq)


def philox4x32(cnp.uint32_t[:, ::1] ctr, uint64_t k0, uint64_t k1):
    cdef Py_ssize_t i, n = ctr.shape[0]
    out = np.array(ctr, dtype=np.uint32, copy=True)
    cdef cnp.uint32_t[:, ::1] o = out
    with nogil:
        for i in range(n):
            _philox(&o[i, 0], <uint32_t>k0, <uint32_t>k1)
    return out


def uniforms(uint64_t seed, int64_t rep0, int64_t nrep, int64_t k, uint32_t stream):
    out = np.empty((nrep, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef int64_t r, j
    with nogil:
        for r in range(nrep):
            for j in range(k):
                o[r, j] = _uniform(seed, <uint64_t>(rep0 + r), <uint64_t>j, stream)
    return out


def uniform_pairs(uint64_t seed, cnp.int64_t[::1] reps, cnp.int64_t[::1] ks,
                  uint32_t stream):
    cdef Py_ssize_t i, n = reps.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _uniform(seed, <uint64_t>reps[i], <uint64_t>ks[i], stream)
    return out


def sample_rows(double[::1] rates, double[::1] logq, int kind, uint64_t seed,
                int64_t rep0, int64_t nrep, uint32_t stream):
    cdef int64_t k = rates.shape[0]
    out = np.empty((nrep, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef int64_t r, j
    cdef double u
    with nogil:
        for r in range(nrep):
            for j in range(k):
                u = _uniform(seed, <uint64_t>(rep0 + r), <uint64_t>j, stream)
                o[r, j] = _variate(u, rates[j], logq[j], kind)
    return out


def segment_sums(double[::1] rates, double[::1] logq, int kind, uint64_t seed,
                 int64_t rep0, int64_t nrep, cnp.int64_t[::1] cuts, uint32_t stream):
    cdef Py_ssize_t nseg = cuts.shape[0] - 1
    out = np.zeros((nrep, nseg), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef int64_t r, j, s, acc
    cdef double u
    with nogil:
        for r in range(nrep):
            for s in range(nseg):
                acc = 0
                for j in range(cuts[s], cuts[s + 1]):
                    u = _uniform(seed, <uint64_t>(rep0 + r), <uint64_t>j, stream)
                    acc += _variate(u, rates[j], logq[j], kind)
                o[r, s] = acc
    return out


cdef inline int64_t _window_max(int64_t* row, int64_t k, int64_t m) noexcept nogil:
    cdef int64_t j, acc = 0, best
    for j in range(m):
        acc += row[j]
    best = acc
    for j in range(m, k):
        acc += row[j] - row[j - m]
        if acc > best:
            best = acc
    return best


def window_max(cnp.int64_t[::1] row, int64_t m):
    cdef int64_t k = row.shape[0]
    if k == 0:
        return 0
    return _window_max(<int64_t*>&row[0], k, m)


def window_max_rows(double[::1] rates, double[::1] logq, int kind, uint64_t seed,
                    int64_t rep0, int64_t nrep, int64_t m, uint32_t stream):
    cdef int64_t k = rates.shape[0]
    out = np.zeros(nrep, dtype=np.int64)
    buf = np.empty(max(k, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef cnp.int64_t[::1] b = buf
    cdef int64_t r, j
    cdef double u
    if k == 0:
        return out
    with nogil:
        for r in range(nrep):
            for j in range(k):
                u = _uniform(seed, <uint64_t>(rep0 + r), <uint64_t>j, stream)
                b[j] = _variate(u, rates[j], logq[j], kind)
            o[r] = _window_max(<int64_t*>&b[0], k, m)
    return out


def poisson_binomial(double[::1] p):
    cdef Py_ssize_t m = p.shape[0], i, j
    out = np.zeros(m + 1, dtype=np.float64)
    cdef double[::1] f = out
    cdef double pi, qi
    f[0] = 1.0
    with nogil:
        for i in range(m):
            pi = p[i]
            qi = 1.0 - pi
            f[i + 1] = f[i] * pi
            for j in range(i, 0, -1):
                f[j] = f[j] * qi + f[j - 1] * pi
            f[0] = f[0] * qi
    return out


def geometric_convolve(double[::1] q, int64_t kmax):
    cdef Py_ssize_t m = q.shape[0], i
    cdef int64_t j
    out = np.zeros(kmax + 1, dtype=np.float64)
    cdef double[::1] f = out
    cdef double qi, prev
    f[0] = 1.0
    with nogil:
        for i in range(m):
            qi = q[i]
            # adding one corrected geometric: g[j] = (1-q) f[j] + q g[j-1]
            prev = 0.0
            for j in range(kmax + 1):
                prev = (1.0 - qi) * f[j] + qi * prev
                f[j] = prev
    return out
