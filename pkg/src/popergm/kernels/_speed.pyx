# cython: boundscheck=False, wraparound=False, nonecheck=False, cdivision=True
# cython: language_level=3
"""Compiled toggle-chain kernel.

Mirrors ``popergm.kernels.reference`` operation for operation: the same
floating-point expressions are evaluated in the same order, so the two
backends make bitwise-identical accept/reject decisions. Adjacency is
held as per-node bitsets so shared-partner counts reduce to popcounts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()

cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define POPERGM_POPCNT64(x) __builtin_popcountll(x)
    #define POPERGM_CTZ64(x) __builtin_ctzll(x)
    #else
    static int POPERGM_POPCNT64(unsigned long long v)
    { int c = 0; while (v) { v &= v - 1; ++c; } return c; }
    static int POPERGM_CTZ64(unsigned long long v)
    { int c = 0; while (!(v & 1ULL)) { v >>= 1; ++c; } return c; }
    #endif
    """
    int POPERGM_POPCNT64(uint64_t x) nogil
    int POPERGM_CTZ64(uint64_t x) nogil

BACKEND_NAME = "compiled"

DEF MAX_TERMS = 32


cdef inline int popcnt_and(const uint64_t* a, const uint64_t* b, int nw) nogil:
    cdef int w, c = 0
    for w in range(nw):
        c += POPERGM_POPCNT64(a[w] & b[w])
    return c


cdef inline bint get_bit(const uint64_t* bits, int nw, int i, int j) nogil:
    return (bits[i * nw + (j >> 6)] >> (j & 63)) & 1


cdef inline void set_bit(uint64_t* bits, int nw, int i, int j) nogil:
    bits[i * nw + (j >> 6)] |= (<uint64_t>1) << (j & 63)


cdef inline void clear_bit(uint64_t* bits, int nw, int i, int j) nogil:
    bits[i * nw + (j >> 6)] &= ~((<uint64_t>1) << (j & 63))


cdef inline int64_t dyad_rank(int n, int i, int j) nogil:
    # upper-triangle rank of (i, j) with i < j
    return <int64_t>i * n - (<int64_t>i * (i + 1)) // 2 + (j - i - 1)


cdef double delta_and_logr(const uint64_t* bits, int nw, int n, int i, int j,
                           int p, const int32_t* kinds, const int32_t* node_data,
                           const double* weights, int wstride,
                           const double* theta, double* delta) nogil:
    """Change statistics for dyad (i, j), currently off; returns theta @ delta."""
    cdef int k, kind, m, w, cn, sp_im, sp_jm
    cdef double d, acc, logr = 0.0
    cdef const uint64_t* ri = bits + i * nw
    cdef const uint64_t* rj = bits + j * nw
    cdef const double* wt
    cdef uint64_t inter
    for k in range(p):
        kind = kinds[k]
        if kind == 0:    # edges
            d = 1.0
        elif kind == 1:  # nodematch
            d = 1.0 if node_data[k * n + i] == node_data[k * n + j] else 0.0
        elif kind == 2:  # homotopy
            d = 1.0 if node_data[k * n + i] == j else 0.0
        else:            # gwesp
            wt = weights + k * wstride
            acc = 0.0
            cn = 0
            for w in range(nw):
                inter = ri[w] & rj[w]
                while inter != 0:
                    m = w * 64 + POPERGM_CTZ64(inter)
                    inter &= inter - 1
                    cn += 1
                    sp_im = popcnt_and(ri, bits + m * nw, nw)
                    sp_jm = popcnt_and(rj, bits + m * nw, nw)
                    acc += (wt[sp_im + 1] - wt[sp_im]) + (wt[sp_jm + 1] - wt[sp_jm])
            acc += wt[cn]
            d = acc
        delta[k] = d
        logr += theta[k] * d
    return logr


cdef void pack_bits(const uint8_t[:, ::1] adj, uint64_t* bits, int nw) noexcept nogil:
    cdef int n = adj.shape[0]
    cdef int i, j
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                set_bit(bits, nw, i, j)


cdef void unpack_bits(uint8_t[:, ::1] adj, const uint64_t* bits, int nw) noexcept nogil:
    cdef int n = adj.shape[0]
    cdef int i, j
    for i in range(n):
        for j in range(n):
            adj[i, j] = 1 if get_bit(bits, nw, i, j) else 0


def run_toggle_chain(cnp.uint8_t[:, ::1] adj, double[::1] stats, const double[::1] theta,
                     object program, const int32_t[::1] di, const int32_t[::1] dj,
                     const double[::1] uniforms, long record_every=0, codes=None):
    """Drop-in replacement for ``reference.run_toggle_chain``."""
    cdef cnp.ndarray[int32_t, ndim=1] kinds = np.ascontiguousarray(program.kinds, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=2] node_data = np.ascontiguousarray(program.node_data, dtype=np.int32)
    cdef cnp.ndarray[double, ndim=2] weights = np.ascontiguousarray(program.weights, dtype=np.float64)

    cdef int n = adj.shape[0]
    cdef int p = kinds.shape[0]
    if p > MAX_TERMS:
        raise ValueError(f"kernel supports at most {MAX_TERMS} terms")
    cdef int nw = (n + 63) >> 6
    cdef cnp.ndarray[uint64_t, ndim=1] bits_arr = np.zeros(n * nw, dtype=np.uint64)
    cdef uint64_t* bits = <uint64_t*>cnp.PyArray_DATA(bits_arr)

    cdef int64_t[::1] codes_view = None
    cdef int64_t* codes_ptr = NULL
    if record_every > 0:
        if n * (n - 1) // 2 > 62:
            raise ValueError("graph codes need at most 62 dyads")
        codes_view = codes
        codes_ptr = &codes_view[0]

    cdef const int32_t* kinds_p = <const int32_t*>cnp.PyArray_DATA(kinds)
    cdef const int32_t* nd_p = <const int32_t*>cnp.PyArray_DATA(node_data)
    cdef const double* w_p = <const double*>cnp.PyArray_DATA(weights)
    cdef int wstride = weights.shape[1]
    cdef const double* theta_p = &theta[0]

    cdef double delta[MAX_TERMS]
    cdef int64_t T = di.shape[0]
    cdef int64_t t, rec = 0
    cdef int i, j, k, lo, hi
    cdef bint present
    cdef double logr
    cdef long accepted = 0
    cdef uint64_t code = 0

    with nogil:
        pack_bits(adj, bits, nw)
        if record_every > 0:
            for i in range(n):
                for j in range(i + 1, n):
                    if get_bit(bits, nw, i, j):
                        code |= (<uint64_t>1) << dyad_rank(n, i, j)
        for t in range(T):
            i = di[t]
            j = dj[t]
            present = get_bit(bits, nw, i, j)
            if present:
                clear_bit(bits, nw, i, j)
                clear_bit(bits, nw, j, i)
            logr = delta_and_logr(bits, nw, n, i, j, p, kinds_p, nd_p,
                                  w_p, wstride, theta_p, delta)
            if present:
                logr = -logr
            if logr >= 0.0 or uniforms[t] < exp(logr):
                accepted += 1
                if present:
                    for k in range(p):
                        stats[k] -= delta[k]
                else:
                    set_bit(bits, nw, i, j)
                    set_bit(bits, nw, j, i)
                    for k in range(p):
                        stats[k] += delta[k]
                if record_every > 0:
                    lo = i if i < j else j
                    hi = j if i < j else i
                    code ^= (<uint64_t>1) << dyad_rank(n, lo, hi)
            else:
                if present:
                    set_bit(bits, nw, i, j)
                    set_bit(bits, nw, j, i)
            if record_every > 0 and (t + 1) % record_every == 0:
                codes_ptr[rec] = <int64_t>code
                rec += 1
        unpack_bits(adj, bits, nw)
    return accepted


def change_stats_batch(const cnp.uint8_t[:, ::1] adj, const int32_t[::1] di,
                       const int32_t[::1] dj, object program):
    """Drop-in replacement for ``reference.change_stats_batch``."""
    cdef cnp.ndarray[int32_t, ndim=1] kinds = np.ascontiguousarray(program.kinds, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=2] node_data = np.ascontiguousarray(program.node_data, dtype=np.int32)
    cdef cnp.ndarray[double, ndim=2] weights = np.ascontiguousarray(program.weights, dtype=np.float64)

    cdef int n = adj.shape[0]
    cdef int p = kinds.shape[0]
    if p > MAX_TERMS:
        raise ValueError(f"kernel supports at most {MAX_TERMS} terms")
    cdef int nw = (n + 63) >> 6
    cdef cnp.ndarray[uint64_t, ndim=1] bits_arr = np.zeros(n * nw, dtype=np.uint64)
    cdef uint64_t* bits = <uint64_t*>cnp.PyArray_DATA(bits_arr)

    cdef int64_t T = di.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((T, p), dtype=np.float64)
    cdef double* out_p = <double*>cnp.PyArray_DATA(out)

    cdef const int32_t* kinds_p = <const int32_t*>cnp.PyArray_DATA(kinds)
    cdef const int32_t* nd_p = <const int32_t*>cnp.PyArray_DATA(node_data)
    cdef const double* w_p = <const double*>cnp.PyArray_DATA(weights)
    cdef int wstride = weights.shape[1]

    cdef cnp.ndarray[double, ndim=1] zeros = np.zeros(p, dtype=np.float64)
    cdef const double* theta_p = <const double*>cnp.PyArray_DATA(zeros)

    cdef int64_t t
    cdef int i, j
    cdef bint present
    with nogil:
        pack_bits(adj, bits, nw)
        for t in range(T):
            i = di[t]
            j = dj[t]
            present = get_bit(bits, nw, i, j)
            if present:
                clear_bit(bits, nw, i, j)
                clear_bit(bits, nw, j, i)
            delta_and_logr(bits, nw, n, i, j, p, kinds_p, nd_p,
                           w_p, wstride, theta_p, out_p + t * p)
            if present:
                set_bit(bits, nw, i, j)
                set_bit(bits, nw, j, i)
    return out
