# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gibbs kernels.

Line-for-line twin of `_kernels_py.py`: same SplitMix64 stream, same
operation order, same IEEE arithmetic (the build disables FP contraction),
so both backends produce bit-identical sampler states. Consult the Python
module for the algorithm commentary; keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, pow

BACKEND_NAME = "cython"

cdef double INV53 = 2.0 ** -53
cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15


cdef inline unsigned long long _mix64(unsigned long long z) noexcept nogil:
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _uniform(unsigned long long *state) noexcept nogil:
    state[0] = state[0] + GOLDEN
    return <double>(_mix64(state[0]) >> 11) * INV53


cdef inline long _randint_below(unsigned long long *state, long n) noexcept nogil:
    cdef long r = <long>(_uniform(state) * n)
    return n - 1 if r == n else r


def token_pass(cnp.int32_t[::1] words, cnp.int32_t[::1] doc_ids,
               cnp.int32_t[::1] z,
               cnp.int32_t[:, ::1] n_jk, cnp.int32_t[:, ::1] n_kw,
               cnp.int32_t[::1] n_k,
               double[::1] beta, double[::1] stick_rest,
               double alpha0, double gamma, double eta,
               int k_active, cnp.uint64_t[::1] rng_state, bint shuffle):
    cdef unsigned long long state = rng_state[0]
    cdef Py_ssize_t n_tokens = words.shape[0]
    cdef Py_ssize_t n_docs = n_jk.shape[0]
    cdef int k_cap = <int>beta.shape[0]
    cdef int vocab_size = <int>n_kw.shape[1]
    cdef int k = k_active
    cdef double beta_u = stick_rest[0]
    cdef double veta = vocab_size * eta

    cdef double[::1] p_cum = np.empty(k_cap, dtype=np.float64)
    cdef cnp.int64_t[::1] order = np.arange(n_tokens, dtype=np.int64)

    cdef Py_ssize_t pos, t, i, jj
    cdef long swap_j
    cdef cnp.int64_t tmp
    cdef int w, j, k_old, k_new, kk, last
    cdef double total, p, u, v

    if shuffle:
        for pos in range(n_tokens - 1, 0, -1):
            swap_j = _randint_below(&state, <long>pos + 1)
            tmp = order[pos]
            order[pos] = order[swap_j]
            order[swap_j] = tmp

    for pos in range(n_tokens):
        t = order[pos]
        w = words[t]
        j = doc_ids[t]
        k_old = z[t]

        n_jk[j, k_old] -= 1
        n_kw[k_old, w] -= 1
        n_k[k_old] -= 1

        total = 0.0
        for kk in range(k):
            p = (n_jk[j, kk] + alpha0 * beta[kk]) \
                * (n_kw[kk, w] + eta) / (n_k[kk] + veta)
            total += p
            p_cum[kk] = total
        total += alpha0 * beta_u / vocab_size

        u = _uniform(&state) * total
        k_new = k
        for kk in range(k):
            if u < p_cum[kk]:
                k_new = kk
                break

        if k_new == k:
            if k == k_cap:
                rng_state[0] = state
                return -1
            v = 1.0 - pow(1.0 - _uniform(&state), 1.0 / gamma)
            beta[k] = v * beta_u
            beta_u = (1.0 - v) * beta_u
            k += 1

        z[t] = k_new
        n_jk[j, k_new] += 1
        n_kw[k_new, w] += 1
        n_k[k_new] += 1

        if n_k[k_old] == 0:
            last = k - 1
            beta_u += beta[k_old]
            if k_old != last:
                beta[k_old] = beta[last]
                n_k[k_old] = n_k[last]
                for i in range(vocab_size):
                    n_kw[k_old, i] = n_kw[last, i]
                for jj in range(n_docs):
                    n_jk[jj, k_old] = n_jk[jj, last]
                for i in range(n_tokens):
                    if z[i] == last:
                        z[i] = k_old
            beta[last] = 0.0
            n_k[last] = 0
            for i in range(vocab_size):
                n_kw[last, i] = 0
            for jj in range(n_docs):
                n_jk[jj, last] = 0
            k = last

    stick_rest[0] = beta_u
    rng_state[0] = state
    return k


def table_pass(cnp.int32_t[:, ::1] n_jk, cnp.int32_t[:, ::1] m_jk,
               double[::1] beta, double alpha0, int k_active,
               cnp.uint64_t[::1] rng_state):
    cdef unsigned long long state = rng_state[0]
    cdef Py_ssize_t n_docs = n_jk.shape[0]
    cdef Py_ssize_t j
    cdef int kk, n, m, i
    cdef double theta

    for j in range(n_docs):
        for kk in range(k_active):
            n = n_jk[j, kk]
            if n == 0:
                m_jk[j, kk] = 0
                continue
            theta = alpha0 * beta[kk]
            m = 1
            for i in range(2, n + 1):
                if _uniform(&state) < theta / ((i - 1) + theta):
                    m += 1
            m_jk[j, kk] = m
    rng_state[0] = state


def sample_table_count(int n, double theta, cnp.uint64_t[::1] rng_state):
    cdef unsigned long long state = rng_state[0]
    cdef int m = 1
    cdef int i
    for i in range(2, n + 1):
        if _uniform(&state) < theta / ((i - 1) + theta):
            m += 1
    rng_state[0] = state
    return m
