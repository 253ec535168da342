# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cosine kNN voting, softmax cross-entropy, pairwise distance.

Streaming implementations that avoid the big intermediate arrays the numpy
fallback allocates (the full query x reference similarity matrix in
particular). Decision-level semantics are identical to _numpy; see there for
the ranking and tie-break rules.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

BACKEND = "native"

METRIC_EUCLIDEAN = 0
METRIC_COSINE = 1


def knn_vote(double[:, ::1] queries, double[:, ::1] refs, cnp.int64_t[::1] codes, Py_ssize_t k):
    cdef Py_ssize_t nq = queries.shape[0]
    cdef Py_ssize_t nr = refs.shape[0]
    cdef Py_ssize_t d = queries.shape[1]
    cdef Py_ssize_t n_codes = 0
    cdef Py_ssize_t i, j, t, p, filled
    cdef double s, qn, acc
    cdef cnp.int64_t c, winner
    cdef Py_ssize_t best_votes, votes_c

    for j in range(nr):
        if codes[j] + 1 > n_codes:
            n_codes = codes[j] + 1

    out_arr = np.empty(nq, dtype=np.int64)
    rnorm_arr = np.empty(nr, dtype=np.float64)
    top_sim_arr = np.empty(k, dtype=np.float64)
    top_idx_arr = np.empty(k, dtype=np.intp)
    votes_arr = np.zeros(n_codes, dtype=np.intp)
    cdef cnp.int64_t[::1] out = out_arr
    cdef double[::1] rnorm = rnorm_arr
    cdef double[::1] top_sim = top_sim_arr
    cdef Py_ssize_t[::1] top_idx = top_idx_arr
    cdef Py_ssize_t[::1] votes = votes_arr

    for j in range(nr):
        acc = 0.0
        for t in range(d):
            acc += refs[j, t] * refs[j, t]
        rnorm[j] = sqrt(acc)

    for i in range(nq):
        acc = 0.0
        for t in range(d):
            acc += queries[i, t] * queries[i, t]
        qn = sqrt(acc)

        # Maintain the top-k (similarity desc, reference index asc) by
        # insertion; equal similarities never displace an earlier index, so
        # the result equals the first k of a stable descending sort.
        filled = 0
        for j in range(nr):
            acc = 0.0
            for t in range(d):
                acc += queries[i, t] * refs[j, t]
            s = acc / (qn * rnorm[j])
            p = filled
            while p > 0 and top_sim[p - 1] < s:
                p -= 1
            if p < k:
                if filled < k:
                    filled += 1
                for t in range(filled - 1, p, -1):
                    top_sim[t] = top_sim[t - 1]
                    top_idx[t] = top_idx[t - 1]
                top_sim[p] = s
                top_idx[p] = j

        for t in range(filled):
            votes[codes[top_idx[t]]] += 1
        best_votes = 0
        for t in range(filled):
            votes_c = votes[codes[top_idx[t]]]
            if votes_c > best_votes:
                best_votes = votes_c
        winner = -1
        for t in range(filled):
            c = codes[top_idx[t]]
            if votes[c] == best_votes:
                winner = c
                break
        for t in range(filled):
            votes[codes[top_idx[t]]] = 0
        out[i] = winner

    return out_arr


def softmax_xent(double[:, ::1] X, cnp.int64_t[::1] y, double[:, ::1] W, double[::1] b):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t C = W.shape[0]
    cdef Py_ssize_t i, c, t
    cdef double acc, m, lse, g, loss = 0.0

    dW_arr = np.zeros((C, d), dtype=np.float64)
    db_arr = np.zeros(C, dtype=np.float64)
    z_arr = np.empty(C, dtype=np.float64)
    cdef double[:, ::1] dW = dW_arr
    cdef double[::1] db = db_arr
    cdef double[::1] z = z_arr

    for i in range(n):
        m = -1e308
        for c in range(C):
            acc = b[c]
            for t in range(d):
                acc += W[c, t] * X[i, t]
            z[c] = acc
            if acc > m:
                m = acc
        acc = 0.0
        for c in range(C):
            acc += exp(z[c] - m)
        lse = m + log(acc)
        loss += lse - z[y[i]]
        for c in range(C):
            g = exp(z[c] - lse)
            if c == y[i]:
                g -= 1.0
            db[c] += g
            for t in range(d):
                dW[c, t] += g * X[i, t]

    loss /= n
    for c in range(C):
        db[c] /= n
        for t in range(d):
            dW[c, t] /= n
    return loss, dW_arr, db_arr


def mean_pairwise(double[:, ::1] X, int metric):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff, total = 0.0

    norm_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] norm = norm_arr
    if metric == METRIC_COSINE:
        for i in range(n):
            acc = 0.0
            for t in range(d):
                acc += X[i, t] * X[i, t]
            norm[i] = sqrt(acc)

    for i in range(n - 1):
        for j in range(i + 1, n):
            acc = 0.0
            if metric == METRIC_COSINE:
                for t in range(d):
                    acc += X[i, t] * X[j, t]
                total += 1.0 - acc / (norm[i] * norm[j])
            else:
                for t in range(d):
                    diff = X[i, t] - X[j, t]
                    acc += diff * diff
                total += sqrt(acc)

    return total / (n * (n - 1) // 2)
