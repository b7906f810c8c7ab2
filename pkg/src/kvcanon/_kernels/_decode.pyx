# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled span decode kernel; semantics mirror _decode_py exactly."""

from libc.math cimport exp, INFINITY
from libc.stdlib cimport free, malloc


cdef void _top_indices(const double* values, Py_ssize_t length, Py_ssize_t n,
                       Py_ssize_t* out, unsigned char* used) noexcept:
    cdef Py_ssize_t k, i, best
    cdef double best_v
    for i in range(length):
        used[i] = 0
    for k in range(n):
        best = -1
        best_v = -INFINITY
        for i in range(length):
            if not used[i] and values[i] > best_v:
                best_v = values[i]
                best = i
        used[best] = 1
        out[k] = best


cdef void _merge_sort(const double* logits, Py_ssize_t* idx, Py_ssize_t* tmp,
                      Py_ssize_t lo, Py_ssize_t hi) noexcept:
    # stable sort of idx[lo:hi] by descending logit; stability keeps index order on ties
    cdef Py_ssize_t mid, i, j, k
    if hi - lo <= 1:
        return
    mid = (lo + hi) // 2
    _merge_sort(logits, idx, tmp, lo, mid)
    _merge_sort(logits, idx, tmp, mid, hi)
    i = lo
    j = mid
    k = lo
    while i < mid and j < hi:
        if logits[idx[i]] >= logits[idx[j]]:
            tmp[k] = idx[i]
            i += 1
        else:
            tmp[k] = idx[j]
            j += 1
        k += 1
    while i < mid:
        tmp[k] = idx[i]
        i += 1
        k += 1
    while j < hi:
        tmp[k] = idx[j]
        j += 1
        k += 1
    for i in range(lo, hi):
        idx[i] = tmp[i]


def decode_best_span(const double[::1] start_logits, const double[::1] end_logits,
                     double null_score, Py_ssize_t n_top, double mass,
                     Py_ssize_t cap, double null_offset):
    cdef Py_ssize_t length = start_logits.shape[0]
    if length == 0:
        return (-1, -1, float("-inf"), False)
    cdef Py_ssize_t n = n_top if n_top < length else length

    cdef Py_ssize_t* top_starts = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* top_ends = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef unsigned char* used = <unsigned char*> malloc(length * sizeof(unsigned char))
    cdef unsigned char* is_cand = <unsigned char*> malloc(length * sizeof(unsigned char))
    cdef double* exps = <double*> malloc(length * sizeof(double))
    cdef double* suffix = <double*> malloc((length + 1) * sizeof(double))
    cdef Py_ssize_t* order = <Py_ssize_t*> malloc(length * sizeof(Py_ssize_t))
    cdef Py_ssize_t* tmp = <Py_ssize_t*> malloc(length * sizeof(Py_ssize_t))
    if (top_starts == NULL or top_ends == NULL or used == NULL or is_cand == NULL
            or exps == NULL or suffix == NULL or order == NULL or tmp == NULL):
        free(top_starts); free(top_ends); free(used); free(is_cand)
        free(exps); free(suffix); free(order); free(tmp)
        raise MemoryError()

    cdef Py_ssize_t i, k, s, e, si, oi
    cdef double m, need, cum, score
    cdef double best_score = -INFINITY
    cdef Py_ssize_t best_s = -1, best_e = -1
    cdef bint better

    try:
        _top_indices(&start_logits[0], length, n, top_starts, used)
        _top_indices(&end_logits[0], length, n, top_ends, used)
        for i in range(length):
            is_cand[i] = 0
        for k in range(n):
            is_cand[top_ends[k]] = 1

        m = end_logits[0]
        for i in range(1, length):
            if end_logits[i] > m:
                m = end_logits[i]
        for i in range(length):
            exps[i] = exp(end_logits[i] - m)
        suffix[length] = 0.0
        for i in range(length - 1, -1, -1):
            suffix[i] = exps[i] + suffix[i + 1]
        for i in range(length):
            order[i] = i
        _merge_sort(&end_logits[0], order, tmp, 0, length)

        for si in range(n):
            s = top_starts[si]
            need = mass * suffix[s]
            cum = 0.0
            for oi in range(length):
                e = order[oi]
                if e < s:
                    continue
                if not cum < need:
                    break
                cum += exps[e]
                if is_cand[e] and e - s <= cap:
                    score = start_logits[s] + end_logits[e]
                    better = score > best_score
                    if not better and score == best_score:
                        better = s < best_s or (s == best_s and e - s < best_e - best_s)
                    if better:
                        best_score = score
                        best_s = s
                        best_e = e
    finally:
        free(top_starts); free(top_ends); free(used); free(is_cand)
        free(exps); free(suffix); free(order); free(tmp)

    if best_s < 0:
        return (-1, -1, float("-inf"), False)
    if null_score + null_offset > best_score:
        return (-1, -1, float("-inf"), False)
    return (best_s, best_e, best_score, True)
