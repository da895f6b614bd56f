# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: 2-D histogram binning, KL divergence, and best-first
candidate gathering over random-projection forests. Must stay behaviorally
identical to ``fallback.py``."""

from libc.math cimport log, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()


def histogram2d_pmf(
    double[::1] x,
    double[::1] y,
    int bins,
    double xlo,
    double xscale,
    double ylo,
    double yscale,
):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.zeros((bins, bins), dtype=np.float64)
    cdef double[:, ::1] counts = out_arr
    cdef Py_ssize_t i
    cdef long ix, iy
    for i in range(n):
        if xscale > 0.0:
            ix = <long>((x[i] - xlo) * xscale)
            if ix < 0:
                ix = 0
            elif ix > bins - 1:
                ix = bins - 1
        else:
            ix = 0
        if yscale > 0.0:
            iy = <long>((y[i] - ylo) * yscale)
            if iy < 0:
                iy = 0
            elif iy > bins - 1:
                iy = bins - 1
        else:
            iy = 0
        counts[ix, iy] += 1.0
    out_arr /= n
    return out_arr


def kl_divergence(double[::1] p, double[::1] q, double eps):
    cdef double total = 0.0
    cdef double pi, qi
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        pi = p[i]
        if pi > 0.0:
            qi = q[i]
            if qi < eps:
                qi = eps
            total += pi * log(pi / qi)
    return total


cdef inline bint _heap_less(double pa, long ca, double pb, long cb) nogil:
    # max-heap on priority, FIFO on ties: a ranks below b when it has lower
    # priority, or equal priority but a later insertion counter
    if pa != pb:
        return pa < pb
    return ca > cb


cdef void _heap_push(double[::1] hp, long[::1] hc, int[::1] hn,
                     Py_ssize_t* size, double prio, long counter, int node) nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    hp[i] = prio
    hc[i] = counter
    hn[i] = node
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _heap_less(hp[parent], hc[parent], hp[i], hc[i]):
            hp[parent], hp[i] = hp[i], hp[parent]
            hc[parent], hc[i] = hc[i], hc[parent]
            hn[parent], hn[i] = hn[i], hn[parent]
            i = parent
        else:
            break


cdef void _heap_pop(double[::1] hp, long[::1] hc, int[::1] hn,
                    Py_ssize_t* size, double* prio, int* node) nogil:
    prio[0] = hp[0]
    node[0] = hn[0]
    cdef Py_ssize_t n = size[0] - 1
    size[0] = n
    hp[0] = hp[n]
    hc[0] = hc[n]
    hn[0] = hn[n]
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t left, right, best
    while True:
        left = 2 * i + 1
        right = left + 1
        best = i
        if left < n and _heap_less(hp[best], hc[best], hp[left], hc[left]):
            best = left
        if right < n and _heap_less(hp[best], hc[best], hp[right], hc[right]):
            best = right
        if best == i:
            break
        hp[best], hp[i] = hp[i], hp[best]
        hc[best], hc[i] = hc[i], hc[best]
        hn[best], hn[i] = hn[i], hn[best]
        i = best


def ann_gather(
    double[:, ::1] normals,
    double[::1] offsets,
    int[:, ::1] children,
    long[::1] leaf_indptr,
    long[::1] leaf_items,
    int[::1] roots,
    double[::1] query,
    long search_k,
    long n_items,
):
    cdef Py_ssize_t n_internal = normals.shape[0]
    cdef Py_ssize_t dim = normals.shape[1]
    cdef Py_ssize_t cap = 2 * n_internal + roots.shape[0] + 4

    heap_prio = np.empty(cap, dtype=np.float64)
    heap_cnt = np.empty(cap, dtype=np.int64)
    heap_node = np.empty(cap, dtype=np.int32)
    seen_arr = np.zeros(n_items, dtype=np.uint8)
    out_arr = np.empty(n_items, dtype=np.int64)

    cdef double[::1] hp = heap_prio
    cdef long[::1] hc = heap_cnt
    cdef int[::1] hn = heap_node
    cdef unsigned char[::1] seen = seen_arr
    cdef long[::1] out = out_arr

    cdef Py_ssize_t size = 0
    cdef long counter = 0
    cdef long out_n = 0
    cdef Py_ssize_t i, j
    cdef double prio, margin, left_prio, right_prio
    cdef int code, leaf
    cdef long item

    for i in range(roots.shape[0]):
        _heap_push(hp, hc, hn, &size, INFINITY, counter, roots[i])
        counter += 1

    while size > 0 and out_n < search_k:
        _heap_pop(hp, hc, hn, &size, &prio, &code)
        if code < 0:
            leaf = -(code + 1)
            for j in range(leaf_indptr[leaf], leaf_indptr[leaf + 1]):
                item = leaf_items[j]
                if seen[item] == 0:
                    seen[item] = 1
                    out[out_n] = item
                    out_n += 1
                    if out_n >= search_k:
                        break
            continue
        margin = 0.0
        for j in range(dim):
            margin += normals[code, j] * query[j]
        margin -= offsets[code]
        left_prio = -margin
        if prio < left_prio:
            left_prio = prio
        right_prio = margin
        if prio < right_prio:
            right_prio = prio
        _heap_push(hp, hc, hn, &size, left_prio, counter, children[code, 0])
        counter += 1
        _heap_push(hp, hc, hn, &size, right_prio, counter, children[code, 1])
        counter += 1

    return out_arr[:out_n].copy()
