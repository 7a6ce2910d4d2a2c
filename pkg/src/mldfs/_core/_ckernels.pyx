# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint32_t, uint64_t, int32_t, int64_t

cnp.import_array()

cdef enum:
    FAM_ADD = 0
    FAM_SUB = 1
    FAM_MUL = 2
    FAM_LOGIC = 3
    FAM_SHIFT = 4


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_clzll(unsigned long long) nogil


cdef inline int _popc(uint64_t x) nogil:
    return __builtin_popcountll(x)


cdef inline int _msb1(uint64_t x) nogil:
    if x == 0:
        return 0
    return 64 - __builtin_clzll(x)


cdef inline int _chain(uint64_t a, uint64_t b) nogil:
    cdef uint64_t g = a & b
    cdef uint64_t co, x
    cdef int n
    if g == 0:
        return 0
    co = ((a + b) ^ a ^ b) >> 1
    x = co & ~g & 0xFFFFFFFFULL
    n = 1
    while x:
        x &= x >> 1
        n += 1
    return n


cdef inline double _delay(int fam, uint64_t a, uint64_t b, uint64_t ap, uint64_t bp,
                          double* p) nogil:
    # p: t_wc, add_base, add_slope, mul_base, mul_slope, logic, sh_base, sh_slope, hist_w
    cdef double d
    cdef int toggles
    if fam == FAM_ADD:
        d = p[1] + p[2] * _chain(a, b)
    elif fam == FAM_SUB:
        d = p[1] + p[2] * _chain(a, ((~b) + 1) & 0xFFFFFFFFULL)
    elif fam == FAM_MUL:
        d = p[3] + p[4] * (_msb1(a) + _msb1(b))
    elif fam == FAM_LOGIC:
        d = p[5]
    else:
        d = p[6] + p[7] * _popc(b & 31)
    toggles = _popc(a ^ ap) + _popc(b ^ bp)
    d = d + p[8] * toggles / 64.0
    if d > p[0]:
        return p[0]
    return d


def carry_chain(a, b):
    return _chain(<uint64_t>(a & 0xFFFFFFFF), <uint64_t>(b & 0xFFFFFFFF))


def carry_chain_batch(a, b):
    cdef cnp.ndarray[uint64_t, ndim=1] av = np.ascontiguousarray(a, dtype=np.uint64).ravel() & 0xFFFFFFFF
    cdef cnp.ndarray[uint64_t, ndim=1] bv = np.ascontiguousarray(b, dtype=np.uint64).ravel() & 0xFFFFFFFF
    cdef Py_ssize_t i, n = av.shape[0]
    cdef cnp.ndarray[int32_t, ndim=1] out = np.empty(n, dtype=np.int32)
    with nogil:
        for i in range(n):
            out[i] = _chain(av[i], bv[i])
    return out.reshape(np.shape(a))


def delay_scalar(int fam, a, b, a_prev, b_prev, params):
    cdef double p[9]
    cdef int k
    if fam < 0 or fam > FAM_SHIFT:
        raise ValueError(f"unsupported delay family {fam}")
    for k in range(9):
        p[k] = params[k]
    return _delay(fam, <uint64_t>a, <uint64_t>b, <uint64_t>a_prev, <uint64_t>b_prev, p)


def delay_batch(fam, a, b, a_prev, b_prev, params):
    cdef cnp.ndarray[int32_t, ndim=1] fv = np.ascontiguousarray(fam, dtype=np.int32).ravel()
    cdef cnp.ndarray[uint64_t, ndim=1] av = np.ascontiguousarray(a, dtype=np.uint64).ravel() & 0xFFFFFFFF
    cdef cnp.ndarray[uint64_t, ndim=1] bv = np.ascontiguousarray(b, dtype=np.uint64).ravel() & 0xFFFFFFFF
    cdef cnp.ndarray[uint64_t, ndim=1] apv = np.ascontiguousarray(a_prev, dtype=np.uint64).ravel() & 0xFFFFFFFF
    cdef cnp.ndarray[uint64_t, ndim=1] bpv = np.ascontiguousarray(b_prev, dtype=np.uint64).ravel() & 0xFFFFFFFF
    cdef Py_ssize_t i, n = fv.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double p[9]
    cdef int k
    for k in range(9):
        p[k] = params[k]
    for i in range(n):
        if fv[i] < 0 or fv[i] > FAM_SHIFT:
            raise ValueError("unsupported delay family")
    with nogil:
        for i in range(n):
            out[i] = _delay(fv[i], av[i], bv[i], apv[i], bpv[i], p)
    return out.reshape(np.shape(fam))


def best_split(X, y, idx, features, int n_classes, int min_leaf):
    cdef cnp.ndarray[int32_t, ndim=2] Xv = np.ascontiguousarray(X, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] yv = np.ascontiguousarray(y, dtype=np.int32)
    cdef cnp.ndarray[int64_t, ndim=1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] fv = np.ascontiguousarray(features, dtype=np.int64)
    cdef Py_ssize_t m = iv.shape[0], i, v, c, fi, nv, k, nxt
    cdef int f, best_f = -1, vmax
    cdef double best_t = 0.0, best_s = -1.0, s, sl, sr, nl, nr, tot_c, lc
    cdef cnp.ndarray[double, ndim=2] counts
    cdef cnp.ndarray[double, ndim=1] total = np.zeros(n_classes, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] left = np.zeros(n_classes, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] present

    for fi in range(fv.shape[0]):
        f = <int>fv[fi]
        vmax = 0
        for i in range(m):
            if Xv[iv[i], f] > vmax:
                vmax = Xv[iv[i], f]
        nv = vmax + 1
        counts = np.zeros((nv, n_classes), dtype=np.float64)
        present = np.zeros(nv, dtype=np.float64)
        for i in range(m):
            counts[Xv[iv[i], f], yv[iv[i]]] += 1.0
            present[Xv[iv[i], f]] += 1.0
        for c in range(n_classes):
            total[c] = 0.0
            left[c] = 0.0
            for v in range(nv):
                total[c] += counts[v, c]
        k = -1
        s = -1.0
        for v in range(nv - 1):
            nl = 0.0
            for c in range(n_classes):
                left[c] += counts[v, c]
                nl += left[c]
            if present[v] == 0.0:
                continue
            nr = 0.0
            for c in range(n_classes):
                nr += total[c] - left[c]
            if nl < min_leaf or nr < min_leaf:
                continue
            sl = 0.0
            sr = 0.0
            for c in range(n_classes):
                lc = left[c]
                sl += lc * lc
                tot_c = total[c] - lc
                sr += tot_c * tot_c
            if sl / nl + sr / nr > s:
                s = sl / nl + sr / nr
                k = v
        if k >= 0 and s > best_s:
            nxt = k + 1
            while present[nxt] == 0.0:
                nxt += 1
            best_f = f
            best_t = (k + nxt) / 2.0
            best_s = s
    return best_f, best_t, best_s


def forest_vote(feature, threshold, left, right, leaf_class, roots, X, int n_classes):
    cdef cnp.ndarray[int32_t, ndim=1] fv = np.ascontiguousarray(feature, dtype=np.int32)
    cdef cnp.ndarray[double, ndim=1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef cnp.ndarray[int32_t, ndim=1] lv = np.ascontiguousarray(left, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] rv = np.ascontiguousarray(right, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] cv = np.ascontiguousarray(leaf_class, dtype=np.int32)
    cdef cnp.ndarray[int64_t, ndim=1] roots_v = np.ascontiguousarray(roots, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], i, t, node
    cdef cnp.ndarray[int32_t, ndim=2] votes = np.zeros((n, n_classes), dtype=np.int32)
    with nogil:
        for i in range(n):
            for t in range(roots_v.shape[0]):
                node = roots_v[t]
                while fv[node] >= 0:
                    if Xv[i, fv[node]] <= tv[node]:
                        node = lv[node]
                    else:
                        node = rv[node]
                votes[i, cv[node]] += 1
    return votes
