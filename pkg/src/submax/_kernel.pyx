# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel.

Mirrors ``_kernel_py`` operation for operation: identical enumeration
order, identical per-element multiply/accumulate sequence, identical
balanced pairwise reduction tree, so outputs are bit-identical to the
pure kernel's.
"""

import numpy as np

ctypedef unsigned long long u64


cdef inline double _family_value(int kind, u64 arg, int n_base,
                                 double[::1] table,
                                 u64[::1] cover_masks,
                                 double[::1] cover_weights, int n_universe,
                                 long[::1] edges_a, long[::1] edges_b,
                                 double[::1] edge_weights) noexcept nogil:
    cdef double v = 0.0
    cdef double ind
    cdef u64 covered = 0
    cdef Py_ssize_t e, b
    if kind == 0:
        return table[<Py_ssize_t> arg]
    if kind == 1:
        for e in range(n_base):
            if (arg >> e) & 1:
                covered |= cover_masks[e]
        for b in range(n_universe):
            ind = <double> ((covered >> b) & 1)
            v = v + cover_weights[b] * ind
        return v
    for e in range(edges_a.shape[0]):
        ind = <double> (((arg >> edges_a[e]) & 1) ^ ((arg >> edges_b[e]) & 1))
        v = v + edge_weights[e] * ind
    return v


cdef inline double _tree_sum(double[::1] buf, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t h, i
    if m == 0:
        return 0.0
    while m > 1:
        h = m >> 1
        for i in range(h):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if m & 1:
            buf[h] = buf[m - 1]
            m = h + 1
        else:
            m = h
    return buf[0]


cdef _unpack(plan):
    table = plan.table if plan.table is not None else np.zeros(1)
    cover_masks = plan.cover_masks if plan.cover_masks is not None \
        else np.zeros(1, dtype=np.uint64)
    cover_weights = plan.cover_weights if plan.cover_weights is not None \
        else np.zeros(1)
    edges_a = plan.edges_a if plan.edges_a is not None \
        else np.zeros(1, dtype=np.int64)
    edges_b = plan.edges_b if plan.edges_b is not None \
        else np.zeros(1, dtype=np.int64)
    edge_weights = plan.edge_weights if plan.edge_weights is not None \
        else np.zeros(1)
    return (np.ascontiguousarray(table, dtype=np.float64),
            np.ascontiguousarray(cover_masks, dtype=np.uint64),
            np.ascontiguousarray(cover_weights, dtype=np.float64),
            np.ascontiguousarray(edges_a, dtype=np.int64),
            np.ascontiguousarray(edges_b, dtype=np.int64),
            np.ascontiguousarray(edge_weights, dtype=np.float64))


cdef _pen_bits(u64 pen_mask):
    bits = []
    cdef int b
    for b in range(64):
        if (pen_mask >> b) & 1:
            bits.append(b)
    return np.asarray(bits if bits else [0], dtype=np.int64), len(bits)


def eval_masks(plan, masks):
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef u64[::1] mv = masks
    cdef Py_ssize_t k = mv.shape[0]
    out = np.empty(k, dtype=np.float64)
    cdef double[::1] ov = out
    table, cover_masks, cover_weights, edges_a, edges_b, edge_weights = \
        _unpack(plan)
    cdef double[::1] tv = table
    cdef u64[::1] cmv = cover_masks
    cdef double[::1] cwv = cover_weights
    cdef long[::1] eav = edges_a
    cdef long[::1] ebv = edges_b
    cdef double[::1] ewv = edge_weights
    cdef int kind = plan.kind
    cdef int n_base = plan.n_base
    cdef int n_universe = plan.n_universe
    cdef u64 or_mask = plan.or_mask
    cdef u64 and_mask = plan.and_mask
    cdef double addend = plan.addend
    pen = np.ascontiguousarray(plan.pen, dtype=np.float64)
    cdef double[::1] pv = pen
    pen_idx, n_pen_py = _pen_bits(plan.pen_mask)
    cdef long[::1] pidx = pen_idx
    cdef Py_ssize_t n_pen = n_pen_py
    cdef Py_ssize_t i, j, b
    cdef u64 m2
    cdef double v, ind
    with nogil:
        for i in range(k):
            m2 = mv[i] | or_mask
            v = _family_value(kind, m2 & and_mask, n_base, tv, cmv, cwv,
                              n_universe, eav, ebv, ewv)
            for j in range(n_pen):
                b = pidx[j]
                ind = <double> ((m2 >> b) & 1)
                v = v - pv[b] * ind
            v = v + addend
            ov[i] = v
    return out


def weighted_join_sums(plan, masks, weights, unions):
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    unions_arr = np.asarray([int(u) for u in unions], dtype=np.uint64)
    cdef u64[::1] mv = masks
    cdef double[::1] wv = weights
    cdef u64[::1] uv = unions_arr
    cdef Py_ssize_t k = mv.shape[0]
    cdef Py_ssize_t nq = uv.shape[0]
    out = np.empty(nq, dtype=np.float64)
    cdef double[::1] ov = out
    table, cover_masks, cover_weights, edges_a, edges_b, edge_weights = \
        _unpack(plan)
    cdef double[::1] tv = table
    cdef u64[::1] cmv = cover_masks
    cdef double[::1] cwv = cover_weights
    cdef long[::1] eav = edges_a
    cdef long[::1] ebv = edges_b
    cdef double[::1] ewv = edge_weights
    cdef int kind = plan.kind
    cdef int n_base = plan.n_base
    cdef int n_universe = plan.n_universe
    cdef u64 or_mask = plan.or_mask
    cdef u64 and_mask = plan.and_mask
    cdef double addend = plan.addend
    pen = np.ascontiguousarray(plan.pen, dtype=np.float64)
    cdef double[::1] pv = pen
    pen_idx, n_pen_py = _pen_bits(plan.pen_mask)
    cdef long[::1] pidx = pen_idx
    cdef Py_ssize_t n_pen = n_pen_py
    m2_arr = np.empty(k, dtype=np.uint64)
    cdef u64[::1] m2v = m2_arr
    covered_arr = np.zeros(k, dtype=np.uint64)
    cdef u64[::1] cbv = covered_arr
    buf_arr = np.empty(max(k, 1), dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t i, q, j, b, e
    cdef u64 m2, u, arg, covered, cov_u
    cdef double v, ind
    with nogil:
        for i in range(k):
            m2 = mv[i] | or_mask
            m2v[i] = m2
            if kind == 1:
                arg = m2 & and_mask
                covered = 0
                for e in range(n_base):
                    if (arg >> e) & 1:
                        covered |= cmv[e]
                cbv[i] = covered
        for q in range(nq):
            u = uv[q]
            if kind == 1:
                cov_u = 0
                arg = u & and_mask
                for e in range(n_base):
                    if (arg >> e) & 1:
                        cov_u |= cmv[e]
            for i in range(k):
                m2 = m2v[i]
                if kind == 1:
                    covered = cbv[i] | cov_u
                    v = 0.0
                    for b in range(n_universe):
                        ind = <double> ((covered >> b) & 1)
                        v = v + cwv[b] * ind
                else:
                    v = _family_value(kind, (m2 | u) & and_mask, n_base, tv,
                                      cmv, cwv, n_universe, eav, ebv, ewv)
                for j in range(n_pen):
                    b = pidx[j]
                    if (u >> b) & 1:
                        v = v - pv[b]
                    else:
                        ind = <double> ((m2 >> b) & 1)
                        v = v - pv[b] * ind
                v = v + addend
                buf[i] = wv[i] * v
            ov[q] = _tree_sum(buf, k)
    return out
