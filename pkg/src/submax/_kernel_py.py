"""Pure-Python (numpy) evaluation kernel.

Mirrors the compiled kernel operation for operation: identical enumeration
order, identical per-element multiply/accumulate sequence, identical
balanced pairwise reduction tree.  Outputs are bit-identical to the
compiled kernel's.
"""

import numpy as np

_U1 = np.uint64(1)


def _bits(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _covered_of(plan, arg_mask):
    covered = 0
    for e in _bits(arg_mask):
        if e < plan.n_base:
            covered |= int(plan.cover_masks[e])
    return covered


def _tree_sum(terms):
    """Fixed-shape balanced pairwise reduction; adjacent leaves pair first."""
    buf = terms
    m = buf.shape[0]
    if m == 0:
        return 0.0
    while m > 1:
        h = m // 2
        nxt = buf[0:2 * h:2] + buf[1:2 * h:2]
        if m & 1:
            nxt = np.concatenate([nxt, buf[m - 1:m]])
        buf = nxt
        m = buf.shape[0]
    return float(buf[0])


def _family_values(plan, args):
    if plan.kind == 0:
        return plan.table[args.astype(np.int64)].astype(np.float64)
    if plan.kind == 1:
        covered = np.zeros(args.shape, dtype=np.uint64)
        for e in range(plan.n_base):
            sel = ((args >> np.uint64(e)) & _U1).astype(bool)
            covered |= np.where(sel, plan.cover_masks[e], np.uint64(0))
        vals = np.zeros(args.shape, dtype=np.float64)
        for b in range(plan.n_universe):
            ind = ((covered >> np.uint64(b)) & _U1).astype(np.float64)
            vals = vals + plan.cover_weights[b] * ind
        return vals
    if plan.kind == 2:
        vals = np.zeros(args.shape, dtype=np.float64)
        for e in range(plan.edges_a.shape[0]):
            xa = (args >> np.uint64(plan.edges_a[e])) & _U1
            xb = (args >> np.uint64(plan.edges_b[e])) & _U1
            vals = vals + plan.edge_weights[e] * (xa ^ xb).astype(np.float64)
        return vals
    raise ValueError(f"unknown family kind {plan.kind}")


def eval_masks(plan, masks):
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    m2 = masks | np.uint64(plan.or_mask)
    args = m2 & np.uint64(plan.and_mask)
    vals = _family_values(plan, args)
    for b in _bits(plan.pen_mask):
        ind = ((m2 >> np.uint64(b)) & _U1).astype(np.float64)
        vals = vals - plan.pen[b] * ind
    vals = vals + plan.addend
    return vals


def weighted_join_sums(plan, masks, weights, unions):
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    m2 = masks | np.uint64(plan.or_mask)
    and_mask = np.uint64(plan.and_mask)
    arg_base = m2 & and_mask
    pen_bits = _bits(plan.pen_mask)

    covered_base = None
    if plan.kind == 1:
        covered_base = np.zeros(masks.shape, dtype=np.uint64)
        for e in range(plan.n_base):
            sel = ((arg_base >> np.uint64(e)) & _U1).astype(bool)
            covered_base |= np.where(sel, plan.cover_masks[e], np.uint64(0))

    out = np.empty(len(unions), dtype=np.float64)
    for q, union in enumerate(unions):
        u = int(union)
        if plan.kind == 1:
            covered = covered_base | np.uint64(_covered_of(plan, u & plan.and_mask))
            vals = np.zeros(masks.shape, dtype=np.float64)
            for b in range(plan.n_universe):
                ind = ((covered >> np.uint64(b)) & _U1).astype(np.float64)
                vals = vals + plan.cover_weights[b] * ind
        else:
            args = (m2 | np.uint64(u)) & and_mask
            vals = _family_values(plan, args)
        for b in pen_bits:
            if (u >> b) & 1:
                vals = vals - plan.pen[b]
            else:
                ind = ((m2 >> np.uint64(b)) & _U1).astype(np.float64)
                vals = vals - plan.pen[b] * ind
        vals = vals + plan.addend
        out[q] = _tree_sum(weights * vals)
    return out
