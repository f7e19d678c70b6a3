"""Compiled inner loops of the tree search.

``best_stump`` solves the bottom split level: for one node (given as per-feature
sorted row orders) it finds the best single split with a leaf on each side.
It releases the GIL so root-level candidates can run on worker threads.
"""
import numpy as np
from numba import njit

KIND_CONTINUOUS = 0
KIND_ORDERED = 1
KIND_CATEGORICAL = 2

# categorical features have at most 63 categories, so a category set fits in
# the low bits of an int64
MAX_CAT_SLOTS = 64


@njit(cache=True, nogil=True)
def select_gaps(n_gaps, k):
    """Boolean mask over ``n_gaps`` gaps keeping ``k`` at equally spaced ranks
    (all of them when ``k < 0`` or ``n_gaps <= k``)."""
    sel = np.zeros(n_gaps, np.bool_)
    if k < 0 or n_gaps <= k:
        sel[:] = True
        return sel
    step = (n_gaps - 1) / (k - 1)
    for i in range(k):
        sel[int(np.floor(i * step + 0.5))] = True
    return sel


@njit(cache=True, nogil=True)
def midpoint(a, b):
    mid = a + 0.5 * (b - a)
    if mid >= b:
        # a and b are adjacent floats
        mid = a
    return mid


@njit(cache=True, nogil=True)
def _argmax(v):
    best = 0
    for j in range(1, v.shape[0]):
        if v[j] > v[best]:
            best = j
    return best


@njit(cache=True, nogil=True)
def node_totals(S, rows):
    d = S.shape[1]
    total = np.zeros(d)
    for i in range(rows.shape[0]):
        r = rows[i]
        for j in range(d):
            total[j] += S[r, j]
    return total


@njit(cache=True, nogil=True)
def best_stump(X, S, orders, kinds, k_num, min_leaf, tol,
               cat_codes, cat_off, cat_len):
    """Best depth-1 split of a node.

    Parameters
    ----------
    X, S : float arrays (n, p) and (n, d). Features and policy scores.
    orders : int array (p, m). Row ``f`` lists the node's rows sorted by
        feature ``f``.
    kinds : int array (p,). Feature kinds (KIND_*).
    k_num : int. Threshold budget per numeric feature, -1 for all.
    min_leaf : int. Minimum rows on each side of a split.
    tol : float. A candidate replaces the incumbent only if better by > tol.
    cat_codes, cat_off, cat_len : candidate category subsets, see
        ``search._CategoryTables``.

    Returns
    -------
    tuple
        (leaf_reward, leaf_treat, best_reward, feature, threshold, cat_mask,
        left_treat, right_treat, n_left, n_evaluated). ``feature`` is -1 when
        no admissible split exists.
    """
    p, m = orders.shape
    d = S.shape[1]
    total = node_totals(S, orders[0])
    leaf_treat = _argmax(total)
    leaf_reward = total[leaf_treat]

    best = -np.inf
    best_f = -1
    best_thr = np.nan
    best_mask = 0
    best_lt = 0
    best_rt = 0
    best_nl = 0
    evaluated = 0
    left = np.zeros(d)
    right = np.zeros(d)
    csum = np.zeros((MAX_CAT_SLOTS, d))
    ccnt = np.zeros(MAX_CAT_SLOTS, np.int64)
    pres = np.zeros(MAX_CAT_SLOTS, np.int64)

    for f in range(p):
        o = orders[f]
        if kinds[f] != KIND_CATEGORICAL:
            n_gaps = 0
            for i in range(m - 1):
                if X[o[i + 1], f] > X[o[i], f]:
                    n_gaps += 1
            if n_gaps == 0:
                continue
            sel = select_gaps(n_gaps, k_num)
            left[:] = 0.0
            g = 0
            for i in range(m - 1):
                r = o[i]
                for j in range(d):
                    left[j] += S[r, j]
                a = X[r, f]
                b = X[o[i + 1], f]
                if b > a:
                    nl = i + 1
                    if sel[g] and nl >= min_leaf and m - nl >= min_leaf:
                        evaluated += 1
                        for j in range(d):
                            right[j] = total[j] - left[j]
                        lt = _argmax(left)
                        rt = _argmax(right)
                        reward = left[lt] + right[rt]
                        if reward > best + tol:
                            best = reward
                            best_f = f
                            best_thr = midpoint(a, b)
                            best_mask = 0
                            best_lt = lt
                            best_rt = rt
                            best_nl = nl
                    g += 1
        else:
            c = 0
            prev = -1
            for i in range(m):
                r = o[i]
                cat = int(X[r, f])
                if cat != prev:
                    pres[c] = cat
                    ccnt[c] = 0
                    for j in range(d):
                        csum[c, j] = 0.0
                    c += 1
                    prev = cat
                ccnt[c - 1] += 1
                for j in range(d):
                    csum[c - 1, j] += S[r, j]
            if c < 2:
                continue
            off = cat_off[f, c]
            n_codes = cat_len[f, c]
            for t in range(n_codes):
                code = cat_codes[off + t]
                nl = ccnt[0]
                mask = np.int64(1) << pres[0]
                for j in range(d):
                    left[j] = csum[0, j]
                for bit in range(c - 1):
                    if (code >> bit) & 1:
                        nl += ccnt[bit + 1]
                        mask |= np.int64(1) << pres[bit + 1]
                        for j in range(d):
                            left[j] += csum[bit + 1, j]
                if nl < min_leaf or m - nl < min_leaf:
                    continue
                evaluated += 1
                for j in range(d):
                    right[j] = total[j] - left[j]
                lt = _argmax(left)
                rt = _argmax(right)
                reward = left[lt] + right[rt]
                if reward > best + tol:
                    best = reward
                    best_f = f
                    best_thr = np.nan
                    best_mask = mask
                    best_lt = lt
                    best_rt = rt
                    best_nl = nl
    return (leaf_reward, leaf_treat, best, best_f, best_thr, best_mask,
            best_lt, best_rt, best_nl, evaluated)
