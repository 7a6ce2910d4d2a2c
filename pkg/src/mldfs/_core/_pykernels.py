"""Pure numpy implementations of the hot kernels.

Same signatures and bit-identical results as the compiled ``_ckernels``
module; used when the extension is not built or ``MLDFS_PURE_PYTHON=1``.
"""

import numpy as np

# delay families shared with the compiled kernels
FAM_ADD, FAM_SUB, FAM_MUL, FAM_LOGIC, FAM_SHIFT = range(5)

_M32 = np.uint64(0xFFFFFFFF)


def carry_chain(a: int, b: int) -> int:
    g = a & b
    if not g:
        return 0
    co = ((a + b) ^ a ^ b) >> 1      # carry out of each bit
    x = co & ~g & 0xFFFFFFFF         # propagated (not generated) carries
    n = 1
    while x:
        x &= x >> 1
        n += 1
    return n


def carry_chain_batch(a, b):
    a = np.asarray(a, dtype=np.uint64) & _M32
    b = np.asarray(b, dtype=np.uint64) & _M32
    g = a & b
    co = ((a + b) ^ a ^ b) >> np.uint64(1)
    x = co & ~g & _M32
    n = (g != 0).astype(np.int32)
    one = np.uint64(1)
    while True:
        live = x != 0
        if not live.any():
            break
        n += live
        x &= x >> one
    return n


def _popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int32)


def _msb1(x):
    x = np.asarray(x, dtype=np.uint64)
    out = np.zeros(x.shape, dtype=np.int32)
    nz = x != 0
    out[nz] = np.floor(np.log2(x[nz].astype(np.float64))).astype(np.int32) + 1
    # guard float rounding just below powers of two
    fix = nz & ((x >> (out.astype(np.uint64) - np.uint64(1))) == 0)
    out[fix] -= 1
    return out


def delay_scalar(fam: int, a: int, b: int, a_prev: int, b_prev: int, params) -> float:
    t_wc, add_base, add_slope, mul_base, mul_slope, logic, sh_base, sh_slope, hist_w = params
    if fam == FAM_ADD:
        d = add_base + add_slope * carry_chain(a, b)
    elif fam == FAM_SUB:
        d = add_base + add_slope * carry_chain(a, (-b) & 0xFFFFFFFF)
    elif fam == FAM_MUL:
        d = mul_base + mul_slope * (a.bit_length() + b.bit_length())
    elif fam == FAM_LOGIC:
        d = logic
    elif fam == FAM_SHIFT:
        d = sh_base + sh_slope * (b & 31).bit_count()
    else:
        raise ValueError(f"unsupported delay family {fam}")
    toggles = (a ^ a_prev).bit_count() + (b ^ b_prev).bit_count()
    d = d + hist_w * toggles / 64.0
    return t_wc if d > t_wc else d


def delay_batch(fam, a, b, a_prev, b_prev, params):
    t_wc, add_base, add_slope, mul_base, mul_slope, logic, sh_base, sh_slope, hist_w = params
    fam = np.asarray(fam, dtype=np.int32)
    if ((fam < 0) | (fam > FAM_SHIFT)).any():
        raise ValueError("unsupported delay family")
    a = np.asarray(a, dtype=np.uint64) & _M32
    b = np.asarray(b, dtype=np.uint64) & _M32
    bneg = (~b + np.uint64(1)) & _M32
    b_chain = np.where(fam == FAM_SUB, bneg, b)
    chain = carry_chain_batch(a, b_chain)
    d = np.empty(fam.shape, dtype=np.float64)
    adds = (fam == FAM_ADD) | (fam == FAM_SUB)
    d[adds] = add_base + add_slope * chain[adds]
    m = fam == FAM_MUL
    d[m] = mul_base + mul_slope * (_msb1(a[m]) + _msb1(b[m]))
    d[fam == FAM_LOGIC] = logic
    s = fam == FAM_SHIFT
    d[s] = sh_base + sh_slope * _popcount(b[s] & np.uint64(31))
    toggles = _popcount(a ^ (np.asarray(a_prev, dtype=np.uint64) & _M32)) \
        + _popcount(b ^ (np.asarray(b_prev, dtype=np.uint64) & _M32))
    d = d + hist_w * toggles / 64.0
    return np.minimum(d, t_wc)


def best_split(X, y, idx, features, n_classes, min_leaf):
    """Best Gini split of rows ``idx`` over candidate ``features``.

    X holds small non-negative integers. Returns ``(feature, threshold,
    score)`` maximising sum over children of (sum of squared class counts /
    child size); feature is -1 if no admissible split exists.
    """
    ys = y[idx]
    best_f, best_t, best_s = -1, 0.0, -1.0
    for f in features:
        vals = X[idx, f]
        nv = int(vals.max()) + 1
        counts = np.bincount(vals * n_classes + ys, minlength=nv * n_classes)
        counts = counts.reshape(nv, n_classes).astype(np.float64)
        left = np.cumsum(counts, axis=0)[:-1]
        right = counts.sum(axis=0) - left
        n_left = left.sum(axis=1)
        n_right = right.sum(axis=1)
        present = counts.sum(axis=1)
        # candidate cut after value v only where v is present and the next present value exists
        ok = (present[:-1] > 0) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            score = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / n_right
        score = np.where(ok, score, -1.0)
        k = int(np.argmax(score))
        if score[k] > best_s:
            nxt = k + 1
            while present[nxt] == 0:
                nxt += 1
            best_f, best_t, best_s = int(f), (k + nxt) / 2.0, float(score[k])
    return best_f, best_t, best_s


def forest_vote(feature, threshold, left, right, leaf_class, roots, X, n_classes):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    votes = np.zeros((n, n_classes), dtype=np.int32)
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        while True:
            f = feature[node]
            inner = f >= 0
            if not inner.any():
                break
            ni = node[inner]
            go_left = X[rows[inner], f[inner]] <= threshold[ni]
            node[inner] = np.where(go_left, left[ni], right[ni])
        np.add.at(votes, (rows, leaf_class[node]), 1)
    return votes
