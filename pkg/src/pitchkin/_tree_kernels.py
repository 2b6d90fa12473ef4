"""Numba kernels for histogram tree growth and traversal.

Binned data is stored feature-major: ``xb[f, i]`` is the bin of row ``i`` on
feature ``f``. A split at bin ``b`` sends bins ``<= b`` left. Leaves have
``feature == -1``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _node_histogram(xb, idx, start, end, feats, g, h, hist_g, hist_h):
    for k in range(feats.shape[0]):
        f = feats[k]
        for b in range(hist_g.shape[1]):
            hist_g[k, b] = 0.0
            hist_h[k, b] = 0.0
        for p in range(start, end):
            r = idx[p]
            b = xb[f, r]
            hist_g[k, b] += g[r]
            hist_h[k, b] += h[r]


@njit(cache=True)
def _best_split(hist_g, hist_h, feats, n_edges, G, H, lam, min_child_h, min_gain):
    parent = G * G / (H + lam)
    best_gain = min_gain
    best_k = -1
    best_b = -1
    for k in range(feats.shape[0]):
        ne = n_edges[feats[k]]
        gl = 0.0
        hl = 0.0
        for b in range(ne):
            gl += hist_g[k, b]
            hl += hist_h[k, b]
            hr = H - hl
            if hl < min_child_h:
                continue
            if hr < min_child_h:
                break
            gr = G - gl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
            if gain > best_gain:
                best_gain = gain
                best_k = k
                best_b = b
    return best_k, best_b, best_gain


@njit(cache=True)
def grow_tree(xb, rows, feats, g, h, n_edges, n_bins, max_depth, min_child_h, lam,
              min_gain, learning_rate):
    """Depth-first exact-histogram growth; returns flat node arrays and node count."""
    n_rows = rows.shape[0]
    cap = 2 * n_rows + 1
    full = (1 << (max_depth + 1)) - 1
    if full < cap:
        cap = full
    feature = np.full(cap, -1, np.int64)
    split_bin = np.full(cap, -1, np.int64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    gain = np.zeros(cap)
    value = np.zeros(cap)

    idx = rows.copy()
    buf = np.empty_like(idx)
    hist_g = np.zeros((feats.shape[0], n_bins))
    hist_h = np.zeros((feats.shape[0], n_bins))

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_rows
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]

        G = 0.0
        H = 0.0
        for p in range(start, end):
            G += g[idx[p]]
            H += h[idx[p]]
        value[node] = -learning_rate * G / (H + lam)
        if depth >= max_depth or H < 2.0 * min_child_h or end - start < 2:
            continue

        _node_histogram(xb, idx, start, end, feats, g, h, hist_g, hist_h)
        k, b, best = _best_split(hist_g, hist_h, feats, n_edges, G, H, lam, min_child_h, min_gain)
        if k < 0:
            continue
        f = feats[k]

        # stable partition of idx[start:end]
        nl = 0
        for p in range(start, end):
            if xb[f, idx[p]] <= b:
                nl += 1
        li = start
        ri = start + nl
        for p in range(start, end):
            r = idx[p]
            if xb[f, r] <= b:
                buf[li] = r
                li += 1
            else:
                buf[ri] = r
                ri += 1
        for p in range(start, end):
            idx[p] = buf[p]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = f
        split_bin[node] = b
        left[node] = lc
        right[node] = rc
        gain[node] = best

        # push right first so the left subtree is numbered first
        st_node[top] = rc
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lc
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        top += 1

    return feature[:n_nodes], split_bin[:n_nodes], left[:n_nodes], right[:n_nodes], \
        gain[:n_nodes], value[:n_nodes]


@njit(cache=True)
def apply_binned(feature, split_bin, left, right, value, xb, out):
    """out[i] += leaf value of row i, routing on bins."""
    n = xb.shape[1]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if xb[feature[node], i] <= split_bin[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


@njit(cache=True)
def predict_raw(offsets, feature, threshold, left, right, value, tree_class, X, base, out):
    """Accumulate every tree's output into out[i, class]; ``offsets`` delimit trees."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    for i in range(n):
        for c in range(base.shape[0]):
            out[i, c] = base[c]
        for t in range(n_trees):
            o = offsets[t]
            node = 0
            while feature[o + node] >= 0:
                if X[i, feature[o + node]] <= threshold[o + node]:
                    node = left[o + node]
                else:
                    node = right[o + node]
            out[i, tree_class[t]] += value[o + node]
