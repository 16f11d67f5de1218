"""Histogram decision-tree growth shared by the forest and boosting learners.

Features are discretised into at most ``max_bins`` bins whose upper edges
are actual training values picked by rank, so a split "bin <= b" is the
same as "x <= edge[b]". Because edges are chosen by rank and compared with
``<=``, a strictly increasing transform of a feature does not change any
split.

Both learners grow trees that maximise

    score(node) = sum_c num_c(node)**2 / (den(node) + reg)

summed over the two children minus the parent. With ``num`` the one-hot
class weights and ``den`` the total weight this is the weighted Gini
decrease; with ``num`` the gradient and ``den`` the hessian it is the
Newton gain of second-order boosting.
"""

from dataclasses import dataclass

import numpy as np


class BinMapper:
    def __init__(self, max_bins=256):
        if not 2 <= max_bins <= 256:
            raise ValueError("max_bins must lie in [2, 256]")
        self.max_bins = max_bins
        self.edges = None

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        n = len(X)
        self.edges = []
        for j in range(X.shape[1]):
            v = np.sort(X[:, j])
            u = np.unique(v)
            if len(u) > self.max_bins:
                ranks = (np.arange(1, self.max_bins + 1) * n) // self.max_bins - 1
                u = np.unique(v[ranks])
            self.edges.append(u)
        return self

    @property
    def n_bins(self):
        return np.array([len(e) for e in self.edges])

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        codes = np.empty(X.shape, dtype=np.uint8)
        for j, e in enumerate(self.edges):
            codes[:, j] = np.minimum(np.searchsorted(e, X[:, j], side="left"), len(e) - 1)
        return codes

    def fit_transform(self, X):
        return self.fit(X).transform(X)


@dataclass
class GrownTree:
    feature: np.ndarray  # int32, -1 at leaves
    split_bin: np.ndarray  # int32
    threshold: np.ndarray  # float64, x <= threshold goes left
    left: np.ndarray
    right: np.ndarray
    num_sum: np.ndarray  # (n_nodes, C)
    den_sum: np.ndarray  # (n_nodes,)
    count: np.ndarray
    depth: np.ndarray

    @property
    def is_leaf(self):
        return self.feature < 0


def grow_tree(
    codes,
    num,
    den,
    edges,
    *,
    max_depth,
    min_samples_split=2,
    min_samples_leaf=1,
    max_features=None,
    rng=None,
    reg=0.0,
    min_child_den=0.0,
    min_gain=0.0,
    stop_when_pure=False,
    max_hist=1 << 21,
):
    """Grow one tree level by level.

    ``codes`` are the binned rows (repeats allowed, e.g. a bootstrap
    sample), ``num`` is (n, C) and ``den`` is (n,). A node is split when it
    is shallower than ``max_depth``, holds at least ``min_samples_split``
    rows, is not pure (if ``stop_when_pure``), and its best valid split has
    gain above ``min_gain``. ``max_features`` features are drawn per node
    from ``rng``; ties between candidate splits go to the first feature
    drawn and the lowest bin.
    """
    codes = np.asarray(codes)
    num = np.asarray(num, dtype=np.float64)
    if num.ndim == 1:
        num = num[:, None]
    den = np.asarray(den, dtype=np.float64)
    n, d = codes.shape
    C = num.shape[1]
    F = d if max_features is None else int(max_features)
    B = int(max(len(e) for e in edges))
    arange_F = np.arange(F)

    feature, split_bin, threshold, left, right = [-1], [0], [0.0], [-1], [-1]
    depth = [0]
    num_sum, den_sum, count = [num.sum(axis=0)], [den.sum()], [n]
    node_of_row = np.zeros(n, dtype=np.int64)
    open_nodes = [0]
    min_rows = max(min_samples_split, 2 * min_samples_leaf)

    while open_nodes:
        cand = [
            q
            for q in open_nodes
            if depth[q] < max_depth
            and count[q] >= min_rows
            and not (stop_when_pure and np.count_nonzero(num_sum[q] > 0) <= 1)
        ]
        if not cand:
            break
        cand = np.asarray(cand)
        m = len(cand)
        if F < d:
            fsel = np.stack([rng.choice(d, F, replace=False) for _ in range(m)])
        else:
            fsel = np.broadcast_to(np.arange(d), (m, d))

        lut = np.full(len(feature), -1, dtype=np.int64)
        lut[cand] = np.arange(m)
        q_all = lut[node_of_row]
        act = np.flatnonzero(q_all >= 0)
        q_act = q_all[act]
        o = np.argsort(q_act, kind="stable")
        act, q_act = act[o], q_act[o]

        best_gain = np.full(m, -np.inf)
        best_f = np.zeros(m, dtype=np.int64)
        best_b = np.zeros(m, dtype=np.int64)
        per_node = F * B * (C + 2)
        mb = max(1, max_hist // per_node)
        for s in range(0, m, mb):
            e = min(s + mb, m)
            lo, hi = np.searchsorted(q_act, [s, e])
            rows = act[lo:hi]
            q = q_act[lo:hi] - s
            fs = fsel[s:e]
            bins = codes[rows[:, None], fs[q]]
            key = ((q[:, None] * F + arange_F) * B + bins).ravel()
            size = (e - s) * F * B
            shape = (e - s, F, B)
            cnt_l = np.bincount(key, minlength=size).reshape(shape).cumsum(axis=2)
            den_l = np.bincount(key, weights=np.repeat(den[rows], F), minlength=size).reshape(shape).cumsum(axis=2)
            num_l = np.stack(
                [np.bincount(key, weights=np.repeat(num[rows, c], F), minlength=size) for c in range(C)],
                axis=-1,
            ).reshape(shape + (C,)).cumsum(axis=2)
            cnt_r = cnt_l[:, :, -1:] - cnt_l
            den_r = den_l[:, :, -1:] - den_l
            num_r = num_l[:, :, -1:, :] - num_l
            with np.errstate(divide="ignore", invalid="ignore"):
                s_l = (num_l**2).sum(axis=-1) / np.maximum(den_l + reg, 1e-16)
                s_r = (num_r**2).sum(axis=-1) / np.maximum(den_r + reg, 1e-16)
                s_p = (num_l[:, :, -1:, :] ** 2).sum(axis=-1) / np.maximum(den_l[:, :, -1:] + reg, 1e-16)
            gain = s_l + s_r - s_p
            valid = (cnt_l >= min_samples_leaf) & (cnt_r >= min_samples_leaf)
            if min_child_den > 0:
                valid &= (den_l >= min_child_den) & (den_r >= min_child_den)
            gain = np.where(valid, gain, -np.inf).reshape(e - s, F * B)
            idx = np.argmax(gain, axis=1)
            r = np.arange(e - s)
            best_gain[s:e] = gain[r, idx]
            best_f[s:e] = fs[r, idx // B]
            best_b[s:e] = idx % B

        split = np.isfinite(best_gain) & (best_gain > min_gain)
        if not split.any():
            break
        child_of = {}
        for qi in np.flatnonzero(split):
            node = int(cand[qi])
            f, b = int(best_f[qi]), int(best_b[qi])
            feature[node], split_bin[node], threshold[node] = f, b, float(edges[f][b])
            ids = []
            for _ in range(2):
                ids.append(len(feature))
                feature.append(-1)
                split_bin.append(0)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                depth.append(depth[node] + 1)
                num_sum.append(None)
                den_sum.append(0.0)
                count.append(0)
            left[node], right[node] = ids
            child_of[node] = ids

        feat_arr = np.asarray(feature)
        sb = np.asarray(split_bin)
        la, ra = np.asarray(left), np.asarray(right)
        nodes = node_of_row[act]
        moving = feat_arr[nodes] >= 0
        rows, nodes = act[moving], nodes[moving]
        go_left = codes[rows, feat_arr[nodes]] <= sb[nodes]
        node_of_row[rows] = np.where(go_left, la[nodes], ra[nodes])

        new_nodes = [c for ids in child_of.values() for c in ids]
        nn = len(feature)
        cnts = np.bincount(node_of_row[rows], minlength=nn)
        dens = np.bincount(node_of_row[rows], weights=den[rows], minlength=nn)
        nums = np.stack([np.bincount(node_of_row[rows], weights=num[rows, c], minlength=nn) for c in range(C)], axis=1)
        for c in new_nodes:
            count[c], den_sum[c], num_sum[c] = int(cnts[c]), float(dens[c]), nums[c]
        open_nodes = new_nodes

    return GrownTree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(split_bin, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.stack(num_sum),
        np.asarray(den_sum, dtype=np.float64),
        np.asarray(count, dtype=np.int64),
        np.asarray(depth, dtype=np.int32),
    )


def apply_codes(tree, codes):
    """Leaf index of each binned row (training-time routing)."""
    node = np.zeros(len(codes), dtype=np.int64)
    rows = np.arange(len(codes))
    for _ in range(int(tree.depth.max()) + 1):
        f = tree.feature[node]
        inner = f >= 0
        if not inner.any():
            break
        r, nd = rows[inner], node[inner]
        go = codes[r, f[inner]] <= tree.split_bin[nd]
        node[inner] = np.where(go, tree.left[nd], tree.right[nd])
    return node


@dataclass
class TreeEnsemble:
    """Trees padded to a common node count for vectorised traversal."""

    feature: np.ndarray  # (T, M) int32
    threshold: np.ndarray  # (T, M) float64
    left: np.ndarray  # (T, M) int32
    right: np.ndarray  # (T, M) int32
    value: np.ndarray  # (T, M, V) float64
    max_depth: int

    @classmethod
    def from_trees(cls, trees, values):
        T = len(trees)
        M = max(len(t.feature) for t in trees)
        V = values[0].shape[1]
        feat = np.full((T, M), -1, dtype=np.int32)
        thr = np.zeros((T, M))
        lft = np.zeros((T, M), dtype=np.int32)
        rgt = np.zeros((T, M), dtype=np.int32)
        val = np.zeros((T, M, V))
        for i, (t, v) in enumerate(zip(trees, values)):
            k = len(t.feature)
            feat[i, :k], thr[i, :k] = t.feature, t.threshold
            lft[i, :k], rgt[i, :k] = t.left, t.right
            val[i, :k] = v
        depth = max(int(t.depth.max()) for t in trees)
        return cls(feat, thr, lft, rgt, val, depth)

    @property
    def n_trees(self):
        return self.feature.shape[0]

    def apply(self, X, chunk_cells=1 << 22):
        """Leaf index per (row, tree)."""
        X = np.asarray(X, dtype=np.float64)
        n, T = len(X), self.n_trees
        M = self.feature.shape[1]
        d = X.shape[1]
        feat, thr = self.feature.ravel(), self.threshold.ravel()
        lft, rgt = self.left.ravel(), self.right.ravel()
        out = np.empty((n, T), dtype=np.int32)
        step = max(1, chunk_cells // max(T, 1))
        base = np.arange(T, dtype=np.int64) * M
        for s in range(0, n, step):
            Xc = np.ascontiguousarray(X[s : s + step]).ravel()
            nc = len(Xc) // d
            # flat index tree * M + node for every (row, tree) still descending
            g = np.tile(base, nc)
            row = np.repeat(np.arange(nc, dtype=np.int64) * d, T)
            live = np.arange(g.size)
            for _ in range(self.max_depth):
                f = feat[g[live]]
                inner = f >= 0
                live = live[inner]
                if not live.size:
                    break
                gl = g[live]
                go = Xc[row[live] + f[inner]] <= thr[gl]
                g[live] = np.where(go, lft[gl], rgt[gl]) + (gl - gl % M)
            out[s : s + step] = (g % M).reshape(nc, T)
        return out

    def leaf_values(self, X):
        """(n, T, V) leaf payloads."""
        return self.value[np.arange(self.n_trees)[None, :], self.apply(X)]

    def to_arrays(self, prefix):
        return {
            f"{prefix}feature": self.feature,
            f"{prefix}threshold": self.threshold,
            f"{prefix}left": self.left,
            f"{prefix}right": self.right,
            f"{prefix}value": self.value,
            f"{prefix}max_depth": np.array([self.max_depth], dtype=np.int64),
        }

    @classmethod
    def from_arrays(cls, arrays, prefix):
        return cls(
            arrays[f"{prefix}feature"],
            arrays[f"{prefix}threshold"],
            arrays[f"{prefix}left"],
            arrays[f"{prefix}right"],
            arrays[f"{prefix}value"],
            int(arrays[f"{prefix}max_depth"][0]),
        )
