"""Independent reference implementations used by the tests.

These are deliberately naive (explicit loops, textbook formulas) and share
no code with the package beyond plain numpy.
"""

import numpy as np


def wishart_ml_classify(T, train_xy, train_classes):
    """Per-pixel maximum-likelihood complex Wishart classifier.

    Class centres are the mean training coherency matrices; each pixel gets
    the class minimising ``ln det S_c + tr(S_c^-1 T)``.
    """
    T = np.asarray(T)
    classes = sorted(set(int(c) for c in train_classes))
    xs, ys = np.asarray(train_xy[0]), np.asarray(train_xy[1])
    centres = []
    for c in classes:
        m = np.asarray(train_classes) == c
        centres.append(T[ys[m], xs[m]].mean(axis=0))
    dist = np.empty((len(classes),) + T.shape[:2])
    for i, S in enumerate(centres):
        Si = np.linalg.inv(S)
        _, logdet = np.linalg.slogdet(S)
        dist[i] = logdet + np.einsum("ij,hwji->hw", Si, T).real
    return np.asarray(classes)[np.argmin(dist, axis=0)]


def naive_valid_conv2d(kernel, x):
    kx, ky = kernel.shape
    h, w = x.shape
    out = np.zeros((h - kx + 1, w - ky + 1))
    for r in range(out.shape[0]):
        for c in range(out.shape[1]):
            acc = 0.0
            for u in range(kx):
                for v in range(ky):
                    acc += kernel[u, v] * x[r + u, c + v]
            out[r, c] = acc
    return out


def naive_confusion(pred, truth, K):
    counts = np.zeros((K, K), dtype=np.int64)
    rejected = np.zeros(K, dtype=np.int64)
    for p, t in zip(np.ravel(pred), np.ravel(truth)):
        if t == 0:
            continue
        if p == 0:
            rejected[t - 1] += 1
        else:
            counts[t - 1, p - 1] += 1
    return counts, rejected


def reflect(idx, size):
    """Mirror index about the edge pixels: -i -> i, D-1+i -> D-1-i."""
    while idx < 0 or idx >= size:
        if idx < 0:
            idx = -idx
        if idx >= size:
            idx = 2 * (size - 1) - idx
    return idx
