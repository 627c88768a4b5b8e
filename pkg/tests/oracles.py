"""Independent brute-force references. Plain numpy, no package solver code."""

import numpy as np


def trilateration_surface(anchors, ranges, xs, ys):
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    s = np.zeros_like(X)
    for (ax, ay), d in zip(anchors, ranges):
        s += (np.hypot(X - ax, Y - ay) - d) ** 2
    return X, Y, s


def tdoa_surface(anchors, range_diffs, xs, ys):
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    r1 = np.hypot(X - anchors[0][0], Y - anchors[0][1])
    s = np.zeros_like(X)
    for (ax, ay), dd in zip(anchors[1:], range_diffs[1:]):
        s += (np.hypot(X - ax, Y - ay) - r1 - dd) ** 2
    return X, Y, s


def grid_argmin(surface, anchors, values, bounds, step):
    (x0, x1), (y0, y1) = bounds
    xs = np.arange(x0, x1 + step / 2, step)
    ys = np.arange(y0, y1 + step / 2, step)
    X, Y, s = surface(anchors, values, xs, ys)
    i = np.unravel_index(np.argmin(s), s.shape)
    return np.array([X[i], Y[i]]), s[i]


def grid_search(surface, anchors, values, pad=200.0, coarse=1.0, fine=0.1, n_candidates=5):
    """Exhaustive coarse grid over the padded anchor box, then exhaustive fine grids
    around the best few coarse cells that are local minima of the coarse surface."""
    a = np.asarray(anchors, float)
    xs = np.arange(a[:, 0].min() - pad, a[:, 0].max() + pad + coarse / 2, coarse)
    ys = np.arange(a[:, 1].min() - pad, a[:, 1].max() + pad + coarse / 2, coarse)
    X, Y, s = surface(a, values, xs, ys)
    padded = np.pad(s, 1, constant_values=np.inf)
    local = np.ones_like(s, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx or dy:
                local &= s <= padded[1 + dx:1 + dx + s.shape[0], 1 + dy:1 + dy + s.shape[1]]
    idx = np.flatnonzero(local.ravel())
    idx = idx[np.argsort(s.ravel()[idx])][:n_candidates]
    best, best_cost = None, np.inf
    for k in idx:
        cx, cy = X.ravel()[k], Y.ravel()[k]
        p, c = grid_argmin(surface, a, values, ((cx - 2 * coarse, cx + 2 * coarse), (cy - 2 * coarse, cy + 2 * coarse)), fine)
        if c < best_cost:
            best, best_cost = p, c
    return best, best_cost
