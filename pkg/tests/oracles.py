"""Independent slow reference implementations used as test oracles."""
import math

import numpy as np


def proxy_bruteforce(losses, lower, upper, w, ell):
    if math.isinf(w):
        return 0.0
    num = sum(lo for l, lo in zip(losses, lower) if l <= ell)
    rest = sum(up for l, up in zip(losses, upper) if l > ell)
    return num / (num + rest + w)


def weight_bound_bruteforce(d0_upper, beta):
    w = sorted(d0_upper)
    k = math.ceil((len(w) + 1) * (1 - beta) - 1e-12)
    return math.inf if k > len(w) else w[k - 1]


def quantile_bruteforce(losses, lower, upper, d0_upper, alpha, beta):
    w = weight_bound_bruteforce(d0_upper, beta)
    target = (1 - alpha) / (1 - beta)
    for ell in sorted(set(losses)):
        if proxy_bruteforce(losses, lower, upper, w, ell) >= target:
            return ell
    return math.inf


def limit_dense_grid(losses, lower, upper, d0_upper, alpha, m=10_000):
    """Minimize over the dense grid beta_j = alpha * j / (m + 1), j = 1..m."""
    best = math.inf
    w_sorted = np.sort(np.asarray(d0_upper, dtype=float))
    grid = np.unique(losses)
    n0 = w_sorted.size
    # reuse the step sums; weights and thresholds are evaluated per grid point
    below = np.array([sum(lo for l, lo in zip(losses, lower) if l <= g) for g in grid])
    above = np.array([sum(up for l, up in zip(losses, upper) if l > g) for g in grid])
    for j in range(1, m + 1):
        beta = alpha * j / (m + 1)
        k = math.ceil((n0 + 1) * (1 - beta) - 1e-12)
        if k > n0:
            continue
        w = w_sorted[k - 1]
        hit = np.flatnonzero(below / (below + above + w) >= (1 - alpha) / (1 - beta))
        if hit.size:
            best = min(best, float(grid[hit[0]]))
    return best
