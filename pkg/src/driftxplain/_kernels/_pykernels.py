"""NumPy implementations of the hot kernels.

These are the fallback backend; `driftxplain._kernels` picks the compiled
Cython variant when it is importable. Both backends implement the same four
operations with identical semantics:

- pairwise_sqdist: dense squared Euclidean distance matrix
- lsap_solve: rectangular min-cost assignment (shortest augmenting paths)
- ap_run: affinity-propagation message passing
- mean_shift_run: Gaussian-kernel mean-shift iteration for every seed
"""

from __future__ import annotations

import numpy as np


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``a`` and rows of ``b``."""
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    d2 = a2[:, None] + b2[None, :] - 2.0 * (a @ b.T)
    # the dot-product form can go slightly negative for coincident points
    np.maximum(d2, 0.0, out=d2)
    return d2


def lsap_solve(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost injective assignment of rows to columns.

    Shortest-augmenting-path formulation with dual potentials. Requires
    rows <= columns. Entries of +inf mark forbidden pairs; if some row
    cannot be matched a ValueError carries its index. Ties in the reduced
    cost resolve to the lowest column index.
    """
    n, m = cost.shape
    if n > m:
        raise ValueError("cost matrix needs at least as many columns as rows")
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    assigned_row = np.zeros(m + 1, dtype=np.int64)  # 1-based row per column, 0 free
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        assigned_row[0] = i
        j0 = 0
        minv = np.full(m, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = assigned_row[j0]
            free = ~used[1:]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            upd = free & (cur < minv)
            minv[upd] = cur[upd]
            way[1:][upd] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            if not np.isfinite(delta):
                raise ValueError(f"row {i - 1} has no feasible assignment")
            u[assigned_row[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if assigned_row[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            assigned_row[j0] = assigned_row[j1]
            j0 = j1
    result = np.full(n, -1, dtype=np.int64)
    cols = np.nonzero(assigned_row[1:])[0]
    result[assigned_row[1:][cols] - 1] = cols
    return result


def ap_run(
    s: np.ndarray, damping: float, max_iter: int, conv_iter: int
) -> tuple[np.ndarray, int, bool]:
    """Affinity-propagation message loop on a similarity matrix.

    Returns (exemplar indices, iterations run, converged flag). Convergence
    means the exemplar set stayed fixed for ``conv_iter`` iterations.
    """
    n = s.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64), 0, True
    r = np.zeros((n, n))
    a = np.zeros((n, n))
    idx = np.arange(n)
    is_ex = np.zeros(n, dtype=bool)
    stable = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # responsibilities: r(i,k) = s(i,k) - max_{k'!=k} (a(i,k') + s(i,k'))
        asum = a + s
        top1 = asum.argmax(axis=1)
        max1 = asum[idx, top1]
        asum[idx, top1] = -np.inf
        max2 = asum.max(axis=1)
        rnew = s - max1[:, None]
        rnew[idx, top1] = s[idx, top1] - max2
        r = (1.0 - damping) * rnew + damping * r
        # availabilities from positive responsibilities, diagonal kept raw
        rp = np.maximum(r, 0.0)
        rp[idx, idx] = r[idx, idx]
        colsum = rp.sum(axis=0)
        tmp = colsum[None, :] - rp
        diag = tmp[idx, idx]
        anew = np.minimum(tmp, 0.0)
        anew[idx, idx] = diag
        a = (1.0 - damping) * anew + damping * a
        ex = (a[idx, idx] + r[idx, idx]) > 0.0
        if ex.any() and np.array_equal(ex, is_ex):
            stable += 1
            if stable >= conv_iter:
                converged = True
                break
        else:
            stable = 0
            is_ex = ex.copy()
    exemplars = np.nonzero(is_ex)[0]
    if exemplars.size == 0:
        exemplars = np.array([int(np.argmax(np.diag(a) + np.diag(r)))])
        converged = False
    return exemplars.astype(np.int64), it, converged


def mean_shift_run(
    x: np.ndarray, bandwidth: float, tol: float, max_iter: int
) -> np.ndarray:
    """Run Gaussian-kernel mean shift from every point; return fixpoints."""
    y = x.copy()
    n = x.shape[0]
    active = np.ones(n, dtype=bool)
    gamma = 1.0 / (2.0 * bandwidth * bandwidth)
    for _ in range(max_iter):
        if not active.any():
            break
        d2 = pairwise_sqdist(y[active], x)
        w = np.exp(-gamma * d2)
        norm = w.sum(axis=1)
        moved = (w @ x) / np.where(norm > 0.0, norm, 1.0)[:, None]
        keep = norm <= 0.0
        if keep.any():
            moved[keep] = y[active][keep]
        shift2 = ((moved - y[active]) ** 2).sum(axis=1)
        y[active] = moved
        act_idx = np.nonzero(active)[0]
        active[act_idx[shift2 <= tol * tol]] = False
    return y
