"""Batched Mamdani aggregation + defuzzification.

For every input row the consequent sets are clipped at the rule strengths
(min implication), merged by pointwise max and collapsed by all five
defuzzifiers at once.  Output columns follow ``METHODS``; rows where no rule
fired are NaN.

Two implementations with identical semantics: a numba loop that never
materialises the (rows x grid) aggregate, and a chunked numpy fallback used
when ``FUZZYCAUSAL_DISABLE_JIT`` is set.
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_JIT, njit

METHODS = ("centroid", "bisector", "mom", "som", "lom")
TIE_TOL = 1e-12


@njit
def _aggregate_defuzzify_loop(strength, cons_index, cons_mu, grid, tie_tol, out):
    n, r = strength.shape
    g = grid.shape[0]
    agg = np.empty(g)
    for i in range(n):
        for k in range(g):
            agg[k] = 0.0
        fired = False
        for j in range(r):
            w = strength[i, j]
            if w <= 0.0:
                continue
            fired = True
            row = cons_mu[cons_index[j]]
            for k in range(g):
                v = row[k]
                if v > w:
                    v = w
                if v > agg[k]:
                    agg[k] = v
        mx = 0.0
        for k in range(g):
            if agg[k] > mx:
                mx = agg[k]
        if not fired or mx <= 0.0:
            for m in range(5):
                out[i, m] = np.nan
            continue
        total = 0.0
        moment = 0.0
        for k in range(g):
            total += agg[k]
            moment += agg[k] * grid[k]
        out[i, 0] = moment / total
        half = 0.5 * total
        c = 0.0
        out[i, 1] = grid[g - 1]
        for k in range(g):
            c += agg[k]
            if c >= half:
                out[i, 1] = grid[k]
                break
        lo = -1
        hi = -1
        s = 0.0
        cnt = 0
        for k in range(g):
            if agg[k] >= mx - tie_tol:
                if lo < 0:
                    lo = k
                hi = k
                s += grid[k]
                cnt += 1
        out[i, 2] = s / cnt
        out[i, 3] = grid[lo]
        out[i, 4] = grid[hi]
    return out


def _aggregate_defuzzify_numpy(strength, cons_index, cons_mu, grid, tie_tol, out, chunk=512):
    n, r = strength.shape
    for s in range(0, n, chunk):
        w = strength[s:s + chunk]
        m = w.shape[0]
        agg = np.zeros((m, grid.shape[0]))
        for j in range(r):
            np.maximum(agg, np.minimum(w[:, j:j + 1], cons_mu[cons_index[j]][None, :]), out=agg)
        mx = agg.max(axis=1)
        fired = (w > 0).any(axis=1) & (mx > 0)
        cum = np.cumsum(agg, axis=1)
        total = cum[:, -1]
        safe = np.where(fired, total, 1.0)
        res = np.full((m, 5), np.nan)
        # sequential sums keep the numpy path in step with the compiled loop
        res[:, 0] = np.cumsum(agg * grid, axis=1)[:, -1] / safe
        res[:, 1] = grid[np.argmax(cum >= 0.5 * total[:, None], axis=1)]
        top = agg >= (mx - tie_tol)[:, None]
        res[:, 2] = (top * grid).sum(axis=1) / np.maximum(top.sum(axis=1), 1)
        res[:, 3] = grid[np.argmax(top, axis=1)]
        res[:, 4] = grid[grid.shape[0] - 1 - np.argmax(top[:, ::-1], axis=1)]
        res[~fired] = np.nan
        out[s:s + m] = res
    return out


def aggregate_defuzzify(strength, cons_index, cons_mu, grid, use_jit: bool | None = None) -> np.ndarray:
    """Defuzzified outputs, shape ``(rows, 5)`` in ``METHODS`` order.

    ``strength`` is ``(rows, rules)``, ``cons_index[j]`` picks rule j's row of
    ``cons_mu`` (``(labels, grid)``).
    """
    strength = np.ascontiguousarray(strength, dtype=np.float64)
    cons_index = np.ascontiguousarray(cons_index, dtype=np.int64)
    cons_mu = np.ascontiguousarray(cons_mu, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    out = np.empty((strength.shape[0], 5))
    jit = USE_JIT if use_jit is None else use_jit
    if jit:
        return _aggregate_defuzzify_loop(strength, cons_index, cons_mu, grid, TIE_TOL, out)
    return _aggregate_defuzzify_numpy(strength, cons_index, cons_mu, grid, TIE_TOL, out)


def aggregate(strength_row, cons_index, cons_mu) -> np.ndarray:
    """Aggregated membership of one input row on the output grid."""
    agg = np.zeros(cons_mu.shape[1])
    for w, k in zip(strength_row, cons_index):
        if w > 0:
            np.maximum(agg, np.minimum(w, cons_mu[k]), out=agg)
    return agg
