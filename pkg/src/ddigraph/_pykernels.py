"""Pure numpy kernels; reference semantics for the compiled ``_ckernels``."""

import numpy as np


def neighbor_sum(reps, neighbors):
    """``out[v] = reps[v] + sum(reps[u] for u in neighbors[v] if u >= 0)``."""
    out = reps.copy()
    for k in range(neighbors.shape[1]):
        idx = neighbors[:, k]
        live = idx >= 0
        if live.any():
            out[live] += reps[idx[live]]
    return out


def masked_rowmax(mat, row_mask, col_mask):
    """Row-wise max over live columns, for live rows only.

    Returns ``(values, argmax)``; dead rows get value 0.0 and argmax -1.
    Ties resolve to the first live column.
    """
    live_cols = col_mask > 0
    live_rows = row_mask > 0
    values = np.zeros(mat.shape[0])
    argmax = np.full(mat.shape[0], -1, dtype=np.int64)
    if not live_cols.any():
        return values, argmax
    cols = np.flatnonzero(live_cols)
    sub = mat[np.ix_(live_rows, cols)]
    if sub.size:
        best = np.argmax(sub, axis=1)
        values[live_rows] = sub[np.arange(sub.shape[0]), best]
        argmax[live_rows] = cols[best]
    return values, argmax
