"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` exactly and are used when the compiled
extension is unavailable (or forced via ``ELLWISHART_PURE_PYTHON=1``).
"""
import numpy as np


def perm_sum_apply(perms, weights, x):
    """out[l, i, r] = sum_t weights[t] * x[l, perms[t, i], r]."""
    out = np.zeros_like(x)
    for t in range(perms.shape[0]):
        out += weights[t] * x[:, perms[t], :]
    return out


def ks_sup_distance(xs, ys):
    """Two-sample KS statistic for already sorted 1-D float arrays."""
    pooled = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, pooled, side="right") / xs.shape[0]
    fy = np.searchsorted(ys, pooled, side="right") / ys.shape[0]
    return float(np.max(np.abs(fx - fy)))


def kron_power_sums(samples, rows, cols, chunk=4096):
    """Entrywise sum and sum of squares of vec(S x ... x S) over a batch.

    ``rows[t, j]`` / ``cols[t, j]`` give the row/column of factor ``t`` that
    contributes to entry ``j`` of the vectorized Kronecker power.
    """
    total = np.zeros(rows.shape[1])
    total_sq = np.zeros(rows.shape[1])
    for start in range(0, samples.shape[0], chunk):
        block = samples[start:start + chunk]
        vals = block[:, rows[0], cols[0]]
        for t in range(1, rows.shape[0]):
            vals = vals * block[:, rows[t], cols[t]]
        total += vals.sum(axis=0)
        total_sq += (vals * vals).sum(axis=0)
    return total, total_sq
