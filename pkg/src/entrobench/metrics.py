"""Confusion-matrix agreement metrics for label maps.

Kappa and overall accuracy are computed in exact integer arithmetic
before the final division, so textbook cases come out exact.  Label
alignment exists because unsupervised cluster labels are arbitrary:
it permutes predicted labels to maximize diagonal mass, exhaustively
for up to 5 classes and greedily (guarded to never fall below the
unaligned diagonal) for 6 to 8.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

__all__ = ["confusion", "overall_accuracy", "kappa", "align_labels"]

_MAX_CLASSES = 8
_EXHAUSTIVE_LIMIT = 5


def _as_labels(a) -> np.ndarray:
    lab = np.asarray(a)
    if not np.issubdtype(lab.dtype, np.integer):
        raise ValueError(f"label map must be integer, got {lab.dtype}")
    if lab.size == 0:
        raise ValueError("empty label map")
    if lab.min() < 0:
        raise ValueError("negative labels")
    return lab


def confusion(pred, truth) -> np.ndarray:
    """Counts[i, j] = pixels with true class i predicted as j."""
    p = _as_labels(pred)
    t = _as_labels(truth)
    if p.shape != t.shape:
        raise ValueError(f"dimension mismatch {p.shape} vs {t.shape}")
    k = int(max(p.max(), t.max())) + 1
    flat = t.astype(np.int64).ravel() * k + p.astype(np.int64).ravel()
    return np.bincount(flat, minlength=k * k).reshape(k, k)


def _check_cm(cm) -> np.ndarray:
    m = np.asarray(cm)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError("confusion matrix must be square and nonempty")
    if not np.issubdtype(m.dtype, np.integer):
        raise ValueError("confusion matrix must hold integer counts")
    if (m < 0).any():
        raise ValueError("negative counts")
    if m.sum() <= 0:
        raise ValueError("empty confusion matrix")
    return m


def overall_accuracy(cm) -> float:
    """Fraction of agreeing pixels: trace / total."""
    m = _check_cm(cm)
    return int(np.trace(m)) / int(m.sum())


def kappa(cm) -> float:
    """Cohen's kappa: (p_o - p_e) / (1 - p_e).

    Evaluated as (N tr - sum_i r_i c_i) / (N^2 - sum_i r_i c_i) in
    exact integers; raises when expected agreement p_e = 1 (single
    class on both sides), where kappa is undefined.
    """
    m = _check_cm(cm)
    n = int(m.sum())
    tr = int(np.trace(m))
    rows = m.sum(axis=1)
    cols = m.sum(axis=0)
    se = int(rows.astype(object) @ cols.astype(object))
    if se == n * n:
        raise ValueError("kappa undefined: expected agreement is 1")
    return (n * tr - se) / (n * n - se)


def _greedy_permutation(cm: np.ndarray, k: int) -> list[int]:
    """Largest-entries-first matching; ties to the smallest (i, j)."""
    perm = [-1] * k
    free_rows = set(range(k))
    free_cols = set(range(k))
    while free_cols:
        best = None
        for i in sorted(free_rows):
            for j in sorted(free_cols):
                v = int(cm[i, j])
                if best is None or v > best[0]:
                    best = (v, i, j)
        _, i, j = best
        perm[j] = i
        free_rows.discard(i)
        free_cols.discard(j)
    return perm


def align_labels(pred, truth) -> np.ndarray:
    """Permute predicted labels to maximize agreement with truth.

    Exhaustive over permutations up to 5 classes (ties resolve to the
    lexicographically smallest permutation); greedy above, kept only if
    it beats the identity.  The aligned diagonal never falls below the
    unaligned one.
    """
    p = _as_labels(pred)
    t = _as_labels(truth)
    if p.shape != t.shape:
        raise ValueError(f"dimension mismatch {p.shape} vs {t.shape}")
    k = int(max(p.max(), t.max())) + 1
    if k > _MAX_CLASSES:
        raise ValueError(f"{k} classes exceed the supported {_MAX_CLASSES}")
    if k == 1:
        return p.copy()
    cm = confusion(p, t)
    cols = np.arange(k)
    if k <= _EXHAUSTIVE_LIMIT:
        best_perm, best_diag = None, -1
        for perm in permutations(range(k)):
            diag = int(cm[perm, cols].sum())
            if diag > best_diag:
                best_perm, best_diag = perm, diag
        perm = list(best_perm)
    else:
        perm = _greedy_permutation(cm, k)
        identity_diag = int(np.trace(cm))
        if int(cm[perm, cols].sum()) <= identity_diag:
            perm = list(range(k))
    mapping = np.asarray(perm, dtype=p.dtype)
    return mapping[p]
