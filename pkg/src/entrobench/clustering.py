"""Entropy-driven clustering of pixel features.

Samples are pixel intensity vectors scaled to [0, 1].  Cluster quality
is the cross-information-potential CEF of Gokcay and Principe: for the
Gaussian kernel G(u) = exp(-|u|^2 / (4 sigma^2)),

    CEF = sum_{c < c'} (1 / (n_c n_c')) sum_{x in c, y in c'} G(x - y)

which is 0 for infinitely separated clusters and grows as clusters
overlap, so lower is better.  ``cluster`` descends CEF by single-sample
reassignment from a quantile initialization along the first principal
axis; the entropy kind never changes the ranking, it only selects the
flavor of the reported score (Tsallis q=2 reports the separation sum
of (1 - potential) per pair).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from .entropy import EntropyKind
from .raster import as_gray

__all__ = [
    "FeatureSet",
    "ClusterAssignment",
    "extract_features",
    "silverman_sigma",
    "information_potential",
    "renyi_quadratic_entropy",
    "cef",
    "cluster",
    "assignment_to_labelmap",
]

_MAX_K = 8
_MAX_PASSES = 50
_MOVE_TOL = 1e-12
_SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class FeatureSet:
    """Per-sample feature vectors with their source pixel coordinates."""

    features: np.ndarray  # (n, d), all components in [0, 1]
    coords: np.ndarray    # (n, 2) row, col provenance

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        c = np.asarray(self.coords, dtype=np.int64)
        if f.ndim != 2 or f.shape[0] < 2:
            raise ValueError("expected an (n, d) feature matrix with n >= 2")
        if f.min() < 0.0 or f.max() > 1.0:
            raise ValueError("feature components outside [0, 1]")
        if c.shape != (f.shape[0], 2):
            raise ValueError("coords must be (n, 2) pixel positions")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-sample cluster labels 0..k-1 with every cluster nonempty."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1 or lab.size == 0:
            raise ValueError("labels must be a nonempty 1-D array")
        if not 2 <= self.k <= _MAX_K:
            raise ValueError(f"k {self.k} outside [2, {_MAX_K}]")
        counts = np.bincount(lab, minlength=self.k)
        if lab.min() < 0 or lab.max() >= self.k:
            raise ValueError("labels outside [0, k)")
        if (counts == 0).any():
            raise ValueError(f"empty cluster {int(np.flatnonzero(counts == 0)[0])}")
        object.__setattr__(self, "labels", lab)


def extract_features(bands, stride: int = 1) -> FeatureSet:
    """Sample every stride-th pixel of co-registered bands.

    Features are intensities / 255 across bands, in row-major pixel
    order; the sample's (row, col) is kept for label-map rebuilding.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    imgs = [as_gray(b) for b in bands]
    if not imgs:
        raise ValueError("need at least one band")
    shape = imgs[0].shape
    for b in imgs[1:]:
        if b.shape != shape:
            raise ValueError(f"dimension mismatch {b.shape} vs {shape}")
    rows = np.arange(0, shape[0], stride)
    cols = np.arange(0, shape[1], stride)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    rr, cc = rr.ravel(), cc.ravel()
    feats = np.stack([b[rr, cc] for b in imgs], axis=1).astype(np.float64) / 255.0
    return FeatureSet(feats, np.stack([rr, cc], axis=1))


def silverman_sigma(xs: FeatureSet) -> float:
    """Default kernel width: 1.06 std n^(-1/5), averaged over dims."""
    f = xs.features
    width = 1.06 * f.std(axis=0).mean() * f.shape[0] ** (-0.2)
    return max(float(width), _SIGMA_FLOOR)


def _as_matrix(xs) -> np.ndarray:
    f = xs.features if isinstance(xs, FeatureSet) else np.asarray(xs, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2 or f.shape[0] == 0:
        raise ValueError("empty subset")
    return f


def information_potential(xs, sigma: float) -> float:
    """V(X) = (1/n^2) sum_ij exp(-|xi-xj|^2 / (4 sigma^2)), in (0, 1]."""
    f = _as_matrix(xs)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = f.shape[0]
    if n == 1:
        return 1.0
    g = np.exp(-pdist(f, "sqeuclidean") / (4.0 * sigma * sigma))
    return float((n + 2.0 * g.sum()) / (n * n))


def renyi_quadratic_entropy(xs, sigma: float) -> float:
    """Quadratic Renyi entropy of a sample set: -ln V(X)."""
    return -float(np.log(information_potential(xs, sigma)))


def _kernel_matrix(f: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-cdist(f, f, "sqeuclidean") / (4.0 * sigma * sigma))


def _pair_potentials(a: ClusterAssignment, xs: FeatureSet, sigma: float):
    """Upper-triangle cross potentials V[c, c'] and cluster sizes."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lab = a.labels
    if lab.size != xs.n:
        raise ValueError("assignment does not cover the feature set")
    counts = np.bincount(lab, minlength=a.k)
    K = _kernel_matrix(xs.features, sigma)
    M = np.zeros((xs.n, a.k))
    M[np.arange(xs.n), lab] = 1.0
    W = M.T @ K @ M
    V = W / np.outer(counts, counts)
    return V, counts


def cef(a: ClusterAssignment, xs: FeatureSet, sigma: float,
        kind: EntropyKind | None = None) -> float:
    """Cluster evaluation score for an assignment.

    The plain CEF (sum of pairwise cross potentials, lower better) for
    every kind except Tsallis, which reports the separation sum of
    (1 - potential) per cluster pair.  Ranking always uses plain CEF.
    """
    V, _ = _pair_potentials(a, xs, sigma)
    iu = np.triu_indices(a.k, 1)
    pairs = V[iu]
    if kind is not None and kind.name == "tsallis":
        return float((1.0 - pairs).sum())
    return float(pairs.sum())


def _principal_projection(f: np.ndarray) -> np.ndarray:
    """Projection onto the leading principal axis, sign-stabilized."""
    if f.shape[1] == 1:
        return f[:, 0].copy()
    centered = f - f.mean(axis=0)
    cov = centered.T @ centered
    vals, vecs = np.linalg.eigh(cov)
    v = vecs[:, -1]
    lead = int(np.argmax(np.abs(v)))
    if v[lead] < 0:
        v = -v
    return centered @ v


def _cef_from_state(W: np.ndarray, counts: np.ndarray) -> float:
    iu = np.triu_indices(counts.size, 1)
    return float((W / np.outer(counts, counts))[iu].sum())


def _descend(K: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, list[float]]:
    """Greedy single-sample CEF descent; returns labels and pass trace."""
    n = labels.size
    M = np.zeros((n, k))
    M[np.arange(n), labels] = 1.0
    S = K @ M                    # S[i, c] = sum of K[i, j] over j in c
    W = M.T @ S                  # within/between kernel mass per pair
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    trace = [_cef_from_state(W, counts)]
    for _ in range(_MAX_PASSES):
        moved = False
        for i in range(n):
            a = labels[i]
            if counts[a] <= 1:
                continue
            Si = S[i]
            invn = 1.0 / counts
            na1 = counts[a] - 1.0
            nb1 = counts + 1.0
            Wa = W[a]
            wi = W @ invn
            diag = W.diagonal()
            # pairs (a, c) after the move, summed over c outside {a, b}
            p = float(((Wa - Si) * invn).sum() - (Wa[a] - Si[a]) * invn[a])
            part_a = (p - (Wa - Si) * invn) / na1 \
                + (Wa - Si + Si[a] - 1.0) / (na1 * nb1)
            # pairs (b, c) after the move, c outside {a, b}
            q = wi + float(Si @ invn) \
                - (Wa + Si[a]) * invn[a] - (diag + Si) * invn
            part_b = q / nb1
            # same pairs before the move
            olda = float((Wa * invn).sum() - Wa[a] * invn[a]) * invn[a]
            oldb = (wi - Wa * invn[a] - diag * invn) * invn
            delta = part_a + part_b - olda - oldb
            delta[a] = np.inf
            b = int(np.argmin(delta))
            if delta[b] < -_MOVE_TOL:
                W[a, :] -= Si
                W[:, a] -= Si
                W[a, a] += 1.0
                sib = Si.copy()
                sib[a] -= 1.0
                W[b, :] += sib
                W[:, b] += sib
                W[b, b] += 1.0
                S[:, a] -= K[:, i]
                S[:, b] += K[:, i]
                counts[a] -= 1.0
                counts[b] += 1.0
                labels[i] = b
                moved = True
        trace.append(_cef_from_state(W, counts))
        if not moved:
            break
    return labels, trace


def cluster(xs: FeatureSet, k: int, sigma: float | None = None,
            kind: EntropyKind | None = None, seed: int = 0,
            restarts: int = 2, trace: dict | None = None
            ) -> tuple[ClusterAssignment, float]:
    """CEF-descent clustering into k groups.

    Each restart initializes by quantile split along the first
    principal feature axis (later restarts jitter the projection) and
    descends by single-sample reassignment until a pass makes no move
    or 50 passes elapse.  The best restart by plain CEF wins, ties to
    the lower restart index.  Deterministic for fixed inputs and seed.

    sigma defaults to silverman_sigma(xs).  When ``trace`` is a dict it
    receives the per-pass CEF list of each restart, keyed by index.
    """
    if not 2 <= k <= _MAX_K:
        raise ValueError(f"k {k} outside [2, {_MAX_K}]")
    if xs.n < 10 * k:
        raise ValueError(f"need at least {10 * k} samples for k={k}, have {xs.n}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if sigma is None:
        sigma = silverman_sigma(xs)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    f = xs.features
    proj = _principal_projection(f)
    K = _kernel_matrix(f, sigma)
    best_labels = None
    best_val = np.inf
    for r in range(restarts):
        p = proj
        if r > 0:
            rng = np.random.default_rng((seed, r))
            spread = proj.std()
            p = proj + rng.normal(0.0, 0.01 * (spread if spread > 0 else 1.0),
                                  proj.size)
        order = np.argsort(p, kind="stable")
        labels = np.empty(xs.n, dtype=np.int64)
        labels[order] = (np.arange(xs.n, dtype=np.int64) * k) // xs.n
        labels, run_trace = _descend(K, labels, k)
        if trace is not None:
            trace[r] = run_trace
        val = run_trace[-1]
        if val < best_val:
            best_val = val
            best_labels = labels.copy()
    assignment = ClusterAssignment(best_labels, k)
    return assignment, cef(assignment, xs, sigma, kind)


def assignment_to_labelmap(a: ClusterAssignment, xs: FeatureSet, dims) -> np.ndarray:
    """Paint cluster labels back onto an (h, w) raster.

    Sampled pixels take their own label; every other pixel takes the
    label of the nearest sampled pixel, ties to the smallest label.
    """
    h, w = int(dims[0]), int(dims[1])
    lab = np.asarray(a.labels)
    if lab.size != xs.n:
        raise ValueError("assignment does not cover the feature set")
    coords = xs.coords
    if coords[:, 0].max() >= h or coords[:, 1].max() >= w:
        raise ValueError(f"provenance outside a {h}x{w} raster")
    out = np.full((h, w), -1, dtype=np.int64)
    out[coords[:, 0], coords[:, 1]] = lab
    missing = np.argwhere(out < 0)
    if missing.size:
        tree = cKDTree(coords)
        kq = min(8, xs.n)
        dist, idx = tree.query(missing, k=kq)
        if kq == 1:
            dist, idx = dist[:, None], idx[:, None]
        near = dist <= dist[:, :1] + 1e-9
        cand = np.where(near, lab[idx], _MAX_K + 1)
        out[missing[:, 0], missing[:, 1]] = cand.min(axis=1)
    return out.astype(np.uint8)
