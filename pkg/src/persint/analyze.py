"""Comparing collections of intensity grids: L1 distances, classical MDS,
normalized-cut spectral embedding, and k-means."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    CsvFormatError,
    DegenerateGraphError,
    IncompatibleGridsError,
    InvalidInputError,
    InvalidParameterError,
)
from .seeding import make_rng, pick_index


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative pairwise distances with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.entries, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidInputError(f"distance matrix must be square, got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise InvalidInputError("distance matrix entries must be finite")
        if not np.array_equal(d, d.T):
            raise InvalidInputError("distance matrix must be symmetric")
        if np.any(d < 0):
            raise InvalidInputError("distance matrix entries must be >= 0")
        if np.any(np.diag(d) != 0):
            raise InvalidInputError("distance matrix diagonal must be zero")
        object.__setattr__(self, "entries", d)

    @property
    def n(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class Embedding:
    """Low-dimensional coordinates for n items."""

    coords: np.ndarray
    method: str

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] < 1:
            raise InvalidInputError(f"embedding coords must be (n, k) with k >= 1, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("embedding coords must be finite")
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def k(self):
        return self.coords.shape[1]


@dataclass(frozen=True)
class ClusterAssignment:
    """k-means result: labels per item, centers, and total inertia."""

    labels: np.ndarray
    centers: np.ndarray
    inertia: float

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        centers = np.asarray(self.centers, dtype=np.float64)
        if labels.min(initial=0) < 0 or labels.max(initial=-1) >= centers.shape[0]:
            raise InvalidInputError("labels must reference existing centers")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "centers", centers)


def l1_distance(a, b):
    """Riemann-sum L1 distance between two intensity grids on the same spec."""
    if not a.compatible_with(b):
        raise IncompatibleGridsError("intensity grids differ in spec, tau, or weights")
    return float(np.abs(a.values - b.values).sum() * a.spec.cell_area)


def distance_matrix(grids):
    """Pairwise L1 distance matrix, each unordered pair computed once."""
    grids = list(grids)
    if len(grids) < 2:
        raise InvalidInputError("need at least 2 grids for a distance matrix")
    n = len(grids)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = l1_distance(grids[i], grids[j])
    return DistanceMatrix(entries=d)


def _fix_signs(coords):
    # Deterministic sign convention: the largest-magnitude coordinate of
    # each axis is made positive (first occurrence wins on ties).
    for c in range(coords.shape[1]):
        col = coords[:, c]
        idx = int(np.argmax(np.abs(col)))
        if col[idx] < 0:
            coords[:, c] = -col
    return coords


def classical_mds(d, k):
    """Classical multidimensional scaling of a distance matrix.

    Double-centers the squared distances, eigendecomposes, and returns the
    top-k eigenvectors scaled by sqrt(max(eigenvalue, 0)), eigenvalues
    sorted descending, with the deterministic sign convention.
    """
    if not isinstance(d, DistanceMatrix):
        d = DistanceMatrix(entries=d)
    n = d.n
    if not 1 <= k < n:
        raise InvalidParameterError(f"need 1 <= k < n, got k={k}, n={n}")
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (d.entries**2) @ j
    evals, evecs = np.linalg.eigh(b)
    idx = np.argsort(evals)[::-1][:k]
    scale = np.sqrt(np.maximum(evals[idx], 0.0))
    coords = _fix_signs(evecs[:, idx] * scale[None, :])
    return Embedding(coords=coords, method="mds")


def similarity_from_distance(d, scale):
    """Similarity matrix S_ij = exp(-D_ij / scale); unit diagonal."""
    if not scale > 0:
        raise InvalidParameterError(f"scale must be > 0, got {scale}")
    if not isinstance(d, DistanceMatrix):
        d = DistanceMatrix(entries=d)
    return np.exp(-d.entries / scale)


def spectral_embed(s, k, rescale_degree=False, row_normalize=False, skip_trivial=False):
    """Eigenvectors of the k smallest eigenvalues of the normalized Laplacian.

    Forms L_sym = I - D^-1/2 S D^-1/2 and embeds items by its bottom-k
    eigenvectors (including the trivial constant one unless
    ``skip_trivial``). ``rescale_degree`` applies the D^-1/2 row rescaling;
    ``row_normalize`` scales each embedded row to unit norm. Both default
    off.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidInputError(f"similarity matrix must be square, got {s.shape}")
    if not np.array_equal(s, s.T):
        raise InvalidInputError("similarity matrix must be symmetric")
    if np.any(s < 0) or np.any(s > 1):
        raise InvalidInputError("similarity entries must lie in [0, 1]")
    n = s.shape[0]
    take = k + 1 if skip_trivial else k
    if not 1 <= take <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    deg = s.sum(axis=1)
    if np.any(deg <= 0):
        raise DegenerateGraphError("similarity graph has a zero-degree node")
    dinv = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - dinv[:, None] * s * dinv[None, :]
    evals, evecs = np.linalg.eigh(lap)
    coords = evecs[:, (1 if skip_trivial else 0) : take].copy()
    if rescale_degree:
        coords *= dinv[:, None]
    if row_normalize:
        norms = np.linalg.norm(coords, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        coords = coords / norms
    return Embedding(coords=_fix_signs(coords), method="spectral")


def laplacian_eigenvalues(s):
    """Eigenvalues of L_sym, ascending; exposed for diagnostics and tests."""
    deg = np.asarray(s, dtype=np.float64).sum(axis=1)
    if np.any(deg <= 0):
        raise DegenerateGraphError("similarity graph has a zero-degree node")
    dinv = 1.0 / np.sqrt(deg)
    lap = np.eye(s.shape[0]) - dinv[:, None] * s * dinv[None, :]
    return np.linalg.eigvalsh(lap)


def _greedy_centers(x, k, first):
    centers = [first]
    d2 = ((x - x[first]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(d2))  # ties resolve to the lowest index
        centers.append(nxt)
        d2 = np.minimum(d2, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[centers].copy()


def _lloyd(x, centers, max_iter):
    labels = None
    prev_inertia = np.inf
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # ties resolve to the lowest center
        inertia = float(d2[np.arange(x.shape[0]), new_labels].sum())
        assert inertia <= prev_inertia + 1e-9, "k-means inertia increased"
        prev_inertia = inertia
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(centers.shape[0]):
            mask = labels == c
            if mask.any():
                centers[c] = x[mask].mean(axis=0)
            # empty cluster: keep the previous center
    return labels, centers, prev_inertia


def kmeans(embedding, k, seed, restarts=10, max_iter=300):
    """Seeded k-means: greedy farthest-point init, Lloyd iterations, best of
    ``restarts`` runs by inertia."""
    x = embedding.coords if isinstance(embedding, Embedding) else np.asarray(embedding, float)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = make_rng(seed)
    best = None
    for _ in range(restarts):
        first = pick_index(rng, n)
        centers = _greedy_centers(x, k, first)
        labels, centers, inertia = _lloyd(x, centers, max_iter)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    return ClusterAssignment(labels=labels, centers=centers, inertia=inertia)


def confusion_matrix(true_labels, assigned_labels, n_classes=None, n_clusters=None):
    """Count table: entry (i, j) = items with true label i assigned cluster j."""
    t = np.asarray(true_labels, dtype=np.int64)
    a = np.asarray(assigned_labels, dtype=np.int64)
    if t.shape != a.shape:
        raise InvalidInputError(f"label length mismatch: {t.shape} vs {a.shape}")
    if n_classes is None:
        n_classes = int(t.max(initial=-1)) + 1
    if n_clusters is None:
        n_clusters = int(a.max(initial=-1)) + 1
    table = np.zeros((n_classes, n_clusters), dtype=np.int64)
    for ti, ai in zip(t.tolist(), a.tolist()):
        table[ti, ai] += 1
    return table


def write_matrix(matrix, path):
    """Plain CSV rows of a numeric matrix at full precision."""
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        for row in np.atleast_2d(m):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_matrix(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvFormatError(path, lineno, f"bad float: {exc}") from None
    if not rows:
        raise CsvFormatError(path, 1, "empty matrix file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CsvFormatError(path, 1, f"ragged rows: widths {sorted(widths)}")
    return np.array(rows)


def write_embedding(embedding, path, labels=None):
    """Embedding CSV: id,c1,...,ck, optionally with a trailing label column."""
    coords = embedding.coords
    with open(path, "w", newline="") as fh:
        cols = ",".join(f"c{i + 1}" for i in range(coords.shape[1]))
        fh.write(f"id,{cols}" + (",label\n" if labels is not None else "\n"))
        for i, row in enumerate(coords):
            line = f"{i}," + ",".join(repr(float(v)) for v in row)
            if labels is not None:
                line += f",{labels[i]}"
            fh.write(line + "\n")
