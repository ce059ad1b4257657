"""Codebook training and vector quantization.

Two quantization rules are supported: plain nearest-centroid under squared
Euclidean distance, and argmax of cosine similarity after a linear projection
(the softmax temperature never changes the argmax, but it is carried so saved
codebooks round-trip). Ties always resolve to the lowest index so outputs are
deterministic.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from speechfill.dsp import EmbeddingSequence

EUCLIDEAN = "euclidean"
COSINE = "cosine"

_SICB_MAGIC = b"SICB"
_SICB_VERSION = 1


@dataclass
class Codebook:
    """K x D centroid matrix plus the rule used to quantize against it.

    For the cosine kind, ``projection`` maps input frames (row vectors) into
    the centroid space: projected = frames @ projection, so its shape is
    (input_dim, D).
    """

    centroids: np.ndarray
    kind: str = EUCLIDEAN
    projection: np.ndarray | None = None
    temperature: float = 0.1

    def __post_init__(self):
        centroids = np.asarray(self.centroids, dtype=np.float64)
        if centroids.ndim != 2 or centroids.shape[0] < 1:
            raise ValueError("centroids must be a non-empty K x D matrix")
        if not np.all(np.isfinite(centroids)):
            raise ValueError("centroids contain non-finite values")
        if self.kind not in (EUCLIDEAN, COSINE):
            raise ValueError(f"unknown codebook kind: {self.kind!r}")
        if self.kind == COSINE:
            if np.any(np.all(centroids == 0.0, axis=1)):
                raise ValueError("cosine codebook must not contain zero centroids")
            if self.projection is not None:
                projection = np.asarray(self.projection, dtype=np.float64)
                if projection.ndim != 2 or projection.shape[1] != centroids.shape[1]:
                    raise ValueError("projection must be (input_dim, D)")
                if not np.all(np.isfinite(projection)):
                    raise ValueError("projection contains non-finite values")
                self.projection = projection
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        self.centroids = centroids

    @property
    def size(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass
class UnitSequence:
    """Per-frame codebook indices with the frame geometry they came from."""

    indices: np.ndarray
    hop_samples: int
    win_samples: int
    sample_rate: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        if indices.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if indices.size and indices.min() < 0:
            raise ValueError("negative unit index")
        self.indices = indices

    def __len__(self) -> int:
        return self.indices.shape[0]


def _stack_frames(data) -> np.ndarray:
    """Accept one EmbeddingSequence, a list of them, or a raw (N, D) array."""
    if isinstance(data, EmbeddingSequence):
        return data.frames
    if isinstance(data, np.ndarray):
        if data.ndim != 2:
            raise ValueError("raw training data must be a 2-D array")
        return np.asarray(data, dtype=np.float64)
    parts = [seq.frames for seq in data]
    if not parts:
        raise ValueError("no training data")
    return np.vstack(parts)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    dist_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = dist_sq.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen centroid
            centroids[i] = points[int(rng.integers(n))]
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(dist_sq), r))
            idx = min(idx, n - 1)
            centroids[i] = points[idx]
        dist_sq = np.minimum(dist_sq, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Chunked direct differences: keeps float arithmetic identical to a naive
    # per-point scan, so argmin tie-breaking is reproducible.
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n)
    step = max(1, 2_000_000 // max(1, centroids.shape[0] * centroids.shape[1]))
    for s in range(0, n, step):
        block = points[s : s + step]
        d = np.sum((block[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels[s : s + step] = np.argmin(d, axis=1)
        dists[s : s + step] = d[np.arange(len(block)), labels[s : s + step]]
    return labels, dists


def train_kmeans(
    data,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-8,
    return_history: bool = False,
):
    """Lloyd's algorithm with k-means++ initialization.

    Deterministic given (data order, seed). Empty clusters are reseeded to the
    point currently farthest from its assigned centroid. Stops when the largest
    centroid shift drops below ``tol`` or after ``max_iters`` rounds. With
    ``return_history`` the per-iteration objective (sum of squared distances
    after each assignment) is returned alongside the codebook.
    """
    points = _stack_frames(data)
    if k < 1:
        raise ValueError("k must be >= 1")
    if points.shape[0] < k:
        raise ValueError(f"need at least {k} frames to fit {k} clusters, got {points.shape[0]}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(points, k, rng)
    history = []
    for _ in range(max_iters):
        labels, dists = _assign(points, centroids)
        history.append(float(dists.sum()))
        new_centroids = centroids.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                new_centroids[c] = points[members].mean(axis=0)
            else:
                new_centroids[c] = points[int(np.argmax(dists))]
        shift = float(np.max(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1))))
        centroids = new_centroids
        if shift < tol:
            break
    cb = Codebook(centroids, kind=EUCLIDEAN)
    if return_history:
        return cb, history
    return cb


def vq_nearest(z: EmbeddingSequence, cb: Codebook) -> UnitSequence:
    """Nearest centroid per frame under squared Euclidean distance."""
    if cb.kind != EUCLIDEAN:
        raise ValueError("vq_nearest requires a euclidean codebook")
    if z.dim != cb.dim:
        raise ValueError(f"frame dim {z.dim} does not match codebook dim {cb.dim}")
    if z.n_frames == 0:
        indices = np.empty(0, dtype=np.int64)
    else:
        indices, _ = _assign(z.frames, cb.centroids)
    return UnitSequence(indices, z.hop_samples, z.win_samples, z.sample_rate)


def vq_cosine(z: EmbeddingSequence, cb: Codebook) -> UnitSequence:
    """Argmax of cosine similarity between projected frames and centroids.

    A zero projected frame has no direction; it falls back to index 0 and the
    call emits one warning with the count of such frames.
    """
    if cb.kind != COSINE:
        raise ValueError("vq_cosine requires a cosine codebook")
    proj = cb.projection
    if proj is None:
        if z.dim != cb.dim:
            raise ValueError(f"frame dim {z.dim} does not match codebook dim {cb.dim}")
        projected = z.frames
    else:
        if z.dim != proj.shape[0]:
            raise ValueError(f"frame dim {z.dim} does not match projection input dim {proj.shape[0]}")
        projected = z.frames @ proj
    if z.n_frames == 0:
        return UnitSequence(np.empty(0, dtype=np.int64), z.hop_samples, z.win_samples, z.sample_rate)
    frame_norms = np.linalg.norm(projected, axis=1)
    centroid_norms = np.linalg.norm(cb.centroids, axis=1)
    zero_frames = frame_norms == 0.0
    if zero_frames.any():
        warnings.warn(f"vq_cosine: {int(zero_frames.sum())} zero-norm frames mapped to index 0")
    safe_norms = np.where(zero_frames, 1.0, frame_norms)
    sims = (projected @ cb.centroids.T) / (safe_norms[:, None] * centroid_norms[None, :])
    indices = np.argmax(sims, axis=1).astype(np.int64)
    indices[zero_frames] = 0
    return UnitSequence(indices, z.hop_samples, z.win_samples, z.sample_rate)


def lookup(units: UnitSequence, cb: Codebook) -> EmbeddingSequence:
    """Replace each index by its centroid; geometry is preserved."""
    if len(units) and units.indices.max() >= cb.size:
        raise IndexError(f"unit index {int(units.indices.max())} out of range for K={cb.size}")
    frames = cb.centroids[units.indices] if len(units) else np.empty((0, cb.dim))
    return EmbeddingSequence(frames, units.hop_samples, units.win_samples, units.sample_rate)


def save_codebook(cb: Codebook, path) -> None:
    """Binary codebook file: magic, version, kind, K, D, temperature, f32 rows.

    Little-endian throughout; the cosine kind appends the projection dims and
    data after the centroids.
    """
    kind_code = 0 if cb.kind == EUCLIDEAN else 1
    with open(path, "wb") as fh:
        fh.write(_SICB_MAGIC)
        fh.write(struct.pack("<IBII f", _SICB_VERSION, kind_code, cb.size, cb.dim, cb.temperature))
        fh.write(cb.centroids.astype("<f4").tobytes())
        if cb.kind == COSINE:
            proj = cb.projection if cb.projection is not None else np.eye(cb.dim)
            fh.write(struct.pack("<II", proj.shape[0], proj.shape[1]))
            fh.write(proj.astype("<f4").tobytes())


def load_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SICB_MAGIC:
            raise ValueError(f"bad codebook magic: {magic!r}")
        version, kind_code, k, d, tau = struct.unpack("<IBII f", fh.read(struct.calcsize("<IBII f")))
        if version != _SICB_VERSION:
            raise ValueError(f"unsupported codebook version {version}")
        if kind_code not in (0, 1):
            raise ValueError(f"unknown codebook kind code {kind_code}")
        centroids = np.frombuffer(fh.read(4 * k * d), dtype="<f4").reshape(k, d).astype(np.float64)
        if kind_code == 0:
            return Codebook(centroids, kind=EUCLIDEAN, temperature=tau)
        rows, cols = struct.unpack("<II", fh.read(8))
        proj = np.frombuffer(fh.read(4 * rows * cols), dtype="<f4").reshape(rows, cols).astype(np.float64)
        return Codebook(centroids, kind=COSINE, projection=proj, temperature=tau)
