"""Inverted-file approximate nearest-neighbor index over sentence vectors.

Vectors are length-normalized at insert and query time, so cosine similarity
is a plain dot product.  The coarse quantizer is a seeded k-means with an
iteration cap; lists store the vectors uncompressed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

KMEANS_MAX_ITER = 25
INDEX_FORMAT_VERSION = 1


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms


@dataclass
class VecIndex:
    """Coarse centroids plus per-cluster (ids, unit vectors) lists."""

    centroids: np.ndarray            # (num_clusters, dim), unnormalized means
    list_ids: list[np.ndarray]       # per cluster, int64
    list_vecs: list[np.ndarray]      # per cluster, (m, dim) float32 unit rows
    dim: int

    @property
    def num_clusters(self) -> int:
        return len(self.list_ids)

    @property
    def count(self) -> int:
        return sum(len(ids) for ids in self.list_ids)


def _kmeans(x: np.ndarray, num_clusters: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Cosine k-means on unit rows; returns (centroids, labels)."""
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    centroids = x[rng.choice(n, size=num_clusters, replace=False)].copy()
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        sims = x @ _normalize_rows(centroids).T
        new_labels = np.argmax(sims, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(num_clusters):
            members = x[labels == c]
            if len(members) > 0:
                centroids[c] = members.mean(axis=0)
            else:
                # split the largest cluster: move its farthest member out
                counts = np.bincount(labels, minlength=num_clusters)
                largest = int(np.argmax(counts))
                idx = np.where(labels == largest)[0]
                member_sims = x[idx] @ centroids[largest] / max(
                    np.linalg.norm(centroids[largest]), 1e-12
                )
                farthest = idx[int(np.argmin(member_sims))]
                centroids[c] = x[farthest]
                labels[farthest] = c
    return centroids, labels


def build_index(
    vectors: Sequence[tuple[int, np.ndarray]],
    num_clusters: int,
    seed: int = 0,
) -> VecIndex:
    """Cluster the vectors into `num_clusters` inverted lists."""
    if num_clusters < 1:
        raise DataError("num_clusters must be >= 1")
    if len(vectors) < num_clusters:
        raise DataError(
            f"need at least as many vectors ({len(vectors)}) as clusters ({num_clusters})"
        )
    ids = np.asarray([v[0] for v in vectors], dtype=np.int64)
    x = np.asarray([v[1] for v in vectors], dtype=np.float32)
    if x.ndim != 2:
        raise DataError("vectors must share one dimensionality")
    x = _normalize_rows(x)
    centroids, labels = _kmeans(x, num_clusters, seed)
    list_ids = [ids[labels == c] for c in range(num_clusters)]
    list_vecs = [x[labels == c] for c in range(num_clusters)]
    return VecIndex(centroids=centroids, list_ids=list_ids, list_vecs=list_vecs, dim=x.shape[1])


def search(
    index: VecIndex,
    query: np.ndarray,
    k: int,
    nprobe: int,
) -> list[tuple[int, float]]:
    """Exact cosine top-k within the nprobe nearest clusters.

    Results are sorted by descending cosine, ties broken by ascending id.
    """
    if index.count == 0:
        raise DataError("search on an empty index")
    if k < 1:
        raise DataError("k must be >= 1")
    query = np.asarray(query, dtype=np.float32)
    if query.shape != (index.dim,):
        raise DataError(f"query dim {query.shape} does not match index dim {index.dim}")
    norm = np.linalg.norm(query)
    if norm > 0:
        query = query / norm
    nprobe = min(max(nprobe, 1), index.num_clusters)
    centroid_sims = _normalize_rows(index.centroids) @ query
    order = np.lexsort((np.arange(index.num_clusters), -centroid_sims))
    probe = order[:nprobe]

    cand_ids = np.concatenate([index.list_ids[c] for c in probe])
    cand_vecs = np.concatenate([index.list_vecs[c] for c in probe])
    if len(cand_ids) == 0:
        return []
    sims = cand_vecs @ query
    rank = np.lexsort((cand_ids, -sims))[:k]
    return [(int(cand_ids[i]), float(sims[i])) for i in rank]


def exact_search(
    vectors: Sequence[tuple[int, np.ndarray]],
    query: np.ndarray,
    k: int,
) -> list[tuple[int, float]]:
    """Brute-force cosine ranking; the testing oracle for `search`."""
    ids = np.asarray([v[0] for v in vectors], dtype=np.int64)
    x = _normalize_rows(np.asarray([v[1] for v in vectors], dtype=np.float32))
    query = np.asarray(query, dtype=np.float32)
    norm = np.linalg.norm(query)
    if norm > 0:
        query = query / norm
    sims = x @ query
    rank = np.lexsort((ids, -sims))[:k]
    return [(int(ids[i]), float(sims[i])) for i in rank]


# ---------------------------------------------------------------------------
# binary persistence
# ---------------------------------------------------------------------------


def save_index(index: VecIndex, path: str | Path) -> None:
    """Little-endian layout: header, centroid block, then per-list blocks."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<iiii", INDEX_FORMAT_VERSION, index.dim,
                             index.num_clusters, index.count))
        fh.write(index.centroids.astype("<f4").tobytes())
        for ids, vecs in zip(index.list_ids, index.list_vecs):
            fh.write(struct.pack("<i", len(ids)))
            fh.write(ids.astype("<i4").tobytes())
            fh.write(vecs.astype("<f4").tobytes())


def load_index(path: str | Path) -> VecIndex:
    data = Path(path).read_bytes()
    version, dim, num_clusters, count = struct.unpack_from("<iiii", data, 0)
    if version != INDEX_FORMAT_VERSION:
        raise DataError(f"unsupported index format version {version}")
    offset = 16
    centroids = np.frombuffer(data, dtype="<f4", count=num_clusters * dim, offset=offset)
    centroids = centroids.reshape(num_clusters, dim).copy()
    offset += num_clusters * dim * 4
    list_ids, list_vecs = [], []
    for _ in range(num_clusters):
        (m,) = struct.unpack_from("<i", data, offset)
        offset += 4
        ids = np.frombuffer(data, dtype="<i4", count=m, offset=offset).astype(np.int64)
        offset += m * 4
        vecs = np.frombuffer(data, dtype="<f4", count=m * dim, offset=offset)
        vecs = vecs.reshape(m, dim).copy()
        offset += m * dim * 4
        list_ids.append(ids)
        list_vecs.append(vecs)
    loaded = VecIndex(centroids=centroids, list_ids=list_ids, list_vecs=list_vecs, dim=dim)
    if loaded.count != count:
        raise DataError("index file is corrupt: count mismatch")
    return loaded
