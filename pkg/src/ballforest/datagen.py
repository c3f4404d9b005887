"""Seeded synthetic fixtures: Gaussian blobs and query draws.

The clusters sit at regular offsets along the first axis, so ``separation``
directly controls how far apart adjacent cluster centers are.
"""
from __future__ import annotations

import numpy as np

from .core import ConfigError, Dataset


def cluster_centers(n_clusters: int, dim: int, separation: float) -> np.ndarray:
    centers = np.zeros((n_clusters, dim))
    centers[:, 0] = np.arange(n_clusters) * separation
    return centers


def gaussian_blobs(
    size: int,
    dim: int,
    n_clusters: int,
    spread: float = 1.0,
    separation: float = 50.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """(coords, labels) for ``size`` points split near-evenly over the blobs."""
    if size < n_clusters or n_clusters < 1 or dim < 1:
        raise ConfigError(
            f"need size >= clusters >= 1 and dim >= 1, got size={size}, "
            f"clusters={n_clusters}, dim={dim}"
        )
    rng = np.random.default_rng(seed)
    centers = cluster_centers(n_clusters, dim, separation)
    counts = [size // n_clusters] * n_clusters
    for i in range(size % n_clusters):
        counts[i] += 1
    coords = []
    labels = []
    for label, (center, count) in enumerate(zip(centers, counts)):
        coords.append(center + spread * rng.standard_normal((count, dim)))
        labels.extend([label] * count)
    return np.vstack(coords), np.array(labels)


def query_draws(
    num_queries: int,
    dim: int,
    n_clusters: int,
    spread: float = 1.0,
    separation: float = 50.0,
    seed: int = 0,
) -> np.ndarray:
    """Fresh in-cluster query points: round-robin over the same blob centers."""
    rng = np.random.default_rng(seed)
    centers = cluster_centers(n_clusters, dim, separation)
    picks = np.arange(num_queries) % n_clusters
    return centers[picks] + spread * rng.standard_normal((num_queries, dim))


def blob_dataset(size: int, dim: int, n_clusters: int, **kwargs) -> Dataset:
    coords, _ = gaussian_blobs(size, dim, n_clusters, **kwargs)
    return Dataset(coords)


def write_csv(path: str, matrix: np.ndarray, header: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
