"""Independent reference implementations used by tests, acceptance runs, and
the ``verify`` subcommand: linear-scan kNN, Monte Carlo lens volumes, and
textbook 2-D/3-D lens closed forms.

Nothing here shares formulas with the production geometry: the closed forms
below use the circular-segment and spherical-cap identities directly, and
the Monte Carlo estimator only needs point-in-ball tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, DataObject, Dataset, DistanceFn
from .geometry import Ball


@dataclass(frozen=True)
class OracleConfig:
    mc_samples: int = 1_000_000
    rng_seed: int = 0

    def __post_init__(self):
        if self.mc_samples < 10_000:
            raise ConfigError(
                f"mc_samples must be at least 10000 for a usable estimate, got {self.mc_samples}"
            )


def brute_knn(
    ds: Dataset,
    q: DataObject,
    k: int,
    fn: DistanceFn,
    member_ids: list[int] | None = None,
) -> list[tuple[int, float]]:
    """Ground-truth kNN by full linear scan, sorted by (distance, id).

    ``member_ids`` restricts the scan to a subset (e.g. one tree's objects).
    Returns everything when fewer than k objects exist.
    """
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    ids = list(range(len(ds))) if member_ids is None else list(member_ids)
    dists = fn.many(q.coords, ds.coords_of(ids))
    order = sorted(range(len(ids)), key=lambda i: (dists[i], ids[i]))
    return [(ids[i], float(dists[i])) for i in order[:k]]


def mc_lens_volume(b1: Ball, b2: Ball, cfg: OracleConfig) -> tuple[float, float]:
    """Monte Carlo intersection volume of two balls, with its standard error.

    Samples uniformly in the axis-aligned bounding box of the smaller ball
    (the intersection always lies inside the smaller ball) and counts points
    falling inside both. Seeded, hence bit-reproducible.
    """
    small = b1 if b1.radius <= b2.radius else b2
    n = small.dimension
    side = 2.0 * small.radius
    box_volume = side**n
    if box_volume == 0.0:
        return 0.0, 0.0
    rng = np.random.default_rng(cfg.rng_seed)
    lo = small.center - small.radius
    points = lo + rng.random((cfg.mc_samples, n)) * side
    in_1 = np.einsum("ij,ij->i", points - b1.center, points - b1.center) <= b1.radius**2
    in_2 = np.einsum("ij,ij->i", points - b2.center, points - b2.center) <= b2.radius**2
    inside = int(np.count_nonzero(in_1 & in_2))
    p = inside / cfg.mc_samples
    estimate = box_volume * p
    stderr = box_volume * math.sqrt(p * (1.0 - p) / cfg.mc_samples)
    return estimate, stderr


def _random_pair_at(rng: np.random.Generator, n: int, d: float, r1: float, r2: float):
    c1 = rng.uniform(-5.0, 5.0, size=n)
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    c2 = c1 + d * direction
    return Ball(c1, r1), Ball(c2, r2), d


def random_partial_pair(
    rng: np.random.Generator,
    n: int,
    min_frac: float = 0.15,
    max_frac: float = 0.85,
) -> tuple[Ball, Ball, float]:
    """A random partially overlapping pair with a non-degenerate lens.

    The center distance is placed a fraction of the way through the partial
    band (|r1 - r2|, r1 + r2); the default band keeps lenses thick enough for
    tight relative comparisons and usable Monte Carlo statistics.
    """
    r1 = 0.5 + 1.5 * rng.random()
    r2 = 0.5 + 1.5 * rng.random()
    lo, hi = abs(r1 - r2), r1 + r2
    d = lo + (min_frac + rng.random() * (max_frac - min_frac)) * (hi - lo)
    return _random_pair_at(rng, n, d, r1, r2)


def random_disjoint_pair(rng: np.random.Generator, n: int) -> tuple[Ball, Ball, float]:
    r1 = 0.5 + 1.5 * rng.random()
    r2 = 0.5 + 1.5 * rng.random()
    d = (r1 + r2) * (1.0 + rng.random())
    return _random_pair_at(rng, n, d, r1, r2)


def random_containment_pair(rng: np.random.Generator, n: int) -> tuple[Ball, Ball, float]:
    r1 = 2.0 + rng.random()
    r2 = 0.2 + 0.5 * rng.random()
    d = abs(r1 - r2) * rng.random()
    return _random_pair_at(rng, n, d, r1, r2)


def closed_form_lens_2d_3d(b1: Ball, b2: Ball, dist: float) -> float:
    """Exact two-ball intersection volume in 2-D (circular lens) or 3-D
    (spherical lens), for partially overlapping pairs.

    2-D uses the segment-area identity per circle,
        A_i = r_i^2 * acos((d^2 + r_i^2 - r_j^2) / (2 d r_i)) ,
    minus the kite area via Heron's formula; 3-D sums the two spherical caps
        pi h^2 (3r - h) / 3  with  h_i = (r_j - r_i + d)(r_j + r_i - d) / (2d).
    """
    n = b1.dimension
    if n != b2.dimension:
        raise ConfigError(f"balls must share a dimension: {n} vs {b2.dimension}")
    if n not in (2, 3):
        raise ConfigError(f"closed forms exist only for 2-D and 3-D, got {n}-D")
    r1, r2, d = b1.radius, b2.radius, dist
    if not abs(r1 - r2) < d < r1 + r2:
        raise ConfigError("closed forms require a partially overlapping pair")
    if n == 2:
        a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
        a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
        kite = 0.5 * math.sqrt(
            (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
        )
        return a1 + a2 - kite
    h1 = (r2 - r1 + d) * (r2 + r1 - d) / (2.0 * d)
    h2 = (r1 - r2 + d) * (r1 + r2 - d) / (2.0 * d)
    return (
        math.pi * h1 * h1 * (3.0 * r1 - h1) / 3.0
        + math.pi * h2 * h2 * (3.0 * r2 - h2) / 3.0
    )
