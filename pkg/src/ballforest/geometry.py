"""Closed-form hyperball intersection geometry and the three overlap-rate heuristics.

Two balls are classified into one of three regimes by comparing their center
distance against the radii (disjoint is tested first, then containment):

* disjoint      d >= r1 + r2        -> rate 0
* containment   d <= |r1 - r2|      -> rate 1
* partial       otherwise           -> method-specific rate

In the partial regime the intersection (lens) is the union of two
hyperspherical caps, one per ball, cut by the radical hyperplane. The cap of
ball i is parameterized by the polar angle

    theta_i = arccos((r_i^2 + d^2 - r_j^2) / (2 r_i d))

and has height h_i = r_i (1 - cos theta_i) and volume

    V_cap(i) = pi^((n-1)/2) r_i^n / Gamma((n+1)/2) * integral_0^theta_i sin^n t dt.

The volume-based rate divides the lens volume by the sum of the two ball
volumes; the distance-based rate divides h1 + h2 by d; the object-based rate
counts members lying inside both balls. Raw rates above 1 (possible for the
distance rate) are clamped for classification but reported unclamped.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import CostCounters, Dataset, DistanceFn, GeometryError, distance_to_many


@dataclass(frozen=True)
class Ball:
    """Closed ball: all points within ``radius`` of ``center``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise GeometryError(f"ball radius must be non-negative, got {self.radius}")

    @property
    def dimension(self) -> int:
        return self.center.shape[0]


class OverlapRegime(enum.Enum):
    DISJOINT = "disjoint"
    PARTIAL_OVERLAP = "partial_overlap"
    CONTAINMENT = "containment"


@dataclass
class OverlapReport:
    """Outcome of scoring one ball pair with one heuristic.

    ``rate`` is ``min(raw_rate, 1)``; ``aux`` carries method-specific detail
    (cap heights and volumes, lens volume, shared-object counts).
    """

    method: str
    regime: OverlapRegime
    rate: float
    raw_rate: float
    aux: dict[str, float] = field(default_factory=dict)


def gamma(x: float) -> float:
    """Gamma function for positive arguments."""
    if x <= 0:
        raise GeometryError(f"gamma requires a positive argument, got {x}")
    return math.gamma(x)


def ball_volume(b: Ball) -> float:
    """n-volume of a ball: pi^(n/2) / Gamma(n/2 + 1) * r^n."""
    n = b.dimension
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0) * b.radius**n


def sin_power_integral(n: int, phi: float) -> float:
    """integral_0^phi sin^n(t) dt via the reduction formula.

    I_n = (n-1)/n * I_{n-2} - cos(phi) sin^{n-1}(phi) / n, with I_0 = phi
    and I_1 = 1 - cos(phi).
    """
    if not 0.0 <= phi <= math.pi:
        raise GeometryError(f"phi must lie in [0, pi], got {phi}")
    if n < 1:
        raise GeometryError(f"sin power must be a positive integer, got {n}")
    c = math.cos(phi)
    s = math.sin(phi)
    if n % 2 == 0:
        m, cur = 0, phi
    else:
        m, cur = 1, 1.0 - c
    while m < n:
        m += 2
        cur = (m - 1) / m * cur - c * s ** (m - 1) / m
    return cur


def overlap_regime(r1: float, r2: float, dist: float) -> OverlapRegime:
    """Classify a ball pair; two coincident points count as containment."""
    if dist == 0.0 and r1 == 0.0 and r2 == 0.0:
        return OverlapRegime.CONTAINMENT
    if dist >= r1 + r2:
        return OverlapRegime.DISJOINT
    if dist <= abs(r1 - r2):
        return OverlapRegime.CONTAINMENT
    return OverlapRegime.PARTIAL_OVERLAP


def cap_geometry(b_i: Ball, b_j: Ball, dist: float) -> tuple[float, float]:
    """Polar angle and cap height of ``b_i``'s cap in a partially overlapping pair.

    The arccos argument is clamped to [-1, 1] against rounding; the height is
    computed from the same clamped ratio so the identity h1 + h2 = r1 + r2 - d
    holds to machine precision.
    """
    if overlap_regime(b_i.radius, b_j.radius, dist) is not OverlapRegime.PARTIAL_OVERLAP:
        raise GeometryError(
            f"cap geometry is defined only for partial overlap "
            f"(r_i={b_i.radius}, r_j={b_j.radius}, d={dist})"
        )
    r_i, r_j = b_i.radius, b_j.radius
    ratio = (r_i * r_i + dist * dist - r_j * r_j) / (2.0 * r_i * dist)
    ratio = min(1.0, max(-1.0, ratio))
    theta_i = math.acos(ratio)
    h_i = r_i * (1.0 - ratio)
    return theta_i, h_i


def cap_volume(b_i: Ball, theta_i: float) -> float:
    """Volume of the cap of ``b_i`` with polar angle ``theta_i``.

    theta_i = pi yields the full ball volume.
    """
    if not 0.0 <= theta_i <= math.pi:
        raise GeometryError(f"theta must lie in [0, pi], got {theta_i}")
    n = b_i.dimension
    coeff = math.pi ** ((n - 1) / 2.0) * b_i.radius**n / gamma((n + 1) / 2.0)
    return coeff * sin_power_integral(n, theta_i)


def _check_same_dimension(b1: Ball, b2: Ball) -> None:
    if b1.dimension != b2.dimension:
        raise GeometryError(
            f"balls must share a dimension: {b1.dimension} vs {b2.dimension}"
        )


def vbm_rate(b1: Ball, b2: Ball, dist: float) -> OverlapReport:
    """Volume-based overlap rate: lens volume over the sum of ball volumes."""
    _check_same_dimension(b1, b2)
    v1, v2 = ball_volume(b1), ball_volume(b2)
    regime = overlap_regime(b1.radius, b2.radius, dist)
    if regime is OverlapRegime.DISJOINT:
        return OverlapReport("vbm", regime, 0.0, 0.0, {"lens_volume": 0.0})
    if regime is OverlapRegime.CONTAINMENT:
        return OverlapReport("vbm", regime, 1.0, 1.0, {"lens_volume": min(v1, v2)})
    theta1, h1 = cap_geometry(b1, b2, dist)
    theta2, h2 = cap_geometry(b2, b1, dist)
    cap1 = cap_volume(b1, theta1)
    cap2 = cap_volume(b2, theta2)
    lens = cap1 + cap2
    raw = lens / (v1 + v2)
    return OverlapReport(
        "vbm",
        regime,
        min(raw, 1.0),
        raw,
        {
            "cap_volume_1": cap1,
            "cap_volume_2": cap2,
            "cap_height_1": h1,
            "cap_height_2": h2,
            "lens_volume": lens,
        },
    )


def dbm_rate(b1: Ball, b2: Ball, dist: float) -> OverlapReport:
    """Distance-based overlap rate: combined cap height over center distance."""
    _check_same_dimension(b1, b2)
    regime = overlap_regime(b1.radius, b2.radius, dist)
    if regime is OverlapRegime.DISJOINT:
        return OverlapReport("dbm", regime, 0.0, 0.0)
    if regime is OverlapRegime.CONTAINMENT:
        return OverlapReport("dbm", regime, 1.0, 1.0)
    _, h1 = cap_geometry(b1, b2, dist)
    _, h2 = cap_geometry(b2, b1, dist)
    raw = (h1 + h2) / dist
    return OverlapReport(
        "dbm",
        regime,
        min(raw, 1.0),
        raw,
        {"cap_height_1": h1, "cap_height_2": h2},
    )


def obm_rate(
    part1,
    part2,
    dist: float,
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> OverlapReport:
    """Object-based overlap rate: members inside both balls over total members.

    ``part1``/``part2`` are partitions carrying ``member_ids``, ``pivot`` and
    ``radius``. Member lists are assumed disjoint (they come from a density
    clustering that assigns each object exactly one cluster), so the union is
    a plain concatenation.
    """
    if not part1.member_ids and not part2.member_ids:
        raise GeometryError("object-based rate needs at least one member")
    regime = overlap_regime(part1.radius, part2.radius, dist)
    counters.add_comparisons(1 if regime is OverlapRegime.DISJOINT else 2)
    total = len(part1.member_ids) + len(part2.member_ids)
    if regime is OverlapRegime.DISJOINT:
        return OverlapReport("obm", regime, 0.0, 0.0, {"shared_count": 0.0, "member_total": float(total)})
    if regime is OverlapRegime.CONTAINMENT:
        return OverlapReport("obm", regime, 1.0, 1.0, {"member_total": float(total)})
    all_ids = list(part1.member_ids) + list(part2.member_ids)
    coords = ds.coords_of(all_ids)
    d1 = distance_to_many(part1.pivot, coords, fn, counters)
    d2 = distance_to_many(part2.pivot, coords, fn, counters)
    counters.add_comparisons(2 * len(all_ids))
    shared = int(np.count_nonzero((d1 <= part1.radius) & (d2 <= part2.radius)))
    raw = shared / total
    return OverlapReport(
        "obm",
        regime,
        min(raw, 1.0),
        raw,
        {"shared_count": float(shared), "member_total": float(total)},
    )


def overlap_region_members(
    member_ids,
    b_self: Ball,
    b_other: Ball,
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> list[int]:
    """Ids among ``member_ids`` lying inside both balls."""
    if not member_ids:
        return []
    coords = ds.coords_of(member_ids)
    d_self = distance_to_many(b_self.center, coords, fn, counters)
    d_other = distance_to_many(b_other.center, coords, fn, counters)
    counters.add_comparisons(2 * len(member_ids))
    mask = (d_self <= b_self.radius) & (d_other <= b_other.radius)
    return [oid for oid, keep in zip(member_ids, mask) if keep]
