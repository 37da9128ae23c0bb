"""Spatiotemporal candidate pairing.

A crash B is a candidate secondary to an earlier crash A when both sit on
the same route and B follows A within a distance/time window. Windows are
chosen by B's roadway class: congestion propagates farther and persists
longer on access-controlled roads. Opposite-direction pairs are included
by default because rubbernecking induces secondaries across the median.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .corpus import CrashRecord, Direction, RoadwayClass

EARTH_RADIUS_MILES = 3958.8

_OPPOSITES = {
    (Direction.N, Direction.S),
    (Direction.S, Direction.N),
    (Direction.E, Direction.W),
    (Direction.W, Direction.E),
}


class DirectionRelation(str, Enum):
    SAME = "Same"
    OPPOSITE = "Opposite"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class RoadwayThresholds:
    max_distance_mi: float
    max_gap_min: float

    def __post_init__(self) -> None:
        if not (self.max_distance_mi > 0 and math.isfinite(self.max_distance_mi)):
            raise ValueError("max_distance_mi must be positive")
        if not (self.max_gap_min > 0 and math.isfinite(self.max_gap_min)):
            raise ValueError("max_gap_min must be positive")


@dataclass(frozen=True)
class ThresholdConfig:
    access_controlled: RoadwayThresholds = RoadwayThresholds(2.0, 100.0)
    other_roads: RoadwayThresholds = RoadwayThresholds(0.5, 40.0)
    include_opposite_direction: bool = True

    def for_class(self, roadway_class: RoadwayClass) -> RoadwayThresholds:
        if roadway_class is RoadwayClass.ACCESS_CONTROLLED:
            return self.access_controlled
        return self.other_roads

    @property
    def max_gap_min(self) -> float:
        return max(self.access_controlled.max_gap_min, self.other_roads.max_gap_min)


@dataclass(frozen=True)
class CandidatePair:
    primary_id: str
    secondary_id: str
    distance_mi: float
    gap_min: float
    direction_relation: DirectionRelation

    def __post_init__(self) -> None:
        if self.gap_min <= 0:
            raise ValueError("gap_min must be strictly positive")
        if self.distance_mi < 0:
            raise ValueError("distance_mi must be nonnegative")


def great_circle_miles(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Haversine distance in miles."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_MILES * math.asin(math.sqrt(a))


def distance_between(a: CrashRecord, b: CrashRecord) -> float:
    """Milepoint difference when both records carry one, else great-circle.

    Raises ValueError when neither measurement is possible.
    """
    if a.milepoint is not None and b.milepoint is not None:
        return abs(a.milepoint - b.milepoint)
    if a.has_latlon and b.has_latlon:
        return great_circle_miles(a.latitude, a.longitude, b.latitude, b.longitude)
    raise ValueError(
        f"no usable coordinates between {a.record_id!r} and {b.record_id!r}"
    )


def direction_relation(a: Direction, b: Direction) -> DirectionRelation:
    if a is Direction.UNKNOWN or b is Direction.UNKNOWN:
        return DirectionRelation.UNKNOWN
    if (a, b) in _OPPOSITES:
        return DirectionRelation.OPPOSITE
    return DirectionRelation.SAME


def gap_minutes(a: CrashRecord, b: CrashRecord) -> float:
    return (b.occurred_at - a.occurred_at).total_seconds() / 60.0


def _try_pair(
    a: CrashRecord, b: CrashRecord, config: ThresholdConfig
) -> CandidatePair | None:
    """Candidate pair (a primary, b secondary) or None. Same route assumed."""
    gap = gap_minutes(a, b)
    if gap <= 0:
        return None
    limits = config.for_class(b.roadway_class)
    if gap > limits.max_gap_min:
        return None
    try:
        dist = distance_between(a, b)
    except ValueError:
        return None
    if dist > limits.max_distance_mi:
        return None
    relation = direction_relation(a.direction, b.direction)
    if relation is DirectionRelation.OPPOSITE and not config.include_opposite_direction:
        return None
    return CandidatePair(
        primary_id=a.record_id,
        secondary_id=b.record_id,
        distance_mi=dist,
        gap_min=gap,
        direction_relation=relation,
    )


def pair_candidates(
    records: Iterable[CrashRecord], config: ThresholdConfig | None = None
) -> list[CandidatePair]:
    """All (primary, secondary) pairs passing the spatiotemporal windows.

    Unfilterable records are skipped. Output is sorted by
    (primary_id, secondary_id) and deterministic regardless of input order.
    """
    config = config or ThresholdConfig()
    by_route: dict[str, list[CrashRecord]] = {}
    for rec in records:
        if rec.filterable:
            by_route.setdefault(rec.route_id, []).append(rec)

    pairs: list[CandidatePair] = []
    max_gap = config.max_gap_min
    for group in by_route.values():
        group.sort(key=lambda r: (r.occurred_at, r.record_id))
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                if gap_minutes(a, b) > max_gap:
                    break
                pair = _try_pair(a, b, config)
                if pair is not None:
                    pairs.append(pair)
    pairs.sort(key=lambda p: (p.primary_id, p.secondary_id))
    return pairs


def partition_filterable(
    records: Iterable[CrashRecord],
) -> tuple[list[CrashRecord], list[CrashRecord]]:
    filterable: list[CrashRecord] = []
    unfilterable: list[CrashRecord] = []
    for rec in records:
        (filterable if rec.filterable else unfilterable).append(rec)
    return filterable, unfilterable


# ── CSV round trip for the CLI ──────────────────────────────────────────

PAIR_COLUMNS = ("primary_id", "secondary_id", "distance_mi", "gap_min", "direction_relation")


def write_pairs_csv(pairs: Sequence[CandidatePair], destination: str | Path | TextIO) -> None:
    if isinstance(destination, (str, Path)):
        stream: TextIO = Path(destination).open("w", encoding="utf-8", newline="")
        close = True
    else:
        stream, close = destination, False
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(PAIR_COLUMNS)
        for p in pairs:
            writer.writerow(
                [p.primary_id, p.secondary_id, repr(p.distance_mi), repr(p.gap_min), p.direction_relation.value]
            )
    finally:
        if close:
            stream.close()


def read_pairs_csv(source: str | Path | TextIO) -> list[CandidatePair]:
    if isinstance(source, (str, Path)):
        stream: TextIO = Path(source).open("r", encoding="utf-8", newline="")
        close = True
    else:
        stream, close = source, False
    try:
        reader = csv.DictReader(stream)
        pairs = [
            CandidatePair(
                primary_id=row["primary_id"],
                secondary_id=row["secondary_id"],
                distance_mi=float(row["distance_mi"]),
                gap_min=float(row["gap_min"]),
                direction_relation=DirectionRelation(row["direction_relation"]),
            )
            for row in reader
        ]
    finally:
        if close:
            stream.close()
    return pairs
