"""Deterministic synthetic corpus generation.

Desk-scale stand-in for real crash data: plausible narrative fragments,
coherent route/time/location geometry (so spatial pairing has real work
to do), a controllable positive rate, and full ground-truth labels. Every
draw comes from one seeded RNG, so a given (n, positive_fraction, seed)
always produces the same corpus, byte for byte, when exported.

Positives are generated as the second half of an actual crash pair: a
primary crash record is placed on the route, and the secondary follows it
inside the pairing thresholds with a narrative that states the causal
link. Negatives split between plain single-event narratives and harder
ones that carry crash vocabulary without describing a secondary crash.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from datetime import datetime, timedelta

from .corpus import CrashRecord, Direction, Label, LabelSource, RoadwayClass

_MILES_PER_DEG_LAT = 69.17


@dataclass(frozen=True)
class _Route:
    route_id: str
    roadway_class: RoadwayClass
    base_lat: float
    base_lon: float
    bearing_deg: float
    length_mi: float

    @property
    def axis(self) -> tuple[Direction, Direction]:
        northish = abs(math.cos(math.radians(self.bearing_deg))) >= 0.5
        return (Direction.N, Direction.S) if northish else (Direction.E, Direction.W)

    def point(self, milepoint: float) -> tuple[float, float]:
        rad = math.radians(self.bearing_deg)
        dlat = milepoint * math.cos(rad) / _MILES_PER_DEG_LAT
        dlon = milepoint * math.sin(rad) / (
            _MILES_PER_DEG_LAT * math.cos(math.radians(self.base_lat))
        )
        return (round(self.base_lat + dlat, 6), round(self.base_lon + dlon, 6))


_ROUTES = (
    _Route("I-64", RoadwayClass.ACCESS_CONTROLLED, 38.03, -84.90, 88.0, 45.0),
    _Route("I-75", RoadwayClass.ACCESS_CONTROLLED, 37.75, -84.30, 12.0, 50.0),
    _Route("I-264", RoadwayClass.ACCESS_CONTROLLED, 38.19, -85.80, 95.0, 22.0),
    _Route("US-60", RoadwayClass.OTHER, 38.00, -84.75, 80.0, 18.0),
    _Route("US-27", RoadwayClass.OTHER, 37.90, -84.57, 5.0, 16.0),
    _Route("KY-4", RoadwayClass.OTHER, 38.02, -84.52, 45.0, 14.0),
    _Route("KY-922", RoadwayClass.OTHER, 38.08, -84.53, 10.0, 9.0),
    _Route("US-421", RoadwayClass.OTHER, 37.80, -84.20, 30.0, 20.0),
)

_STREETS = (
    "main st",
    "oak ave",
    "maple dr",
    "walnut ln",
    "broadway",
    "mill rd",
    "church st",
    "depot st",
    "college ave",
    "park blvd",
)

_PLACES = (
    "the shopping center",
    "the gas station",
    "the county line",
    "the fairgrounds",
    "the high school",
    "the truck stop",
    "the rest area",
    "the industrial park",
)

_SIDES = ("left", "right")

_POSITIVE_TEMPLATES = (
    "traffic was stopped for an injury accident ahead when unit 1 failed to stop and rear ended unit 2",
    "unit 1 struck debris in the roadway from an earlier crash near {place}",
    "driver of unit 1 was distracted by emergency crews working a prior collision on the {side} shoulder and sideswiped unit 2",
    "unit 2 braked hard for the queue from a previous wreck and was struck from behind by unit 1",
    "traffic had slowed for a 10-46 ahead and unit 1 could not stop in time striking unit 2",
    "unit 1 swerved to avoid stopped traffic from an earlier accident and struck the guardrail",
    "vehicles were slowing for a prior incident ahead when unit 1 ran into the rear of unit 2",
)

_RUBBERNECK_TEMPLATE = (
    "operator slowed to look at a crash scene in the opposite lanes and rear ended the vehicle ahead"
)

_NEGATIVE_INDICATOR_TEMPLATES = (
    "two vehicle collision at the intersection of {street} and {street2}",
    "single unit wreck after the driver suffered a medical emergency near {place}",
    "unit 1 ran the red light at {street} causing a collision with unit 2",
    "officer responded to an injury accident involving a single vehicle at {place}",
    "driver reported a hit and run incident in the parking area of {place}",
    "unit 1 turned left on a green arrow and was involved in a crash with oncoming unit 2",
    "report # {num} documents a minor accident in the lot at {place}",
    "a construction truck dropped gravel on the roadway leading to a two car collision at {street}",
)

_NEGATIVE_PLAIN_TEMPLATES = (
    "vehicle struck a deer and came to rest in the median",
    "driver lost control on wet pavement and slid into the guardrail",
    "unit 1 backed into a parked vehicle on {street}",
    "driver fell asleep and ran off the roadway striking a fence near {place}",
    "unit 1 hydroplaned during heavy rain and overturned in the median",
    "vehicle blew a tire and veered onto the {side} shoulder striking a sign",
)

#: words a typo must never touch (classification signal or triage terms)
_PROTECTED_WORDS = frozenset(
    {
        "crash",
        "accident",
        "incident",
        "collision",
        "wreck",
        "10-46",
        "ahead",
        "earlier",
        "prior",
        "previous",
        "queue",
        "debris",
        "stopped",
        "slowed",
        "slowing",
        "emergency",
        "report",
    }
)


def _fill(template: str, rng: random.Random) -> str:
    street = rng.choice(_STREETS)
    street2 = rng.choice([s for s in _STREETS if s != street])
    return template.format(
        street=street,
        street2=street2,
        place=rng.choice(_PLACES),
        side=rng.choice(_SIDES),
        num=rng.randrange(10_000_000, 100_000_000),
    )


def _maybe_typo(text: str, rng: random.Random) -> str:
    if rng.random() >= 0.08:
        return text
    words = text.split(" ")
    candidates = [
        i
        for i, w in enumerate(words)
        if len(w) > 4 and w.isalpha() and w not in _PROTECTED_WORDS
    ]
    if not candidates:
        return text
    i = rng.choice(candidates)
    w = words[i]
    j = rng.randrange(1, len(w) - 2)
    words[i] = w[:j] + w[j + 1] + w[j] + w[j + 2 :]
    return " ".join(words)


def _random_minute(rng: random.Random, year: int) -> datetime:
    return datetime(
        year=year,
        month=rng.randrange(1, 13),
        day=rng.randrange(1, 29),
        hour=rng.randrange(0, 24),
        minute=rng.randrange(0, 60),
    )


_LOCATION_MODES = ("mp", "both", "latlon", "none")
_SINGLE_MODE_WEIGHTS = (0.55, 0.30, 0.12, 0.03)
_PAIR_MODE_WEIGHTS = (0.55, 0.33, 0.12)  # "none" never used for pair members


def _apply_location(
    route: _Route, milepoint: float, mode: str
) -> tuple[float | None, float | None, float | None]:
    lat, lon = route.point(milepoint)
    if mode == "mp":
        return (round(milepoint, 3), None, None)
    if mode == "both":
        return (round(milepoint, 3), lat, lon)
    if mode == "latlon":
        return (None, lat, lon)
    return (None, None, None)


@dataclass
class _Draft:
    occurred_at: datetime
    route: _Route
    milepoint: float
    mode: str
    direction: Direction
    narrative: str
    is_secondary: bool
    coded_secondary: bool


def _compatible_primary_mode(secondary_mode: str, rng: random.Random) -> str:
    """Pick a primary location mode measurable against the secondary's."""
    if secondary_mode == "latlon":
        return rng.choice(("latlon", "both"))
    return rng.choice(("mp", "both"))


def generate_synthetic_corpus(
    n: int, positive_fraction: float, seed: int
) -> tuple[list[CrashRecord], list[Label]]:
    """n labeled records with round(n * positive_fraction) positives.

    Records come back sorted by (occurred_at, record_id) with ids assigned
    chronologically; labels align one-to-one with the records.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= positive_fraction <= 0.5:
        raise ValueError("positive_fraction must lie in [0, 0.5]")
    positives = round(n * positive_fraction)
    if 2 * positives > n:
        raise ValueError("corpus too small to pair every positive with a primary")

    rng = random.Random(seed)
    drafts: list[_Draft] = []

    for _ in range(positives):
        route = rng.choice(_ROUTES)
        limits_gap = 100.0 if route.roadway_class is RoadwayClass.ACCESS_CONTROLLED else 40.0
        limits_dist = 2.0 if route.roadway_class is RoadwayClass.ACCESS_CONTROLLED else 0.5
        primary_at = _random_minute(rng, rng.randrange(2015, 2023))
        gap_min = rng.randrange(4, int(limits_gap * 0.8))
        mp_primary = rng.uniform(0.5, route.length_mi - 0.5)
        delta = rng.uniform(0.02, limits_dist * 0.8) * rng.choice((-1.0, 1.0))
        mp_secondary = min(max(mp_primary + delta, 0.0), route.length_mi)

        fwd, back = route.axis
        primary_dir = rng.choice((fwd, back))
        roll = rng.random()
        if roll < 0.80:
            secondary_dir = primary_dir
            opposite = False
        elif roll < 0.95:
            secondary_dir = back if primary_dir is fwd else fwd
            opposite = True
        else:
            secondary_dir = Direction.UNKNOWN
            opposite = False

        secondary_mode = rng.choices(("mp", "both", "latlon"), weights=_PAIR_MODE_WEIGHTS)[0]
        primary_mode = _compatible_primary_mode(secondary_mode, rng)

        primary_narrative = _maybe_typo(
            _fill(rng.choice(_NEGATIVE_INDICATOR_TEMPLATES), rng), rng
        )
        if opposite:
            secondary_narrative = _RUBBERNECK_TEMPLATE
        else:
            secondary_narrative = _fill(rng.choice(_POSITIVE_TEMPLATES), rng)
        secondary_narrative = _maybe_typo(secondary_narrative, rng)

        drafts.append(
            _Draft(
                occurred_at=primary_at,
                route=route,
                milepoint=mp_primary,
                mode=primary_mode,
                direction=primary_dir,
                narrative=primary_narrative,
                is_secondary=False,
                coded_secondary=rng.random() < 0.06,
            )
        )
        drafts.append(
            _Draft(
                occurred_at=primary_at + timedelta(minutes=gap_min),
                route=route,
                milepoint=mp_secondary,
                mode=secondary_mode,
                direction=secondary_dir,
                narrative=secondary_narrative,
                is_secondary=True,
                coded_secondary=rng.random() < 0.45,
            )
        )

    for _ in range(n - 2 * positives):
        route = rng.choice(_ROUTES)
        fwd, back = route.axis
        direction = rng.choice((fwd, back, Direction.UNKNOWN))
        if rng.random() < 0.45:
            narrative = _fill(rng.choice(_NEGATIVE_PLAIN_TEMPLATES), rng)
        else:
            narrative = _fill(rng.choice(_NEGATIVE_INDICATOR_TEMPLATES), rng)
        drafts.append(
            _Draft(
                occurred_at=_random_minute(rng, rng.randrange(2015, 2023)),
                route=route,
                milepoint=rng.uniform(0.0, route.length_mi),
                mode=rng.choices(_LOCATION_MODES, weights=_SINGLE_MODE_WEIGHTS)[0],
                direction=direction,
                narrative=_maybe_typo(narrative, rng),
                coded_secondary=rng.random() < 0.06,
                is_secondary=False,
            )
        )

    drafts.sort(key=lambda d: (d.occurred_at, d.route.route_id, d.narrative))
    records: list[CrashRecord] = []
    labels: list[Label] = []
    for i, draft in enumerate(drafts, start=1):
        record_id = f"SYN-{i:06d}"
        milepoint, lat, lon = _apply_location(draft.route, draft.milepoint, draft.mode)
        records.append(
            CrashRecord(
                record_id=record_id,
                occurred_at=draft.occurred_at,
                route_id=draft.route.route_id,
                milepoint=milepoint,
                latitude=lat,
                longitude=lon,
                roadway_class=draft.route.roadway_class,
                direction=draft.direction,
                coded_secondary=draft.coded_secondary,
                narrative=draft.narrative,
            )
        )
        labels.append(
            Label(
                record_id=record_id,
                is_secondary=draft.is_secondary,
                source=LabelSource.IMPORT,
                labeled_at=draft.occurred_at + timedelta(days=1),
            )
        )
    return records, labels


#: phrases a cue-based stub classifier can key on; every positive template
#: contains at least one, and every word in them is typo-protected
POSITIVE_CUES = (
    "accident ahead",
    "earlier crash",
    "prior collision",
    "previous wreck",
    "10-46 ahead",
    "earlier accident",
    "prior incident",
    "slowed to look at a crash",
)


def cue_classifier(narrative: str) -> tuple[str, float]:
    """Deterministic stand-in for a model: cue phrase → (answer, prob)."""
    lowered = narrative.lower()
    if any(cue in lowered for cue in POSITIVE_CUES):
        return ("YES", 0.93)
    return ("NO", 0.04)
