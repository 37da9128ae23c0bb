"""Keyword indicator triage.

Candidate pairs survive only when the would-be secondary's narrative shows
some textual trace of another crash: a crash-related word, a radio code in
the 10-46..10-49 range, or a reference to another case number. This stage
is deliberately cheap and recall-oriented; the classifiers downstream do
the precise work.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .corpus import CrashRecord
from .errors import UnknownRecordError
from .pairing import CandidatePair

DEFAULT_LITERAL_TERMS = ("crash", "accident", "incident", "collision", "wreck")

#: Radio codes for injury/property-damage crashes; tolerate spaced hyphens.
DEFAULT_CODE_PATTERN = r"(?<!\d)10\s*-\s*4[6-9](?!\d)"

#: A long digit run or an explicit case/report reference.
DEFAULT_REFERENCE_PATTERN = r"(?<!\d)\d{8,}(?!\d)|(?:case|report)\s*#\s*\d+"


@dataclass(frozen=True)
class IndicatorRuleSet:
    literal_terms: tuple[str, ...] = DEFAULT_LITERAL_TERMS
    code_pattern: str = DEFAULT_CODE_PATTERN
    reference_pattern: str = DEFAULT_REFERENCE_PATTERN

    def __post_init__(self) -> None:
        if not self.literal_terms:
            raise ValueError("literal_terms must be non-empty")
        for term in self.literal_terms:
            if not term or not term.strip():
                raise ValueError("literal terms must be non-empty")
        re.compile(self.code_pattern)
        re.compile(self.reference_pattern)

    @cached_property
    def _combined(self) -> re.Pattern[str]:
        words = "|".join(re.escape(t) for t in self.literal_terms)
        return re.compile(
            rf"\b(?:{words})\b|{self.code_pattern}|{self.reference_pattern}",
            re.IGNORECASE,
        )

    @classmethod
    def from_dict(cls, d: Mapping) -> "IndicatorRuleSet":
        kwargs = {}
        if "literal_terms" in d:
            kwargs["literal_terms"] = tuple(d["literal_terms"])
        if "code_pattern" in d:
            kwargs["code_pattern"] = d["code_pattern"]
        if "reference_pattern" in d:
            kwargs["reference_pattern"] = d["reference_pattern"]
        return cls(**kwargs)


def passes_indicator(
    narrative: str, rules: IndicatorRuleSet | None = None
) -> tuple[bool, list[str]]:
    """Whether the narrative carries any indicator, plus the matches.

    Matches are returned verbatim as they appear in the text, in order of
    first occurrence, deduplicated case-insensitively for audit display.
    """
    rules = rules or IndicatorRuleSet()
    matched: list[str] = []
    seen: set[str] = set()
    for m in rules._combined.finditer(narrative):
        text = m.group(0)
        key = text.lower()
        if key not in seen:
            seen.add(key)
            matched.append(text)
    return (bool(matched), matched)


@dataclass
class FilterReport:
    total: int = 0
    kept: int = 0
    removed: int = 0
    removed_ids: list[str] = field(default_factory=list)

    @property
    def removal_fraction(self) -> float:
        return self.removed / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "removed": self.removed,
            "removal_fraction": self.removal_fraction,
            "removed_ids": self.removed_ids,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        return (
            f"pairs in: {self.total}  kept: {self.kept}  removed: {self.removed}  "
            f"removal fraction: {self.removal_fraction:.2f}"
        )


def filter_pairs(
    pairs: Sequence[CandidatePair],
    corpus: Mapping[str, CrashRecord] | Iterable[CrashRecord],
    rules: IndicatorRuleSet | None = None,
) -> tuple[list[CandidatePair], FilterReport]:
    """Keep each pair iff its candidate secondary's narrative passes.

    Only the secondary's narrative is consulted: the primary happened
    first, so its report cannot reference the pair's later crash.
    """
    rules = rules or IndicatorRuleSet()
    if not isinstance(corpus, Mapping):
        corpus = {rec.record_id: rec for rec in corpus}
    report = FilterReport(total=len(pairs))
    kept: list[CandidatePair] = []
    verdict_cache: dict[str, bool] = {}
    removed_seen: set[str] = set()
    for pair in pairs:
        record = corpus.get(pair.secondary_id)
        if record is None:
            raise UnknownRecordError(
                f"pair references unknown record_id {pair.secondary_id!r}"
            )
        ok = verdict_cache.get(pair.secondary_id)
        if ok is None:
            ok, _ = passes_indicator(record.narrative, rules)
            verdict_cache[pair.secondary_id] = ok
        if ok:
            kept.append(pair)
            report.kept += 1
        else:
            report.removed += 1
            if pair.secondary_id not in removed_seen:
                removed_seen.add(pair.secondary_id)
                report.removed_ids.append(pair.secondary_id)
    return kept, report
