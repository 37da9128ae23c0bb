"""Quality control for crash data: finding secondary crashes in narratives.

The pipeline narrows a corpus in stages. Spatiotemporal pairing proposes
primary/secondary candidates, keyword triage drops narratives with no
crash-related language, classifier backends vote on the rest, and an
ensemble policy either auto-decides or flags the record for a human
review queue. Evaluation utilities score any backend against labels and
validate the bundled benchmark matrices.
"""

from .corpus import (
    ColumnMapping,
    CrashRecord,
    Direction,
    IngestResult,
    Label,
    LabelSource,
    LabelStore,
    RoadwayClass,
    export,
    ingest,
    split_by_year,
)
from .ensemble import (
    EnsembleDecision,
    EnsemblePolicy,
    Outcome,
    PolicyMode,
    ReviewQueue,
    ReviewStatus,
    aggregate,
)
from .errors import (
    BackendError,
    ConfigError,
    CrashQCError,
    IngestError,
    ModelError,
    TransportError,
    VerdictParseError,
)
from .indicators import IndicatorRuleSet, filter_pairs, passes_indicator
from .llm import Verdict, build_prompt, get_template, parse_verdict
from .pairing import CandidatePair, ThresholdConfig, pair_candidates
from .textfeat import Vocabulary, build_vocabulary, vectorize

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "CandidatePair",
    "ColumnMapping",
    "ConfigError",
    "CrashQCError",
    "CrashRecord",
    "Direction",
    "EnsembleDecision",
    "EnsemblePolicy",
    "IndicatorRuleSet",
    "IngestError",
    "IngestResult",
    "Label",
    "LabelSource",
    "LabelStore",
    "ModelError",
    "Outcome",
    "PolicyMode",
    "ReviewQueue",
    "ReviewStatus",
    "RoadwayClass",
    "ThresholdConfig",
    "TransportError",
    "Verdict",
    "VerdictParseError",
    "Vocabulary",
    "aggregate",
    "build_prompt",
    "build_vocabulary",
    "export",
    "filter_pairs",
    "get_template",
    "ingest",
    "pair_candidates",
    "parse_verdict",
    "passes_indicator",
    "split_by_year",
    "vectorize",
]
