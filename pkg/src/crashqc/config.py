"""Pipeline configuration: one YAML file wiring every stage together.

Schema (all sections optional; defaults shown):

.. code-block:: yaml

    workspace: ./workspace          # journals, models, queue state
    thresholds:
      access_controlled: {max_distance_mi: 2.0, max_gap_min: 100.0}
      other:             {max_distance_mi: 0.5, max_gap_min: 40.0}
      include_opposite_direction: true
    indicators:
      literal_terms: [crash, accident, incident, collision, wreck]
      code_pattern: ...             # regex, see indicators module
      reference_pattern: ...
    backends:
      - kind: native
        id: tfidf-logreg
        model_path: model.json      # relative paths resolve against workspace
        vocab_path: model.vocab.json
      - kind: llm
        id: llama3-70b
        url: http://localhost:11434/api/chat
        model: llama3:70b
        prompt_version: v3
        api_style: chat             # or generate
        timeout_s: 120.0
        max_retries: 3
        temperature: 0.0
      - kind: remote
        id: bert-base
        url: http://localhost:9090/classify
        timeout_s: 30.0
        max_retries: 3
    policy:
      mode: primary_with_verifiers  # majority | unanimous
      primary_backend: llama3-70b   # required for primary_with_verifiers
      quorum: 2                     # majority only; defaults to >half the panel
    batch:
      size: 500
    service:
      host: 127.0.0.1
      port: 8000
      auth_token: ""                # CRASHQC_AUTH_TOKEN overrides

The auth token can live in the environment instead of on disk; the
``CRASHQC_AUTH_TOKEN`` variable always wins when set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backends import (
    ClassifierBackend,
    NativeLogRegBackend,
    PromptLLMBackend,
    RemoteClassifierBackend,
    RemoteEndpointConfig,
)
from .ensemble import EnsemblePolicy, PolicyMode
from .errors import ConfigError
from .indicators import IndicatorRuleSet
from .llm import DEFAULT_PROMPT_VERSION, LLMEndpointConfig, get_template
from .logreg import load_model
from .pairing import RoadwayThresholds, ThresholdConfig
from .textfeat import Vocabulary

AUTH_TOKEN_ENV = "CRASHQC_AUTH_TOKEN"


@dataclass(frozen=True)
class BackendSpec:
    """One backend entry, validated but not yet constructed."""

    kind: str
    backend_id: str
    options: dict

    _KINDS = ("native", "llm", "remote")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ConfigError(
                f"backend {self.backend_id!r}: unknown kind {self.kind!r} "
                f"(expected one of {', '.join(self._KINDS)})"
            )
        if not self.backend_id:
            raise ConfigError("backend entries need a non-empty id")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    auth_token: str = ""

    def resolved_token(self) -> str:
        return os.environ.get(AUTH_TOKEN_ENV) or self.auth_token


@dataclass(frozen=True)
class PipelineConfig:
    workspace: Path = Path("./workspace")
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    indicators: IndicatorRuleSet = field(default_factory=IndicatorRuleSet)
    backend_specs: tuple[BackendSpec, ...] = ()
    policy: EnsemblePolicy = field(
        default_factory=lambda: EnsemblePolicy(mode=PolicyMode.MAJORITY, quorum=1)
    )
    batch_size: int | None = None
    service: ServiceConfig = field(default_factory=ServiceConfig)

    # workspace file layout; fixed names keep runs discoverable
    @property
    def batch_state_path(self) -> Path:
        return self.workspace / "batch_state.jsonl"

    @property
    def decision_log_path(self) -> Path:
        return self.workspace / "decisions.jsonl"

    @property
    def queue_journal_path(self) -> Path:
        return self.workspace / "review_queue.jsonl"

    @property
    def label_store_path(self) -> Path:
        return self.workspace / "labels.jsonl"

    @property
    def lock_path(self) -> Path:
        return self.workspace / "batch.lock"

    def resolve(self, p: str | Path) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.workspace / p


def _thresholds_from_dict(d: dict) -> ThresholdConfig:
    defaults = ThresholdConfig()

    def _side(key: str, dflt: RoadwayThresholds) -> RoadwayThresholds:
        sub = d.get(key) or {}
        return RoadwayThresholds(
            max_distance_mi=float(sub.get("max_distance_mi", dflt.max_distance_mi)),
            max_gap_min=float(sub.get("max_gap_min", dflt.max_gap_min)),
        )

    return ThresholdConfig(
        access_controlled=_side("access_controlled", defaults.access_controlled),
        other_roads=_side("other", defaults.other_roads),
        include_opposite_direction=bool(
            d.get("include_opposite_direction", defaults.include_opposite_direction)
        ),
    )


_MODE_ALIASES = {
    "primarywithverifiers": PolicyMode.PRIMARY_WITH_VERIFIERS,
    "majority": PolicyMode.MAJORITY,
    "unanimous": PolicyMode.UNANIMOUS,
}


def _policy_from_dict(d: dict, panel_size: int) -> EnsemblePolicy:
    raw_mode = str(d.get("mode", "majority"))
    mode = _MODE_ALIASES.get(raw_mode.strip().lower().replace("-", "").replace("_", ""))
    if mode is None:
        valid = ", ".join(m.value for m in PolicyMode)
        raise ConfigError(f"unknown policy mode {raw_mode!r} (expected one of {valid})")
    quorum = d.get("quorum")
    if mode is PolicyMode.MAJORITY and quorum is None:
        quorum = max(1, panel_size // 2 + 1)
    try:
        return EnsemblePolicy(
            mode=mode,
            primary_backend_id=d.get("primary_backend"),
            quorum=int(quorum) if quorum is not None else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _backend_specs(entries: list) -> tuple[BackendSpec, ...]:
    specs = []
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"backends[{i}] must be a mapping")
        options = dict(entry)
        kind = str(options.pop("kind", "")).strip().lower()
        backend_id = str(options.pop("id", "")).strip()
        spec = BackendSpec(kind=kind, backend_id=backend_id, options=options)
        if spec.backend_id in seen:
            raise ConfigError(f"duplicate backend id {spec.backend_id!r}")
        seen.add(spec.backend_id)
        specs.append(spec)
    return tuple(specs)


def config_from_dict(raw: dict, base_dir: Path | None = None) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    workspace = Path(raw.get("workspace", "./workspace"))
    if base_dir is not None and not workspace.is_absolute():
        workspace = base_dir / workspace
    indicators = (
        IndicatorRuleSet.from_dict(raw["indicators"]) if raw.get("indicators") else IndicatorRuleSet()
    )
    batch = raw.get("batch") or {}
    size = batch.get("size")
    service_raw = raw.get("service") or {}
    specs = _backend_specs(raw.get("backends") or [])
    return PipelineConfig(
        workspace=workspace,
        thresholds=_thresholds_from_dict(raw.get("thresholds") or {}),
        indicators=indicators,
        backend_specs=specs,
        policy=_policy_from_dict(raw.get("policy") or {}, panel_size=len(specs)),
        batch_size=int(size) if size is not None else None,
        service=ServiceConfig(
            host=str(service_raw.get("host", "127.0.0.1")),
            port=int(service_raw.get("port", 8000)),
            auth_token=str(service_raw.get("auth_token", "")),
        ),
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from None
    return config_from_dict(raw or {}, base_dir=path.resolve().parent)


def _build_one(spec: BackendSpec, config: PipelineConfig) -> ClassifierBackend:
    opts = spec.options
    if spec.kind == "native":
        model_path = opts.get("model_path")
        vocab_path = opts.get("vocab_path")
        if not model_path or not vocab_path:
            raise ConfigError(
                f"backend {spec.backend_id!r}: native kind needs model_path and vocab_path"
            )
        vocab = Vocabulary.load(config.resolve(vocab_path))
        model = load_model(config.resolve(model_path), vocab)
        return NativeLogRegBackend(backend_id=spec.backend_id, model=model)
    if spec.kind == "llm":
        url = opts.get("url")
        model = opts.get("model")
        if not url or not model:
            raise ConfigError(f"backend {spec.backend_id!r}: llm kind needs url and model")
        version = str(opts.get("prompt_version", DEFAULT_PROMPT_VERSION))
        endpoint = LLMEndpointConfig(
            endpoint_url=str(url),
            model_name=str(model),
            api_style=str(opts.get("api_style", "chat")),
            timeout_s=float(opts.get("timeout_s", 120.0)),
            max_retries=int(opts.get("max_retries", 3)),
            temperature=float(opts.get("temperature", 0.0)),
        )
        return PromptLLMBackend(
            backend_id=spec.backend_id,
            endpoint=endpoint,
            template=get_template(version),
        )
    url = opts.get("url")
    if not url:
        raise ConfigError(f"backend {spec.backend_id!r}: remote kind needs url")
    return RemoteClassifierBackend(
        backend_id=spec.backend_id,
        endpoint=RemoteEndpointConfig(
            endpoint_url=str(url),
            timeout_s=float(opts.get("timeout_s", 30.0)),
            max_retries=int(opts.get("max_retries", 3)),
        ),
    )


def build_backends(config: PipelineConfig) -> list[ClassifierBackend]:
    """Construct every configured backend; fails fast on any bad entry."""
    if not config.backend_specs:
        raise ConfigError("no backends configured")
    return [_build_one(spec, config) for spec in config.backend_specs]


def prompt_version_of(config: PipelineConfig) -> str:
    """Roster prompt version: that of the first LLM backend, else empty."""
    for spec in config.backend_specs:
        if spec.kind == "llm":
            return str(spec.options.get("prompt_version", DEFAULT_PROMPT_VERSION))
    return ""
