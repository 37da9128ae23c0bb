"""Prompted LLM classification: templates, wire client, verdict parsing.

Prompt templates live as sectioned text files in ``prompts/`` and are
addressed by version; building a prompt is pure, so identical inputs give
byte-identical messages. The wire client speaks the common
chat-completions JSON shape (or a plain generate endpoint) with retries
and exponential backoff. ``parse_verdict`` accepts whatever bytes a model
emits and either produces a Verdict or a typed error that carries the raw
text into the audit trail; it must never raise anything else.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

import httpx

from .corpus import JournalWriter
from .errors import ModelError, TransportError, VerdictParseError

DEFAULT_PROMPT_VERSION = "v3"

_SECTION_NAMES = (
    "persona",
    "definition",
    "exclusions",
    "edge_case_rules",
    "ambiguity_rule",
    "output_schema_instruction",
)

_ANSWERS = ("YES", "NO")


@dataclass(frozen=True)
class PromptExample:
    """Optional in-context example (user narrative, assistant reply)."""

    narrative: str
    response: str


@dataclass(frozen=True)
class PromptTemplate:
    version: str
    persona: str
    definition: str
    exclusions: str
    edge_case_rules: str
    ambiguity_rule: str
    output_schema_instruction: str
    examples: tuple[PromptExample, ...] = ()

    def __post_init__(self) -> None:
        if not self.version.strip():
            raise ValueError("template version must be non-empty")
        for name in _SECTION_NAMES:
            if not getattr(self, name).strip():
                raise ValueError(f"template section {name!r} must be non-empty")

    def system_text(self) -> str:
        return "\n\n".join(getattr(self, name).strip() for name in _SECTION_NAMES)


_HEADER_RE = re.compile(r"^\[([a-z_]+)\]\s*$")


def parse_template_text(text: str, version: str) -> PromptTemplate:
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in text.splitlines():
        m = _HEADER_RE.match(line.strip())
        if m:
            name = m.group(1)
            if name not in _SECTION_NAMES:
                raise ValueError(f"unknown prompt section {name!r}")
            if name in sections:
                raise ValueError(f"duplicate prompt section {name!r}")
            current = sections.setdefault(name, [])
            continue
        if current is not None:
            current.append(line)
    missing = [name for name in _SECTION_NAMES if name not in sections]
    if missing:
        raise ValueError(f"prompt file missing sections: {missing}")
    parts = {name: "\n".join(lines).strip() for name, lines in sections.items()}
    return PromptTemplate(version=version, **parts)


def load_template_file(path: str | Path, version: str | None = None) -> PromptTemplate:
    p = Path(path)
    return parse_template_text(p.read_text(encoding="utf-8"), version or p.stem)


def prompt_registry() -> dict[str, PromptTemplate]:
    """All packaged prompt versions, keyed by version name."""
    registry: dict[str, PromptTemplate] = {}
    root = resources.files(__package__).joinpath("prompts")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".txt"):
            version = entry.name[: -len(".txt")]
            registry[version] = parse_template_text(
                entry.read_text(encoding="utf-8"), version
            )
    return registry


def get_template(version: str = DEFAULT_PROMPT_VERSION) -> PromptTemplate:
    registry = prompt_registry()
    if version not in registry:
        raise ValueError(
            f"unknown prompt version {version!r}; have {sorted(registry)}"
        )
    return registry[version]


def build_prompt(template: PromptTemplate, narrative: str) -> list[dict[str, str]]:
    """Chat message sequence: system rules, optional examples, the narrative.

    Pure: same template and narrative yield byte-identical messages. The
    narrative is passed through verbatim.
    """
    if not narrative.strip():
        raise ValueError("narrative must be non-empty")
    messages = [{"role": "system", "content": template.system_text()}]
    for ex in template.examples:
        messages.append({"role": "user", "content": ex.narrative})
        messages.append({"role": "assistant", "content": ex.response})
    messages.append({"role": "user", "content": narrative})
    return messages


# ── verdicts ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Verdict:
    backend_id: str
    record_id: str
    answer: str
    probability: float
    explanation: str
    latency_ms: int = 0
    prompt_version: str = ""
    raw_response: str = ""

    def __post_init__(self) -> None:
        if self.answer not in _ANSWERS:
            raise ValueError(f"answer must be YES or NO, got {self.answer!r}")
        if not (
            isinstance(self.probability, (int, float))
            and 0.0 <= self.probability <= 1.0
        ):
            raise ValueError(f"probability out of [0,1]: {self.probability!r}")
        if not self.explanation.strip():
            raise ValueError("explanation must be non-empty")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be nonnegative")

    @property
    def is_yes(self) -> bool:
        return self.answer == "YES"

    def to_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "record_id": self.record_id,
            "answer": self.answer,
            "probability": self.probability,
            "explanation": self.explanation,
            "latency_ms": self.latency_ms,
            "prompt_version": self.prompt_version,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Verdict":
        return cls(
            backend_id=d["backend_id"],
            record_id=d["record_id"],
            answer=d["answer"],
            probability=d["probability"],
            explanation=d["explanation"],
            latency_ms=d.get("latency_ms", 0),
            prompt_version=d.get("prompt_version", ""),
            raw_response=d.get("raw_response", ""),
        )


def serialize_verdict_fields(verdict: Verdict) -> str:
    """The three schema fields as canonical JSON (for round-trip checks)."""
    return json.dumps(
        {
            "answer": verdict.answer,
            "probability": verdict.probability,
            "explanation": verdict.explanation,
        },
        ensure_ascii=False,
    )


def _find_json_objects(text: str):
    """Yield substrings that are balanced {...} groups, string-aware."""
    i = 0
    n = len(text)
    while i < n:
        if text[i] != "{":
            i += 1
            continue
        depth = 0
        in_string = False
        escaped = False
        j = i
        end = -1
        while j < n:
            ch = text[j]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            else:
                if ch == '"':
                    in_string = True
                elif ch == "{":
                    depth += 1
                elif ch == "}":
                    depth -= 1
                    if depth == 0:
                        end = j
                        break
            j += 1
        if end == -1:
            # unbalanced to the end of text; later opens cannot close either
            # unless this open was inside a string, so keep scanning
            i += 1
            continue
        yield text[i : end + 1]
        i += 1


def normalize_answer(raw: object) -> str | None:
    if not isinstance(raw, str):
        return None
    answer = raw.strip().upper()
    return answer if answer in _ANSWERS else None


def normalize_probability(raw: object) -> float | None:
    if isinstance(raw, bool):
        return None
    if isinstance(raw, (int, float)):
        value = float(raw)
    elif isinstance(raw, str):
        try:
            value = float(raw.strip())
        except ValueError:
            return None
    else:
        return None
    if math.isfinite(value) and 0.0 <= value <= 1.0:
        return value
    return None


def parse_verdict(
    raw: str | bytes,
    backend_id: str,
    record_id: str,
    prompt_version: str = "",
    latency_ms: int = 0,
) -> Verdict:
    """Extract the first balanced JSON object and validate the schema.

    Models may prepend reasoning text; anything before (or after) the
    object is tolerated. Raises VerdictParseError (and nothing else) on
    any input it cannot use, carrying the raw text.
    """
    if isinstance(raw, bytes):
        text = raw.decode("utf-8", errors="replace")
    else:
        text = str(raw)

    obj: dict | None = None
    for candidate in _find_json_objects(text):
        try:
            parsed = json.loads(candidate)
        except (json.JSONDecodeError, RecursionError, ValueError):
            continue
        if isinstance(parsed, dict):
            obj = parsed
            break
    if obj is None:
        raise VerdictParseError(
            "no JSON object found in response", kind="no_json", raw=text
        )

    missing = [k for k in ("answer", "probability", "explanation") if k not in obj]
    if missing:
        raise VerdictParseError(
            f"response object missing fields: {missing}", kind="missing_field", raw=text
        )

    answer = normalize_answer(obj["answer"])
    if answer is None:
        raise VerdictParseError(
            f"answer is not YES/NO: {obj['answer']!r}", kind="bad_answer", raw=text
        )

    probability = normalize_probability(obj["probability"])
    if probability is None:
        raise VerdictParseError(
            f"probability is not a number in [0,1]: {obj['probability']!r}",
            kind="bad_probability",
            raw=text,
        )

    explanation = obj["explanation"]
    if not isinstance(explanation, str) or not explanation.strip():
        raise VerdictParseError(
            "explanation is empty or not a string", kind="bad_explanation", raw=text
        )

    return Verdict(
        backend_id=backend_id,
        record_id=record_id,
        answer=answer,
        probability=probability,
        explanation=explanation.strip(),
        latency_ms=latency_ms,
        prompt_version=prompt_version,
        raw_response=text,
    )


# ── wire client ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LLMEndpointConfig:
    endpoint_url: str
    model_name: str
    api_style: str = "chat"  # "chat" or "generate"
    timeout_s: float = 60.0
    max_retries: int = 2
    backoff_base_s: float = 0.5
    temperature: float = 0.0
    max_tokens: int = 300

    def __post_init__(self) -> None:
        if self.api_style not in ("chat", "generate"):
            raise ValueError(f"unknown api_style {self.api_style!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")


def _request_payload(config: LLMEndpointConfig, messages: Sequence[Mapping]) -> dict:
    if config.api_style == "chat":
        return {
            "model": config.model_name,
            "messages": list(messages),
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        }
    prompt = "\n\n".join(m["content"] for m in messages)
    return {
        "model": config.model_name,
        "prompt": prompt,
        "stream": False,
        "options": {"temperature": config.temperature, "num_predict": config.max_tokens},
    }


def _extract_text(config: LLMEndpointConfig, data: Mapping) -> str:
    try:
        if config.api_style == "chat":
            return data["choices"][0]["message"]["content"]
        return data["response"]
    except (KeyError, IndexError, TypeError):
        raise ModelError(
            f"response envelope missing generated text ({config.api_style} style)"
        ) from None


def post_with_retries(
    url: str,
    payload: Mapping,
    timeout_s: float,
    max_retries: int,
    backoff_base_s: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[dict, int]:
    """POST JSON, retrying transport failures and non-2xx statuses with
    exponential backoff. Returns (parsed body, latency_ms of the
    successful attempt); raises TransportError once retries are exhausted
    and ModelError when a 2xx body is not JSON."""
    attempts = max_retries + 1
    last_error = ""
    for attempt in range(attempts):
        if attempt:
            sleep(backoff_base_s * (2 ** (attempt - 1)))
        started = time.perf_counter()
        try:
            response = httpx.post(url, json=payload, timeout=timeout_s)
        except httpx.HTTPError as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            continue
        latency_ms = int((time.perf_counter() - started) * 1000)
        if response.status_code // 100 != 2:
            last_error = f"HTTP {response.status_code}"
            continue
        try:
            data = response.json()
        except (json.JSONDecodeError, ValueError):
            raise ModelError("response body is not JSON") from None
        if not isinstance(data, dict):
            raise ModelError("response body is not a JSON object")
        return data, latency_ms
    raise TransportError(
        f"{url} failed after {attempts} attempts ({last_error})", attempts=attempts
    )


def classify_remote(
    config: LLMEndpointConfig,
    messages: Sequence[Mapping],
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[str, int]:
    """POST the prompt; return (generated text, latency_ms of the
    successful attempt)."""
    payload = _request_payload(config, messages)
    data, latency_ms = post_with_retries(
        config.endpoint_url,
        payload,
        timeout_s=config.timeout_s,
        max_retries=config.max_retries,
        backoff_base_s=config.backoff_base_s,
        sleep=sleep,
    )
    return _extract_text(config, data), latency_ms


class AuditLog:
    """JSON-lines trail of raw model responses and parse outcomes."""

    def __init__(self, path: str | Path):
        self._writer = JournalWriter(path)

    def write(
        self,
        record_id: str,
        backend_id: str,
        prompt_version: str,
        raw_response: str,
        outcome: str,
        latency_ms: int,
    ) -> None:
        self._writer.append(
            {
                "record_id": record_id,
                "backend_id": backend_id,
                "prompt_version": prompt_version,
                "raw_response": raw_response,
                "outcome": outcome,
                "latency_ms": latency_ms,
            }
        )

    def close(self) -> None:
        self._writer.close()
