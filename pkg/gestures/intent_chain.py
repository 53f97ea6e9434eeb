"""Intent chain orchestration.

A run labels a text through the chat backend in stages: the chain-of-thought
labeling request, a keyword request, then optional self-reflection rounds.
Action relevance (marker position and moderation) is checked locally and
moderation is always enforced on the final result. Semantic relevance is
judged by the model during reflection and recorded in the reports.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Any

from django.conf import settings

from .annotation import (
    AnnotatedText,
    parse_inline,
    render_inline,
    sentence_of,
    split_sentences,
)
from .backends import BackendCapabilities, ChatBackend, ChatRequest, ChatResponse
from .ethogram import Ethogram
from .exceptions import AnnotationError, ChainError, EmptyText, Unparseable
from .prompts import (
    CHECK_NAMES,
    CharacterProfile,
    Prompt,
    build_cot_prompt,
    build_keyword_prompt,
    build_reflection_prompt,
    retry_messages,
)

logger = logging.getLogger(__name__)

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_REVISED = re.compile(r"^\s*REVISED\s*:[ \t]*", re.IGNORECASE | re.MULTILINE)
_MARKER_LINE = re.compile(r"\(\s*id\s*:", re.IGNORECASE)
_VERDICT = re.compile(
    r"^\s*[-*]?\s*(?P<name>context_match|keyword_match|emotion_consistency)\s*[:=]\s*"
    r"(?P<status>pass|fail|unknown)\b[ \t]*(?:[-\u2013\u2014:][ \t]*)?(?P<rationale>.*)$",
    re.IGNORECASE | re.MULTILINE,
)
_BULLET = re.compile(r"^(?:[-*•]|\d+[.)])\s*")
_QUOTES = "\"'“”‘’`"


@dataclass(frozen=True)
class ChainConfig:
    max_reflection_rounds: int = 3
    max_labels_per_sentence: int = 2
    backend_timeout: float = 60.0
    temperature: float = 0.0
    max_parse_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_reflection_rounds < 0:
            raise ValueError("max_reflection_rounds must be >= 0")
        if self.max_labels_per_sentence < 1:
            raise ValueError("max_labels_per_sentence must be >= 1")
        if self.max_parse_retries < 0:
            raise ValueError("max_parse_retries must be >= 0")

    @classmethod
    def from_settings(cls, **overrides: Any) -> ChainConfig:
        values: dict[str, Any] = {
            "max_reflection_rounds": settings.SARGES_REFLECT,
            "max_labels_per_sentence": settings.SARGES_MAX_PER_SENTENCE,
            "backend_timeout": settings.SARGES_TIMEOUT,
            "temperature": settings.SARGES_TEMPERATURE,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class KeywordSpan:
    text: str
    start_char: int
    end_char: int


class CheckStatus(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SemanticCheck:
    status: CheckStatus = CheckStatus.UNKNOWN
    rationale: str = ""


@dataclass(frozen=True)
class SemanticChecks:
    context_match: SemanticCheck = SemanticCheck()
    keyword_match: SemanticCheck = SemanticCheck()
    emotion_consistency: SemanticCheck = SemanticCheck()

    @property
    def any_failed(self) -> bool:
        return any(getattr(self, name).status is CheckStatus.FAIL for name in CHECK_NAMES)


@dataclass(frozen=True)
class ActionChecks:
    positional_consistency: bool
    moderation: bool

    @property
    def passed(self) -> bool:
        return self.positional_consistency and self.moderation


@dataclass(frozen=True)
class ReflectionReport:
    """Assessment of one round. Round 1 is the initial labeling pass."""

    round: int
    semantic_checks: SemanticChecks
    action_checks: ActionChecks
    accepted: bool
    reflected: bool

    def __post_init__(self) -> None:
        if self.accepted and not self.action_checks.passed:
            raise ValueError("a round cannot be accepted while an action check fails")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for name in CHECK_NAMES:
            data["semantic_checks"][name]["status"] = getattr(self.semantic_checks, name).status.value
        return data


@dataclass(frozen=True)
class TokenUsage:
    request_count: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latencies: tuple[float, ...] = ()

    @property
    def total_seconds(self) -> float:
        return sum(self.latencies)

    def add(self, response: ChatResponse) -> TokenUsage:
        return TokenUsage(
            request_count=self.request_count + 1,
            prompt_tokens=self.prompt_tokens + response.prompt_tokens,
            completion_tokens=self.completion_tokens + response.completion_tokens,
            latencies=(*self.latencies, max(response.latency_seconds, 0.0)),
        )

    def __add__(self, other: TokenUsage) -> TokenUsage:
        return TokenUsage(
            request_count=self.request_count + other.request_count,
            prompt_tokens=self.prompt_tokens + other.prompt_tokens,
            completion_tokens=self.completion_tokens + other.completion_tokens,
            latencies=(*self.latencies, *other.latencies),
        )

    def cost(self, capabilities: BackendCapabilities) -> Fraction:
        return capabilities.cost(self.prompt_tokens, self.completion_tokens)

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_count": self.request_count,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latencies": list(self.latencies),
            "total_seconds": self.total_seconds,
        }


@dataclass(frozen=True)
class TranscriptEntry:
    stage: str
    digest: str
    request: ChatRequest
    reply: str | None


@dataclass(frozen=True)
class ChainResult:
    text: str
    result: AnnotatedText
    reports: tuple[ReflectionReport, ...]
    usage: TokenUsage
    transcript: tuple[TranscriptEntry, ...] = field(default=(), compare=False, repr=False)

    @property
    def output(self) -> str:
        return render_inline(self.result)

    @property
    def accepted(self) -> bool:
        return bool(self.reports) and self.reports[-1].accepted


def _label_sentences(a: AnnotatedText) -> list[int]:
    spans = split_sentences(a.clean_text)
    return [sentence_of(spans, label.start_char) for label in a.labels]


def check_action_relevance(
    a: AnnotatedText, cfg: ChainConfig, keywords: Sequence[KeywordSpan]
) -> ActionChecks:
    """Positional consistency and moderation, computed locally."""
    per_sentence = Counter(_label_sentences(a))
    moderation = all(count <= cfg.max_labels_per_sentence for count in per_sentence.values())
    starts = {keyword.start_char for keyword in keywords}
    positional = all(label.start_char in starts for label in a.labels)
    return ActionChecks(positional_consistency=positional, moderation=moderation)


def action_findings(
    a: AnnotatedText, cfg: ChainConfig, keywords: Sequence[KeywordSpan]
) -> list[str]:
    """Readable list of action-relevance problems for the reflection prompt."""
    findings: list[str] = []
    for sentence, count in sorted(Counter(_label_sentences(a)).items()):
        if count > cfg.max_labels_per_sentence:
            findings.append(
                f"sentence {sentence + 1} carries {count} gestures; "
                f"the limit is {cfg.max_labels_per_sentence}"
            )
    starts = {keyword.start_char for keyword in keywords}
    for label in a.labels:
        if label.start_char not in starts:
            findings.append(
                f"gesture {label.gesture_id} before {a.label_text(label)!r} is not placed before a keyword"
            )
    if keywords:
        findings.append("keywords: " + ", ".join(dict.fromkeys(k.text for k in keywords)))
    return findings


def enforce_moderation(a: AnnotatedText, cfg: ChainConfig) -> AnnotatedText:
    """Keep the first ``max_labels_per_sentence`` labels of every sentence."""
    seen: Counter[int] = Counter()
    kept = []
    for label, sentence in zip(a.labels, _label_sentences(a), strict=True):
        if seen[sentence] < cfg.max_labels_per_sentence:
            kept.append(label)
            seen[sentence] += 1
        else:
            logger.info("Moderation drops %s at char %d", label.gesture_id, label.start_char)
    if len(kept) == len(a.labels):
        return a
    return a.with_labels(kept)


def _variants(candidates: list[str]) -> list[str]:
    regions: list[str] = []
    for candidate in candidates:
        for variant in (candidate.strip(), candidate.strip().strip(_QUOTES)):
            if variant and variant not in regions:
                regions.append(variant)
    return regions


def _candidate_regions(raw: str, expected_text: str | None) -> list[str]:
    candidates = [block.strip("\n") for block in _FENCE.findall(raw)]
    revised = list(_REVISED.finditer(raw))
    if revised:
        candidates.append(raw[revised[-1].end() :])
    stripped = raw.strip()
    lines = stripped.splitlines()
    if expected_text is None:
        # Leading lines without a marker are chat framing.
        marked = [index for index, line in enumerate(lines) if _MARKER_LINE.search(line)]
        if marked:
            candidates.append("\n".join(lines[marked[0] :]))
        candidates.append(stripped)
        return _variants(candidates)
    candidates.append(stripped)
    candidates.extend("\n".join(lines[index:]) for index in range(1, len(lines)))
    candidates.extend(lines)
    return _variants(candidates)


def parse_backend_output(raw: str, expected_text: str | None = None) -> AnnotatedText:
    """Extract annotated text from a chat reply.

    Tries fenced blocks and a ``REVISED:`` section first. With
    ``expected_text`` it then tries the whole reply, ever-shorter line
    suffixes and single lines, and the region's clean text must equal it.
    Without it, leading lines that carry no marker are dropped before the
    rest of the reply is taken.
    """
    for region in _candidate_regions(raw, expected_text):
        try:
            annotated = parse_inline(region)
        except AnnotationError:
            continue
        if expected_text is None or annotated.clean_text == expected_text:
            return annotated
    raise Unparseable("reply holds no annotated text matching the input")


def parse_keyword_reply(reply: str, text: str) -> list[KeywordSpan]:
    """Turn a keyword list reply into spans over ``text``.

    Items are separated by newlines or ``|``; bullets and quotes are
    stripped. Items that are not exact substrings of the text are dropped.
    """
    items: list[str] = []
    for raw_item in re.split(r"[\n|]", reply):
        item = _BULLET.sub("", raw_item.strip())
        if item.lower().startswith("keywords:"):
            item = item[len("keywords:") :]
        item = item.strip().strip(_QUOTES).strip()
        if not item:
            continue
        if item not in text and "," in item:
            items.extend(part.strip().strip(_QUOTES).strip() for part in item.split(","))
        else:
            items.append(item)

    spans: dict[tuple[int, int], KeywordSpan] = {}
    for item in dict.fromkeys(items):
        if not item:
            continue
        if item not in text:
            logger.warning("Dropping keyword %r: not found in the text", item)
            continue
        start = text.find(item)
        while start != -1:
            spans.setdefault((start, start + len(item)), KeywordSpan(item, start, start + len(item)))
            start = text.find(item, start + 1)
    return [spans[key] for key in sorted(spans)]


def parse_reflection_verdict(reply: str) -> SemanticChecks:
    """Read the ``<check>: pass|fail - reason`` lines of a reflection reply."""
    found: dict[str, SemanticCheck] = {}
    for match in _VERDICT.finditer(reply):
        name = match["name"].lower()
        found.setdefault(
            name, SemanticCheck(CheckStatus(match["status"].lower()), match["rationale"].strip())
        )
    return SemanticChecks(**found)


class _Run:
    """Mutable state of one chain run: usage and transcript."""

    def __init__(self, chain: IntentChain) -> None:
        self.chain = chain
        self.usage = TokenUsage()
        self.transcript: list[TranscriptEntry] = []

    def send(self, stage: str, messages: Prompt) -> str:
        chain = self.chain
        request = ChatRequest(
            messages=messages,
            model=chain.backend.capabilities.model,
            temperature=chain.config.temperature,
            stage=stage,
        )
        digest = request.digest()
        try:
            response = chain.backend.send(request, timeout=chain.config.backend_timeout)
        except ChainError as exc:
            self.transcript.append(TranscriptEntry(stage, digest, request, None))
            exc.transcript = list(self.transcript)
            raise
        self.usage = self.usage.add(response)
        self.transcript.append(TranscriptEntry(stage, digest, request, response.content))
        logger.debug("Stage %s (%s) answered in %.3fs", stage, digest[:12], response.latency_seconds)
        return response.content

    def exchange(self, stage: str, prompt: Prompt, expected_text: str) -> tuple[str, AnnotatedText]:
        """Send ``prompt`` and parse the reply, retrying on unparseable replies."""
        messages = prompt
        retries = self.chain.config.max_parse_retries
        for attempt in range(retries + 1):
            label = stage if attempt == 0 else f"{stage}-retry{attempt}"
            reply = self.send(label, messages)
            try:
                return reply, parse_backend_output(reply, expected_text)
            except Unparseable:
                logger.warning("Unparseable %s reply (attempt %d of %d)", stage, attempt + 1, retries + 1)
                messages = retry_messages(prompt, reply, attempt + 1)
        raise Unparseable(
            f"{stage} reply still unparseable after {retries} retries", self.transcript
        )


class IntentChain:
    """Labels plain text with gestures from an ethogram through a chat backend."""

    def __init__(
        self,
        ethogram: Ethogram,
        backend: ChatBackend,
        profile: CharacterProfile | None = None,
        config: ChainConfig | None = None,
    ) -> None:
        self.ethogram = ethogram
        self.backend = backend
        self.profile = profile or CharacterProfile.from_settings()
        self.config = config or ChainConfig()

    def run(self, text: str) -> ChainResult:
        text = text.strip()
        if not text:
            raise EmptyText("cannot label an empty text")
        cfg = self.config
        state = _Run(self)

        _, current = state.exchange("label", build_cot_prompt(text, self.profile, self.ethogram), text)
        keyword_reply = state.send("keywords", build_keyword_prompt(text, self.profile))
        keywords = parse_keyword_reply(keyword_reply, text)

        reflecting = cfg.max_reflection_rounds > 0
        action = check_action_relevance(current, cfg, keywords)
        report = ReflectionReport(
            round=1,
            semantic_checks=SemanticChecks(),
            action_checks=action,
            accepted=action.passed and not reflecting,
            reflected=False,
        )
        reports = [report]

        for round_number in range(2, cfg.max_reflection_rounds + 2):
            if report.accepted:
                break
            prompt = build_reflection_prompt(
                text,
                render_inline(current),
                self.profile,
                self.ethogram,
                action_findings(current, cfg, keywords),
                cfg.max_labels_per_sentence,
                round_number - 1,
                cfg.max_reflection_rounds,
            )
            reply, current = state.exchange("reflect", prompt, text)
            semantic = parse_reflection_verdict(reply)
            action = check_action_relevance(current, cfg, keywords)
            report = ReflectionReport(
                round=round_number,
                semantic_checks=semantic,
                action_checks=action,
                accepted=action.passed and not semantic.any_failed,
                reflected=True,
            )
            reports.append(report)

        if not report.accepted:
            logger.info("No round accepted for %r after %d report(s)", text[:40], len(reports))
        return ChainResult(
            text=text,
            result=enforce_moderation(current, cfg),
            reports=tuple(reports),
            usage=state.usage,
            transcript=tuple(state.transcript),
        )

    def _run_unit(self, text: str) -> ChainResult | ChainError:
        try:
            return self.run(text)
        except ChainError as exc:
            logger.warning("Chain failed for %r: %s", text[:40], exc)
            return exc

    def run_batch(self, texts: Sequence[str], parallelism: int = 1) -> list[ChainResult | ChainError]:
        """Run many independent texts; results keep input order."""
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if parallelism == 1:
            return [self._run_unit(text) for text in texts]
        with ThreadPoolExecutor(max_workers=parallelism) as executor:
            return list(executor.map(self._run_unit, texts))


def run_intent_chain(
    text: str,
    profile: CharacterProfile,
    e: Ethogram,
    backend: ChatBackend,
    cfg: ChainConfig,
) -> ChainResult:
    return IntentChain(e, backend, profile, cfg).run(text)
