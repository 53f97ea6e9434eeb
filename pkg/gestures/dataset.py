"""Training dataset of plain text paired with gesture-annotated text."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from django.conf import settings
from django.utils import timezone
from tabulate import tabulate

from .annotation import GestureLabel, parse_inline, render_inline, split_sentences
from .ethogram import Ethogram
from .exceptions import AnnotationError, ChainError, CorpusEncodingError, DatasetError, MalformedRecord
from .intent_chain import ChainResult, IntentChain, TokenUsage
from .serializers import DatasetRecordSerializer, first_error
from .sidecar import label_to_dict, labels_from_data

logger = logging.getLogger(__name__)

UNRESOLVED = "unresolved"
_PARAGRAPH_BREAK = re.compile(r"\n[^\S\n]*\n\s*")


def provenance_timestamp() -> str:
    """ISO-8601 UTC timestamp, pinned by ``SOURCE_DATE_EPOCH`` when set."""
    if settings.SOURCE_DATE_EPOCH is not None:
        moment = datetime.fromtimestamp(settings.SOURCE_DATE_EPOCH, tz=UTC)
    else:
        moment = timezone.now().astimezone(UTC).replace(microsecond=0)
    return moment.isoformat()


@dataclass(frozen=True)
class Provenance:
    model: str
    config_digest: str
    timestamp: str

    @classmethod
    def from_chain(cls, chain: IntentChain, timestamp: str | None = None) -> Provenance:
        return cls(
            model=chain.backend.capabilities.model,
            config_digest=chain.config.digest(),
            timestamp=timestamp or provenance_timestamp(),
        )

    def to_dict(self) -> dict[str, str]:
        return {"model": self.model, "config_digest": self.config_digest, "timestamp": self.timestamp}


@dataclass(frozen=True)
class DatasetRecord:
    """One training pair. ``output`` must re-parse to ``input`` and ``labels``."""

    input: str
    output: str
    labels: tuple[GestureLabel, ...]
    provenance: Provenance

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        try:
            parsed = parse_inline(self.output)
        except AnnotationError as exc:
            raise DatasetError(f"output does not parse: {exc}") from exc
        if parsed.clean_text != self.input:
            raise DatasetError("output does not strip back to the input text")
        if parsed.labels != self.labels:
            raise DatasetError("labels disagree with the markers in the output")

    @classmethod
    def from_result(cls, result: ChainResult, provenance: Provenance) -> DatasetRecord:
        return cls(
            input=result.result.clean_text,
            output=render_inline(result.result),
            labels=result.result.labels,
            provenance=provenance,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "input": self.input,
            "output": self.output,
            "labels": [label_to_dict(label) for label in self.labels],
            "provenance": self.provenance.to_dict(),
        }


@dataclass(frozen=True)
class SkippedUnit:
    index: int
    text: str
    error: str


@dataclass(frozen=True)
class DatasetBuild:
    records: tuple[DatasetRecord, ...]
    skipped: tuple[SkippedUnit, ...] = ()
    usage: TokenUsage = field(default_factory=TokenUsage)


def ingest_corpus(source: str | Path) -> list[str]:
    """Split a UTF-8 corpus file into sentence units.

    Sentences may wrap across lines; a blank line always ends one. Internal
    whitespace of each unit collapses to single spaces.
    """
    raw = Path(source).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusEncodingError(f"{source}: not valid UTF-8 at byte {exc.start}") from exc
    text = text.removeprefix("\ufeff")

    units: list[str] = []
    for paragraph in _PARAGRAPH_BREAK.split(text):
        for span in split_sentences(paragraph):
            unit = " ".join(span.text_of(paragraph).split())
            if unit:
                units.append(unit)
    return units


class DatasetBuilder:
    """Runs the intent chain over a corpus and collects the training pairs.

    Units that fail are logged and skipped; configuration errors propagate.
    """

    def __init__(self, chain: IntentChain, parallelism: int = 1) -> None:
        self.chain = chain
        self.parallelism = parallelism

    def build(self, corpus: Sequence[str]) -> DatasetBuild:
        provenance = Provenance.from_chain(self.chain)
        outcomes = self.chain.run_batch(corpus, self.parallelism)

        records: list[DatasetRecord] = []
        skipped: list[SkippedUnit] = []
        usage = TokenUsage()
        for index, (text, outcome) in enumerate(zip(corpus, outcomes, strict=True)):
            if isinstance(outcome, ChainError):
                logger.warning("Skipping unit %d (%r): %s", index, text[:40], outcome)
                skipped.append(SkippedUnit(index, text, str(outcome)))
                continue
            usage = usage + outcome.usage
            records.append(DatasetRecord.from_result(outcome, provenance))

        logger.info("Built %d record(s), skipped %d unit(s)", len(records), len(skipped))
        return DatasetBuild(tuple(records), tuple(skipped), usage)


def build_dataset(corpus: Sequence[str], chain: IntentChain, parallelism: int = 1) -> list[DatasetRecord]:
    return list(DatasetBuilder(chain, parallelism).build(corpus).records)


def write_dataset(path: str | Path, records: Iterable[DatasetRecord]) -> None:
    lines = [json.dumps(record.to_dict(), ensure_ascii=False) + "\n" for record in records]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_dataset(path: str | Path) -> list[DatasetRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc.msg}", line_number) from exc
            serializer = DatasetRecordSerializer(data=data)
            if not serializer.is_valid():
                raise MalformedRecord(first_error(serializer.errors), line_number)
            values = serializer.validated_data
            try:
                records.append(
                    DatasetRecord(
                        input=values["input"],
                        output=values["output"],
                        labels=labels_from_data(values["labels"]),
                        provenance=Provenance(**values["provenance"]),
                    )
                )
            except (DatasetError, AnnotationError) as exc:
                raise MalformedRecord(str(exc), line_number) from exc
    return records


@dataclass(frozen=True)
class DatasetStats:
    record_count: int = 0
    label_count: int = 0
    sentence_count: int = 0
    by_gesture_id: dict[str, int] = field(default_factory=dict)
    by_emotion: dict[str, int] = field(default_factory=dict)

    @property
    def mean_labels_per_sentence(self) -> float:
        return self.label_count / self.sentence_count if self.sentence_count else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_count": self.record_count,
            "label_count": self.label_count,
            "sentence_count": self.sentence_count,
            "mean_labels_per_sentence": round(self.mean_labels_per_sentence, 4),
            "by_gesture_id": dict(sorted(self.by_gesture_id.items())),
            "by_emotion": dict(sorted(self.by_emotion.items())),
        }


def dataset_stats(records: Sequence[DatasetRecord], ethogram: Ethogram | None = None) -> DatasetStats:
    """Count labels per gesture and per emotion category.

    With an ethogram, flat aliases fold into canonical IDs and labels it does
    not know are counted as ``unresolved``; without one every label is.
    """
    by_id: Counter[str] = Counter()
    by_emotion: Counter[str] = Counter()
    sentences = 0
    for record in records:
        sentences += max(len(split_sentences(record.input)), 1)
        for label in record.labels:
            entry = ethogram.get(label.gesture_id) if ethogram is not None else None
            if entry is None:
                by_id[label.gesture_id] += 1
                by_emotion[UNRESOLVED] += 1
            else:
                by_id[str(entry.id)] += 1
                by_emotion[entry.emotion_category.value] += 1
    return DatasetStats(
        record_count=len(records),
        label_count=sum(by_id.values()),
        sentence_count=sentences,
        by_gesture_id=dict(by_id),
        by_emotion=dict(by_emotion),
    )


def format_stats(stats: DatasetStats) -> str:
    lines = [
        f"records: {stats.record_count}",
        f"labels: {stats.label_count}",
        f"mean labels per sentence: {stats.mean_labels_per_sentence:.4f}",
    ]
    if stats.by_emotion:
        lines += ["", tabulate(sorted(stats.by_emotion.items()), headers=["emotion", "count"])]
    if stats.by_gesture_id:
        lines += ["", tabulate(sorted(stats.by_gesture_id.items()), headers=["gesture", "count"])]
    return "\n".join(lines)
