"""Label sidecar files.

A sidecar holds one JSON object per line: the clean text, its labels and,
for predictions, optional per-case usage::

    {"text": "...", "labels": [{"id": "A-6", "description": "clapping",
     "start_char": 56, "duration_chars": 7}], "usage": {...}}
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .annotation import AnnotatedText, GestureLabel
from .exceptions import AnnotationError, MalformedRecord
from .serializers import SidecarRecordSerializer, first_error


@dataclass(frozen=True)
class CaseUsage:
    """Backend usage recorded next to one predicted case."""

    latency_seconds: float | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "latency_seconds": self.latency_seconds,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


@dataclass(frozen=True)
class SidecarRecord:
    annotated: AnnotatedText
    usage: CaseUsage | None = None


def label_to_dict(label: GestureLabel) -> dict[str, Any]:
    return {
        "id": label.gesture_id,
        "description": label.description,
        "start_char": label.start_char,
        "duration_chars": label.duration_chars,
    }


def labels_from_data(items: Iterable[dict[str, Any]]) -> tuple[GestureLabel, ...]:
    """Build labels from already validated label objects."""
    return tuple(
        GestureLabel(
            gesture_id=item["id"],
            description=item.get("description", ""),
            start_char=item["start_char"],
            duration_chars=item["duration_chars"],
        )
        for item in items
    )


def to_record(a: AnnotatedText, usage: CaseUsage | None = None) -> dict[str, Any]:
    record: dict[str, Any] = {
        "text": a.clean_text,
        "labels": [label_to_dict(label) for label in a.labels],
    }
    if usage is not None:
        record["usage"] = usage.to_dict()
    return record


def from_record(data: Any, line_number: int = 1) -> SidecarRecord:
    serializer = SidecarRecordSerializer(data=data)
    if not serializer.is_valid():
        raise MalformedRecord(first_error(serializer.errors), line_number)
    values = serializer.validated_data
    try:
        annotated = AnnotatedText(values["text"], labels_from_data(values["labels"]))
    except AnnotationError as exc:
        raise MalformedRecord(str(exc), line_number) from exc
    usage = values.get("usage")
    return SidecarRecord(annotated, CaseUsage(**usage) if usage is not None else None)


def read_sidecar(path: str | Path) -> list[SidecarRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc.msg}", line_number) from exc
            records.append(from_record(data, line_number))
    return records


def dumps_record(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False)


def write_sidecar(path: str | Path, records: Iterable[SidecarRecord | AnnotatedText]) -> None:
    lines = []
    for record in records:
        if isinstance(record, AnnotatedText):
            record = SidecarRecord(record)
        lines.append(dumps_record(to_record(record.annotated, record.usage)) + "\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
