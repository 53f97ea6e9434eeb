"""The three-layer co-speech gesture ethogram.

Gestures are organised Intent → Sub-intent → Action. Every action-layer entry
has a prefixed ID (``A-15``: the 15th Information Display gesture) and a flat
numeric alias assigned in document order, so labels written either way
resolve to the same entry.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum, StrEnum
from pathlib import Path
from types import MappingProxyType
from typing import Any

from .emotions import EmotionCategory
from .exceptions import (
    DuplicateId,
    EmptyEthogram,
    EmptyField,
    EthogramError,
    InvalidFlatId,
    InvalidQuery,
    MalformedDocument,
    UnknownCategory,
    UnknownId,
)
from .serializers import EthogramDocumentSerializer, iter_errors

logger = logging.getLogger(__name__)


class IntentCategory(Enum):
    """Intent layer. Letter codes follow the taxonomy's row order."""

    INFORMATION_DISPLAY = "A"
    CONCRETE_REINFORCEMENT = "B"
    TONE_REINFORCEMENT = "C"
    COMFORT_BEHAVIORS = "D"

    @property
    def code(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return _CATEGORY_LABELS[self]

    @classmethod
    def from_code(cls, code: str) -> IntentCategory:
        try:
            return cls(code.upper())
        except ValueError:
            raise UnknownCategory(f"unknown intent category {code!r}") from None


_CATEGORY_LABELS = {
    IntentCategory.INFORMATION_DISPLAY: "InformationDisplay",
    IntentCategory.CONCRETE_REINFORCEMENT: "ConcreteReinforcement",
    IntentCategory.TONE_REINFORCEMENT: "ToneReinforcement",
    IntentCategory.COMFORT_BEHAVIORS: "ComfortBehaviors",
}


_ID_RE = re.compile(r"^\s*([A-Za-z])\s*-\s*(\d+)\s*$")


@dataclass(frozen=True)
class GestureId:
    category: IntentCategory
    ordinal: int

    def __post_init__(self) -> None:
        if self.ordinal < 1:
            raise InvalidQuery(f"gesture ordinal must be positive, got {self.ordinal}")

    def __str__(self) -> str:
        return f"{self.category.code}-{self.ordinal}"

    @classmethod
    def parse(cls, text: str) -> GestureId:
        """Parse the canonical ``<letter>-<ordinal>`` form."""
        match = _ID_RE.match(text)
        if not match:
            raise InvalidQuery(f"not a gesture id: {text!r}")
        return cls(IntentCategory.from_code(match.group(1)), int(match.group(2)))


@dataclass(frozen=True)
class GestureEntry:
    """One action-layer gesture."""

    id: GestureId
    name: str
    sub_intent: str
    description: str
    guideline: str
    keywords: tuple[str, ...]
    emotion_category: EmotionCategory
    flat_id: int

    @property
    def category(self) -> IntentCategory:
        return self.id.category

    def to_document(self) -> dict[str, Any]:
        return {
            "id": str(self.id),
            "flat_id": self.flat_id,
            "name": self.name,
            "sub_intent": self.sub_intent,
            "description": self.description,
            "guideline": self.guideline,
            "keywords": list(self.keywords),
            "emotion": self.emotion_category.value,
        }


class Severity(StrEnum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    locus: str = ""

    def __str__(self) -> str:
        where = f"{self.locus}: " if self.locus else ""
        return f"{self.severity.value} [{self.code}] {where}{self.message}"

    def to_dict(self) -> dict[str, str]:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
            "locus": self.locus,
        }


def _entry_locus(position: int, entry: GestureEntry | None = None) -> str:
    if entry is None:
        return f"entries[{position}]"
    return f"entries[{position}] ({entry.id})"


@dataclass(frozen=True)
class Ethogram:
    """Validated, indexed collection of gesture entries. Immutable after
    construction, so it can be shared between threads."""

    entries: tuple[GestureEntry, ...]
    index_by_id: Mapping[str, GestureEntry] = field(init=False, repr=False, compare=False)
    index_by_flat_id: Mapping[int, GestureEntry] = field(init=False, repr=False, compare=False)
    index_by_keyword: Mapping[str, tuple[GestureEntry, ...]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        by_id: dict[str, GestureEntry] = {}
        by_flat: dict[int, GestureEntry] = {}
        by_keyword: dict[str, list[GestureEntry]] = {}
        for entry in self.entries:
            # First occurrence wins; validate() reports the duplicates.
            by_id.setdefault(str(entry.id), entry)
            by_flat.setdefault(entry.flat_id, entry)
            for keyword in dict.fromkeys(entry.keywords):
                by_keyword.setdefault(keyword, []).append(entry)
        object.__setattr__(self, "index_by_id", MappingProxyType(by_id))
        object.__setattr__(self, "index_by_flat_id", MappingProxyType(by_flat))
        object.__setattr__(
            self,
            "index_by_keyword",
            MappingProxyType(
                {
                    keyword: tuple(sorted(found, key=lambda e: e.flat_id))
                    for keyword, found in by_keyword.items()
                }
            ),
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[GestureEntry]:
        return iter(self.entries)

    def lookup(self, gesture_id: str) -> GestureEntry:
        return lookup(self, gesture_id)

    def get(self, gesture_id: str) -> GestureEntry | None:
        try:
            return lookup(self, gesture_id)
        except UnknownId:
            return None

    def by_category(self, category: IntentCategory | str) -> list[GestureEntry]:
        if isinstance(category, str):
            category = IntentCategory.from_code(category)
        return [entry for entry in self.entries if entry.category is category]

    def by_emotion(self, emotion: EmotionCategory | str) -> list[GestureEntry]:
        emotion = EmotionCategory(emotion)
        return [entry for entry in self.entries if entry.emotion_category is emotion]

    def sub_intents(self, category: IntentCategory | str) -> list[str]:
        return list(dict.fromkeys(entry.sub_intent for entry in self.by_category(category)))


def lookup(e: Ethogram, gesture_id: str) -> GestureEntry:
    """Resolve a canonical (``D-2``) or flat (``97``) gesture ID."""
    text = gesture_id.strip()
    if text.isascii() and text.isdigit():
        entry = e.index_by_flat_id.get(int(text))
    else:
        try:
            entry = e.index_by_id.get(str(GestureId.parse(text)))
        except (InvalidQuery, UnknownCategory):
            entry = None
    if entry is None:
        raise UnknownId(gesture_id)
    return entry


def search_by_keyword(e: Ethogram, token: str) -> list[GestureEntry]:
    """Entries whose keyword list contains ``token`` as a whole phrase."""
    normalized = " ".join(token.split()).lower()
    if not normalized:
        raise InvalidQuery("keyword search needs a non-empty token")
    return list(e.index_by_keyword.get(normalized, ()))


def validate(e: Ethogram) -> list[Diagnostic]:
    """Check every Ethogram invariant; an empty list means the ethogram is sound."""
    diagnostics: list[Diagnostic] = []
    if not e.entries:
        diagnostics.append(
            Diagnostic(Severity.ERROR, EmptyEthogram.code, "ethogram has no entries")
        )
        return diagnostics

    seen_ids: dict[str, int] = {}
    seen_flat: dict[int, int] = {}
    for position, entry in enumerate(e.entries):
        locus = _entry_locus(position, entry)
        canonical = str(entry.id)
        if canonical in seen_ids:
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    DuplicateId.code,
                    f"duplicate id {canonical} (first at entries[{seen_ids[canonical]}])",
                    locus,
                )
            )
        else:
            seen_ids[canonical] = position

        if entry.flat_id in seen_flat:
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    InvalidFlatId.code,
                    f"duplicate flat_id {entry.flat_id} "
                    f"(first at entries[{seen_flat[entry.flat_id]}])",
                    locus,
                )
            )
        else:
            seen_flat[entry.flat_id] = position

        for field_name in ("name", "sub_intent", "description"):
            if not getattr(entry, field_name).strip():
                diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        EmptyField.code,
                        f"field '{field_name}' must not be empty",
                        locus,
                    )
                )

        repeated = [kw for kw, count in Counter(entry.keywords).items() if count > 1]
        for keyword in repeated:
            diagnostics.append(
                Diagnostic(Severity.WARNING, "DuplicateKeyword", f"keyword {keyword!r} repeated", locus)
            )

    if len(seen_flat) == len(e.entries):
        expected = list(range(1, len(e.entries) + 1))
        if [entry.flat_id for entry in e.entries] != expected:
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    InvalidFlatId.code,
                    "flat_id values must run 1..N in document order",
                )
            )
    return diagnostics


def _parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}",
            [
                Diagnostic(
                    Severity.ERROR,
                    MalformedDocument.code,
                    exc.msg,
                    f"line {exc.lineno}, column {exc.colno}",
                )
            ],
        ) from exc


def _build_entries(data: Any) -> tuple[list[GestureEntry], list[Diagnostic]]:
    """Turn a parsed document into entries, collecting every problem found."""
    if not isinstance(data, dict):
        return [], [
            Diagnostic(
                Severity.ERROR,
                MalformedDocument.code,
                "top level must be an object with an 'entries' array",
            )
        ]
    serializer = EthogramDocumentSerializer(data=data)
    diagnostics: list[Diagnostic] = []
    if not serializer.is_valid():
        for locus, message in iter_errors(serializer.errors):
            diagnostics.append(Diagnostic(Severity.ERROR, MalformedDocument.code, message, locus))
        return [], diagnostics

    entries: list[GestureEntry] = []
    for position, raw in enumerate(serializer.validated_data["entries"]):
        try:
            gesture_id = GestureId.parse(raw["id"])
        except UnknownCategory as exc:
            diagnostics.append(
                Diagnostic(Severity.ERROR, UnknownCategory.code, str(exc), _entry_locus(position))
            )
            continue
        except InvalidQuery as exc:
            diagnostics.append(
                Diagnostic(Severity.ERROR, MalformedDocument.code, str(exc), _entry_locus(position))
            )
            continue
        flat_id = raw["flat_id"] if raw["flat_id"] is not None else position + 1
        # Repeats warn and are dropped from the entry.
        keywords = [" ".join(kw.split()).lower() for kw in raw["keywords"]]
        for keyword in [kw for kw, count in Counter(keywords).items() if count > 1]:
            diagnostics.append(
                Diagnostic(
                    Severity.WARNING,
                    "DuplicateKeyword",
                    f"keyword {keyword!r} repeated",
                    f"{_entry_locus(position)} ({gesture_id})",
                )
            )
        entries.append(
            GestureEntry(
                id=gesture_id,
                name=raw["name"],
                sub_intent=raw["sub_intent"],
                description=raw["description"],
                guideline=raw["guideline"],
                keywords=tuple(dict.fromkeys(keywords)),
                emotion_category=EmotionCategory(raw["emotion"]),
                flat_id=flat_id,
            )
        )
    return entries, diagnostics


def diagnose_document(text: str) -> list[Diagnostic]:
    """Report every problem in an ethogram document without raising."""
    try:
        data = _parse_json(text)
    except MalformedDocument as exc:
        return exc.diagnostics
    entries, diagnostics = _build_entries(data)
    if any(d.severity is Severity.ERROR for d in diagnostics):
        return diagnostics
    return diagnostics + validate(Ethogram(tuple(entries)))


_ERROR_TYPES: dict[str, type[EthogramError]] = {
    error_type.code: error_type
    for error_type in (
        MalformedDocument,
        EmptyEthogram,
        DuplicateId,
        UnknownCategory,
        EmptyField,
        InvalidFlatId,
    )
}


def load_ethogram(source: str | Path | Iterable[str]) -> Ethogram:
    """Load and validate an ethogram document.

    ``source`` is a path or an already-open text stream. Raises the
    ``EthogramError`` subclass matching the first problem found; the
    exception carries every diagnostic.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = "".join(source)

    diagnostics = diagnose_document(text)
    errors = [d for d in diagnostics if d.severity is Severity.ERROR]
    if errors:
        first = errors[0]
        error_type = _ERROR_TYPES.get(first.code, EthogramError)
        raise error_type(str(first), diagnostics)

    entries, _ = _build_entries(json.loads(text))
    ethogram = Ethogram(tuple(entries))
    logger.info("Loaded ethogram with %d entries", len(ethogram))
    return ethogram


def loads_ethogram(text: str) -> Ethogram:
    return load_ethogram([text])


def render_ethogram(e: Ethogram) -> str:
    """Serialize an ethogram in the document format ``load_ethogram`` reads."""
    document = {"entries": [entry.to_document() for entry in e.entries]}
    return json.dumps(document, ensure_ascii=False, indent=2) + "\n"


def guideline_digest(e: Ethogram) -> list[str]:
    """One prompt line per entry, in flat_id order."""
    lines = []
    for entry in sorted(e.entries, key=lambda item: item.flat_id):
        keywords = ", ".join(entry.keywords) if entry.keywords else "-"
        lines.append(f"{entry.id} | {entry.name} | {entry.guideline} | keywords: {keywords}")
    return lines
