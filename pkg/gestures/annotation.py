"""Gesture labels and the inline annotation grammar.

Annotated text carries markers such as ``(id: A-97, description: spreading
arms wide)`` in front of the word a gesture accompanies. Parsing removes the
markers and turns each one into a ``GestureLabel`` positioned in the clean
text. Every position and length is counted in Unicode code points.
"""

from __future__ import annotations

import bisect
import logging
import re
from dataclasses import dataclass, field, replace

from .ethogram import Diagnostic, Ethogram, Severity
from .exceptions import AnnotationError, LabelOutOfRange, MalformedMarker, OverlappingLabels

logger = logging.getLogger(__name__)

_MARKER_OPEN = re.compile(r"\(\s*id\s*:", re.IGNORECASE)
_MARKER = re.compile(
    r"\(\s*id\s*:\s*(?P<id>[^\s,:()]+)\s*"
    r"(?:(?:,\s*(?:description\s*:)?|:)\s*(?P<description>[^()\n]*?))?\s*\)",
    re.IGNORECASE,
)
_MARKER_WITH_ID = re.compile(r"\(\s*id\s*:\s*[^\s,:()]", re.IGNORECASE)
_GESTURE_ID = re.compile(r"^[^\s,:()]+$")
_WORD = re.compile(r"\w+")
_BOUNDARY = re.compile(r"[.!?]+[\"'”’)\]]*(?=\s|$)|[。！？]+[」』”’）]*")


@dataclass(frozen=True)
class GestureLabel:
    """One gesture placed on the clean text.

    ``gesture_id`` is kept as written (canonical ``A-97`` or flat ``97``);
    ``resolved`` records whether it names an ethogram entry and takes no part
    in equality.
    """

    gesture_id: str
    description: str
    start_char: int
    duration_chars: int
    resolved: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if not _GESTURE_ID.match(self.gesture_id):
            raise AnnotationError(f"invalid gesture id {self.gesture_id!r}")
        if any(ch in self.description for ch in "()\n"):
            raise AnnotationError(f"description may not contain parentheses: {self.description!r}")
        if self.start_char < 0:
            raise LabelOutOfRange(f"label {self.gesture_id} starts before the text")
        if self.duration_chars < 1:
            raise LabelOutOfRange(f"label {self.gesture_id} has no extent")

    @property
    def end_char(self) -> int:
        return self.start_char + self.duration_chars


def _check_labels(clean_text: str, labels: tuple[GestureLabel, ...]) -> None:
    previous: GestureLabel | None = None
    for label in labels:
        if previous is not None and label.start_char <= previous.start_char:
            raise OverlappingLabels(
                f"labels {previous.gesture_id}@{previous.start_char} and "
                f"{label.gesture_id}@{label.start_char} are not in strictly increasing order"
            )
        if label.end_char > len(clean_text):
            raise LabelOutOfRange(
                f"label {label.gesture_id} ends at {label.end_char}, "
                f"beyond the text length {len(clean_text)}"
            )
        previous = label


@dataclass(frozen=True)
class AnnotatedText:
    """Clean text plus its labels, sorted by start position."""

    clean_text: str
    labels: tuple[GestureLabel, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if _MARKER_OPEN.search(self.clean_text):
            raise AnnotationError("clean text still contains inline marker syntax")
        _check_labels(self.clean_text, self.labels)

    def label_text(self, label: GestureLabel) -> str:
        return self.clean_text[label.start_char : label.end_char]

    def with_labels(self, labels: list[GestureLabel] | tuple[GestureLabel, ...]) -> AnnotatedText:
        return AnnotatedText(self.clean_text, tuple(labels))


@dataclass(frozen=True)
class SentenceSpan:
    start_char: int
    end_char: int

    def contains(self, position: int) -> bool:
        return self.start_char <= position < self.end_char

    def text_of(self, text: str) -> str:
        return text[self.start_char : self.end_char]


def token_length(text: str, position: int) -> int:
    """Length of the word token starting at ``position``, at least 1."""
    match = _WORD.match(text, position)
    return len(match.group()) if match else 1


def _marker_problem(text: str, position: int) -> str:
    if not _MARKER_WITH_ID.match(text, position):
        return "marker is missing its gesture id"
    return "unclosed marker"


def parse_inline(text: str) -> AnnotatedText:
    """Strip inline markers from ``text`` and return the positioned labels.

    Accepts ``(id: X, description: Y)``, ``(id: X: Y)`` and ``(id: X)``. One
    space directly after a marker belongs to the marker. A marker that ends
    the text attaches to the start of the last word.
    """
    pieces: list[str] = []
    found: list[tuple[int, str, str, int]] = []
    clean_length = 0
    cursor = 0
    while True:
        opening = _MARKER_OPEN.search(text, cursor)
        if opening is None:
            break
        start = opening.start()
        match = _MARKER.match(text, start)
        if match is None:
            raise MalformedMarker(_marker_problem(text, start), start)
        pieces.append(text[cursor:start])
        clean_length += start - cursor
        found.append((clean_length, match["id"], (match["description"] or "").strip(), start))
        cursor = match.end()
        if text.startswith(" ", cursor):
            cursor += 1
    pieces.append(text[cursor:])
    clean_text = "".join(pieces)

    if found and found[-1][0] >= len(clean_text):
        clean_text = clean_text.rstrip()
        if not clean_text:
            raise MalformedMarker("marker has no text to attach to", found[-1][3])
        words = list(_WORD.finditer(clean_text))
        anchor = words[-1].start() if words else len(clean_text) - 1
        interior = [pos for pos, *_ in found if pos < len(clean_text)]
        if interior:
            anchor = max(anchor, interior[-1])
        found = [(pos if pos < len(clean_text) else anchor, gid, desc, at) for pos, gid, desc, at in found]

    labels: list[GestureLabel] = []
    for position, gesture_id, description, marker_at in found:
        if labels and labels[-1].start_char == position:
            logger.warning(
                "Dropping marker %s at char %d: position already labeled by %s",
                gesture_id,
                marker_at,
                labels[-1].gesture_id,
            )
            continue
        labels.append(
            GestureLabel(
                gesture_id=gesture_id,
                description=description,
                start_char=position,
                duration_chars=token_length(clean_text, position),
            )
        )
    return AnnotatedText(clean_text, tuple(labels))


def format_marker(label: GestureLabel) -> str:
    if label.description:
        return f"(id: {label.gesture_id}, description: {label.description})"
    return f"(id: {label.gesture_id})"


def render_inline(a: AnnotatedText) -> str:
    """Insert canonical markers in front of each label's start position."""
    _check_labels(a.clean_text, a.labels)
    parts: list[str] = []
    cursor = 0
    for label in a.labels:
        parts.append(a.clean_text[cursor : label.start_char])
        parts.append(format_marker(label))
        parts.append(" ")
        cursor = label.start_char
    parts.append(a.clean_text[cursor:])
    return "".join(parts)


def split_sentences(text: str) -> list[SentenceSpan]:
    """Split on terminal punctuation.

    ``. ! ?`` end a sentence when followed by whitespace or the end of the
    text; full-width ``。！？`` always do. Whitespace between sentences belongs
    to no span; a trailing fragment without a terminator is its own span.
    """
    spans: list[SentenceSpan] = []
    length = len(text)

    def skip_space(index: int) -> int:
        while index < length and text[index].isspace():
            index += 1
        return index

    cursor = skip_space(0)
    while cursor < length:
        boundary = _BOUNDARY.search(text, cursor)
        if boundary is None:
            spans.append(SentenceSpan(cursor, len(text.rstrip())))
            break
        spans.append(SentenceSpan(cursor, boundary.end()))
        cursor = skip_space(boundary.end())
    return spans


def sentence_of(spans: list[SentenceSpan], position: int) -> int:
    """Index of the sentence owning ``position``; -1 when there are none.

    Positions between sentences belong to the preceding sentence.
    """
    if not spans:
        return -1
    index = bisect.bisect_right([span.start_char for span in spans], position) - 1
    return max(index, 0)


def _normalize_name(text: str) -> str:
    return " ".join(text.casefold().split())


def resolve_labels(a: AnnotatedText, e: Ethogram) -> AnnotatedText:
    return a.with_labels(
        [replace(label, resolved=e.get(label.gesture_id) is not None) for label in a.labels]
    )


def validate_labels(a: AnnotatedText, e: Ethogram) -> list[Diagnostic]:
    """Check labels against the ethogram.

    Unknown IDs and out-of-range positions are errors; a description that
    differs from the entry name is only a warning, since model output often
    paraphrases.
    """
    diagnostics: list[Diagnostic] = []
    for index, label in enumerate(a.labels):
        locus = f"labels[{index}] ({label.gesture_id})"
        if label.end_char > len(a.clean_text):
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "LabelOutOfRange",
                    f"label ends at {label.end_char}, text has {len(a.clean_text)} characters",
                    locus,
                )
            )
        entry = e.get(label.gesture_id)
        if entry is None:
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "UnresolvedId",
                    f"gesture id {label.gesture_id!r} is not in the ethogram",
                    locus,
                )
            )
        elif label.description and _normalize_name(label.description) != _normalize_name(entry.name):
            diagnostics.append(
                Diagnostic(
                    Severity.WARNING,
                    "DescriptionMismatch",
                    f"description {label.description!r} differs from entry name {entry.name!r}",
                    locus,
                )
            )
    return diagnostics
