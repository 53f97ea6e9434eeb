"""Exception hierarchy for the gestures app."""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .ethogram import Diagnostic


class SargesError(Exception):
    """Base class for every domain error raised by the toolkit."""


# Ethogram


class EthogramError(SargesError):
    """An ethogram document or object violates its invariants."""

    code = "EthogramError"

    def __init__(self, message: str, diagnostics: Sequence[Diagnostic] = ()) -> None:
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class MalformedDocument(EthogramError):
    code = "MalformedDocument"


class EmptyEthogram(EthogramError):
    code = "EmptyEthogram"


class DuplicateId(EthogramError):
    code = "DuplicateId"


class UnknownCategory(EthogramError):
    code = "UnknownCategory"


class EmptyField(EthogramError):
    code = "EmptyField"


class InvalidFlatId(EthogramError):
    code = "InvalidFlatId"


class UnknownId(SargesError, KeyError):
    """No ethogram entry matches a gesture ID."""

    def __init__(self, gesture_id: str, case_index: int | None = None) -> None:
        self.gesture_id = gesture_id
        self.case_index = case_index
        message = f"unknown gesture id {gesture_id!r}"
        if case_index is not None:
            message = f"case {case_index}: {message}"
        super().__init__(message)

    def __str__(self) -> str:
        return str(self.args[0])


class InvalidQuery(SargesError, ValueError):
    pass


# Annotation


class AnnotationError(SargesError):
    pass


class MalformedMarker(AnnotationError):
    """An inline marker could not be parsed."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at char {position}")
        self.position = position


class OverlappingLabels(AnnotationError):
    pass


class LabelOutOfRange(AnnotationError):
    pass


# Intent chain


class ChainError(SargesError):
    """A chain run failed; ``transcript`` holds every exchange made so far."""

    def __init__(self, message: str, transcript: Sequence[Any] = ()) -> None:
        super().__init__(message)
        self.transcript = list(transcript)


class EmptyText(ChainError):
    pass


class BackendTimeout(ChainError):
    pass


class BackendError(ChainError):
    def __init__(
        self,
        message: str,
        status: int | None = None,
        transcript: Sequence[Any] = (),
    ) -> None:
        super().__init__(message, transcript)
        self.status = status


class Unparseable(ChainError):
    pass


# Dataset


class DatasetError(SargesError):
    pass


class MalformedRecord(DatasetError):
    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class CorpusEncodingError(DatasetError):
    pass


# Evaluation


class EvaluationError(SargesError):
    pass


class ZeroGold(EvaluationError):
    def __init__(self) -> None:
        super().__init__("gold labels map to no emotion category; partial overlap is undefined")


class CaseCountMismatch(EvaluationError):
    pass


class MalformedReport(EvaluationError):
    pass
