"""Partial Overlap evaluation over emotion categories.

Gold and predicted labels of every case are mapped to the set of emotion
categories of the gestures they reference, then

    partial overlap = sum |pred_i & gold_i| / sum |gold_i|

is computed with exact fractions. Reports also carry per-category tallies,
per-case latency percentiles and the token cost under declared prices.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any

from tabulate import tabulate

from .annotation import GestureLabel
from .backends import BackendCapabilities
from .ethogram import EmotionCategory, Ethogram
from .exceptions import CaseCountMismatch, MalformedReport, UnknownId, ZeroGold
from .intent_chain import TokenUsage
from .serializers import EvalReportSerializer, first_error
from .sidecar import read_sidecar

logger = logging.getLogger(__name__)

CategorySet = frozenset[EmotionCategory]


def format_fraction(value: Fraction, places: int = 4) -> str:
    """Round an exact fraction to ``places`` decimals, half to even."""
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    return str(exact.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN))


def format_delta(value: Fraction, places: int = 4) -> str:
    text = format_fraction(value, places)
    return text if text.startswith("-") else f"+{text}"


@dataclass(frozen=True)
class EvalCase:
    text: str
    gold_labels: tuple[GestureLabel, ...]
    predicted_labels: tuple[GestureLabel, ...]


def map_to_categories(
    labels: Iterable[GestureLabel], e: Ethogram, strict: bool = True
) -> CategorySet:
    """Emotion categories referenced by ``labels``, deduplicated.

    Unknown IDs raise ``UnknownId`` when ``strict``; otherwise they map to
    nothing and are logged.
    """
    categories: set[EmotionCategory] = set()
    for label in labels:
        entry = e.get(label.gesture_id)
        if entry is None:
            if strict:
                raise UnknownId(label.gesture_id)
            logger.warning("Predicted gesture %s is not in the ethogram; scored as a miss", label.gesture_id)
            continue
        categories.add(entry.emotion_category)
    return frozenset(categories)


def partial_overlap(pairs: Iterable[tuple[CategorySet, CategorySet]]) -> Fraction:
    """Exact metric over ``(gold, predicted)`` category sets."""
    hits = gold_total = 0
    for gold, predicted in pairs:
        hits += len(gold & predicted)
        gold_total += len(gold)
    if gold_total == 0:
        raise ZeroGold()
    return Fraction(hits, gold_total)


@dataclass(frozen=True)
class CategoryTally:
    gold_count: int = 0
    hit_count: int = 0
    predicted_count: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "gold_count": self.gold_count,
            "hit_count": self.hit_count,
            "predicted_count": self.predicted_count,
        }


def percentile(ordered: Sequence[float], q: float) -> float:
    """Linear interpolation between closest ranks of sorted samples."""
    if not ordered:
        return 0.0
    position = (len(ordered) - 1) * q
    low = math.floor(position)
    high = math.ceil(position)
    return ordered[low] + (ordered[high] - ordered[low]) * (position - low)


@dataclass(frozen=True)
class LatencyStats:
    mean: float = 0.0
    p50: float = 0.0
    p95: float = 0.0

    @classmethod
    def from_samples(cls, samples: Iterable[float]) -> LatencyStats:
        ordered = sorted(samples)
        if not ordered:
            return cls()
        return cls(
            mean=sum(ordered) / len(ordered),
            p50=percentile(ordered, 0.5),
            p95=percentile(ordered, 0.95),
        )

    def to_dict(self) -> dict[str, float]:
        return {"mean": self.mean, "p50": self.p50, "p95": self.p95}


@dataclass(frozen=True)
class CostStats:
    tokens_in: int = 0
    tokens_out: int = 0
    amount: Fraction = Fraction(0)
    currency: str = "USD"

    def to_dict(self) -> dict[str, Any]:
        return {
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
            "amount": str(self.amount),
            "currency": self.currency,
        }


def _all_categories() -> dict[EmotionCategory, CategoryTally]:
    return {category: CategoryTally() for category in EmotionCategory}


@dataclass(frozen=True)
class EvalReport:
    """Outcome of one evaluation run.

    A run without gold labels keeps ``partial_overlap_exact`` at 0 with
    ``gold_total`` 0; comparing such a report raises ``ZeroGold``.
    """

    partial_overlap_exact: Fraction
    gold_total: int
    hit_total: int
    n_cases: int
    per_category: dict[EmotionCategory, CategoryTally] = field(default_factory=_all_categories)
    latency: LatencyStats = LatencyStats()
    cost: CostStats = CostStats()

    def __post_init__(self) -> None:
        expected = Fraction(self.hit_total, self.gold_total) if self.gold_total else Fraction(0)
        if self.partial_overlap_exact != expected:
            raise ValueError("partial overlap disagrees with the hit and gold totals")
        if not 0 <= self.partial_overlap_exact <= 1:
            raise ValueError("partial overlap must lie in [0, 1]")

    @property
    def partial_overlap(self) -> float:
        return float(self.partial_overlap_exact)


def evaluate(
    cases: Sequence[EvalCase],
    e: Ethogram,
    timings: Iterable[float] | None = None,
    usage: TokenUsage | None = None,
    capabilities: BackendCapabilities | None = None,
) -> EvalReport:
    """Score predicted labels against gold labels case by case."""
    tallies = {category: [0, 0, 0] for category in EmotionCategory}
    pairs: list[tuple[CategorySet, CategorySet]] = []
    for index, case in enumerate(cases):
        try:
            gold = map_to_categories(case.gold_labels, e)
        except UnknownId as exc:
            raise UnknownId(exc.gesture_id, case_index=index) from exc
        predicted = map_to_categories(case.predicted_labels, e, strict=False)
        pairs.append((gold, predicted))
        for category in gold:
            tallies[category][0] += 1
            if category in predicted:
                tallies[category][1] += 1
        for category in predicted:
            tallies[category][2] += 1

    gold_total = sum(len(gold) for gold, _ in pairs)
    hit_total = sum(len(gold & predicted) for gold, predicted in pairs)
    exact = partial_overlap(pairs) if gold_total else Fraction(0)
    if not gold_total:
        logger.warning("No gold labels map to an emotion category; partial overlap is undefined")

    usage = usage or TokenUsage()
    if capabilities is not None:
        cost = CostStats(
            tokens_in=usage.prompt_tokens,
            tokens_out=usage.completion_tokens,
            amount=usage.cost(capabilities),
            currency=capabilities.currency,
        )
    else:
        cost = CostStats(tokens_in=usage.prompt_tokens, tokens_out=usage.completion_tokens)

    return EvalReport(
        partial_overlap_exact=exact,
        gold_total=gold_total,
        hit_total=hit_total,
        n_cases=len(cases),
        per_category={category: CategoryTally(*counts) for category, counts in tallies.items()},
        latency=LatencyStats.from_samples(timings or ()),
        cost=cost,
    )


def report_to_dict(report: EvalReport) -> dict[str, Any]:
    return {
        "partial_overlap": format_fraction(report.partial_overlap_exact),
        "partial_overlap_exact": str(report.partial_overlap_exact),
        "gold_total": report.gold_total,
        "hit_total": report.hit_total,
        "n_cases": report.n_cases,
        "per_category": {
            category.value: tally.to_dict() for category, tally in report.per_category.items()
        },
        "latency": report.latency.to_dict(),
        "cost": report.cost.to_dict(),
    }


def _fraction(text: str, name: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedReport(f"{name}: not an exact number: {text!r}") from exc


def report_from_dict(data: Any) -> EvalReport:
    serializer = EvalReportSerializer(data=data)
    if not serializer.is_valid():
        raise MalformedReport(first_error(serializer.errors))
    values = serializer.validated_data

    per_category = _all_categories()
    for name, tally in values["per_category"].items():
        try:
            category = EmotionCategory(name)
        except ValueError as exc:
            raise MalformedReport(f"per_category: unknown emotion category {name!r}") from exc
        per_category[category] = CategoryTally(**tally)

    try:
        return EvalReport(
            partial_overlap_exact=_fraction(values["partial_overlap_exact"], "partial_overlap_exact"),
            gold_total=values["gold_total"],
            hit_total=values["hit_total"],
            n_cases=values["n_cases"],
            per_category=per_category,
            latency=LatencyStats(**values["latency"]),
            cost=CostStats(
                tokens_in=values["cost"]["tokens_in"],
                tokens_out=values["cost"]["tokens_out"],
                amount=_fraction(values["cost"]["amount"], "cost.amount"),
                currency=values["cost"]["currency"],
            ),
        )
    except ValueError as exc:
        raise MalformedReport(str(exc)) from exc


def format_report(report: EvalReport) -> str:
    rows = [
        (category.value, tally.gold_count, tally.hit_count, tally.predicted_count)
        for category, tally in report.per_category.items()
    ]
    latency = report.latency
    cost = report.cost
    lines = [
        f"partial_overlap: {format_fraction(report.partial_overlap_exact)} "
        f"({report.hit_total}/{report.gold_total})",
        f"cases: {report.n_cases}",
        "",
        tabulate(rows, headers=["category", "gold", "hits", "predicted"], tablefmt="simple"),
        "",
        f"latency: mean {latency.mean:.4f}s  p50 {latency.p50:.4f}s  p95 {latency.p95:.4f}s",
        f"cost: {cost.tokens_in} in / {cost.tokens_out} out = "
        f"{format_fraction(cost.amount)} {cost.currency}",
    ]
    return "\n".join(lines)


def _rate(tally: CategoryTally) -> Fraction | None:
    return Fraction(tally.hit_count, tally.gold_count) if tally.gold_count else None


def compare_reports(a: EvalReport, b: EvalReport) -> str:
    """Side-by-side table of two reports; deltas read ``b - a``."""
    if not a.gold_total or not b.gold_total:
        raise ZeroGold()

    def row(name: str, left: Fraction | None, right: Fraction | None) -> list[str]:
        cells = [format_fraction(v) if v is not None else "-" for v in (left, right)]
        delta = format_delta(right - left) if left is not None and right is not None else "-"
        return [name, *cells, delta]

    rows = [row("partial_overlap", a.partial_overlap_exact, b.partial_overlap_exact)]
    for category in EmotionCategory:
        rows.append(row(category.value, _rate(a.per_category[category]), _rate(b.per_category[category])))
    rows.append(row("latency_mean", Fraction(a.latency.mean), Fraction(b.latency.mean)))
    rows.append(row("cost", a.cost.amount, b.cost.amount))
    # Cells are preformatted strings.
    return tabulate(
        rows,
        headers=["metric", "a", "b", "delta"],
        tablefmt="plain",
        colalign=("left", "right", "right", "right"),
        disable_numparse=True,
    )


@dataclass(frozen=True)
class EvalInputs:
    cases: list[EvalCase]
    timings: list[float]
    usage: TokenUsage


def load_eval_cases(gold_path: str | Path, predicted_path: str | Path) -> EvalInputs:
    """Pair a gold sidecar with a predicted sidecar in case order.

    Usage recorded on predicted cases supplies timings and token counts.
    """
    gold = read_sidecar(gold_path)
    predicted = read_sidecar(predicted_path)
    if len(gold) != len(predicted):
        raise CaseCountMismatch(
            f"gold has {len(gold)} case(s) but predictions have {len(predicted)}"
        )

    cases = []
    timings: list[float] = []
    usage = TokenUsage()
    for index, (expected, actual) in enumerate(zip(gold, predicted, strict=True)):
        if expected.annotated.clean_text != actual.annotated.clean_text:
            logger.warning("Case %d: gold and predicted texts differ", index)
        cases.append(
            EvalCase(
                text=expected.annotated.clean_text,
                gold_labels=expected.annotated.labels,
                predicted_labels=actual.annotated.labels,
            )
        )
        if actual.usage is not None:
            if actual.usage.latency_seconds is not None:
                timings.append(actual.usage.latency_seconds)
            usage = usage + TokenUsage(
                request_count=1,
                prompt_tokens=actual.usage.prompt_tokens,
                completion_tokens=actual.usage.completion_tokens,
            )
    return EvalInputs(cases, timings, usage)
