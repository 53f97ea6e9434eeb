"""Serializers validating the toolkit's structured documents.

Ethogram files, label sidecars, dataset lines and stored evaluation reports
are all plain JSON; these serializers check their shape before the library
types are built from them.
"""

from collections.abc import Iterator
from typing import Any

from rest_framework import serializers

from .emotions import EmotionCategory

EMOTION_CHOICES = [category.value for category in EmotionCategory]


class EthogramEntrySerializer(serializers.Serializer):
    """Serializer for one action-layer gesture entry."""

    id = serializers.CharField()
    # Emptiness of the text fields is reported by ethogram.validate, which
    # names the field in its diagnostic.
    name = serializers.CharField(allow_blank=True)
    sub_intent = serializers.CharField(allow_blank=True)
    description = serializers.CharField(allow_blank=True)
    guideline = serializers.CharField(allow_blank=True, default="")
    keywords = serializers.ListField(child=serializers.CharField(), default=list)
    emotion = serializers.ChoiceField(choices=EMOTION_CHOICES)
    flat_id = serializers.IntegerField(min_value=1, default=None)


class EthogramDocumentSerializer(serializers.Serializer):
    """Serializer for a whole ethogram document."""

    entries = EthogramEntrySerializer(many=True, allow_empty=True)


class GestureLabelSerializer(serializers.Serializer):
    """Serializer for one placed label in the sidecar format."""

    id = serializers.CharField()
    description = serializers.CharField(allow_blank=True, trim_whitespace=False, default="")
    start_char = serializers.IntegerField(min_value=0)
    duration_chars = serializers.IntegerField(min_value=1)


class UsageSerializer(serializers.Serializer):
    latency_seconds = serializers.FloatField(min_value=0.0, allow_null=True, default=None)
    prompt_tokens = serializers.IntegerField(min_value=0, default=0)
    completion_tokens = serializers.IntegerField(min_value=0, default=0)


class SidecarRecordSerializer(serializers.Serializer):
    """Serializer for a clean text plus its labels."""

    text = serializers.CharField(allow_blank=True, trim_whitespace=False)
    labels = GestureLabelSerializer(many=True, allow_empty=True)
    usage = UsageSerializer(required=False)


class ProvenanceSerializer(serializers.Serializer):
    model = serializers.CharField()
    config_digest = serializers.CharField()
    timestamp = serializers.CharField()


class DatasetRecordSerializer(serializers.Serializer):
    """Serializer for one line of a dataset file."""

    input = serializers.CharField(trim_whitespace=False)
    output = serializers.CharField(trim_whitespace=False)
    labels = GestureLabelSerializer(many=True, allow_empty=True)
    provenance = ProvenanceSerializer()


class CategoryTallySerializer(serializers.Serializer):
    gold_count = serializers.IntegerField(min_value=0)
    hit_count = serializers.IntegerField(min_value=0)
    predicted_count = serializers.IntegerField(min_value=0, default=0)


class LatencySerializer(serializers.Serializer):
    mean = serializers.FloatField(min_value=0.0)
    p50 = serializers.FloatField(min_value=0.0)
    p95 = serializers.FloatField(min_value=0.0)


class CostSerializer(serializers.Serializer):
    tokens_in = serializers.IntegerField(min_value=0)
    tokens_out = serializers.IntegerField(min_value=0)
    amount = serializers.CharField()
    currency = serializers.CharField()


class EvalReportSerializer(serializers.Serializer):
    """Serializer for a stored evaluation report."""

    partial_overlap_exact = serializers.CharField()
    gold_total = serializers.IntegerField(min_value=0)
    hit_total = serializers.IntegerField(min_value=0)
    n_cases = serializers.IntegerField(min_value=0)
    per_category = serializers.DictField(child=CategoryTallySerializer())
    latency = LatencySerializer()
    cost = CostSerializer()


def _child_locus(locus: str, key: Any) -> str:
    if isinstance(key, int) or (isinstance(key, str) and key.isdigit()):
        return f"{locus}[{key}]"
    return f"{locus}.{key}" if locus else str(key)


def iter_errors(errors: Any, locus: str = "") -> Iterator[tuple[str, str]]:
    """Flatten a DRF error tree into ``(locus, message)`` pairs.

    Loci read like ``entries[3].emotion`` whether list errors arrive as lists
    or as index-keyed dicts.
    """
    if isinstance(errors, dict):
        for key, value in errors.items():
            if key == "non_field_errors":
                yield from iter_errors(value, locus)
            else:
                yield from iter_errors(value, _child_locus(locus, key))
    elif isinstance(errors, list):
        if all(isinstance(item, str) for item in errors):
            for message in errors:
                yield locus, str(message)
        else:
            for index, item in enumerate(errors):
                if item:
                    yield from iter_errors(item, f"{locus}[{index}]")
    else:
        yield locus, str(errors)


def first_error(errors: Any) -> str:
    """Render the first error of a DRF error tree as ``locus: message``."""
    for locus, message in iter_errors(errors):
        return f"{locus}: {message}" if locus else message
    return "invalid document"
