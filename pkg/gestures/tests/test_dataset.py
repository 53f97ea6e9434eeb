import random

import pytest

from gestures.annotation import AnnotatedText, GestureLabel, parse_inline, render_inline
from gestures.dataset import (
    UNRESOLVED,
    DatasetBuilder,
    DatasetRecord,
    Provenance,
    build_dataset,
    dataset_stats,
    format_stats,
    ingest_corpus,
    provenance_timestamp,
    read_dataset,
    write_dataset,
)
from gestures.exceptions import CorpusEncodingError, DatasetError, MalformedRecord
from gestures.intent_chain import ChainConfig, IntentChain
from gestures.prompts import CharacterProfile
from gestures.tests.conftest import WELCOME_INPUT, WELCOME_OUTPUT, StageBackend, prompt_text

PROVENANCE = Provenance("test-model", "abc123", "2024-01-01T00:00:00+00:00")


def _record(output):
    annotated = parse_inline(output)
    return DatasetRecord(annotated.clean_text, output, annotated.labels, PROVENANCE)


def _chain(ethogram, label_reply):
    return IntentChain(
        ethogram,
        StageBackend({"label": label_reply, "keywords": ""}),
        CharacterProfile("Ava", "A cheerful virtual host."),
        ChainConfig(max_reflection_rounds=0),
    )


def _write(tmp_path, content, name="corpus.txt"):
    path = tmp_path / name
    if isinstance(content, bytes):
        path.write_bytes(content)
    else:
        path.write_text(content, encoding="utf-8")
    return path


def test_ingest_corpus(tmp_path):
    assert ingest_corpus(_write(tmp_path, "A. B!")) == ["A.", "B!"]
    assert ingest_corpus(_write(tmp_path, "")) == []
    paragraph = "We met. It rained!   Did you see it?\n\n  \nNext line without stop\n"
    assert ingest_corpus(_write(tmp_path, paragraph)) == [
        "We met.",
        "It rained!",
        "Did you see it?",
        "Next line without stop",
    ]


def test_ingest_corpus_joins_wrapped_sentences(tmp_path):
    wrapped = "It is so great to have you\nhere today. Bye!\n"
    assert ingest_corpus(_write(tmp_path, wrapped)) == ["It is so great to have you here today.", "Bye!"]
    paragraphs = "A heading\n\nThe first  sentence\n  runs on.\r\n\r\nLast one"
    assert ingest_corpus(_write(tmp_path, paragraphs)) == [
        "A heading",
        "The first sentence runs on.",
        "Last one",
    ]


def test_ingest_corpus_rejects_invalid_utf8(tmp_path):
    with pytest.raises(CorpusEncodingError):
        ingest_corpus(_write(tmp_path, b"caf\xe9 au lait."))


def test_build_welcome_record(ethogram):
    records = build_dataset([WELCOME_INPUT], _chain(ethogram, WELCOME_OUTPUT))
    (record,) = records
    assert record.input == WELCOME_INPUT
    assert record.output == WELCOME_OUTPUT
    assert [label.gesture_id for label in record.labels] == ["A-97", "A-6"]
    assert record.provenance.config_digest == ChainConfig(max_reflection_rounds=0).digest()


def test_build_skips_failed_units(ethogram):
    build = DatasetBuilder(_chain(ethogram, "I would rather not.")).build(["Just one sentence."])
    assert build.records == ()
    assert [(skip.index, skip.text) for skip in build.skipped] == [(0, "Just one sentence.")]


def test_build_preserves_corpus_order(ethogram):
    corpus = [f"Sentence number {i} is here." for i in range(10)]

    def label(request):
        text = prompt_text(request)
        return text.replace("number", "(id: A-6) number", 1) if "3" in text else text

    serial = DatasetBuilder(_chain(ethogram, label), parallelism=1).build(corpus)
    parallel = DatasetBuilder(_chain(ethogram, label), parallelism=4).build(corpus)
    assert [record.input for record in serial.records] == corpus
    assert [record.output for record in parallel.records] == [record.output for record in serial.records]
    assert [len(record.labels) for record in serial.records] == [0, 0, 0, 1, 0, 0, 0, 0, 0, 0]
    assert serial.usage.request_count == 20


def test_record_invariants():
    with pytest.raises(DatasetError):
        DatasetRecord("different text", WELCOME_OUTPUT, parse_inline(WELCOME_OUTPUT).labels, PROVENANCE)
    with pytest.raises(DatasetError):
        DatasetRecord(WELCOME_INPUT, WELCOME_OUTPUT, (), PROVENANCE)


def test_write_then_read(tmp_path):
    records = [
        _record(WELCOME_OUTPUT),
        _record("今天(id: A-6, description: clapping) 真棒！"),
        _record("Grüße, (id: A-97) willkommen!"),
    ]
    path = tmp_path / "dataset.jsonl"
    write_dataset(path, records)
    assert "真棒" in path.read_text(encoding="utf-8")
    assert len(path.read_text(encoding="utf-8").splitlines()) == 3
    assert read_dataset(path) == records


def test_read_reports_line_of_truncated_record(tmp_path):
    path = tmp_path / "dataset.jsonl"
    write_dataset(path, [_record(WELCOME_OUTPUT), _record(WELCOME_OUTPUT)])
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text(lines[0] + "\n" + lines[1][:40] + "\n", encoding="utf-8")
    with pytest.raises(MalformedRecord) as excinfo:
        read_dataset(path)
    assert excinfo.value.line_number == 2
    assert str(excinfo.value).startswith("line 2:")


def test_read_rejects_inconsistent_record(tmp_path):
    path = tmp_path / "dataset.jsonl"
    path.write_text(
        '{"input": "x", "output": "y", "labels": [], '
        '"provenance": {"model": "m", "config_digest": "d", "timestamp": "t"}}\n',
        encoding="utf-8",
    )
    with pytest.raises(MalformedRecord) as excinfo:
        read_dataset(path)
    assert excinfo.value.line_number == 1


def test_provenance_timestamp_honours_source_date_epoch(settings):
    settings.SOURCE_DATE_EPOCH = 0
    assert provenance_timestamp() == "1970-01-01T00:00:00+00:00"


def test_stats_of_empty_dataset():
    stats = dataset_stats([])
    assert (stats.record_count, stats.label_count, stats.mean_labels_per_sentence) == (0, 0, 0.0)
    assert stats.by_gesture_id == {} and stats.by_emotion == {}


def test_stats_of_welcome_record(ethogram):
    stats = dataset_stats([_record(WELCOME_OUTPUT)], ethogram)
    assert stats.label_count == 2
    assert stats.by_gesture_id == {"A-97": 1, "A-6": 1}
    assert stats.by_emotion == {"joy": 2}
    assert stats.mean_labels_per_sentence == 1.0

    lines = format_stats(stats).splitlines()
    assert lines[:2] == ["records: 1", "labels: 2"]
    assert lines[lines.index("") + 1].split() == ["emotion", "count"]
    assert ["joy", "2"] in [line.split() for line in lines]
    assert ["A-97", "1"] in [line.split() for line in lines]


def test_stats_frequencies_sum_to_label_count(ethogram):
    rng = random.Random(11)
    ids = ["A-6", "6", "D-2", "C-1", "A-4", "Z-1", "999"]
    records = []
    for _ in range(50):
        words = [f"word{i}" for i in range(rng.randint(1, 8))]
        text = " ".join(words) + "."
        starts = [0] + [i + 1 for i, ch in enumerate(text) if ch == " "]
        labels = [
            GestureLabel(rng.choice(ids), "", start, len(text[start:].split(" ")[0].rstrip(".")))
            for start in sorted(rng.sample(starts, rng.randint(0, len(starts))))
        ]
        records.append(_record(render_inline(AnnotatedText(text, labels))))

    stats = dataset_stats(records, ethogram)
    assert sum(stats.by_gesture_id.values()) == stats.label_count
    assert sum(stats.by_emotion.values()) == stats.label_count
    assert stats.label_count == sum(len(record.labels) for record in records)
    assert "6" not in stats.by_gesture_id
    assert set(stats.by_emotion) <= {"joy", "fear", "special", UNRESOLVED}
