import json

import pytest

from gestures.ethogram import (
    EmotionCategory,
    GestureId,
    IntentCategory,
    Severity,
    diagnose_document,
    guideline_digest,
    load_ethogram,
    loads_ethogram,
    lookup,
    render_ethogram,
    search_by_keyword,
    validate,
)
from gestures.exceptions import (
    DuplicateId,
    EmptyEthogram,
    EmptyField,
    InvalidQuery,
    MalformedDocument,
    UnknownCategory,
    UnknownId,
)
from gestures.serializers import EMOTION_CHOICES, first_error, iter_errors
from gestures.tests.conftest import FIXTURES, SMALL_ETHOGRAM


def _document(**changes):
    data = json.loads(SMALL_ETHOGRAM)
    for position, fields in changes.items():
        data["entries"][int(position.removeprefix("entry"))].update(fields)
    return json.dumps(data)


def test_shipped_ethogram_is_sound(ethogram):
    assert len(ethogram) >= 77
    assert validate(ethogram) == []
    assert diagnose_document((FIXTURES / "ethogram.json").read_text(encoding="utf-8")) == []
    assert {entry.emotion_category for entry in ethogram} == set(EmotionCategory)
    assert {entry.category for entry in ethogram} == set(IntentCategory)


@pytest.mark.parametrize(
    "gesture_id, name, sub_intent",
    [
        ("A-1", "Stretch Shoulders", "Display Appearance"),
        ("A-2", "Thumbs Down", "Display Special Meaning"),
        ("B-1", "Point Finger in Target Direction", "Concrete Direction"),
        ("B-2", "Form Hands into a Circle", "Concrete Shape"),
        ("C-1", "Wave Palm Upwards", "Questioning Tone"),
        ("C-2", "Shake Interlocked Fists", "Emphasizing Tone"),
        ("D-1", "Rub or Pinch Fingers", "Soothe Nervousness"),
        ("D-2", "Cover Eyes with Hands", "Soothe Fear"),
    ],
)
def test_shipped_ethogram_holds_taxonomy_examples(ethogram, gesture_id, name, sub_intent):
    entry = lookup(ethogram, gesture_id)
    assert entry.name == name
    assert entry.sub_intent == sub_intent


def test_lookup_canonical_and_flat_ids_agree(ethogram):
    assert lookup(ethogram, "D-2").name == "Cover Eyes with Hands"
    assert lookup(ethogram, "A-97").name == "Spread Arms Wide"
    assert lookup(ethogram, "9").name == "Touch Forehead"
    assert lookup(ethogram, "a - 6") is lookup(ethogram, "6")
    for entry in ethogram:
        assert lookup(ethogram, str(entry.flat_id)) is lookup(ethogram, str(entry.id))


@pytest.mark.parametrize("missing", ["Z-1", "A-999", "", "9999", "clap"])
def test_lookup_unknown_id(ethogram, missing):
    with pytest.raises(UnknownId):
        lookup(ethogram, missing)


def test_flat_ids_follow_document_order(small_ethogram):
    assert [entry.flat_id for entry in small_ethogram] == [1, 2, 3, 4, 5, 6]
    assert small_ethogram.lookup("2").id == GestureId(IntentCategory.INFORMATION_DISPLAY, 6)


def test_search_by_keyword(small_ethogram):
    assert [str(e.id) for e in search_by_keyword(small_ethogram, "amazing")] == ["A-6", "D-2"]
    assert [str(e.id) for e in search_by_keyword(small_ethogram, "  WELL   done ")] == ["A-6"]
    assert search_by_keyword(small_ethogram, "dragon") == []
    with pytest.raises(InvalidQuery):
        search_by_keyword(small_ethogram, "   ")


def test_gesture_id_parse_and_format():
    gesture_id = GestureId.parse(" c-12 ")
    assert gesture_id.category is IntentCategory.TONE_REINFORCEMENT
    assert str(gesture_id) == "C-12"
    assert gesture_id.category.label == "ToneReinforcement"
    with pytest.raises(UnknownCategory):
        GestureId.parse("Q-3")
    with pytest.raises(InvalidQuery):
        GestureId.parse("A15")


def test_layer_browsing(ethogram):
    comfort = ethogram.by_category("D")
    assert comfort and all(entry.category is IntentCategory.COMFORT_BEHAVIORS for entry in comfort)
    assert ethogram.sub_intents(IntentCategory.COMFORT_BEHAVIORS)[:2] == ["Soothe Nervousness", "Soothe Fear"]
    assert lookup(ethogram, "A-4") in ethogram.by_emotion("special")


def test_duplicate_id_yields_one_diagnostic():
    diagnostics = diagnose_document(_document(entry3={"id": "A-6"}))
    assert [(d.severity, d.code) for d in diagnostics] == [(Severity.ERROR, "DuplicateId")]
    assert diagnostics[0].locus == "entries[3] (A-6)"
    with pytest.raises(DuplicateId) as excinfo:
        loads_ethogram(_document(entry3={"id": "A-6"}))
    assert excinfo.value.diagnostics == diagnostics


def test_bad_category_yields_one_diagnostic():
    diagnostics = diagnose_document(_document(entry2={"id": "X-4"}))
    assert [d.code for d in diagnostics] == ["UnknownCategory"]
    with pytest.raises(UnknownCategory):
        loads_ethogram(_document(entry2={"id": "X-4"}))


def test_empty_name_yields_one_diagnostic():
    diagnostics = diagnose_document(_document(entry0={"name": "  "}))
    assert [d.code for d in diagnostics] == ["EmptyField"]
    assert "name" in diagnostics[0].message
    with pytest.raises(EmptyField):
        loads_ethogram(_document(entry0={"name": ""}))


def test_bad_emotion_is_reported_with_locus():
    diagnostics = diagnose_document(_document(entry1={"emotion": "boredom"}))
    assert [d.locus for d in diagnostics] == ["entries[1].emotion"]
    assert diagnostics[0].code == "MalformedDocument"


def test_flat_ids_must_be_consecutive():
    diagnostics = diagnose_document(_document(entry0={"flat_id": 1}, entry1={"flat_id": 7}))
    assert [d.code for d in diagnostics] == ["InvalidFlatId"]


def test_repeated_keyword_only_warns():
    text = _document(entry0={"keywords": ["relaxed", "Relaxed"]})
    diagnostics = diagnose_document(text)
    assert [(d.severity, d.code) for d in diagnostics] == [(Severity.WARNING, "DuplicateKeyword")]
    assert diagnostics[0].locus == "entries[0] (A-1)"
    loaded = loads_ethogram(text)
    assert len(loaded) == 6
    assert loaded.get("A-1").keywords == ("relaxed",)
    assert validate(loaded) == []


def test_malformed_and_empty_documents():
    with pytest.raises(MalformedDocument) as excinfo:
        loads_ethogram('{"entries": [')
    assert "line 1" in str(excinfo.value)
    with pytest.raises(MalformedDocument):
        loads_ethogram("[]")
    with pytest.raises(EmptyEthogram):
        loads_ethogram('{"entries": []}')


def test_render_then_load_is_identity(small_ethogram, tmp_path):
    path = tmp_path / "ethogram.json"
    path.write_text(render_ethogram(small_ethogram), encoding="utf-8")
    assert load_ethogram(path) == small_ethogram


def test_guideline_digest(small_ethogram):
    lines = guideline_digest(small_ethogram)
    assert len(lines) == 6
    assert lines[1] == "A-6 | Clap Hands | Praise and good news. | keywords: amazing, well done"


def test_error_loci_read_the_same_for_list_and_index_keyed_errors():
    as_list = {"entries": [{}, {"emotion": ["not a valid choice."]}]}
    as_dict = {"entries": {1: {"emotion": ["not a valid choice."]}}}
    as_text_keys = {"entries": {"1": {"emotion": ["not a valid choice."]}}}
    expected = [("entries[1].emotion", "not a valid choice.")]
    assert list(iter_errors(as_list)) == expected
    assert list(iter_errors(as_dict)) == expected
    assert list(iter_errors(as_text_keys)) == expected
    assert first_error({"non_field_errors": ["broken"], "cost": {"amount": ["bad"]}}) == "broken"


def test_emotion_choices_follow_the_enum():
    assert EMOTION_CHOICES == [category.value for category in EmotionCategory]
    assert "special" in EMOTION_CHOICES
