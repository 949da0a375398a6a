"""Domain core: record types, inquiry config, prescription loader, preprocessing."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcmflow.knowledge import (
    BadTqsFile,
    CaseRecord,
    DuplicateId,
    ExtractionEmpty,
    IoFailure,
    MalformedRecord,
    PrescriptionEntry,
    load_blocklist,
    load_prescription_db,
    preprocess_case_record,
    save_prescription_db,
    tqs_items,
)
from tcmflow.prompts import TAG_TQS_EXTRACT
from tcmflow.records import ChiefComplaint, ConsultationState, ConsultationTurn, Question

from conftest import make_state, scripted


def entry_dict(entry_id: str, **overrides) -> dict:
    base = {
        "id": entry_id,
        "disease_category": "internal medicine",
        "syndrome_type": "damp-heat sinking downward",
        "etiology": "damp-heat",
        "affected_organ": "large intestine",
        "clinical_manifestations": "diarrhea and burning",
        "syndrome_mechanism": "damp-heat pours downward",
        "treatment_methods": "clear heat",
        "representative_formula": "Gegen Qinlian Decoction",
        "herbs": ["ge gen"],
    }
    base.update(overrides)
    return base


def write_db(tmp_path, rows: list[dict]):
    path = tmp_path / "db.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return path


class TestRecords:
    def test_complaint_requires_text(self):
        with pytest.raises(ValueError):
            ChiefComplaint(text="   ", submitted_at="t")

    def test_turn_indices_contiguous(self):
        complaint = ChiefComplaint(text="c", submitted_at="t")
        with pytest.raises(ValueError):
            ConsultationState(chief_complaint=complaint,
                              turns=(ConsultationTurn(index=1, question="q", answer="a"),))

    def test_with_turns_is_value_semantic(self):
        state = make_state(("q0", "a0"))
        grown = state.with_turns([("q1", "a1")])
        assert len(state.turns) == 1 and len(grown.turns) == 2
        assert grown.turns[1].index == 1

    def test_question_kind_checked(self):
        with pytest.raises(ValueError):
            Question(text="q", rationale="r", source="s", kind="mystery")


class TestTqsConfig:
    def test_default_has_ten_unique_items(self):
        cfg = tqs_items()
        assert len(cfg.items) == 10
        assert len(set(cfg.names())) == 10

    def test_custom_file_passthrough(self, tmp_path):
        items = [{"name": f"cat{i}", "canonical_text": f"text {i}"} for i in range(10)]
        path = tmp_path / "tqs.json"
        path.write_text(json.dumps({"items": items}), encoding="utf-8")
        cfg = tqs_items(path)
        assert cfg.names() == [f"cat{i}" for i in range(10)]
        assert cfg.canonical_texts() == [f"text {i}" for i in range(10)]

    def test_nine_items_rejected(self, tmp_path):
        items = [{"name": f"cat{i}", "canonical_text": "t"} for i in range(9)]
        path = tmp_path / "tqs.json"
        path.write_text(json.dumps({"items": items}), encoding="utf-8")
        with pytest.raises(BadTqsFile):
            tqs_items(path)

    def test_duplicate_names_rejected(self, tmp_path):
        items = [{"name": "same", "canonical_text": "t"} for _ in range(10)]
        path = tmp_path / "tqs.json"
        path.write_text(json.dumps({"items": items}), encoding="utf-8")
        with pytest.raises(BadTqsFile):
            tqs_items(path)


class TestPrescriptionLoader:
    def test_loads_five_entries_in_order(self, tmp_path):
        rows = [entry_dict(f"rx-{i}") for i in range(5)]
        entries = load_prescription_db(write_db(tmp_path, rows))
        assert [e.id for e in entries] == [f"rx-{i}" for i in range(5)]

    def test_duplicate_id_names_line(self, tmp_path):
        rows = [entry_dict("rx-1"), entry_dict("rx-2"), entry_dict("rx-1")]
        with pytest.raises(DuplicateId) as err:
            load_prescription_db(write_db(tmp_path, rows))
        assert err.value.line_no == 3
        assert err.value.entry_id == "rx-1"

    def test_missing_syndrome_type_is_malformed(self, tmp_path):
        rows = [entry_dict("rx-1"), entry_dict("rx-2", syndrome_type="")]
        with pytest.raises(MalformedRecord) as err:
            load_prescription_db(write_db(tmp_path, rows))
        assert err.value.line_no == 2

    def test_unparseable_line_reports_number(self, tmp_path):
        path = tmp_path / "db.jsonl"
        path.write_text(json.dumps(entry_dict("rx-1")) + "\nnot json\n", encoding="utf-8")
        with pytest.raises(MalformedRecord) as err:
            load_prescription_db(path)
        assert err.value.line_no == 2

    def test_missing_file_is_io_failure(self, tmp_path):
        with pytest.raises(IoFailure):
            load_prescription_db(tmp_path / "absent.jsonl")

    def test_round_trip_preserves_entries(self, tmp_path):
        rows = [entry_dict(f"rx-{i}", herbs=["a", "b"]) for i in range(4)]
        first = load_prescription_db(write_db(tmp_path, rows))
        out = tmp_path / "copy.jsonl"
        save_prescription_db(first, out)
        second = load_prescription_db(out)
        assert first == second


class TestPreprocess:
    def narrative_case(self, narrative: str) -> CaseRecord:
        return CaseRecord(id="case-1", narrative=narrative)

    def test_scripted_extraction_passthrough(self, tqs):
        payload = json.dumps({"sweating": "night sweats for 3 days"})
        backend = scripted([(TAG_TQS_EXTRACT, payload)])
        case = preprocess_case_record(self.narrative_case("night sweats for 3 days"),
                                      backend, tqs)
        assert case.tqs_extract == {"sweating": "night sweats for 3 days"}

    def test_instrument_noise_filtered(self, tqs):
        payload = json.dumps({
            "sweating": "patient refused cranial CT. night sweats for 3 days",
        })
        backend = scripted([(TAG_TQS_EXTRACT, payload)])
        case = preprocess_case_record(
            self.narrative_case("patient refused cranial CT; night sweats for 3 days"),
            backend, tqs,
        )
        assert "sweating" in case.tqs_extract
        assert "CT" not in case.tqs_extract["sweating"]
        assert "night sweats" in case.tqs_extract["sweating"]

    def test_degenerate_narrative_raises(self, tqs):
        backend = scripted([], default="{}")
        with pytest.raises(ExtractionEmpty):
            preprocess_case_record(self.narrative_case("n/a"), backend, tqs)

    def test_unknown_keys_dropped(self, tqs):
        payload = json.dumps({"sweating": "some", "made_up_key": "noise"})
        backend = scripted([(TAG_TQS_EXTRACT, payload)])
        case = preprocess_case_record(self.narrative_case("some sweating"), backend, tqs)
        assert set(case.tqs_extract) == {"sweating"}

    def test_custom_blocklist_file(self, tmp_path):
        path = tmp_path / "blocklist.json"
        path.write_text(json.dumps({"terms": ["tomograph"]}), encoding="utf-8")
        assert load_blocklist(path) == ["tomograph"]

    def test_blocklist_word_boundary(self):
        # "CT" must not knock out clauses mentioning a doctor
        terms = load_blocklist()
        assert "CT" in terms
        payload = json.dumps({"cause": "the doctor advised rest after a chill"})
        backend = scripted([(TAG_TQS_EXTRACT, payload)])
        case = preprocess_case_record(self.narrative_case("saw the doctor after a chill"),
                                      backend, tqs_items())
        assert case.tqs_extract["cause"].startswith("the doctor")

    @given(st.dictionaries(
        st.sampled_from(["sweating", "thirst", "cause", "bogus_a", "bogus_b"]),
        st.text(alphabet="abc xyz", min_size=1, max_size=20),
        min_size=1, max_size=5,
    ))
    @settings(max_examples=60, deadline=None)
    def test_extract_keys_always_subset_of_config(self, extraction):
        tqs = tqs_items()
        backend = scripted([(TAG_TQS_EXTRACT, json.dumps(extraction))])
        try:
            case = preprocess_case_record(
                CaseRecord(id="c", narrative="full narrative text"), backend, tqs)
        except ExtractionEmpty:
            return
        assert set(case.tqs_extract) <= set(tqs.names())
