"""Consultation loop operations and whole-session behavior."""

from __future__ import annotations

import json
import logging
import random

import pytest

from tcmflow import prompts
from tcmflow.agents import form_team
from tcmflow.consultation.engine import (
    AnswerTimeout,
    BothEmpty,
    ConsultationEngine,
    EmptyGeneration,
    QueueAnswerSource,
    SessionConfig,
    conduct_round,
    evaluate_questions,
    merge_initial_questions,
    optimize_questions,
    propose_questions,
    refine_to_final,
    run_consultation,
    summarize_record,
)
from tcmflow.gateway.scripted import ScriptedChatBackend, ScriptEntry

from conftest import (
    make_complaint,
    make_general,
    make_question,
    make_record,
    make_specialist,
    make_state,
    scripted,
)


def questions_json(*texts: str) -> str:
    return json.dumps([{"question": t, "rationale": f"why {t}"} for t in texts])


def small_team():
    return form_team([make_specialist()], make_general(), make_complaint())


class TestSummarize:
    def test_plain_text_becomes_raw_summary(self, tqs):
        backend = scripted([(prompts.TAG_RECORD, "patient cannot sleep")])
        record = summarize_record(make_state(), backend, tqs)
        assert record.raw_summary == "patient cannot sleep"
        assert record.round == 0 and not record.finalized

    def test_sections_parsed_and_filtered(self, tqs):
        payload = json.dumps({"summary": "s", "sections": {
            "sweating": "sweats at night", "invented": "x"}})
        backend = scripted([(prompts.TAG_RECORD, payload)])
        record = summarize_record(make_state(("about sweat?", "sweats at night")),
                                  backend, tqs)
        assert record.sections == {"sweating": "sweats at night"}
        assert record.round == 1

    def test_identical_state_identical_records(self, tqs):
        backend = scripted([(prompts.TAG_RECORD, json.dumps({"summary": "same",
                                                             "sections": {}}))])
        state = make_state(("q", "a"))
        assert summarize_record(state, backend, tqs) == summarize_record(state, backend, tqs)


class TestPropose:
    def test_specialist_questions_carry_kind(self):
        backend = scripted([(prompts.TAG_SPECIALIST_QUESTIONS, questions_json("q1", "q2"))])
        out = propose_questions(make_specialist(), make_state(), backend)
        assert len(out) == 2
        assert all(q.kind == "specialist" and q.rationale for q in out)

    def test_general_clamped_and_logged(self, caplog):
        backend = scripted([(prompts.TAG_GENERAL_QUESTIONS, questions_json("a", "b", "c"))])
        with caplog.at_level(logging.INFO, logger="tcmflow.consultation.engine"):
            out = propose_questions(make_general(), make_state(), backend, per_agent=2)
        assert [q.text for q in out] == ["a", "b"]
        assert any("clamping" in rec.message for rec in caplog.records)

    def test_empty_generation_surfaced_after_retry(self):
        calls = []

        class CountingBackend:
            backend_id = "counting"

            def complete(self, system, user):
                calls.append(1)
                return "[]"

        with pytest.raises(EmptyGeneration):
            propose_questions(make_specialist(), make_state(), CountingBackend())
        assert len(calls) == 2  # retried once, then surfaced


class TestMerge:
    def test_specialists_before_general(self):
        spec = [make_question("s1"), make_question("s2")]
        gen = [make_question("g1", kind="general"), make_question("g2", kind="general")]
        merged = merge_initial_questions(spec, gen)
        assert [q.text for q in merged] == ["s1", "s2", "g1", "g2"]

    def test_exact_duplicates_keep_first(self):
        spec = [make_question("same"), make_question("s2")]
        gen = [make_question("same", kind="general")]
        merged = merge_initial_questions(spec, gen)
        assert [q.text for q in merged] == ["same", "s2"]
        assert merged[0].kind == "specialist"

    def test_both_empty_rejected(self):
        with pytest.raises(BothEmpty):
            merge_initial_questions([], [])


class TestEvaluateOptimize:
    def test_evaluate_keeps_scores_and_summary(self, tqs, embedder):
        backend = scripted([(prompts.TAG_EVALUATE, "prioritize sleep pattern")])
        questions = [make_question(f"q{i}") for i in range(4)]
        rnd = evaluate_questions(questions, make_record(), small_team(), backend,
                                 embedder, tqs)
        assert len(rnd.evaluated) == 4
        assert rnd.evaluation_summary == "prioritize sleep pattern"

    def test_summary_text_never_alters_scores(self, tqs, embedder):
        questions = [make_question("does it itch at night")]
        scores = []
        for summary in ("summary A", "summary B"):
            backend = scripted([(prompts.TAG_EVALUATE, summary)])
            rnd = evaluate_questions(questions, make_record(), small_team(), backend,
                                     embedder, tqs)
            scores.append((rnd.evaluated[0].com_score, rnd.evaluated[0].total_score))
        assert scores[0] == scores[1]

    def test_all_no_change_markers_mean_consensus(self, tqs, embedder):
        backend = scripted([
            (prompts.TAG_EVALUATE, "fine"),
            (prompts.TAG_MODIFY, prompts.NO_CHANGE_MARKER),
        ])
        questions = [make_question("keep me")]
        rnd = evaluate_questions(questions, make_record(), small_team(), backend,
                                 embedder, tqs)
        done = optimize_questions(rnd, make_record(), small_team(), backend)
        assert done.consensus
        assert [q.text for q in done.optimized] == ["keep me"]
        assert len(done.modifications) == 2  # one entry per team member

    def test_scripted_modification_changes_set(self, tqs, embedder):
        backend = scripted([
            (prompts.TAG_EVALUATE, "fine"),
            (prompts.TAG_MODIFY, "add a thirst question"),
            (prompts.TAG_OPTIMIZE, questions_json("keep me", "are you thirsty?")),
        ])
        questions = [make_question("keep me")]
        rnd = evaluate_questions(questions, make_record(), small_team(), backend,
                                 embedder, tqs)
        done = optimize_questions(rnd, make_record(), small_team(), backend)
        assert not done.consensus
        assert "are you thirsty?" in [q.text for q in done.optimized]

    def test_fixed_point_despite_suggestions_is_consensus(self, tqs, embedder):
        backend = scripted([
            (prompts.TAG_EVALUATE, "fine"),
            (prompts.TAG_MODIFY, "please rephrase everything"),
            (prompts.TAG_OPTIMIZE, questions_json("keep me")),
        ])
        questions = [make_question("keep me")]
        rnd = evaluate_questions(questions, make_record(), small_team(), backend,
                                 embedder, tqs)
        done = optimize_questions(rnd, make_record(), small_team(), backend)
        assert done.consensus


class TestRefine:
    def config(self, **kw):
        defaults = dict(max_rounds=5, max_feedback_turns=3, questions_per_agent=2,
                        sufficiency_rule="never")
        defaults.update(kw)
        return SessionConfig(**defaults)

    def test_consensus_at_first_turn_selects_top_initial(self, tqs, embedder):
        backend = scripted([
            (prompts.TAG_EVALUATE, "fine"),
            (prompts.TAG_MODIFY, prompts.NO_CHANGE_MARKER),
        ])
        canonical = tqs.canonical_texts()[0]
        initial = [make_question("weak match text"), make_question(canonical)]
        final, rounds = refine_to_final(initial, make_record(), small_team(), backend,
                                        embedder, tqs, self.config())
        assert len(rounds) == 1 and rounds[0].consensus
        assert final[0].text == canonical  # top score first

    def test_never_consenting_runs_exactly_max_turns(self, tqs, embedder):
        # optimizer cycles qA -> qB -> qC, never reaching a fixed point
        backend = ScriptedChatBackend([
            ScriptEntry(prompts.TAG_EVALUATE, "fine"),
            ScriptEntry(prompts.TAG_MODIFY, "change it"),
            ScriptEntry(r"(?s)\[task:optimize-questions\].*- qC", questions_json("qD"), regex=True),
            ScriptEntry(r"(?s)\[task:optimize-questions\].*- qB", questions_json("qC"), regex=True),
            ScriptEntry(r"(?s)\[task:optimize-questions\].*- qA", questions_json("qB"), regex=True),
        ])
        final, rounds = refine_to_final([make_question("qA")], make_record(), small_team(),
                                        backend, embedder, tqs, self.config())
        assert len(rounds) == 3
        assert not any(r.consensus for r in rounds)
        assert final[0].text == "qD"

    def test_equal_scores_tie_break_by_position(self, tqs, embedder):
        backend = scripted([
            (prompts.TAG_EVALUATE, "fine"),
            (prompts.TAG_MODIFY, prompts.NO_CHANGE_MARKER),
        ])
        initial = [make_question("identical text"), make_question("identical text 2"),
                   make_question("identical text")]
        # dedup upstream would normally prevent duplicates; craft two equal scorers
        final, _ = refine_to_final(initial[:2] , make_record(), small_team(), backend,
                                   embedder, tqs, self.config(questions_per_agent=1))
        assert final[0].text in ("identical text", "identical text 2")

    def test_exact_tie_prefers_earlier_question(self, tqs, embedder):
        backend = scripted([
            (prompts.TAG_EVALUATE, "fine"),
            (prompts.TAG_MODIFY, prompts.NO_CHANGE_MARKER),
        ])
        # byte-identical texts score identically; earlier position must win
        a = make_question("same text", source="one")
        b = make_question("same text", source="two")
        final, _ = refine_to_final([a, b], make_record(), small_team(), backend,
                                   embedder, tqs, self.config(questions_per_agent=1))
        assert final[0].source == "one"


class TestConduct:
    def test_appends_in_question_order(self):
        state = make_state(("q0", "a0"), ("q1", "a1"))
        out = conduct_round([make_question("q2"), make_question("q3")], state,
                            QueueAnswerSource(["a2", "a3"]))
        assert len(out.turns) == 4
        assert [t.question for t in out.turns[-2:]] == ["q2", "q3"]
        assert len(state.turns) == 2  # original untouched

    def test_timeout_leaves_state_unchanged(self):
        state = make_state(("q0", "a0"))
        with pytest.raises(AnswerTimeout):
            conduct_round([make_question("q1"), make_question("q2")], state,
                          QueueAnswerSource(["only one answer"]))
        assert len(state.turns) == 1

    def test_broken_simulator_raises_simulator_failure(self):
        from tcmflow.consultation.engine import SimulatorFailure

        class Broken:
            def answer(self, question, state):
                raise RuntimeError("patient model crashed")

        state = make_state()
        with pytest.raises(SimulatorFailure):
            conduct_round([make_question("q")], state, Broken())
        assert len(state.turns) == 0


def session_backend(stop_after: str | None = None) -> ScriptedChatBackend:
    entries = [
        ScriptEntry(prompts.TAG_SELECT, "internal medicine"),
        ScriptEntry(prompts.TAG_RECORD, json.dumps(
            {"summary": "collected findings", "sections": {"sweating": "noted"}})),
        ScriptEntry(prompts.TAG_SPECIALIST_QUESTIONS, questions_json("spec q1", "spec q2")),
        ScriptEntry(prompts.TAG_GENERAL_QUESTIONS, questions_json("gen q1", "gen q2")),
        ScriptEntry(prompts.TAG_EVALUATE, "fine"),
        ScriptEntry(prompts.TAG_MODIFY, prompts.NO_CHANGE_MARKER),
    ]
    if stop_after is not None:
        entries.append(ScriptEntry(prompts.TAG_SUFFICIENCY, stop_after))
    return ScriptedChatBackend(entries)


class TestRunConsultation:
    def test_deterministic_across_repeats(self, registry, embedder):
        config = SessionConfig(max_rounds=3, sufficiency_rule="fixed:2")
        outputs = []
        for _ in range(10):
            result = run_consultation(make_complaint(), registry, config,
                                      QueueAnswerSource([], fallback="answer"),
                                      session_backend(), embedder)
            outputs.append(json.dumps(
                {"transcript": result.transcript, "record": result.record.to_dict()},
                sort_keys=True))
        assert len(set(outputs)) == 1

    def test_fixed_rule_stops_after_n_rounds(self, registry, embedder):
        config = SessionConfig(max_rounds=10, sufficiency_rule="fixed:4")
        result = run_consultation(make_complaint(), registry, config,
                                  QueueAnswerSource([], fallback="answer"),
                                  session_backend(), embedder)
        rounds = [e for e in result.transcript if e["event"] == "final_questions"]
        assert len(rounds) == 4
        assert result.record.finalized

    def test_llm_sufficiency_stop_token(self, registry, embedder):
        config = SessionConfig(max_rounds=10, sufficiency_rule="llm")
        result = run_consultation(make_complaint(), registry, config,
                                  QueueAnswerSource([], fallback="answer"),
                                  session_backend(stop_after="STOP"), embedder)
        rounds = [e for e in result.transcript if e["event"] == "final_questions"]
        assert len(rounds) == 1

    def test_abort_keeps_partial_transcript(self, registry, embedder):
        backend = ScriptedChatBackend([
            ScriptEntry(prompts.TAG_SELECT, "internal medicine"),
            ScriptEntry(prompts.TAG_RECORD, "plain summary"),
            ScriptEntry(prompts.TAG_SPECIALIST_QUESTIONS, "[]"),  # forces EmptyGeneration
            ScriptEntry(prompts.TAG_GENERAL_QUESTIONS, "[]"),
        ])
        config = SessionConfig(max_rounds=2, sufficiency_rule="never")
        result = run_consultation(make_complaint(), registry, config,
                                  QueueAnswerSource([], fallback="x"),
                                  backend, embedder)
        assert result.aborted
        assert "EmptyGeneration" in result.error
        events = [e["event"] for e in result.transcript]
        assert "aborted" in events and "team_formed" in events

    def test_broken_answer_source_aborts_with_transcript(self, registry, embedder):
        class Broken:
            def answer(self, question, state):
                raise RuntimeError("patient model crashed")

        config = SessionConfig(max_rounds=3, sufficiency_rule="never")
        result = run_consultation(make_complaint(), registry, config, Broken(),
                                  session_backend(), embedder)
        assert result.aborted
        assert "SimulatorFailure" in result.error
        assert any(e["event"] == "final_questions" for e in result.transcript)

    def test_team_formed_exactly_once_per_session(self, registry, embedder):
        config = SessionConfig(max_rounds=4, sufficiency_rule="never")
        result = run_consultation(make_complaint(), registry, config,
                                  QueueAnswerSource([], fallback="answer"),
                                  session_backend(), embedder)
        formed = [e for e in result.transcript if e["event"] == "team_formed"]
        assert len(formed) == 1  # the team never re-forms mid-session

    def test_turn_count_grows_monotonically(self, registry, embedder):
        config = SessionConfig(max_rounds=3, sufficiency_rule="never",
                               questions_per_agent=2)
        result = run_consultation(make_complaint(), registry, config,
                                  QueueAnswerSource([], fallback="answer"),
                                  session_backend(), embedder)
        answer_events = [e for e in result.transcript if e["event"] == "answers"]
        seen = 0
        for event in answer_events:
            indices = [t["index"] for t in event["turns"]]
            assert indices == list(range(seen, seen + len(indices)))
            seen += len(indices)


class TestLoopBoundsFuzz:
    def test_bounds_hold_over_fuzzed_sessions(self, registry, embedder):
        from scriptedfixtures import fuzz_backend, fuzz_config

        rng = random.Random(2024)
        for _ in range(60):
            config = fuzz_config(rng)
            result = run_consultation(make_complaint(), registry, config,
                                      QueueAnswerSource([], fallback="an answer"),
                                      fuzz_backend(rng), embedder)
            assert result.record is not None or result.aborted
            rounds = [e for e in result.transcript if e["event"] == "final_questions"]
            assert len(rounds) <= config.max_rounds
            for event in result.transcript:
                if event["event"] == "refinement":
                    assert event["sub_iteration"] <= config.max_feedback_turns
