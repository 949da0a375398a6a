"""Prompt templates for every model-backed step.

Each system prompt opens with a stable task tag so scripted backends can match
calls reliably; response formats are part of the contract stated in each
template.
"""

from __future__ import annotations

TAG_SELECT = "[task:select-specialists]"
TAG_RECORD = "[task:summarize-record]"
TAG_SPECIALIST_QUESTIONS = "[task:specialist-questions]"
TAG_GENERAL_QUESTIONS = "[task:general-questions]"
TAG_EVALUATE = "[task:evaluate-questions]"
TAG_MODIFY = "[task:suggest-modifications]"
TAG_OPTIMIZE = "[task:optimize-questions]"
TAG_SYNDROME = "[task:differentiate-syndrome]"
TAG_TREATMENT_ATTRS = "[task:extract-treatment-attributes]"
TAG_TQS_EXTRACT = "[task:extract-inquiry-findings]"
TAG_SUFFICIENCY = "[task:sufficiency-check]"
TAG_PATIENT = "[task:simulate-patient]"
TAG_JUDGE = "[task:pairwise-judge]"

NO_CHANGE_MARKER = "NO_CHANGE"
NO_INFORMATION_MARKER = "no information available"


def _dialogue_block(state) -> str:
    lines = [f"Chief complaint: {state.chief_complaint.text}"]
    for turn in state.turns:
        lines.append(f"Q{turn.index}: {turn.question}")
        lines.append(f"A{turn.index}: {turn.answer}")
    return "\n".join(lines)


def select_specialists_prompt(complaint_text: str, specialties: list[str]) -> tuple[str, str]:
    system = (
        f"{TAG_SELECT} You are the manager of a TCM clinic. Given a patient's chief "
        "complaint, pick the most appropriate specialist department(s) from the roster. "
        "Answer with department names from the roster only, comma-separated."
    )
    user = f"Roster: {', '.join(specialties)}\nChief complaint: {complaint_text}"
    return system, user


def summarize_record_prompt(state, category_names: list[str]) -> tuple[str, str]:
    system = (
        f"{TAG_RECORD} You are a TCM record keeper. Summarize the patient's current "
        "condition from the dialogue. Reply with JSON: "
        '{"summary": str, "sections": {category: findings}} using only these '
        f"categories: {', '.join(category_names)}. Only report findings the patient stated."
    )
    return system, _dialogue_block(state)


def specialist_questions_prompt(agent, state, per_agent: int) -> tuple[str, str]:
    system = (
        f"{TAG_SPECIALIST_QUESTIONS} You are a TCM {agent.specialty} specialist. "
        f"Knowledge: {agent.knowledge_pack}\n"
        f"Key issues for your specialty: {'; '.join(agent.core_questions)}\n"
        f"Propose up to {per_agent} targeted follow-up question(s) for the next round. "
        'Reply with JSON: [{"question": str, "rationale": str}].'
    )
    return system, _dialogue_block(state)


def general_questions_prompt(agent, state, per_agent: int) -> tuple[str, str]:
    system = (
        f"{TAG_GENERAL_QUESTIONS} You are a general TCM physician ensuring broad coverage. "
        f"Knowledge: {agent.knowledge_pack}\n"
        f"Propose up to {per_agent} broad but clinically useful question(s) the team may "
        'have missed. Reply with JSON: [{"question": str, "rationale": str}].'
    )
    return system, _dialogue_block(state)


def evaluate_questions_prompt(questions, record, scored) -> tuple[str, str]:
    system = (
        f"{TAG_EVALUATE} You review candidate consultation questions against the current "
        "medical record and their coverage/pertinence scores. Reply with a short free-text "
        "evaluation summary; do not output scores."
    )
    lines = [f"Record: {record.raw_summary}"]
    for sq in scored:
        lines.append(f"- {sq.question.text} (score {sq.total_score:.4f})")
    return system, "\n".join(lines)


def modification_prompt(agent, questions, record, evaluation_summary: str) -> tuple[str, str]:
    system = (
        f"{TAG_MODIFY} You are {agent.name} ({agent.specialty}). Given the evaluated "
        f"candidate questions, suggest a concrete modification, or reply exactly "
        f"{NO_CHANGE_MARKER} if they need none."
    )
    lines = [f"Record: {record.raw_summary}", f"Evaluation: {evaluation_summary}", "Questions:"]
    lines += [f"- {q.text}" for q in questions]
    return system, "\n".join(lines)


def optimize_questions_prompt(questions, modifications, record) -> tuple[str, str]:
    system = (
        f"{TAG_OPTIMIZE} You integrate the team's modification suggestions into a revised "
        'question list. Reply with JSON: [{"question": str, "rationale": str}].'
    )
    lines = [f"Record: {record.raw_summary}", "Current questions:"]
    lines += [f"- {q.text}" for q in questions]
    lines.append("Suggestions:")
    lines += [f"- {agent_id}: {text}" for agent_id, text in modifications]
    return system, "\n".join(lines)


def sufficiency_prompt(state, record) -> tuple[str, str]:
    system = (
        f"{TAG_SUFFICIENCY} Decide whether enough information has been collected to close "
        "the consultation. Reply with exactly STOP or CONTINUE."
    )
    return system, f"{_dialogue_block(state)}\nRecord: {record.raw_summary}"


def syndrome_prompt(record, label_space: list[str] | None = None) -> tuple[str, str]:
    constraint = (
        f" Choose one label from: {', '.join(label_space)}." if label_space else ""
    )
    system = (
        f"{TAG_SYNDROME} You are a TCM syndrome differentiation expert. Read the final "
        "medical record and name the most probable syndrome type."
        f"{constraint} Reply with JSON: {{\"label\": str, \"confidence\": float, \"rationale\": str}}."
    )
    sections = "\n".join(f"{k}: {v}" for k, v in sorted(record.sections.items()))
    return system, f"Summary: {record.raw_summary}\n{sections}"


def treatment_attributes_prompt(record, syndrome_label: str) -> tuple[str, str]:
    system = (
        f"{TAG_TREATMENT_ATTRS} Extract the etiology and the affected organ from the record "
        "if they are stated; use null when absent. Reply with JSON: "
        '{"etiology": str|null, "affected_organ": str|null}.'
    )
    sections = "\n".join(f"{k}: {v}" for k, v in sorted(record.sections.items()))
    return system, f"Syndrome: {syndrome_label}\nSummary: {record.raw_summary}\n{sections}"


def tqs_extract_prompt(narrative: str, category_names: list[str]) -> tuple[str, str]:
    system = (
        f"{TAG_TQS_EXTRACT} Extract the findings relevant to classical TCM inquiry from a raw "
        "case narrative. Keep only the patient's own condition; drop administrative remarks "
        "and instrumental diagnostics. Reply with JSON mapping category to findings, using "
        f"only these categories: {', '.join(category_names)}."
    )
    return system, narrative


def patient_prompt(narrative: str, question_text: str) -> tuple[str, str]:
    system = (
        f"{TAG_PATIENT} You are the patient described by the case below. Answer the doctor's "
        "question using only facts stated in the case; if the case does not cover it, reply "
        f"exactly \"{NO_INFORMATION_MARKER}\".\nCase: {narrative}"
    )
    return system, question_text


def judge_prompt(dimension: str, first: str, second: str) -> tuple[str, str]:
    system = (
        f"{TAG_JUDGE} Compare two consultation outputs on the dimension \"{dimension}\". "
        "Reply with exactly A, B, or TIE."
    )
    return system, f"Output A:\n{first}\n\nOutput B:\n{second}"
