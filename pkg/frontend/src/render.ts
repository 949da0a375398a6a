// Pure DOM projection of session views: no state of its own, every displayed
// clinical string comes verbatim from a service payload.

import { SessionView, TranscriptTurn } from "./api.js";
import { NO_INFORMATION } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function answeredTurns(view: SessionView): TranscriptTurn[] {
  const turns: TranscriptTurn[] = [];
  for (const event of view.transcript) {
    if (event.event === "answers") {
      turns.push(...(event.turns as TranscriptTurn[]));
    }
  }
  return turns;
}

function renderTranscript(doc: Document, view: SessionView): HTMLElement {
  const panel = el(doc, "section", "transcript");
  const complaint = el(doc, "div", "bubble bubble-patient bubble-complaint");
  complaint.appendChild(el(doc, "span", "bubble-label", "Chief complaint"));
  complaint.appendChild(el(doc, "p", "bubble-text", view.complaint));
  panel.appendChild(complaint);
  for (const turn of answeredTurns(view)) {
    const q = el(doc, "div", "bubble bubble-doctor");
    q.setAttribute("data-turn", String(turn.index));
    q.appendChild(el(doc, "span", "bubble-label", "Doctor"));
    q.appendChild(el(doc, "p", "bubble-text", turn.question));
    panel.appendChild(q);
    const a = el(doc, "div", "bubble bubble-patient");
    a.appendChild(el(doc, "span", "bubble-label", "Patient"));
    a.appendChild(el(doc, "p", "bubble-text", turn.answer));
    panel.appendChild(a);
  }
  return panel;
}

function renderPendingQuestions(doc: Document, view: SessionView): HTMLElement {
  const panel = el(doc, "section", "pending");
  panel.appendChild(el(doc, "h2", "panel-title", `Round ${view.round}`));
  const form = el(doc, "form", "answer-form");
  form.setAttribute("data-round", String(view.round));
  view.questions.forEach((question, i) => {
    const block = el(doc, "div", "question");
    block.appendChild(el(doc, "p", "question-text", question.text));
    const rationale = el(doc, "details", "rationale"); // collapsed by default
    rationale.appendChild(el(doc, "summary", "rationale-summary", "Why this question?"));
    rationale.appendChild(el(doc, "p", "rationale-text", question.rationale));
    block.appendChild(rationale);
    const row = el(doc, "div", "answer-row");
    const input = el(doc, "input", "answer-input");
    input.setAttribute("type", "text");
    input.setAttribute("name", `answer-${i}`);
    input.setAttribute("placeholder", "Your answer");
    row.appendChild(input);
    const noInfo = el(doc, "button", "no-info", "No information");
    noInfo.setAttribute("type", "button");
    noInfo.setAttribute("data-target", `answer-${i}`);
    noInfo.setAttribute("data-marker", NO_INFORMATION);
    row.appendChild(noInfo);
    block.appendChild(row);
    form.appendChild(block);
  });
  const submit = el(doc, "button", "submit-answers", "Send answers");
  submit.setAttribute("type", "submit");
  form.appendChild(submit);
  panel.appendChild(form);
  return panel;
}

function renderResults(doc: Document, view: SessionView): HTMLElement {
  const panel = el(doc, "section", "results");
  panel.appendChild(el(doc, "h2", "panel-title", "Consultation result"));
  const result = view.result;
  if (!result) return panel;

  if (result.record) {
    const record = el(doc, "div", "record");
    record.appendChild(el(doc, "h3", "record-title", "Medical record"));
    record.appendChild(el(doc, "p", "record-summary", result.record.raw_summary));
    const sections = el(doc, "dl", "record-sections");
    for (const name of Object.keys(result.record.sections).sort()) {
      sections.appendChild(el(doc, "dt", "section-name", name));
      sections.appendChild(el(doc, "dd", "section-text", result.record.sections[name]));
    }
    record.appendChild(sections);
    panel.appendChild(record);
  }

  if (result.syndrome) {
    const syndrome = el(doc, "div", "syndrome");
    syndrome.appendChild(el(doc, "h3", "syndrome-title", "Syndrome"));
    syndrome.appendChild(el(doc, "p", "syndrome-label", result.syndrome.label));
    syndrome.appendChild(el(
      doc, "p", "syndrome-confidence",
      `confidence ${result.syndrome.confidence.toFixed(2)}`,
    ));
    const rationale = el(doc, "details", "rationale");
    rationale.appendChild(el(doc, "summary", "rationale-summary", "Reasoning"));
    rationale.appendChild(el(doc, "p", "rationale-text", result.syndrome.rationale));
    syndrome.appendChild(rationale);
    panel.appendChild(syndrome);
  }

  const table = el(doc, "table", "prescriptions");
  const head = el(doc, "tr");
  for (const col of ["#", "entry", "rrf score", "lexical rank", "semantic rank"]) {
    head.appendChild(el(doc, "th", undefined, col));
  }
  table.appendChild(head);
  for (const rx of result.prescriptions) {
    const row = el(doc, "tr", "prescription");
    row.setAttribute("data-entry", rx.entry_id);
    row.appendChild(el(doc, "td", "rx-rank", String(rx.final_rank)));
    row.appendChild(el(doc, "td", "rx-entry", rx.entry_id));
    row.appendChild(el(doc, "td", "rx-rrf", rx.rrf_score.toFixed(6)));
    row.appendChild(el(doc, "td", "rx-sparse",
                       rx.sparse_rank === null ? "–" : String(rx.sparse_rank)));
    row.appendChild(el(doc, "td", "rx-dense",
                       rx.dense_rank === null ? "–" : String(rx.dense_rank)));
    table.appendChild(row);
  }
  panel.appendChild(table);
  return panel;
}

export function renderError(root: HTMLElement, message: string, retryable: boolean): void {
  const doc = root.ownerDocument;
  const existing = root.querySelector(".error-banner");
  if (existing) existing.remove();
  const banner = el(doc, "div", "error-banner");
  banner.appendChild(el(doc, "span", "error-text", message));
  if (retryable) {
    const retry = el(doc, "button", "error-retry", "Retry");
    retry.setAttribute("type", "button");
    banner.appendChild(retry);
  }
  root.prepend(banner);
}

export function renderSession(root: HTMLElement, view: SessionView): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  root.setAttribute("data-phase", view.phase);
  root.appendChild(renderTranscript(doc, view));
  if (view.phase === "awaiting_answer") {
    root.appendChild(renderPendingQuestions(doc, view));
  } else if (view.phase === "done") {
    root.appendChild(renderResults(doc, view));
  } else if (view.phase === "aborted") {
    renderError(root, `session aborted: ${view.error ?? "unknown error"}`, false);
  }
}
