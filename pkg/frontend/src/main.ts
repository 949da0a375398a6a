// Browser wire-up: one consultation per tab, talking to the service that
// serves these assets (same origin).

import { ApiError, ConsultApi } from "./api.js";
import { renderError, renderSession } from "./render.js";
import { ConsoleSession } from "./session.js";

const api = new ConsultApi("");
const session = new ConsoleSession(api);

const startForm = document.getElementById("start-form") as HTMLFormElement;
const complaintInput = document.getElementById("complaint") as HTMLInputElement;
const consultRoot = document.getElementById("console") as HTMLElement;

async function repaint(): Promise<void> {
  if (session.view) renderSession(consultRoot, session.view);
}

startForm.addEventListener("submit", async (event) => {
  event.preventDefault();
  const complaint = complaintInput.value;
  if (!complaint.trim()) {
    renderError(consultRoot, "Please describe the complaint first.", false);
    return;
  }
  startForm.querySelector("button")?.setAttribute("disabled", "true");
  try {
    await session.start(complaint);
    startForm.classList.add("hidden");
    await repaint();
    focusFirstAnswer();
  } catch (error) {
    startForm.querySelector("button")?.removeAttribute("disabled");
    renderError(consultRoot, describe(error), true);
  }
});

consultRoot.addEventListener("click", async (event) => {
  const target = event.target as HTMLElement;
  if (target.classList.contains("no-info")) {
    const name = target.getAttribute("data-target")!;
    const input = consultRoot.querySelector<HTMLInputElement>(`input[name="${name}"]`);
    if (input) input.value = target.getAttribute("data-marker")!;
  }
  if (target.classList.contains("error-retry")) {
    try {
      await session.refresh();
      await repaint();
    } catch (error) {
      renderError(consultRoot, describe(error), true);
    }
  }
});

consultRoot.addEventListener("submit", async (event) => {
  const form = event.target as HTMLElement;
  if (!form.classList.contains("answer-form")) return;
  event.preventDefault();
  const inputs = Array.from(
    consultRoot.querySelectorAll<HTMLInputElement>(".answer-input"));
  const answers = inputs.map((input) => input.value);
  if (answers.some((a) => !a.trim())) {
    renderError(consultRoot,
                'Answer every question, or press "No information".', false);
    return;
  }
  try {
    const status = await session.submit(answers);
    if (status === "duplicate") return; // idempotency key already claimed
    if (status === "phase_conflict") {
      await repaint();
      renderError(consultRoot,
                  "The session moved on elsewhere; the view was refreshed.", false);
      return;
    }
    await repaint();
    focusFirstAnswer();
  } catch (error) {
    renderError(consultRoot, describe(error), true);
  }
});

function focusFirstAnswer(): void {
  consultRoot.querySelector<HTMLInputElement>(".answer-input")?.focus();
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return error instanceof Error ? error.message : String(error);
}
