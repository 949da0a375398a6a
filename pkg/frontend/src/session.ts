// View-model for one consultation per tab: guards duplicate submissions and
// keeps the rendered view a pure projection of get_state payloads.

import { ApiError, ConsultApi, SessionView } from "./api.js";

export const NO_INFORMATION = "no information available";

export type SubmitStatus = "ok" | "duplicate" | "phase_conflict";

export class ConsoleSession {
  view: SessionView | null = null;
  private inFlight = false;
  private submittedKeys = new Set<string>();

  constructor(private readonly api: ConsultApi) {}

  get sessionId(): string | null {
    return this.view?.session_id ?? null;
  }

  async start(complaint: string): Promise<SessionView> {
    if (!complaint.trim()) {
      throw new Error("complaint must not be empty");
    }
    const created = await this.api.createSession(complaint);
    // render from the canonical read path, not the create response
    this.view = await this.api.getState(created.session_id);
    return this.view;
  }

  /**
   * Submit one answer per pending question. Rapid duplicate clicks collapse
   * into a single request: the (session, round) idempotency key is claimed
   * before the request goes out and never released on success.
   */
  async submit(answers: string[]): Promise<SubmitStatus> {
    if (!this.view) throw new Error("no active session");
    if (answers.length !== this.view.questions.length) {
      throw new Error(`expected ${this.view.questions.length} answers`);
    }
    if (answers.some((a) => !a.trim())) {
      throw new Error(`blank answers are only allowed via the "${NO_INFORMATION}" control`);
    }
    const key = `${this.view.session_id}:${this.view.round}`;
    if (this.inFlight || this.submittedKeys.has(key)) {
      return "duplicate";
    }
    this.inFlight = true;
    this.submittedKeys.add(key);
    try {
      await this.api.postAnswers(this.view.session_id, answers);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.view = await this.api.getState(this.view.session_id);
        return "phase_conflict";
      }
      this.submittedKeys.delete(key); // allow retry after transport errors
      throw error;
    } finally {
      this.inFlight = false;
    }
    this.view = await this.api.getState(this.view.session_id);
    return "ok";
  }

  async refresh(): Promise<SessionView> {
    if (!this.view) throw new Error("no active session");
    this.view = await this.api.getState(this.view.session_id);
    return this.view;
  }
}
