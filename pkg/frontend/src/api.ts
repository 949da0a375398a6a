// Typed client for the consultation service HTTP API.

export interface QuestionView {
  text: string;
  rationale: string;
  source: string;
  kind: string;
}

export interface TranscriptTurn {
  index: number;
  question: string;
  answer: string;
}

export interface TranscriptEvent {
  event: string;
  [key: string]: unknown;
}

export interface RecordView {
  sections: Record<string, string>;
  raw_summary: string;
  round: number;
  finalized: boolean;
}

export interface SyndromeView {
  label: string;
  confidence: number;
  rationale: string;
  classifier_id: string;
}

export interface PrescriptionView {
  entry_id: string;
  sparse_rank: number | null;
  dense_rank: number | null;
  rrf_score: number;
  final_rank: number;
}

export interface ResultView {
  record: RecordView | null;
  syndrome: SyndromeView | null;
  prescriptions: PrescriptionView[];
}

export interface SessionView {
  session_id: string;
  phase: string;
  round: number;
  complaint: string;
  questions: QuestionView[];
  transcript: TranscriptEvent[];
  error: string | null;
  result?: ResultView;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.error === "string") code = body.error;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep defaults
  }
  return new ApiError(response.status, code, detail);
}

export class ConsultApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<SessionView> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as SessionView;
  }

  createSession(complaint: string): Promise<SessionView> {
    return this.request("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ complaint }),
    });
  }

  postAnswers(sessionId: string, answers: string[]): Promise<SessionView> {
    return this.request(`/v1/sessions/${sessionId}/answers`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ answers }),
    });
  }

  getState(sessionId: string): Promise<SessionView> {
    return this.request(`/v1/sessions/${sessionId}`);
  }

  async healthy(): Promise<boolean> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}/v1/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }
}
