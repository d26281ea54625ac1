/** Typed client for the session service HTTP+JSON API (v1). */

export type Grade = "again" | "hard" | "good" | "easy";

export const GRADES: readonly Grade[] = ["again", "hard", "good", "easy"];

export interface SessionTarget {
  word: string;
  required_count: number;
  kind: "new" | "review";
}

export interface SessionView {
  session_id: string;
  deck_id: string;
  mode: string;
  story: string | null;
  targets: SessionTarget[];
  target_counts: Record<string, number>;
  target_spans: Record<string, [number, number][]>;
  metrics: Record<string, number> | null;
}

export interface CardSummary {
  word: string;
  ease_factor: number;
  interval_days: number;
  repetitions: number;
  due_at: string;
}

export interface RecentSession {
  session_id: string;
  new_words: string[];
  review_words: string[];
}

export interface DeckStats {
  deck_id: string;
  due_today: number;
  new_available: number;
  total_learned: number;
  recent_sessions: RecentSession[];
}

/** Error body shape the service uses for every non-2xx response. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  get notFound(): boolean {
    return this.status === 404;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = "unknown";
      let message = response.statusText;
      try {
        const payload = (await response.json()) as { code?: string; message?: string };
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  createDeck(language: string, learnerLevel: string, lexicon: string): Promise<{ deck_id: string }> {
    return this.request("POST", "/v1/decks", {
      language,
      learner_level: learnerLevel,
      lexicon,
    });
  }

  startSession(
    deckId: string,
    options: { mode?: string; n_new?: number; n_review?: number; seed?: number } = {},
  ): Promise<SessionView> {
    return this.request("POST", `/v1/decks/${deckId}/sessions`, options);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  submitReview(deckId: string, word: string, grade: Grade): Promise<CardSummary> {
    return this.request("POST", `/v1/decks/${deckId}/reviews`, { word, grade });
  }

  deckStats(deckId: string): Promise<DeckStats> {
    return this.request("GET", `/v1/decks/${deckId}/stats`);
  }
}
