// Typed client for the pairwise rating service.
//
// Every mutation is tied to a server-issued ticket naming the two items of
// one query, and the server counts at most one answer per ticket: a repeat
// submission is acknowledged with `duplicate: true` instead of being
// recorded again.  The client leans on that contract for retry safety — on a
// network failure it re-sends the *same* ticket id and winner, so the ticket
// id doubles as an idempotency key and a rater can never double-vote by
// retrying.

export interface ItemView {
  id: string;
  label: string;
  payload: string | null;
}

export interface TicketView {
  id: string;
  round: number;
  boundary: number | null;
  role: "bootstrap" | "lower" | "upper";
  left: ItemView;
  right: ItemView;
  answered_total: number;
}

export interface ItemRow extends ItemView {
  pulls: number;
  mean_hat: number | null;
  lower: number;
  upper: number;
  rank: number;
}

export interface SessionSummary {
  session: string;
  status: "active" | "finished" | "aborted";
  round: number;
  engine_t: number | null;
  active_boundaries: number[];
  total_answers: number;
  outstanding: number;
  items: ItemRow[];
  clusters: string[][];
  epsilon: number;
  delta: number;
  boundaries: number[];
  created_at: number;
  updated_at: number;
}

export type QueryResponse =
  | { status: "ticket"; ticket: TicketView }
  | { status: "wait"; outstanding: number; retry_after: number }
  | { status: "done"; summary: SessionSummary };

export interface AnswerAck {
  ok: boolean;
  duplicate: boolean;
  ticket: string;
  summary: SessionSummary;
}

export interface CreateSessionRequest {
  items: (string | { id: string; label?: string; payload?: string })[];
  boundaries: number[];
  epsilon?: number;
  delta?: number;
  seed?: number;
}

export interface CreateSessionResponse {
  session: string;
  status: string;
  tickets: number;
}

/** An HTTP-level rejection from the service (4xx/5xx with a detail line). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export interface ClientOptions {
  /** First retry delay after a network failure; doubles per attempt. */
  retryDelayMs?: number;
  /** Total attempts per request before giving up. */
  maxAttempts?: number;
  /** Injection points for tests. */
  fetchFn?: typeof fetch;
  sleepFn?: (ms: number) => Promise<void>;
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class SessionClient {
  private readonly fetchFn: typeof fetch;
  private readonly sleepFn: (ms: number) => Promise<void>;
  private readonly retryDelayMs: number;
  private readonly maxAttempts: number;

  constructor(
    readonly baseUrl: string,
    readonly rater: string = "anonymous",
    options: ClientOptions = {},
  ) {
    this.fetchFn = options.fetchFn ?? ((...args) => fetch(...args));
    this.sleepFn = options.sleepFn ?? sleep;
    this.retryDelayMs = options.retryDelayMs ?? 250;
    this.maxAttempts = options.maxAttempts ?? 5;
  }

  async createSession(req: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request<CreateSessionResponse>("POST", "/sessions", req);
  }

  async nextQuery(sessionId: string): Promise<QueryResponse> {
    const query = `?rater=${encodeURIComponent(this.rater)}`;
    return this.request<QueryResponse>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/query${query}`,
    );
  }

  /**
   * Record the winner of one ticket.  Retries transparently on network
   * failure; if the first attempt actually landed, the retry comes back
   * with `duplicate: true` and is returned as a success.
   */
  async submitAnswer(
    sessionId: string,
    ticketId: string,
    winner: string,
  ): Promise<AnswerAck> {
    return this.request<AnswerAck>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/answers`,
      { ticket: ticketId, winner, rater: this.rater },
    );
  }

  async sessionState(sessionId: string): Promise<SessionSummary> {
    return this.request<SessionSummary>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }

  async abort(sessionId: string): Promise<{ session: string; status: string }> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/abort`);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let delay = this.retryDelayMs;
    for (let attempt = 1; ; attempt++) {
      let response: Response;
      try {
        response = await this.fetchFn(this.baseUrl + path, {
          method,
          headers: body === undefined ? {} : { "Content-Type": "application/json" },
          body: body === undefined ? undefined : JSON.stringify(body),
        });
      } catch (err) {
        // Network-level failure: the request may or may not have reached the
        // server.  Re-sending is safe for reads and, thanks to the ticket
        // idempotency contract, for answers too.
        if (attempt >= this.maxAttempts) throw err;
        await this.sleepFn(delay);
        delay *= 2;
        continue;
      }
      if (!response.ok) {
        let detail = response.statusText;
        try {
          const parsed = (await response.json()) as { detail?: unknown };
          if (parsed.detail !== undefined) detail = String(parsed.detail);
        } catch {
          // non-JSON error body; keep the status text
        }
        throw new ApiError(response.status, detail);
      }
      return (await response.json()) as T;
    }
  }
}
