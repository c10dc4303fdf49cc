// Shared fakes for the unit tests: canned server responses with the same
// shapes the live service returns.

import {
  AnswerAck,
  ItemView,
  QueryResponse,
  SessionClient,
  SessionSummary,
  TicketView,
} from "../src/api.js";

export function makeItem(id: string, payload: string | null = null): ItemView {
  return { id, label: id.toUpperCase(), payload };
}

export function makeTicket(
  id: string,
  left: string,
  right: string,
  overrides: Partial<TicketView> = {},
): TicketView {
  return {
    id,
    round: 0,
    boundary: null,
    role: "bootstrap",
    left: makeItem(left),
    right: makeItem(right),
    answered_total: 0,
    ...overrides,
  };
}

export function makeSummary(overrides: Partial<SessionSummary> = {}): SessionSummary {
  return {
    session: "s1",
    status: "active",
    round: 0,
    engine_t: null,
    active_boundaries: [1],
    total_answers: 0,
    outstanding: 0,
    items: [],
    clusters: [],
    epsilon: 0,
    delta: 0.1,
    boundaries: [1, 2],
    created_at: 0,
    updated_at: 0,
    ...overrides,
  };
}

/** Replays a fixed script of query responses and records every submission. */
export class FakeService {
  submits: { ticket: string; winner: string }[] = [];
  queries = 0;
  duplicates = new Set<string>();

  constructor(private readonly script: QueryResponse[]) {}

  asClient(): SessionClient {
    const fake = {
      baseUrl: "http://fake",
      rater: "test",
      nextQuery: async (): Promise<QueryResponse> => {
        this.queries += 1;
        const next = this.script.shift();
        if (!next) throw new Error("script exhausted: unexpected nextQuery");
        return next;
      },
      submitAnswer: async (
        _session: string,
        ticket: string,
        winner: string,
      ): Promise<AnswerAck> => {
        this.submits.push({ ticket, winner });
        return {
          ok: true,
          duplicate: this.duplicates.has(ticket),
          ticket,
          summary: makeSummary({ total_answers: this.submits.length }),
        };
      },
    };
    return fake as unknown as SessionClient;
  }
}
