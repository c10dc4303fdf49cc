// The rater's core cycle: fetch query → choose a winner → submit → repeat.
//
// The loop is deliberately DOM-free.  The interactive page plugs in a
// chooser that resolves when the human clicks; scripted raters plug in a
// function.  Either way each ticket is submitted exactly once from here —
// retries live inside SessionClient and reuse the ticket id, so a flaky
// network cannot inflate the answer count.

import { SessionClient, SessionSummary, TicketView } from "./api.js";

export interface RaterHooks {
  /** Decide which side wins the presented ticket. */
  choose(ticket: TicketView): "left" | "right" | Promise<"left" | "right">;
  /** Called after each accepted answer with the live summary. */
  onAnswered?(summary: SessionSummary, ticket: TicketView): void;
  /** Called when the server asks this rater to wait for other raters. */
  onWait?(retryAfterSeconds: number, outstanding: number): void;
  /** Called once with the final summary when the session finishes. */
  onDone?(summary: SessionSummary): void;
}

export interface LoopResult {
  /** Answers this loop submitted that the server recorded as new. */
  submitted: number;
  summary: SessionSummary;
}

export async function answerLoop(
  client: SessionClient,
  sessionId: string,
  hooks: RaterHooks,
): Promise<LoopResult> {
  let submitted = 0;
  for (;;) {
    const query = await client.nextQuery(sessionId);
    if (query.status === "done") {
      hooks.onDone?.(query.summary);
      return { submitted, summary: query.summary };
    }
    if (query.status === "wait") {
      hooks.onWait?.(query.retry_after, query.outstanding);
      await delaySeconds(query.retry_after);
      continue;
    }
    const ticket = query.ticket;
    const side = await hooks.choose(ticket);
    const winner = side === "left" ? ticket.left.id : ticket.right.id;
    const ack = await client.submitAnswer(sessionId, ticket.id, winner);
    if (!ack.duplicate) submitted += 1;
    hooks.onAnswered?.(ack.summary, ticket);
  }
}

function delaySeconds(seconds: number): Promise<void> {
  const ms = Math.max(0, Math.min(seconds, 30)) * 1000;
  return new Promise((r) => setTimeout(r, ms));
}
