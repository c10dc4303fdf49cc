// Deterministic scripted rater for demos and end-to-end tests: answers
// each pair by sampling a Bradley–Terry comparison with fixed per-item
// qualities and a seeded generator.

import { TicketView } from "./api.js";

/** Small fast seeded PRNG (mulberry32); good enough for scripted answers. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Build a chooser that picks the left item with probability
 * q(left) / (q(left) + q(right)).
 */
export function btlChooser(
  qualities: Record<string, number>,
  random: () => number,
): (ticket: TicketView) => "left" | "right" {
  const qualityOf = (id: string): number => {
    const q = qualities[id];
    if (q === undefined || !(q > 0)) {
      throw new Error(`no positive quality for item ${id}`);
    }
    return q;
  };
  return (ticket) => {
    const left = qualityOf(ticket.left.id);
    const right = qualityOf(ticket.right.id);
    return random() < left / (left + right) ? "left" : "right";
  };
}
