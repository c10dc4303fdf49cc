// Interactive rater view: shows the current pair, captures a click (or
// arrow key), submits it, and immediately asks for the next query.  The
// page is a thin shell over the service contract — no ranking logic runs
// client-side.

import { SessionClient, SessionSummary, TicketView } from "./api.js";
import { answerLoop, LoopResult } from "./loop.js";

export class RaterApp {
  /** Resolver for the pair currently awaiting a choice; null while a
   *  submission is in flight, which is what makes double-clicks harmless. */
  private pendingChoice: ((side: "left" | "right") => void) | null = null;
  private keyHandler: ((ev: KeyboardEvent) => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: SessionClient,
    private readonly sessionId: string,
  ) {}

  /** Run the session to completion; resolves once the done view is shown. */
  async run(): Promise<LoopResult> {
    const doc = this.root.ownerDocument;
    this.keyHandler = (ev: KeyboardEvent) => {
      if (ev.key === "ArrowLeft") this.choose("left");
      else if (ev.key === "ArrowRight") this.choose("right");
    };
    doc.addEventListener("keydown", this.keyHandler as EventListener);
    try {
      return await answerLoop(this.client, this.sessionId, {
        choose: (ticket) => this.presentTicket(ticket),
        onWait: (retryAfter) => this.renderWait(retryAfter),
        onDone: (summary) => this.renderDone(summary),
      });
    } finally {
      doc.removeEventListener("keydown", this.keyHandler as EventListener);
      this.keyHandler = null;
    }
  }

  /** Accept a choice for the displayed pair; ignored while none is shown. */
  choose(side: "left" | "right"): void {
    const resolve = this.pendingChoice;
    if (!resolve) return;
    this.pendingChoice = null; // further clicks no-op until the next pair
    this.root.querySelectorAll("button.choice").forEach((b) => {
      (b as HTMLButtonElement).disabled = true;
    });
    resolve(side);
  }

  private presentTicket(ticket: TicketView): Promise<"left" | "right"> {
    this.root.innerHTML = `
      <p class="prompt">Which one ranks higher?</p>
      <div class="pair">
        <button class="choice" data-side="left"></button>
        <button class="choice" data-side="right"></button>
      </div>
      <p class="progress"></p>
      <p class="hint">click a card or use the ← / → arrow keys</p>
    `;
    this.fillCard("left", ticket.left);
    this.fillCard("right", ticket.right);
    const progress = this.root.querySelector(".progress") as HTMLElement;
    progress.textContent =
      `${ticket.answered_total} answers so far · round ${ticket.round}` +
      (ticket.role === "bootstrap" ? " (warm-up)" : "");
    this.root.querySelectorAll("button.choice").forEach((button) => {
      button.addEventListener("click", () => {
        this.choose((button as HTMLElement).dataset.side as "left" | "right");
      });
    });
    const promise = new Promise<"left" | "right">((resolve) => {
      this.pendingChoice = resolve;
    });
    this.root.dispatchEvent(
      new CustomEvent("ticket-rendered", { detail: ticket, bubbles: true }),
    );
    return promise;
  }

  private fillCard(side: "left" | "right", item: { id: string; label: string; payload: string | null }): void {
    const button = this.root.querySelector(
      `button.choice[data-side="${side}"]`,
    ) as HTMLButtonElement;
    button.dataset.itemId = item.id;
    if (item.payload) {
      const img = this.root.ownerDocument.createElement("img");
      img.src = resolvePayload(this.client.baseUrl, item.payload);
      img.alt = item.label;
      button.appendChild(img);
    }
    const caption = this.root.ownerDocument.createElement("span");
    caption.textContent = item.label;
    button.appendChild(caption);
  }

  private renderWait(retryAfterSeconds: number): void {
    this.pendingChoice = null;
    this.root.innerHTML = `
      <p class="prompt">Waiting for other raters to finish this round…</p>
      <p class="hint">retrying in ${Math.ceil(retryAfterSeconds)}s</p>
    `;
  }

  private renderDone(summary: SessionSummary): void {
    this.pendingChoice = null;
    const labels = new Map(summary.items.map((item) => [item.id, item.label]));
    this.root.innerHTML = `
      <p class="prompt">Session complete — thank you!</p>
      <p class="progress">${summary.total_answers} answers collected</p>
      <div class="final-clusters"></div>
    `;
    const container = this.root.querySelector(".final-clusters") as HTMLElement;
    summary.clusters.forEach((cluster, index) => {
      const heading = this.root.ownerDocument.createElement("h3");
      heading.textContent =
        index === 0 ? `Group 1 (best)` : `Group ${index + 1}`;
      const list = this.root.ownerDocument.createElement("ol");
      list.className = "cluster";
      for (const itemId of cluster) {
        const entry = this.root.ownerDocument.createElement("li");
        entry.dataset.itemId = itemId;
        entry.textContent = labels.get(itemId) ?? itemId;
        list.appendChild(entry);
      }
      container.appendChild(heading);
      container.appendChild(list);
    });
    this.root.dispatchEvent(new CustomEvent("session-done", { detail: summary }));
  }
}

/** Payloads may be absolute URLs or paths under the service's static mount. */
export function resolvePayload(baseUrl: string, payload: string): string {
  if (/^https?:\/\//.test(payload) || payload.startsWith("data:")) return payload;
  return `${baseUrl.replace(/\/$/, "")}/${payload.replace(/^\//, "")}`;
}
