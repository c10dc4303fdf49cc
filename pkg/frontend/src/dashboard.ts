// Owner dashboard: polls session state and renders per-item statistics,
// the still-active group boundaries, and the current best-guess grouping.
// Read-only; polling stops once the session reaches a terminal status.

import { SessionClient, SessionSummary } from "./api.js";

export class DashboardApp {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: SessionClient,
    private readonly sessionId: string,
    private readonly intervalMs: number = 2000,
  ) {}

  async start(): Promise<void> {
    await this.tick();
    if (this.timer === null) {
      this.timer = setInterval(() => {
        void this.tick();
      }, this.intervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One poll-and-render step; exposed so tests can drive it directly. */
  async tick(): Promise<SessionSummary> {
    const summary = await this.client.sessionState(this.sessionId);
    this.render(summary);
    if (summary.status !== "active") this.stop();
    return summary;
  }

  private render(summary: SessionSummary): void {
    const doc = this.root.ownerDocument;
    this.root.innerHTML = `
      <p class="status-line"></p>
      <table class="items">
        <thead>
          <tr><th>#</th><th>item</th><th>queries</th><th>win rate</th><th>low</th><th>high</th></tr>
        </thead>
        <tbody></tbody>
      </table>
      <div class="live-clusters"></div>
    `;
    const statusLine = this.root.querySelector(".status-line") as HTMLElement;
    statusLine.dataset.status = summary.status;
    const boundaries = summary.active_boundaries.length
      ? `open boundaries after ranks ${summary.active_boundaries.join(", ")}`
      : "all boundaries settled";
    statusLine.textContent =
      `${summary.status} · round ${summary.round} · ` +
      `${summary.total_answers} answers · ${summary.outstanding} outstanding · ${boundaries}`;

    const body = this.root.querySelector("tbody") as HTMLElement;
    const rows = [...summary.items].sort((a, b) => a.rank - b.rank);
    for (const row of rows) {
      const tr = doc.createElement("tr");
      tr.dataset.itemId = row.id;
      const cells = [
        String(row.rank),
        row.label,
        String(row.pulls),
        row.mean_hat === null ? "—" : row.mean_hat.toFixed(3),
        row.lower.toFixed(3),
        row.upper.toFixed(3),
      ];
      for (const text of cells) {
        const td = doc.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }

    const labels = new Map(summary.items.map((item) => [item.id, item.label]));
    const container = this.root.querySelector(".live-clusters") as HTMLElement;
    const title = doc.createElement("h3");
    title.textContent =
      summary.status === "finished" ? "Final grouping" : "Current grouping (live)";
    container.appendChild(title);
    summary.clusters.forEach((cluster) => {
      const list = doc.createElement("ol");
      list.className = "cluster";
      for (const itemId of cluster) {
        const entry = doc.createElement("li");
        entry.dataset.itemId = itemId;
        entry.textContent = labels.get(itemId) ?? itemId;
        list.appendChild(entry);
      }
      container.appendChild(list);
    });
  }
}
