// Entry point: routes by URL parameters.
//
//   ?view=rate&session=ID   rater screen (answer pairs until done)
//   ?view=watch&session=ID  owner dashboard (live polling)
//   (no parameters)         minimal create-session form
//
// `api` overrides the service origin (defaults to the page's own origin)
// and `rater` names this rater in the event log.

import { SessionClient } from "./api.js";
import { DashboardApp } from "./dashboard.js";
import { RaterApp } from "./rater.js";

function show(doc: Document, id: string): HTMLElement {
  for (const section of doc.querySelectorAll("main > section")) {
    (section as HTMLElement).hidden = section.id !== id;
  }
  return doc.getElementById(id)!;
}

function parseItems(text: string): { id: string; label?: string; payload?: string }[] {
  // One item per line: "id | label | payload" (label and payload optional).
  const items = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line) continue;
    const [id, label, payload] = line.split("|").map((part) => part.trim());
    items.push({ id, ...(label ? { label } : {}), ...(payload ? { payload } : {}) });
  }
  return items;
}

function sessionLink(view: string, sessionId: string, api: string): string {
  const params = new URLSearchParams({ view, session: sessionId });
  if (api) params.set("api", api);
  return `?${params.toString()}`;
}

export async function boot(doc: Document): Promise<void> {
  const params = new URLSearchParams(doc.defaultView!.location.search);
  const api = params.get("api") ?? "";
  const session = params.get("session");
  const view = params.get("view");
  const rater =
    params.get("rater") ?? `rater-${Math.random().toString(36).slice(2, 8)}`;
  const client = new SessionClient(api, rater);

  if (session && view === "rate") {
    const root = show(doc, "rate-view");
    await new RaterApp(root, client, session).run();
    return;
  }
  if (session && view === "watch") {
    const root = show(doc, "watch-view");
    const interval = Number(params.get("interval") ?? "2000");
    await new DashboardApp(root, client, session, interval).start();
    return;
  }

  const root = show(doc, "create-view");
  const form = root.querySelector("form") as HTMLFormElement;
  const output = root.querySelector(".created") as HTMLElement;
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    output.textContent = "creating…";
    const field = (name: string) =>
      (form.querySelector(`[name="${name}"]`) as HTMLInputElement | HTMLTextAreaElement).value;
    try {
      const seedText = field("seed").trim();
      const created = await client.createSession({
        items: parseItems(field("items")),
        boundaries: field("boundaries")
          .split(",")
          .map((part) => Number(part.trim()))
          .filter((n) => !Number.isNaN(n)),
        epsilon: Number(field("epsilon")),
        delta: Number(field("delta")),
        ...(seedText ? { seed: Number(seedText) } : {}),
      });
      output.innerHTML = `
        <p>session <code></code> created with <span class="n"></span> warm-up queries</p>
        <p><a class="rate-link">rate pairs</a> · <a class="watch-link">watch progress</a></p>
      `;
      (output.querySelector("code") as HTMLElement).textContent = created.session;
      (output.querySelector(".n") as HTMLElement).textContent = String(created.tickets);
      (output.querySelector(".rate-link") as HTMLAnchorElement).href =
        sessionLink("rate", created.session, api);
      (output.querySelector(".watch-link") as HTMLAnchorElement).href =
        sessionLink("watch", created.session, api);
    } catch (err) {
      output.textContent = `failed: ${err instanceof Error ? err.message : err}`;
    }
  });
}

// Module scripts run after parsing, so the page is ready to boot directly;
// the marker attribute keeps test imports of this module side-effect free.
if (typeof document !== "undefined" && document.body?.hasAttribute("data-autoboot")) {
  void boot(document);
}
