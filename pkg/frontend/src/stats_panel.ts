// Running-stats panel: validators see completed counts, agreement, and in
// experiment mode the measured confusion rates and predicted precision.

import { ApiClient, StatsResponse } from "./api.js";

function line(doc: Document, name: string, value: string): HTMLElement {
  const div = doc.createElement("div");
  div.className = "stat";
  div.dataset.stat = name;
  const label = doc.createElement("span");
  label.className = "stat-label";
  label.textContent = name;
  const val = doc.createElement("span");
  val.className = "stat-value";
  val.textContent = value;
  div.appendChild(label);
  div.appendChild(val);
  return div;
}

const pct = (x: number) => `${(100 * x).toFixed(1)}%`;

export function renderStats(doc: Document, stats: StatsResponse,
                            stale = false): HTMLElement {
  const root = doc.createElement("aside");
  root.className = "stats-panel";
  if (stale) {
    const banner = doc.createElement("div");
    banner.className = "stale";
    banner.textContent = "stats may be stale (last poll failed)";
    root.appendChild(banner);
  }
  root.appendChild(line(doc, "completed",
    `${stats.rows_completed} / ${stats.rows_total}`));
  root.appendChild(line(doc, "pending", String(stats.rows_pending)));
  root.appendChild(line(doc, "confirmed", String(stats.confirmed)));
  if (stats.agreement_rate !== null) {
    root.appendChild(line(doc, "agreement", pct(stats.agreement_rate)));
  }
  const exp = stats.experiment;
  if (exp) {
    root.appendChild(line(doc, "tpr", pct(exp.confusion.tpr)));
    root.appendChild(line(doc, "fpr", pct(exp.confusion.fpr)));
    root.appendChild(line(doc, "predicted precision",
      pct(exp.predicted_hitl_precision)));
    if (exp.empirical_output_precision !== null) {
      root.appendChild(line(doc, "output precision",
        pct(exp.empirical_output_precision)));
    }
  }
  return root;
}

export class StatsPanel {
  private timer: ReturnType<typeof setInterval> | null = null;
  private lastGood: StatsResponse | null = null;

  constructor(private doc: Document, private api: ApiClient,
              private mount: HTMLElement) {}

  async refresh(): Promise<void> {
    let stats: StatsResponse;
    let stale = false;
    try {
      stats = await this.api.stats();
      this.lastGood = stats;
    } catch {
      if (!this.lastGood) return; // nothing to show yet
      stats = this.lastGood;
      stale = true;
    }
    this.mount.replaceChildren(renderStats(this.doc, stats, stale));
  }

  start(intervalMs = 5000): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }
}
