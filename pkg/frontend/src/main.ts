// Browser entry point. Expects the index.html shell with #row-mount,
// #stats-mount and #error-banner elements.

import { ApiClient } from "./api.js";
import { ValidationApp } from "./app.js";
import { StatsPanel } from "./stats_panel.js";

function requireEl(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id} in page shell`);
  return el;
}

const params = new URLSearchParams(window.location.search);
const validator = params.get("validator") ?? "anonymous";
const base = params.get("api") ?? "";

const api = new ApiClient(base);
const app = new ValidationApp(document, api, requireEl("row-mount"),
                              validator, requireEl("error-banner"));
const stats = new StatsPanel(document, api, requireEl("stats-mount"));

app.attachKeyboard();
void app.loadNext();
stats.start();
