// Renders one validation row: query offer on the left, up to three predicted
// neighbors on the right, one selectable verdict.
//
// Field policy: validators see only the whitelisted display fields below.
// Price, sizes, color and anything else the server might ever include are
// never rendered -- hiding them keeps judgments fast and unbiased.

import { OfferSnapshot, RowPayload } from "./api.js";

const VISIBLE_FIELDS = ["title", "brand", "category", "domain"] as const;

export const CANDIDATE_SLOTS = 3;
export const NO_MATCH = "no-match";

// keyboard shortcuts: 1/2/3 pick a candidate, 0 is no-match
export const KEY_TO_CHOICE: Record<string, string> = {
  "1": "c1",
  "2": "c2",
  "3": "c3",
  "0": NO_MATCH,
};

export type VoteHandler = (choice: string) => void;

function placeholderColor(offerId: string): string {
  // stable pseudo-thumbnail hue per offer; synthetic corpora have no images
  let h = 0;
  for (let i = 0; i < offerId.length; i++) {
    h = (h * 31 + offerId.charCodeAt(i)) % 360;
  }
  return `hsl(${h}, 55%, 70%)`;
}

function fieldList(doc: Document, snapshot: OfferSnapshot): HTMLElement {
  const dl = doc.createElement("dl");
  dl.className = "offer-fields";
  for (const field of VISIBLE_FIELDS) {
    const value = snapshot[field];
    if (value === undefined || value === null) continue;
    const dt = doc.createElement("dt");
    dt.textContent = field;
    const dd = doc.createElement("dd");
    dd.textContent = String(value);
    dd.dataset.field = field;
    dl.appendChild(dt);
    dl.appendChild(dd);
  }
  return dl;
}

function thumbnail(doc: Document, offerId: string): HTMLElement {
  const thumb = doc.createElement("div");
  thumb.className = "thumb";
  thumb.style.backgroundColor = placeholderColor(offerId);
  thumb.title = "image placeholder";
  return thumb;
}

export function renderRowView(doc: Document, row: RowPayload,
                              onVote: VoteHandler): HTMLElement {
  const root = doc.createElement("div");
  root.className = "row-view";
  root.dataset.rowId = row.row_id;

  const progress = doc.createElement("div");
  progress.className = "progress";
  progress.textContent =
    `vote ${row.votes_collected + 1} of ${row.required_votes}`;
  root.appendChild(progress);

  const queryPanel = doc.createElement("section");
  queryPanel.className = "query-panel";
  const qh = doc.createElement("h2");
  qh.textContent = "query offer";
  queryPanel.appendChild(qh);
  queryPanel.appendChild(thumbnail(doc, row.query.offer_id));
  queryPanel.appendChild(fieldList(doc, row.query));
  root.appendChild(queryPanel);

  const candidates = doc.createElement("section");
  candidates.className = "candidates";
  // fixed three-slot layout: empty slots render disabled so the buttons
  // never move between rows
  for (let slot = 0; slot < CANDIDATE_SLOTS; slot++) {
    const panel = doc.createElement("article");
    panel.className = "candidate-panel";
    const cand = row.candidates[slot];
    const button = doc.createElement("button");
    button.dataset.choice = `c${slot + 1}`;
    if (cand) {
      panel.appendChild(thumbnail(doc, cand.offer_id));
      panel.appendChild(fieldList(doc, cand));
      const sim = doc.createElement("div");
      sim.className = "similarity";
      sim.textContent = `similarity ${(cand.similarity ?? 0).toFixed(3)}`;
      panel.appendChild(sim);
      button.textContent = `match: candidate ${slot + 1} [${slot + 1}]`;
      button.addEventListener("click", () => onVote(`c${slot + 1}`));
    } else {
      panel.classList.add("empty-slot");
      button.textContent = `candidate ${slot + 1}`;
      button.disabled = true;
    }
    panel.appendChild(button);
    candidates.appendChild(panel);
  }
  root.appendChild(candidates);

  const reject = doc.createElement("button");
  reject.className = "no-match";
  reject.dataset.choice = NO_MATCH;
  reject.textContent = "no match [0]";
  reject.addEventListener("click", () => onVote(NO_MATCH));
  root.appendChild(reject);

  return root;
}

export function renderIdleState(doc: Document): HTMLElement {
  const root = doc.createElement("div");
  root.className = "row-view idle";
  const msg = doc.createElement("p");
  msg.textContent = "queue empty — nothing left to review";
  root.appendChild(msg);
  return root;
}

/** Map a keypress to a verdict; returns null for keys without a binding or
 * for candidate slots the current row does not fill. */
export function choiceForKey(key: string, row: RowPayload): string | null {
  const choice = KEY_TO_CHOICE[key];
  if (!choice) return null;
  if (choice !== NO_MATCH) {
    const slot = Number(choice.slice(1));
    if (slot > row.candidates.length) return null;
  }
  return choice;
}
