// Rendering contract for the row view: hidden-field policy, fixed slot
// layout, and keyboard bindings. Uses a live row from the seeded service to
// prove the policy holds on real payloads too.

import { describe, expect, it } from "vitest";

import { ApiClient, RowPayload } from "../src/api.js";
import { KEY_TO_CHOICE, choiceForKey, renderIdleState,
         renderRowView } from "../src/row_view.js";
import { PORT } from "./global_setup.js";

const api = new ApiClient(`http://127.0.0.1:${PORT}`);

const HIDDEN_VALUES = ["79.9", "81", "82", "83", "red"];
const HIDDEN_FIELDS = ["price", "n_sizes", "color"];

function localRow(): RowPayload {
  return {
    row_id: "local-1",
    query: { offer_id: "q1", title: "wool coat", brand: "orion",
             category: "jacket", domain: "domain1",
             price: 129.0, n_sizes: 4, color: "navy" },
    candidates: [
      { offer_id: "i1", title: "wool coat classic", brand: "orion",
        category: "jacket", domain: "domain0", similarity: 0.88,
        price: 131.0, n_sizes: 4, color: "navy" },
      { offer_id: "i2", title: "coat fitted", brand: "orion",
        category: "jacket", domain: "domain0", similarity: 0.81,
        price: 90.0, n_sizes: 2, color: "blue" },
    ],
    required_votes: 3,
    votes_collected: 1,
    status: "pending",
  };
}

describe("hidden-field policy", () => {
  it("never renders price, sizes or color", () => {
    const el = renderRowView(document, localRow(), () => {});
    const text = el.textContent ?? "";
    for (const value of ["129", "131", "navy", "blue", "90"]) {
      expect(text).not.toContain(value);
    }
    for (const field of HIDDEN_FIELDS) {
      expect(text).not.toContain(field);
      expect(el.querySelector(`[data-field="${field}"]`)).toBeNull();
    }
    // while the visible fields are all there
    expect(text).toContain("wool coat");
    expect(text).toContain("orion");
    expect(text).toContain("similarity 0.880");
  });

  it("holds on a live row served by the API", async () => {
    const next = await api.fetchNext("render-probe");
    expect(next.row).not.toBeNull();
    const el = renderRowView(document, next.row!, () => {});
    const text = el.textContent ?? "";
    for (const value of HIDDEN_VALUES) {
      expect(text).not.toContain(value);
    }
    for (const field of HIDDEN_FIELDS) {
      expect(el.querySelector(`[data-field="${field}"]`)).toBeNull();
    }
    expect(text).toContain("floral midi dress");
  });
});

describe("layout", () => {
  it("always renders three candidate slots, extras disabled", () => {
    const el = renderRowView(document, localRow(), () => {});
    const buttons = el.querySelectorAll<HTMLButtonElement>(
      ".candidate-panel button");
    expect(buttons).toHaveLength(3);
    expect(buttons[0].disabled).toBe(false);
    expect(buttons[1].disabled).toBe(false);
    expect(buttons[2].disabled).toBe(true);
  });

  it("shows the progress counter", () => {
    const el = renderRowView(document, localRow(), () => {});
    expect(el.querySelector(".progress")?.textContent).toBe("vote 2 of 3");
  });

  it("renders an idle state", () => {
    const el = renderIdleState(document);
    expect(el.textContent).toContain("queue empty");
  });
});

describe("keyboard bindings", () => {
  it("maps 1/2/3/0 bijectively onto verdicts", () => {
    const seen = new Set(Object.values(KEY_TO_CHOICE));
    expect(seen.size).toBe(4);
    expect(seen).toContain("no-match");
  });

  it("refuses slots beyond the candidate list", () => {
    const row = localRow(); // two candidates
    expect(choiceForKey("1", row)).toBe("c1");
    expect(choiceForKey("2", row)).toBe("c2");
    expect(choiceForKey("3", row)).toBeNull();
    expect(choiceForKey("0", row)).toBe("no-match");
    expect(choiceForKey("x", row)).toBeNull();
  });

  it("wires button clicks to the vote handler", () => {
    const votes: string[] = [];
    const el = renderRowView(document, localRow(), (c) => votes.push(c));
    el.querySelector<HTMLButtonElement>('[data-choice="c2"]')!.click();
    el.querySelector<HTMLButtonElement>('[data-choice="no-match"]')!.click();
    expect(votes).toEqual(["c2", "no-match"]);
  });
});
