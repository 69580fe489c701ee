// Session controller: fetch next row, render, submit the vote, advance.
// The server stays the arbiter of vote uniqueness; on a rejected vote we
// show the error verbatim and refetch.

import { ApiClient, ApiError, RowPayload } from "./api.js";
import { choiceForKey, renderIdleState, renderRowView } from "./row_view.js";

export class ValidationApp {
  private current: RowPayload | null = null;
  private submitting = false;

  constructor(private doc: Document, private api: ApiClient,
              private mount: HTMLElement, private validator: string,
              private errorBanner: HTMLElement) {}

  get currentRow(): RowPayload | null {
    return this.current;
  }

  async loadNext(): Promise<void> {
    this.errorBanner.textContent = "";
    try {
      const next = await this.api.fetchNext(this.validator);
      this.current = next.row;
    } catch (err) {
      this.showError(err);
      return;
    }
    if (this.current === null) {
      this.mount.replaceChildren(renderIdleState(this.doc));
    } else {
      this.mount.replaceChildren(
        renderRowView(this.doc, this.current, (c) => void this.submit(c)));
    }
  }

  async submit(choice: string): Promise<void> {
    if (this.current === null || this.submitting) return; // double-click guard
    this.submitting = true;
    const rowId = this.current.row_id;
    try {
      await this.api.vote(rowId, this.validator, choice);
    } catch (err) {
      this.showError(err);
      // duplicate/complete rejections mean our view is stale: refetch
      this.submitting = false;
      await this.loadNext();
      return;
    }
    this.submitting = false;
    await this.loadNext();
  }

  handleKey(key: string): void {
    if (this.current === null) return;
    const choice = choiceForKey(key, this.current);
    if (choice !== null) void this.submit(choice);
  }

  attachKeyboard(): void {
    this.doc.addEventListener("keydown", (ev) => this.handleKey(ev.key));
  }

  private showError(err: unknown): void {
    const msg = err instanceof ApiError
      ? err.detail
      : "network failure — retrying may help";
    this.errorBanner.textContent = msg;
  }
}
