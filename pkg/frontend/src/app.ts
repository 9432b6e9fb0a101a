/** Single-page labeling app: poll for a query, render it, post one answer.
 *
 * State rules:
 *  - at most one in-flight request per endpoint (poll vs submit);
 *  - a displayed query is never dropped on a network error, only on a
 *    settled submission ("accepted" or "already-answered") or a server
 *    verdict that it no longer exists;
 *  - HTTP 409 on submit means someone (usually our own double click)
 *    already answered, so the UI advances without resubmitting.
 */

import { ApiClient, QueryView, RunStatus } from "./api.js";
import { formatAccuracy, indexForKey, shortcutForIndex } from "./format.js";

export interface AppOptions {
  pollIntervalMs?: number;
}

export class LabelerApp {
  readonly root: HTMLElement;
  private readonly api: ApiClient;
  private readonly pollIntervalMs: number;

  private current: QueryView | null = null;
  private status: RunStatus | null = null;
  private lastError: string | null = null;
  private submitting = false;
  private polling = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly onKeyDown = (event: KeyboardEvent) => this.handleKey(event);

  constructor(root: HTMLElement, api: ApiClient, options: AppOptions = {}) {
    this.root = root;
    this.api = api;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
  }

  start(): void {
    this.root.ownerDocument.addEventListener("keydown", this.onKeyDown);
    void this.tick();
  }

  stop(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.onKeyDown);
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  /** One poll cycle: refresh status, fetch a query if none is shown. */
  async tick(): Promise<void> {
    if (this.polling) return;
    this.polling = true;
    try {
      this.status = await this.api.status();
      if (this.current === null && !this.submitting) {
        this.current = await this.api.nextQuery();
      }
      this.lastError = null;
    } catch (err) {
      // keep this.current: a network blip must not lose the shown query
      this.lastError = `Cannot reach the label server (${String(err)})`;
    } finally {
      this.polling = false;
    }
    this.render();
    this.scheduleNext();
  }

  private scheduleNext(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => void this.tick(), this.pollIntervalMs);
  }

  /** Post one answer for the displayed query; guarded against re-entry. */
  async submit(label: number): Promise<void> {
    if (this.current === null || this.submitting) return;
    const query = this.current;
    if (label < 0 || label >= query.class_names.length) return;
    this.submitting = true;
    this.render();
    try {
      const result = await this.api.submitLabel(query.query_id, label);
      switch (result) {
        case "accepted":
        case "already-answered":
          this.current = null;
          break;
        case "unknown-query":
          this.lastError = `Query #${query.query_id} expired on the server; re-polling.`;
          this.current = null;
          break;
        case "rejected":
          this.lastError = `The server rejected label ${label}; the query stays queued.`;
          this.current = null; // still pending server-side; the next poll re-fetches it
          break;
      }
    } catch (err) {
      this.lastError = `Submitting failed (${String(err)}); the query is still shown.`;
    } finally {
      this.submitting = false;
    }
    this.render();
    void this.tick();
  }

  private handleKey(event: KeyboardEvent): void {
    const index = indexForKey(event.key);
    if (index === null || this.current === null) return;
    if (index >= this.current.class_names.length) return;
    event.preventDefault();
    void this.submit(index);
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    this.root.replaceChildren(
      this.renderBanner(),
      this.current ? this.renderQuery(this.current) : this.renderIdle(),
      this.renderStatusBar(),
    );
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = this.root.ownerDocument.createElement(tag);
    node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
  }

  private renderBanner(): HTMLElement {
    const banner = this.el("div", "error-banner");
    if (this.lastError === null) {
      banner.hidden = true;
      return banner;
    }
    banner.append(this.el("span", "error-text", this.lastError));
    const retry = this.el("button", "retry-button", "Retry now");
    retry.addEventListener("click", () => void this.tick());
    banner.append(retry);
    return banner;
  }

  private renderQuery(query: QueryView): HTMLElement {
    const panel = this.el("section", "query-panel");
    panel.append(
      this.el("h2", "query-title", `Label query #${query.query_id}`),
      this.el("p", "queue-depth", `${query.queue_depth} quer${query.queue_depth === 1 ? "y" : "ies"} waiting`),
    );

    const img = this.el("img", "query-image");
    img.src = this.api.imageUrl(query.image_url);
    img.alt = `image for query ${query.query_id}`;
    panel.append(img);

    const buttons = this.el("div", "class-buttons");
    query.class_names.forEach((name, index) => {
      const button = this.el("button", "class-button");
      button.dataset.classIndex = String(index);
      button.disabled = this.submitting;
      const shortcut = shortcutForIndex(index);
      button.textContent = shortcut === null ? name : `${shortcut} · ${name}`;
      button.addEventListener("click", () => void this.submit(index));
      buttons.append(button);
    });
    panel.append(buttons);
    return panel;
  }

  private renderIdle(): HTMLElement {
    const panel = this.el("section", "idle-panel");
    panel.append(this.el("h2", "idle-title", "Waiting for the next query…"));
    if (this.status !== null) {
      panel.append(
        this.el(
          "p",
          "idle-progress",
          `Labels collected: ${this.status.labels_collected} / ${this.status.label_budget}`,
        ),
      );
    }
    return panel;
  }

  private renderStatusBar(): HTMLElement {
    const bar = this.el("footer", "status-bar");
    if (this.status === null) {
      bar.append(this.el("span", "status-item", "status unavailable"));
      return bar;
    }
    bar.append(
      this.el("span", "status-item status-step", `step ${this.status.training_step}`),
      this.el(
        "span",
        "status-item status-labels",
        `labels ${this.status.labels_collected}/${this.status.label_budget}`,
      ),
      this.el(
        "span",
        "status-item status-accuracy",
        `test accuracy ${formatAccuracy(this.status.test_accuracy)}`,
      ),
      this.el("span", "status-item status-queue", `queue ${this.status.queue_depth}`),
    );
    return bar;
  }

  // -- test hooks -----------------------------------------------------------

  get shownQuery(): QueryView | null {
    return this.current;
  }

  get shownError(): string | null {
    return this.lastError;
  }
}
