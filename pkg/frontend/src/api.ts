/** Typed client for the label service HTTP API (/api/v1). */

export interface QueryView {
  query_id: number;
  dataset_index: number;
  image_url: string;
  class_names: string[];
  issued_at: number;
  queue_depth: number;
}

export interface RunStatus {
  training_step: number;
  labels_collected: number;
  label_budget: number;
  test_accuracy: number | null;
  queue_depth: number;
}

/**
 * Outcome of posting a label. "already-answered" (HTTP 409) is not an
 * error: it means this query was labeled once before, which is exactly
 * the state a double submission must settle into.
 */
export type SubmitResult =
  | "accepted"
  | "already-answered"
  | "unknown-query"
  | "rejected";

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;

  constructor(baseUrl = "", fetchFn: typeof fetch = (...args) => fetch(...args)) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  /** Poll the next outstanding query; null when the queue is idle (204). */
  async nextQuery(): Promise<QueryView | null> {
    const res = await this.fetchFn(`${this.baseUrl}/api/v1/queries/next`);
    if (res.status === 204) return null;
    if (!res.ok) throw new Error(`queries/next returned ${res.status}`);
    return (await res.json()) as QueryView;
  }

  async submitLabel(queryId: number, label: number): Promise<SubmitResult> {
    const res = await this.fetchFn(`${this.baseUrl}/api/v1/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ query_id: queryId, label }),
    });
    if (res.ok) return "accepted";
    if (res.status === 409) return "already-answered";
    if (res.status === 404) return "unknown-query";
    if (res.status === 422) return "rejected";
    throw new Error(`labels returned ${res.status}`);
  }

  async status(): Promise<RunStatus> {
    const res = await this.fetchFn(`${this.baseUrl}/api/v1/status`);
    if (!res.ok) throw new Error(`status returned ${res.status}`);
    return (await res.json()) as RunStatus;
  }

  imageUrl(relative: string): string {
    return `${this.baseUrl}${relative}`;
  }
}
