// Thin typed client for the validation service JSON API.

export interface OfferSnapshot {
  offer_id: string;
  title?: string;
  brand?: string;
  category?: string;
  domain?: string;
  similarity?: number;
  // anything else the server might add; the row renderer whitelists fields
  [key: string]: unknown;
}

export interface RowPayload {
  row_id: string;
  query: OfferSnapshot;
  candidates: OfferSnapshot[];
  required_votes: number;
  votes_collected: number;
  status: string;
}

export interface NextResponse {
  row: RowPayload | null;
  pending: number;
}

export interface VoteResponse {
  row_id: string;
  status: string;
  verdict?: string;
}

export interface StatsResponse {
  rows_total: number;
  rows_completed: number;
  rows_pending: number;
  agreement_rate: number | null;
  confirmed: number;
  experiment?: {
    confusion: { tpr: number; fpr: number; [key: string]: unknown };
    lr_plus: number | null;
    predicted_hitl_precision: number;
    empirical_output_precision: number | null;
    p_model: number;
  } | null;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  async fetchNext(validator: string): Promise<NextResponse> {
    const url = `${this.baseUrl}/validation/next?validator=${encodeURIComponent(validator)}`;
    return asJson(await fetch(url));
  }

  async vote(rowId: string, validator: string, choice: string): Promise<VoteResponse> {
    const resp = await fetch(`${this.baseUrl}/validation/${encodeURIComponent(rowId)}/vote`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ validator, choice }),
    });
    return asJson(resp);
  }

  async stats(): Promise<StatsResponse> {
    return asJson(await fetch(`${this.baseUrl}/validation/stats`));
  }

  async getRow(rowId: string): Promise<Record<string, unknown>> {
    return asJson(await fetch(`${this.baseUrl}/rows/${encodeURIComponent(rowId)}`));
  }
}
