/**
 * Typed client for the oversight service JSON API.
 * Pure client: everything the console does goes through these endpoints.
 */

export type Mode = "full_disclosure" | "notify" | "silent_on_demand";

export interface ActionText {
  raw_text: string;
  canonical: string;
  category: string;
}

export interface FullDisclosurePayload {
  semantic_text: string;
  assessment: Record<string, unknown>;
  cohort: Record<string, unknown> | null;
}

export interface NotifyPayload {
  flag: string;
  assessment_token: string;
}

export interface SilentPayload {
  assessment_token: string;
}

export interface Directive {
  mode: Mode;
  payload: FullDisclosurePayload | NotifyPayload | SilentPayload;
}

export type ItemStatus = "pending" | "resolved";

export interface ReviewItem {
  record_id: string;
  domain: string;
  model_id: string;
  created_at: string;
  mission: string;
  conclusion: ActionText;
  justification: string;
  status: ItemStatus;
  override: "no" | "yes" | "pending";
  corrective_option: ActionText | null;
  directive: Directive;
}

export interface QueueFilter {
  domain?: string;
  mode?: Mode;
  status?: ItemStatus;
}

export interface Ack {
  record_id: string;
  status: string;
  revision?: number;
}

export interface AssessmentView {
  record_id: string;
  status: ItemStatus;
  assessment: Record<string, unknown>;
  reliability: {
    grade: string;
    basis: string;
    semantic_text: string;
    [key: string]: unknown;
  };
  directive: Directive;
  [key: string]: unknown;
}

export interface AuditEntry {
  at: string;
  type: string;
  [key: string]: unknown;
}

export interface AuditTrail {
  record_id: string;
  entries: AuditEntry[];
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly token: string | null;

  constructor(baseUrl: string, token?: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.token = token ?? null;
  }

  async health(): Promise<{ status: string; records: number }> {
    return this.request("GET", "/health");
  }

  async reviewQueue(filter: QueueFilter = {}): Promise<ReviewItem[]> {
    const params = new URLSearchParams();
    if (filter.domain) params.set("domain", filter.domain);
    if (filter.mode) params.set("mode", filter.mode);
    if (filter.status) params.set("status", filter.status);
    const query = params.toString();
    const body = await this.request<{ items: ReviewItem[] }>(
      "GET", query ? `/records?${query}` : "/records");
    return body.items;
  }

  /** Reads are audited: actor is recorded in the access log. */
  async assessment(recordId: string, actor: string): Promise<AssessmentView> {
    const params = new URLSearchParams({ actor });
    return this.request("GET",
      `/assessments/${encodeURIComponent(recordId)}?${params}`);
  }

  async audit(recordId: string): Promise<AuditTrail> {
    return this.request("GET", `/audit/${encodeURIComponent(recordId)}`);
  }

  async cohort(signatureKey: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/cohorts/${encodeURIComponent(signatureKey)}`);
  }

  async submitEvent(event: Record<string, unknown>): Promise<Ack> {
    return this.request("POST", "/events", event);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "unreachable",
        `service unreachable at ${this.baseUrl}: ${(err as Error).message}`);
    }
    const text = await response.text();
    let parsed: unknown = null;
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        throw new ApiError(response.status, "bad-response",
          `non-JSON response from ${path}`);
      }
    }
    if (!response.ok) {
      const envelope = parsed as { error?: { code?: string; message?: string } } | null;
      throw new ApiError(
        response.status,
        envelope?.error?.code ?? "error",
        envelope?.error?.message ?? `request failed with ${response.status}`);
    }
    return parsed as T;
  }
}
