/**
 * Review queue state: directive-ordered items plus optimistic decision
 * submission. The server is the authority; an item shows as decided only
 * after the service acknowledges the action, and conflicts (someone else
 * decided first) are surfaced, never swallowed.
 */

import { ApiError, Mode, QueueFilter, ReviewItem, ServiceClient } from "./api";

export const MODE_ORDER: Mode[] = ["full_disclosure", "notify", "silent_on_demand"];

export function modeRank(mode: Mode): number {
  const rank = MODE_ORDER.indexOf(mode);
  return rank === -1 ? MODE_ORDER.length : rank;
}

/** Most intrusive directives first, then oldest first, id as tiebreak. */
export function orderQueue(items: ReviewItem[]): ReviewItem[] {
  return [...items].sort((a, b) => {
    const byMode = modeRank(a.directive.mode) - modeRank(b.directive.mode);
    if (byMode !== 0) return byMode;
    if (a.created_at !== b.created_at) {
      return a.created_at < b.created_at ? -1 : 1;
    }
    return a.record_id < b.record_id ? -1 : a.record_id > b.record_id ? 1 : 0;
  });
}

export function applyFilter(items: ReviewItem[], filter: QueueFilter): ReviewItem[] {
  return items.filter((item) =>
    (!filter.domain || item.domain === filter.domain) &&
    (!filter.mode || item.directive.mode === filter.mode) &&
    (!filter.status || item.status === filter.status));
}

export function countByMode(items: ReviewItem[]): Record<Mode, number> {
  const counts: Record<Mode, number> = {
    full_disclosure: 0,
    notify: 0,
    silent_on_demand: 0,
  };
  for (const item of items) counts[item.directive.mode] += 1;
  return counts;
}

export type Decision =
  | { kind: "accept" }
  | { kind: "override"; corrective: string; reasonTags: string[] };

/** The decision travels the same write path as middleware capture. */
export function decisionEvent(item: ReviewItem, decision: Decision,
                              occurredAt: string): Record<string, unknown> {
  const payload: Record<string, unknown> =
    decision.kind === "accept"
      ? { action: item.conclusion.raw_text }
      : { action: decision.corrective, reason_tags: decision.reasonTags };
  return {
    interaction_id: item.record_id,
    kind: "expert_action",
    occurred_at: occurredAt,
    payload,
  };
}

export interface DecisionOutcome {
  ok: boolean;
  conflict?: boolean;
  error?: string;
}

export class ReviewQueue {
  items: ReviewItem[] = [];
  loadError: string | null = null;

  private readonly client: ServiceClient;
  private filter: QueueFilter;
  private readonly inFlight = new Set<string>();
  private readonly listeners: Array<() => void> = [];

  constructor(client: ServiceClient, filter: QueueFilter = {}) {
    this.client = client;
    this.filter = filter;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  setFilter(filter: QueueFilter): void {
    this.filter = filter;
  }

  getFilter(): QueueFilter {
    return { ...this.filter };
  }

  /** Load from the service. Failures land in loadError, never silently. */
  async load(): Promise<void> {
    try {
      const items = await this.client.reviewQueue(this.filter);
      this.items = orderQueue(items);
      this.loadError = null;
    } catch (err) {
      this.loadError = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  item(recordId: string): ReviewItem | undefined {
    return this.items.find((i) => i.record_id === recordId);
  }

  isSubmitting(recordId: string): boolean {
    return this.inFlight.has(recordId);
  }

  /**
   * Submit a decision. The item locks while the request is in flight and
   * flips to decided only on acknowledgment. A 409 means another reviewer
   * decided first: local state reloads to the winning decision.
   */
  async decide(recordId: string, decision: Decision,
               occurredAt?: string): Promise<DecisionOutcome> {
    const item = this.item(recordId);
    if (!item) {
      return { ok: false, error: `unknown item ${recordId}` };
    }
    if (item.status !== "pending") {
      return { ok: false, conflict: true, error: "item already decided" };
    }
    if (this.inFlight.has(recordId)) {
      return { ok: false, conflict: true, error: "submission already in flight" };
    }
    if (decision.kind === "override" && !decision.corrective.trim()) {
      return { ok: false, error: "override needs a corrective option" };
    }
    this.inFlight.add(recordId);
    this.emit();
    const event = decisionEvent(item, decision,
      occurredAt ?? new Date().toISOString().replace(/\.\d{3}Z$/, "Z"));
    try {
      await this.client.submitEvent(event);
    } catch (err) {
      this.inFlight.delete(recordId);
      if (err instanceof ApiError && err.code === "conflict") {
        await this.load();
        return { ok: false, conflict: true, error: err.message };
      }
      this.emit();
      return {
        ok: false,
        error: err instanceof Error ? err.message : String(err),
      };
    }
    this.inFlight.delete(recordId);
    // Acknowledged: reflect it immediately, then sync to server truth.
    item.status = "resolved";
    item.override = decision.kind === "override" ? "yes" : "no";
    await this.load();
    return { ok: true };
  }
}
