/**
 * Console wiring: connection form, queue with filters, explicit panels for
 * on-demand assessments, audit trails, and cohort evidence.
 */

import { ApiError, AssessmentView, Mode, QueueFilter, ServiceClient } from "./api";
import { Decision, ReviewQueue, countByMode } from "./queue";
import {
  renderAssessmentPanel,
  renderAuditPanel,
  renderCohortPanel,
  renderError,
  renderQueue,
} from "./render";

interface Session {
  client: ServiceClient;
  queue: ReviewQueue;
  actor: string;
}

let session: Session | null = null;

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readFilter(): QueueFilter {
  const filter: QueueFilter = {};
  const domain = byId<HTMLInputElement>("filter-domain").value.trim();
  const mode = byId<HTMLSelectElement>("filter-mode").value;
  const status = byId<HTMLSelectElement>("filter-status").value;
  if (domain) filter.domain = domain;
  if (mode) filter.mode = mode as Mode;
  if (status) filter.status = status as QueueFilter["status"];
  return filter;
}

function setPanel(content: HTMLElement | null): void {
  const host = byId<HTMLDivElement>("panel");
  host.replaceChildren();
  if (content) {
    const close = document.createElement("button");
    close.className = "close-panel";
    close.type = "button";
    close.textContent = "Close";
    close.addEventListener("click", () => setPanel(null));
    host.appendChild(close);
    host.appendChild(content);
  }
}

function flash(message: string, isError: boolean): void {
  const bar = byId<HTMLDivElement>("flash");
  bar.textContent = message;
  bar.className = isError ? "flash flash-error" : "flash";
  if (message) {
    setTimeout(() => {
      bar.textContent = "";
      bar.className = "flash";
    }, 6000);
  }
}

async function showAssessment(recordId: string): Promise<void> {
  if (!session) return;
  try {
    const view: AssessmentView = await session.client.assessment(
      recordId, session.actor);
    const panel = renderAssessmentPanel(document, view);
    const keys = view.signature_keys as Record<string, string> | undefined;
    if (keys?.agnostic) {
      const cohortButton = document.createElement("button");
      cohortButton.className = "cohort-link";
      cohortButton.type = "button";
      cohortButton.textContent = "Cohort evidence";
      cohortButton.addEventListener("click", () => showCohort(keys.agnostic));
      panel.appendChild(cohortButton);
    }
    setPanel(panel);
  } catch (err) {
    flash(err instanceof Error ? err.message : String(err), true);
  }
}

async function showCohort(signatureKey: string): Promise<void> {
  if (!session) return;
  try {
    const cohort = await session.client.cohort(signatureKey);
    setPanel(renderCohortPanel(document, cohort));
  } catch (err) {
    flash(err instanceof Error ? err.message : String(err), true);
  }
}

async function showAudit(recordId: string): Promise<void> {
  if (!session) return;
  try {
    const trail = await session.client.audit(recordId);
    setPanel(renderAuditPanel(document, trail));
  } catch (err) {
    flash(err instanceof Error ? err.message : String(err), true);
  }
}

async function decide(recordId: string, decision: Decision): Promise<void> {
  if (!session) return;
  const outcome = await session.queue.decide(recordId, decision);
  if (outcome.ok) {
    flash(`Decision recorded for ${recordId}.`, false);
  } else if (outcome.conflict) {
    flash(`Conflict on ${recordId}: ${outcome.error}`, true);
  } else {
    flash(`Decision failed for ${recordId}: ${outcome.error}`, true);
  }
}

function repaint(): void {
  if (!session) return;
  const host = byId<HTMLDivElement>("queue");
  host.replaceChildren();
  const queue = session.queue;
  if (queue.loadError) {
    host.appendChild(renderError(document, queue.loadError));
    return;
  }
  const counts = countByMode(queue.items);
  byId<HTMLSpanElement>("queue-summary").textContent =
    `${queue.items.length} items ` +
    `(${counts.full_disclosure} full, ${counts.notify} notify, ` +
    `${counts.silent_on_demand} silent)`;
  host.appendChild(renderQueue(
    document, queue.items, (id) => queue.isSubmitting(id), {
      onDecide: (id, decision) => { void decide(id, decision); },
      onShowAssessment: (id) => { void showAssessment(id); },
      onShowAudit: (id) => { void showAudit(id); },
    }));
}

async function connect(): Promise<void> {
  const base = byId<HTMLInputElement>("service-url").value.trim();
  const token = byId<HTMLInputElement>("service-token").value.trim();
  const actor = byId<HTMLInputElement>("reviewer-name").value.trim() || "anonymous";
  const client = new ServiceClient(base, token || undefined);
  try {
    await client.health();
  } catch (err) {
    const detail = err instanceof ApiError && err.code === "unreachable"
      ? err.message
      : `service at ${base} rejected the connection`;
    byId<HTMLDivElement>("queue").replaceChildren(renderError(document, detail));
    return;
  }
  const queue = new ReviewQueue(client, readFilter());
  queue.onChange(repaint);
  session = { client, queue, actor };
  await queue.load();
}

export function start(): void {
  byId<HTMLFormElement>("connect-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void connect();
  });
  byId<HTMLFormElement>("filter-form").addEventListener("submit", (event) => {
    event.preventDefault();
    if (!session) return;
    session.queue.setFilter(readFilter());
    void session.queue.load();
  });
  byId<HTMLButtonElement>("refresh").addEventListener("click", () => {
    if (session) void session.queue.load();
  });
}

if (typeof document !== "undefined" && document.getElementById("connect-form")) {
  start();
}
