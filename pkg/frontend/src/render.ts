/**
 * DOM rendering, faithful to each item's visibility directive.
 *
 * full_disclosure: semantic explanation and grades inline.
 * notify: the flag badge only; full assessment behind an explicit click.
 * silent_on_demand: no grades, no reliability wording anywhere inline;
 *   the assessment is reachable only through the on-demand control.
 */

import {
  AssessmentView,
  AuditTrail,
  FullDisclosurePayload,
  NotifyPayload,
  ReviewItem,
} from "./api";
import { Decision } from "./queue";

export interface ItemHandlers {
  onDecide?: (recordId: string, decision: Decision) => void;
  onShowAssessment?: (recordId: string) => void;
  onShowAudit?: (recordId: string) => void;
}

function el(doc: Document, tag: string, className: string,
            text?: string): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderError(doc: Document, message: string): HTMLElement {
  return el(doc, "div", "error-banner", `Service error: ${message}`);
}

function renderGuidance(doc: Document, item: ReviewItem,
                        handlers: ItemHandlers): HTMLElement {
  const guidance = el(doc, "section", "guidance");
  const mode = item.directive.mode;
  if (mode === "full_disclosure") {
    const payload = item.directive.payload as FullDisclosurePayload;
    guidance.appendChild(el(doc, "p", "semantic-text", payload.semantic_text));
    const grades = el(doc, "dl", "grades");
    const assessment = payload.assessment as Record<string, unknown>;
    for (const [label, key] of [
      ["reliability", "grade"],
      ["basis", "basis"],
    ] as const) {
      grades.appendChild(el(doc, "dt", "grade-label", label));
      grades.appendChild(el(doc, "dd", "grade-value",
        String(assessment[key] ?? "")));
    }
    guidance.appendChild(grades);
  } else if (mode === "notify") {
    const payload = item.directive.payload as NotifyPayload;
    guidance.appendChild(el(doc, "span", "notice-badge", payload.flag));
    guidance.appendChild(onDemandButton(doc, item, handlers,
      "View full assessment"));
  } else {
    // silent_on_demand: nothing inline beyond the explicit request control.
    guidance.appendChild(onDemandButton(doc, item, handlers,
      "Assessment available on request"));
  }
  return guidance;
}

function onDemandButton(doc: Document, item: ReviewItem,
                        handlers: ItemHandlers, label: string): HTMLElement {
  const button = el(doc, "button", "on-demand", label) as HTMLButtonElement;
  button.type = "button";
  button.addEventListener("click", () => {
    handlers.onShowAssessment?.(item.record_id);
  });
  return button;
}

function renderDecisionControls(doc: Document, item: ReviewItem,
                                submitting: boolean,
                                handlers: ItemHandlers): HTMLElement {
  const section = el(doc, "section", "decide");
  if (item.status === "resolved") {
    const text = item.override === "yes"
      ? `Decided: overridden${item.corrective_option
        ? ` with "${item.corrective_option.raw_text}"` : ""}`
      : "Decided: accepted";
    section.appendChild(el(doc, "p", "decided", text));
    return section;
  }
  if (submitting) {
    section.appendChild(el(doc, "p", "submitting", "Submitting decision..."));
    return section;
  }
  const accept = el(doc, "button", "accept", "Accept") as HTMLButtonElement;
  accept.type = "button";
  accept.addEventListener("click", () => {
    handlers.onDecide?.(item.record_id, { kind: "accept" });
  });
  section.appendChild(accept);

  const form = el(doc, "form", "override-form") as HTMLFormElement;
  const corrective = doc.createElement("input");
  corrective.className = "corrective";
  corrective.placeholder = "Corrective option";
  const tags = doc.createElement("input");
  tags.className = "reason-tags";
  tags.placeholder = "Reason tags, comma separated";
  const submit = el(doc, "button", "override", "Override") as HTMLButtonElement;
  submit.type = "submit";
  form.appendChild(corrective);
  form.appendChild(tags);
  form.appendChild(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onDecide?.(item.record_id, {
      kind: "override",
      corrective: corrective.value,
      reasonTags: tags.value.split(",").map((t) => t.trim()).filter(Boolean),
    });
  });
  section.appendChild(form);
  return section;
}

export function renderItem(doc: Document, item: ReviewItem,
                           submitting: boolean,
                           handlers: ItemHandlers = {}): HTMLElement {
  const article = el(doc, "article", "review-item");
  article.dataset.recordId = item.record_id;
  article.dataset.mode = item.directive.mode;
  article.dataset.status = item.status;

  const header = el(doc, "header", "item-header");
  header.appendChild(el(doc, "span", "record-id", item.record_id));
  header.appendChild(el(doc, "span", "domain", item.domain));
  header.appendChild(el(doc, "span", "created-at", item.created_at));
  article.appendChild(header);

  const output = el(doc, "section", "output");
  output.appendChild(el(doc, "p", "mission", item.mission));
  output.appendChild(el(doc, "p", "conclusion",
    `Recommendation: ${item.conclusion.raw_text}`));
  if (item.justification) {
    output.appendChild(el(doc, "p", "justification", item.justification));
  }
  article.appendChild(output);

  article.appendChild(renderGuidance(doc, item, handlers));
  article.appendChild(renderDecisionControls(doc, item, submitting, handlers));

  const footer = el(doc, "footer", "item-footer");
  const auditLink = el(doc, "button", "audit-link", "Audit trail") as HTMLButtonElement;
  auditLink.type = "button";
  auditLink.addEventListener("click", () => {
    handlers.onShowAudit?.(item.record_id);
  });
  footer.appendChild(auditLink);
  article.appendChild(footer);
  return article;
}

export function renderQueue(doc: Document, items: ReviewItem[],
                            isSubmitting: (id: string) => boolean,
                            handlers: ItemHandlers = {}): HTMLElement {
  const list = el(doc, "div", "review-queue");
  if (items.length === 0) {
    list.appendChild(el(doc, "p", "empty", "No items in the queue."));
    return list;
  }
  for (const item of items) {
    list.appendChild(renderItem(doc, item, isSubmitting(item.record_id), handlers));
  }
  return list;
}

/** Explicit on-demand panel; opening one is an audited access. */
export function renderAssessmentPanel(doc: Document,
                                      view: AssessmentView): HTMLElement {
  const panel = el(doc, "aside", "assessment-panel");
  panel.appendChild(el(doc, "h2", "panel-title",
    `Assessment for ${view.record_id}`));
  const reliability = view.reliability;
  panel.appendChild(el(doc, "p", "semantic-text", reliability.semantic_text));
  const grades = el(doc, "dl", "grades");
  const assessment = view.assessment as Record<string, unknown>;
  const rows: Array<[string, unknown]> = [
    ["reliability", reliability.grade],
    ["basis", reliability.basis],
    ["risk level", assessment.risk_level],
    ["alignment score", assessment.alignment_score],
    ["accuracy score", assessment.accuracy_score],
    ["provenance", assessment.provenance],
  ];
  for (const [label, value] of rows) {
    grades.appendChild(el(doc, "dt", "grade-label", label));
    grades.appendChild(el(doc, "dd", "grade-value", String(value ?? "")));
  }
  panel.appendChild(grades);
  return panel;
}

export function renderAuditPanel(doc: Document, trail: AuditTrail): HTMLElement {
  const panel = el(doc, "aside", "audit-panel");
  panel.appendChild(el(doc, "h2", "panel-title",
    `Audit trail for ${trail.record_id}`));
  const list = el(doc, "ol", "audit-entries");
  for (const entry of trail.entries) {
    const { at, type, ...rest } = entry;
    const item = el(doc, "li", `audit-entry audit-${type}`);
    item.appendChild(el(doc, "span", "audit-at", at));
    item.appendChild(el(doc, "span", "audit-type", type));
    item.appendChild(el(doc, "span", "audit-detail", JSON.stringify(rest)));
    list.appendChild(item);
  }
  panel.appendChild(list);
  return panel;
}

export function renderCohortPanel(doc: Document,
                                  cohort: Record<string, unknown>): HTMLElement {
  const panel = el(doc, "aside", "cohort-panel");
  panel.appendChild(el(doc, "h2", "panel-title", "Cohort evidence"));
  const pre = el(doc, "pre", "cohort-dump", JSON.stringify(cohort, null, 2));
  panel.appendChild(pre);
  return panel;
}
