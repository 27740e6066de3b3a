// @vitest-environment jsdom

import { describe, expect, it } from "vitest";

import { AssessmentView, AuditTrail } from "../src/api";
import {
  renderAssessmentPanel,
  renderAuditPanel,
  renderError,
  renderItem,
  renderQueue,
} from "../src/render";
import { Decision } from "../src/queue";
import { makeItem } from "./helpers";

const doc = document;

describe("renderItem, full disclosure", () => {
  it("shows the semantic explanation and grades inline", () => {
    const item = makeItem({ mode: "full_disclosure" });
    const node = renderItem(doc, item, false);
    expect(node.dataset.mode).toBe("full_disclosure");
    const semantic = node.querySelector(".semantic-text");
    expect(semantic?.textContent).toContain("experts overrode this 80%");
    const grades = node.querySelector("dl.grades");
    expect(grades?.textContent).toContain("low");
    expect(grades?.textContent).toContain("population");
  });
});

describe("renderItem, notify", () => {
  it("shows the flag badge and an explicit on-demand control only", () => {
    const item = makeItem({ mode: "notify" });
    const node = renderItem(doc, item, false);
    const badge = node.querySelector(".notice-badge");
    expect(badge?.textContent).toBe("Review recommended: output reliability medium");
    expect(node.querySelector(".semantic-text")).toBeNull();
    expect(node.querySelector("dl.grades")).toBeNull();
    expect(node.querySelector("button.on-demand")).not.toBeNull();
  });
});

describe("renderItem, silent on demand", () => {
  it("renders no grades or reliability wording anywhere in the DOM", () => {
    const item = makeItem({ mode: "silent_on_demand" });
    const node = renderItem(doc, item, false);
    expect(node.querySelector(".semantic-text")).toBeNull();
    expect(node.querySelector("dl.grades")).toBeNull();
    expect(node.querySelector(".notice-badge")).toBeNull();
    const text = (node.textContent ?? "").toLowerCase();
    for (const token of ["reliability low", "reliability medium",
                         "reliability high", "grade", "overrode",
                         "similar cases"]) {
      expect(text).not.toContain(token);
    }
    // The assessment stays reachable, but only through the explicit control.
    expect(node.querySelector("button.on-demand")?.textContent)
      .toBe("Assessment available on request");
  });

  it("still shows the output itself: mission, recommendation, justification", () => {
    const item = makeItem({ mode: "silent_on_demand" });
    const node = renderItem(doc, item, false);
    expect(node.querySelector(".mission")?.textContent).toBe(item.mission);
    expect(node.querySelector(".conclusion")?.textContent)
      .toContain(item.conclusion.raw_text);
    expect(node.querySelector(".justification")?.textContent)
      .toBe(item.justification);
  });
});

describe("decision controls", () => {
  it("pending items expose accept and override", () => {
    const node = renderItem(doc, makeItem({}), false);
    expect(node.querySelector("button.accept")).not.toBeNull();
    expect(node.querySelector("form.override-form")).not.toBeNull();
  });

  it("decided items are immutable: no controls, decision shown", () => {
    const item = makeItem({
      status: "resolved",
      override: "yes",
      corrective_option: {
        raw_text: "Escalate for senior review",
        canonical: "escalate for senior review",
        category: "escalate",
      },
    });
    const node = renderItem(doc, item, false);
    expect(node.querySelector("button.accept")).toBeNull();
    expect(node.querySelector("form.override-form")).toBeNull();
    expect(node.querySelector(".decided")?.textContent)
      .toContain("Escalate for senior review");
  });

  it("a submitting item hides the controls until the acknowledgment", () => {
    const node = renderItem(doc, makeItem({}), true);
    expect(node.querySelector("button.accept")).toBeNull();
    expect(node.querySelector(".submitting")).not.toBeNull();
  });

  it("accept click and override submit reach the handler", () => {
    const decisions: Array<[string, Decision]> = [];
    const item = makeItem({});
    const node = renderItem(doc, item, false, {
      onDecide: (id, decision) => decisions.push([id, decision]),
    });
    (node.querySelector("button.accept") as HTMLButtonElement).click();
    const form = node.querySelector("form.override-form") as HTMLFormElement;
    (form.querySelector("input.corrective") as HTMLInputElement).value =
      "Apply alternative plan";
    (form.querySelector("input.reason-tags") as HTMLInputElement).value =
      "FACT-ERR, OTHER";
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    expect(decisions).toEqual([
      [item.record_id, { kind: "accept" }],
      [item.record_id, {
        kind: "override",
        corrective: "Apply alternative plan",
        reasonTags: ["FACT-ERR", "OTHER"],
      }],
    ]);
  });

  it("the on-demand control requests the assessment explicitly", () => {
    const opened: string[] = [];
    const item = makeItem({ mode: "silent_on_demand" });
    const node = renderItem(doc, item, false, {
      onShowAssessment: (id) => opened.push(id),
    });
    (node.querySelector("button.on-demand") as HTMLButtonElement).click();
    expect(opened).toEqual([item.record_id]);
  });
});

describe("renderQueue", () => {
  it("renders items in the given order and an empty state", () => {
    const items = [
      makeItem({ mode: "full_disclosure" }),
      makeItem({ mode: "silent_on_demand" }),
    ];
    const list = renderQueue(doc, items, () => false);
    const rendered = Array.from(list.querySelectorAll("article.review-item"))
      .map((n) => (n as HTMLElement).dataset.recordId);
    expect(rendered).toEqual(items.map((i) => i.record_id));
    const empty = renderQueue(doc, [], () => false);
    expect(empty.querySelector(".empty")).not.toBeNull();
  });
});

describe("panels", () => {
  it("assessment panel shows the grades the silent item withheld", () => {
    const view: AssessmentView = {
      record_id: "case-0001",
      status: "pending",
      assessment: {
        risk_level: "medium",
        alignment_score: "low",
        accuracy_score: "medium",
        provenance: "rule-based-initial",
      },
      reliability: {
        grade: "low",
        basis: "population",
        semantic_text: "Based on 150 similar cases: experts overrode this 60% of the time.",
      },
      directive: { mode: "silent_on_demand", payload: { assessment_token: "case-0001" } },
    };
    const panel = renderAssessmentPanel(doc, view);
    expect(panel.textContent).toContain("150 similar cases");
    expect(panel.textContent).toContain("rule-based-initial");
    expect(panel.querySelectorAll("dd.grade-value").length).toBe(6);
  });

  it("audit panel lists every entry with its type", () => {
    const trail: AuditTrail = {
      record_id: "case-0001",
      entries: [
        { at: "2025-07-01T00:00:00Z", type: "ingest" },
        { at: "2025-07-01T00:01:00Z", type: "access", actor: "dr-ross" },
        { at: "2025-07-01T00:02:00Z", type: "decision", override: "yes" },
      ],
    };
    const panel = renderAuditPanel(doc, trail);
    const types = Array.from(panel.querySelectorAll(".audit-type"))
      .map((n) => n.textContent);
    expect(types).toEqual(["ingest", "access", "decision"]);
    expect(panel.textContent).toContain("dr-ross");
  });

  it("error banner is visible and names the failure", () => {
    const banner = renderError(doc, "service unreachable at http://127.0.0.1:1");
    expect(banner.className).toBe("error-banner");
    expect(banner.textContent).toContain("unreachable");
  });
});
