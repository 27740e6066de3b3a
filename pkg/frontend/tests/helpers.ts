import { Directive, Mode, ReviewItem } from "../src/api";

export function directiveFor(mode: Mode, recordId: string): Directive {
  if (mode === "full_disclosure") {
    return {
      mode,
      payload: {
        semantic_text: "Based on 200 similar cases: experts overrode this 80% of the time.",
        assessment: { grade: "low", basis: "population", semantic_text: "..." },
        cohort: { n: 200 },
      },
    };
  }
  if (mode === "notify") {
    return {
      mode,
      payload: {
        flag: "Review recommended: output reliability medium",
        assessment_token: recordId,
      },
    };
  }
  return { mode, payload: { assessment_token: recordId } };
}

let counter = 0;

export function makeItem(overrides: Partial<ReviewItem> & { mode?: Mode } = {}): ReviewItem {
  counter += 1;
  const mode = overrides.mode ?? "notify";
  const id = overrides.record_id ?? `case-${String(counter).padStart(4, "0")}`;
  return {
    record_id: id,
    domain: "sim",
    model_id: "sim-model-1",
    created_at: `2025-07-01T${String(10 + (counter % 12)).padStart(2, "0")}:00:00Z`,
    mission: "Assess the intake form for subject " + counter,
    conclusion: { raw_text: "Apply standard plan", canonical: "apply standard plan", category: "other" },
    justification: "signal present in intake data",
    status: "pending",
    override: "pending",
    corrective_option: null,
    directive: directiveFor(mode, id),
    ...stripMode(overrides),
  };
}

function stripMode(overrides: Partial<ReviewItem> & { mode?: Mode }): Partial<ReviewItem> {
  const { mode: _mode, ...rest } = overrides;
  return rest;
}
