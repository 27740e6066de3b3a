"""Graduated visibility: what the reviewing expert is shown per output.

Maps (reliability grade, risk level) to one of three modes. Low reliability
always surfaces the complete explanation; medium reliability shows a one-line
notification with the full assessment one click away; high reliability stays
silent with the assessment available on demand, except in high-risk cases
where a notification is still shown. Institutions may escalate any cell of
the matrix but never reduce it below the default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .grammar import GRADES, Grade


class Mode:
    SILENT_ON_DEMAND = "silent_on_demand"
    NOTIFY = "notify"
    FULL_DISCLOSURE = "full_disclosure"


# Intrusiveness order; "escalate" means moving up this list.
_INTRUSIVENESS = {Mode.SILENT_ON_DEMAND: 0, Mode.NOTIFY: 1, Mode.FULL_DISCLOSURE: 2}

MODES = tuple(_INTRUSIVENESS)


def intrusiveness(mode: str) -> int:
    return _INTRUSIVENESS[mode]


def default_mode(reliability: Grade, risk: Grade) -> str:
    if reliability is Grade.LOW:
        return Mode.FULL_DISCLOSURE
    if reliability is Grade.MEDIUM:
        return Mode.NOTIFY
    if risk is Grade.HIGH:
        return Mode.NOTIFY
    return Mode.SILENT_ON_DEMAND


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class VisibilityPolicy:
    """A validated 3x3 (reliability x risk) -> mode matrix."""

    matrix: dict  # (Grade, Grade) -> mode

    @classmethod
    def default(cls) -> "VisibilityPolicy":
        return cls(matrix={
            (rel, risk): default_mode(rel, risk) for rel in GRADES for risk in GRADES
        })

    @classmethod
    def from_dict(cls, raw: dict) -> "VisibilityPolicy":
        """Parse and validate a policy file.

        Cells may only escalate relative to the defaults, and for each risk
        column lower reliability must never get a less intrusive mode.
        """
        matrix = {}
        table = raw.get("matrix", {})
        for rel in GRADES:
            row = table.get(rel.value, {})
            for risk in GRADES:
                mode = row.get(risk.value, default_mode(rel, risk))
                if mode not in _INTRUSIVENESS:
                    raise PolicyError(f"unknown visibility mode {mode!r} at ({rel.value}, {risk.value})")
                if intrusiveness(mode) < intrusiveness(default_mode(rel, risk)):
                    raise PolicyError(
                        f"policy reduces visibility below default at ({rel.value}, {risk.value}): "
                        f"{mode} < {default_mode(rel, risk)}"
                    )
                matrix[(rel, risk)] = mode
        for risk in GRADES:
            if not (intrusiveness(matrix[(Grade.LOW, risk)])
                    >= intrusiveness(matrix[(Grade.MEDIUM, risk)])
                    >= intrusiveness(matrix[(Grade.HIGH, risk)])):
                raise PolicyError(
                    f"policy not monotone in reliability at risk {risk.value}"
                )
        return cls(matrix=matrix)

    @classmethod
    def load(cls, path: str | Path) -> "VisibilityPolicy":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def mode(self, reliability: Grade, risk: Grade) -> str:
        return self.matrix[(reliability, risk)]

    def to_wire(self) -> dict:
        out: dict = {}
        for (rel, risk), mode in self.matrix.items():
            out.setdefault(rel.value, {})[risk.value] = mode
        return {"matrix": out}


@dataclass
class VisibilityDirective:
    """What the review surface must show for one output."""

    mode: str
    payload: dict

    def to_wire(self) -> dict:
        return {"mode": self.mode, "payload": self.payload}


def directive(reliability: Grade, risk: Grade, assessment_wire: dict,
              policy: VisibilityPolicy | None = None,
              access_token: str | None = None) -> VisibilityDirective:
    """Build the directive for one assessed output.

    assessment_wire is the reliability assessment in wire form; it is embedded
    whole under full disclosure and reachable through the token otherwise.
    """
    policy = policy or VisibilityPolicy.default()
    mode = policy.mode(reliability, risk)
    if mode == Mode.FULL_DISCLOSURE:
        payload = {
            "semantic_text": assessment_wire.get("semantic_text", ""),
            "assessment": assessment_wire,
            "cohort": assessment_wire.get("cohort"),
        }
    elif mode == Mode.NOTIFY:
        payload = {
            "flag": f"Review recommended: output reliability {assessment_wire.get('grade', 'unknown')}",
            "assessment_token": access_token,
        }
    else:
        payload = {"assessment_token": access_token}
    return VisibilityDirective(mode=mode, payload=payload)
