"""Automated plan auditing against a scene's object list.

Two failure families are flagged: steps that mention objects absent from the
scene (with synonym and part-of escapes), and steps that break physical
ordering rules in a small world-state simulation (location + held objects).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .planning import Plan
from .scene import ObjectList, normalize_name

MATCH_EXACT = "Exact"
MATCH_SYNONYM = "Synonym"
MATCH_PART_OF = "PartOf"
MATCH_NONE = "None"

VERDICT_SUCCESS = "Success"
VERDICT_HALLUCINATION = "Hallucination"
VERDICT_COUNTERFACTUAL = "Counterfactual"

# Verbs that act on an object and, under the strict rule set, require the
# agent to be at the object (or holding it) first.
_INTERACT_VERBS = {
    "GRASP", "PLACE", "OPEN", "CLOSE", "TURN_ON", "TURN_OFF", "SLICE",
    "POUR", "WIPE", "SCRUB", "RINSE", "WET", "DRY", "TEAR", "PRESS", "ADJUST",
}


class SynonymTable:
    """Undirected name equivalences, e.g. mug <-> cup."""

    def __init__(self, pairs=()):
        self._map: dict[str, set[str]] = {}
        for a, b in pairs:
            self.add(a, b)

    def add(self, a: str, b: str) -> None:
        a, b = normalize_name(a), normalize_name(b)
        if not a or not b or a == b:
            return
        self._map.setdefault(a, set()).add(b)
        self._map.setdefault(b, set()).add(a)

    def synonyms_of(self, name: str) -> set[str]:
        return set(self._map.get(normalize_name(name), ()))

    def __len__(self) -> int:
        return sum(len(v) for v in self._map.values()) // 2

    @classmethod
    def empty(cls) -> "SynonymTable":
        return cls()

    @classmethod
    def from_text(cls, text: str) -> "SynonymTable":
        table = cls()
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"synonym line must be 'name = name': {line!r}")
            a, b = line.split("=", 1)
            table.add(a, b)
        return table

    @classmethod
    def load(cls, path=None) -> "SynonymTable":
        if path is None:
            text = resources.files("planground.data").joinpath("synonyms.txt").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_text(text)


@dataclass(frozen=True)
class MatchResult:
    kind: str
    matched_scene_name: str | None = None

    @property
    def matched(self) -> bool:
        return self.kind != MATCH_NONE

    def to_record(self) -> dict:
        return {"kind": self.kind, "matched_scene_name": self.matched_scene_name}


def parse_rules_mode(value: str) -> str:
    lowered = str(value).strip().lower()
    if lowered == "strict":
        return "Strict"
    if lowered == "lenient":
        return "Lenient"
    raise ValueError(f"rule mode must be Strict or Lenient, got {value!r}")


@dataclass(frozen=True)
class RuleSet:
    mode: str = "Lenient"  # "Strict" or "Lenient"
    require_move_before_interact: bool | None = None
    forbid_place_without_grasp: bool = True
    forbid_double_grasp: bool = True
    require_tool_for_slice: bool = True

    def __post_init__(self):
        if self.mode not in ("Strict", "Lenient"):
            raise ValueError(f"unknown rule mode {self.mode!r}")
        if self.require_move_before_interact is None:
            object.__setattr__(self, "require_move_before_interact", self.mode == "Strict")
        elif self.require_move_before_interact and self.mode == "Lenient":
            raise ValueError("require_move_before_interact needs Strict mode")

    @classmethod
    def strict(cls) -> "RuleSet":
        return cls(mode="Strict")

    @classmethod
    def lenient(cls) -> "RuleSet":
        return cls(mode="Lenient")


def _word_subsequence(needle: str, haystack: str) -> bool:
    """True when needle's words appear contiguously among haystack's words."""
    n = needle.split()
    h = haystack.split()
    if not n or len(n) > len(h):
        return False
    return any(h[i : i + len(n)] == n for i in range(len(h) - len(n) + 1))


def match_object(phrase: str, object_list: ObjectList, synonyms: SynonymTable | None = None) -> MatchResult:
    """Best scene-name match for a phrase: Exact > Synonym > PartOf > None."""
    phrase = normalize_name(phrase)
    if not phrase:
        return MatchResult(MATCH_NONE)
    if phrase in object_list:
        return MatchResult(MATCH_EXACT, phrase)
    if synonyms is not None:
        hits = sorted(n for n in synonyms.synonyms_of(phrase) if n in object_list)
        if hits:
            return MatchResult(MATCH_SYNONYM, hits[0])
    for name in object_list:  # already sorted; first hit is the tie-break
        if _word_subsequence(name, phrase) or _word_subsequence(phrase, name):
            return MatchResult(MATCH_PART_OF, name)
    return MatchResult(MATCH_NONE)


@dataclass(frozen=True)
class StepAudit:
    index: int
    raw: str
    verb: str
    matches: tuple[tuple[str, MatchResult], ...]
    hallucinated: bool = False
    counterfactual: bool = False
    violated_rule: str | None = None

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "raw": self.raw,
            "verb": self.verb,
            "matches": [
                {"phrase": p, **m.to_record()} for p, m in self.matches
            ],
            "hallucinated": self.hallucinated,
            "counterfactual": self.counterfactual,
            "violated_rule": self.violated_rule,
        }


def check_hallucination(plan: Plan, object_list: ObjectList, synonyms: SynonymTable | None = None) -> list[StepAudit]:
    """Match every phrase of every step; a step with any None match is flagged."""
    audits = []
    for step in plan.steps:
        matches = tuple(
            (phrase, match_object(phrase, object_list, synonyms))
            for phrase in step.object_phrases
        )
        audits.append(
            StepAudit(
                index=step.index,
                raw=step.raw,
                verb=step.verb,
                matches=matches,
                hallucinated=any(not m.matched for _, m in matches),
            )
        )
    return audits


@dataclass
class WorldState:
    location: str | None = None
    holding: set[str] = field(default_factory=set)

    def snapshot(self) -> dict:
        return {"location": self.location, "holding": sorted(self.holding)}


def _is_knife(name: str) -> bool:
    return "knife" in name.split()


def simulate_plan(
    plan: Plan,
    object_list: ObjectList,
    rules: RuleSet,
    synonyms: SynonymTable | None = None,
) -> tuple[list[dict], list[StepAudit]]:
    """Run the world-state machine; returns (per-step state trace, audits).

    Only matched scene names enter the state. A rule violation flags the step
    as counterfactual but the simulation keeps going.
    """
    audits = check_hallucination(plan, object_list, synonyms)
    state = WorldState()
    trace: list[dict] = []
    flagged: list[StepAudit] = []
    for step, audit in zip(plan.steps, audits):
        matched_names = [m.matched_scene_name for _, m in audit.matches if m.matched]
        target = matched_names[0] if matched_names else None
        violated: str | None = None

        if (
            rules.require_move_before_interact
            and step.verb in _INTERACT_VERBS
            and target is not None
            and state.location != target
            and target not in state.holding
        ):
            violated = "move-before-interact"

        if step.verb == "GRASP" and target is not None:
            if (
                violated is None
                and rules.forbid_double_grasp
                and target in state.holding
                and "another" not in step.raw.lower().split()
            ):
                violated = "double-grasp"
            state.holding.add(target)
        elif step.verb == "PLACE" and target is not None:
            if violated is None and rules.forbid_place_without_grasp and target not in state.holding:
                violated = "place-without-grasp"
            state.holding.discard(target)
        elif step.verb == "SLICE":
            if (
                violated is None
                and rules.require_tool_for_slice
                and not any(_is_knife(n) for n in state.holding)
            ):
                violated = "slice-without-tool"
        elif step.verb == "MOVE" and matched_names:
            state.location = matched_names[-1]

        flagged.append(
            StepAudit(
                index=audit.index,
                raw=audit.raw,
                verb=audit.verb,
                matches=audit.matches,
                hallucinated=audit.hallucinated,
                counterfactual=violated is not None,
                violated_rule=violated,
            )
        )
        trace.append(state.snapshot())
    return trace, flagged


@dataclass(frozen=True)
class ValidationReport:
    steps: tuple[StepAudit, ...]
    verdict: str
    first_failure_step: int | None = None

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "first_failure_step": self.first_failure_step,
            "steps": [s.to_record() for s in self.steps],
        }


def validate(
    plan: Plan,
    object_list: ObjectList,
    synonyms: SynonymTable | None = None,
    rules: RuleSet | None = None,
) -> ValidationReport:
    """Full audit: hallucination pass plus world-state simulation.

    The verdict is the category of the earliest flagged step; on a step that
    is both, the hallucination wins (ordering analysis of a non-existent
    object is meaningless).
    """
    rules = rules if rules is not None else RuleSet.lenient()
    _, audits = simulate_plan(plan, object_list, rules, synonyms)
    verdict = VERDICT_SUCCESS
    first_failure: int | None = None
    for audit in audits:
        if audit.hallucinated or audit.counterfactual:
            first_failure = audit.index
            verdict = VERDICT_HALLUCINATION if audit.hallucinated else VERDICT_COUNTERFACTUAL
            break
    return ValidationReport(steps=tuple(audits), verdict=verdict, first_failure_step=first_failure)
