"""Rule charters: the unit of variation for everything else.

A constitution is a labelled, priority-ordered list of moral rules.
Rules are natural-language guidance first; a rule may additionally
carry structured directives that scripted policies execute verbatim
(see :mod:`polis.policies` for how plain text is compiled into
directives when none are attached).

Constitutions round-trip through a small YAML document format so
humans can edit them and mutators can exchange them as text.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import yaml

__all__ = [
    "AGGRESSION_MODES",
    "Constitution",
    "ConstitutionError",
    "Directive",
    "DIRECTIVE_KINDS",
    "FORMAT_VERSION",
    "MoralRule",
    "complexity",
    "load_constitution",
    "parse_constitution",
    "save_constitution",
    "serialize_constitution",
    "validate_constitution",
]

FORMAT_VERSION = 1

DIRECTIVE_KINDS = (
    "deposit_first",
    "gather_needed",
    "seek_largest_deficit",
    "broadcast_threshold",
    "give_surplus",
    "aggression",
    "hoard",
    "rest_bias",
)

AGGRESSION_MODES = ("never", "retaliate", "always")


class ConstitutionError(ValueError):
    """Raised for malformed constitution data, with field diagnostics."""


@dataclass(frozen=True)
class Directive:
    """One executable behavior primitive.

    kind        one of DIRECTIVE_KINDS
    mode        aggression only: never | retaliate | always
    threshold   broadcast_threshold only: announce tiles stocking >= threshold
    """

    kind: str
    mode: str | None = None
    threshold: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in DIRECTIVE_KINDS:
            raise ConstitutionError(f"unknown directive kind {self.kind!r}")
        if self.kind == "aggression":
            if self.mode not in AGGRESSION_MODES:
                raise ConstitutionError(
                    f"aggression directive needs mode in {AGGRESSION_MODES}, got {self.mode!r}"
                )
        elif self.mode is not None:
            raise ConstitutionError(f"directive {self.kind!r} takes no mode")
        if self.kind == "broadcast_threshold":
            if not isinstance(self.threshold, int) or self.threshold < 1:
                raise ConstitutionError(
                    f"broadcast_threshold needs integer threshold >= 1, got {self.threshold!r}"
                )
        elif self.threshold is not None:
            raise ConstitutionError(f"directive {self.kind!r} takes no threshold")


@dataclass(frozen=True)
class MoralRule:
    name: str
    guidance: str
    summary: str
    priority: int
    directives: tuple[Directive, ...] = ()


@dataclass(frozen=True)
class Constitution:
    label: str
    rules: tuple[MoralRule, ...]
    provenance: str = "manual"

    def rule_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.rules)

    def relabel(self, label: str, provenance: str | None = None) -> "Constitution":
        return replace(self, label=label, provenance=provenance or self.provenance)


def complexity(constitution: Constitution) -> int:
    """Rule count; the structural axis used by the diversity archive."""
    return len(constitution.rules)


def validate_constitution(constitution: Constitution) -> list[str]:
    """Return a list of problems, empty when the constitution is sound."""
    problems: list[str] = []
    if not constitution.label or not constitution.label.strip():
        problems.append("label is empty")
    if not constitution.rules:
        problems.append("constitution has no rules")
    seen_priorities: set[int] = set()
    seen_names: set[str] = set()
    for index, rule in enumerate(constitution.rules, start=1):
        where = f"rule {index}"
        if not rule.name.strip():
            problems.append(f"{where}: name is empty")
        elif rule.name in seen_names:
            problems.append(f"{where}: duplicate name {rule.name!r}")
        seen_names.add(rule.name)
        if not rule.guidance.strip():
            problems.append(f"{where}: guidance is empty")
        if not isinstance(rule.priority, int) or rule.priority < 1:
            problems.append(f"{where}: priority must be a positive integer, got {rule.priority!r}")
        elif rule.priority in seen_priorities:
            problems.append(f"{where}: duplicate priority {rule.priority}")
        seen_priorities.add(rule.priority)
    priorities = [r.priority for r in constitution.rules]
    if priorities != sorted(priorities):
        problems.append("rules are not listed in ascending priority order")
    aggression_modes = {
        d.mode
        for rule in constitution.rules
        for d in rule.directives
        if d.kind == "aggression"
    }
    if len(aggression_modes) > 1:
        problems.append(f"conflicting aggression modes {sorted(aggression_modes)}")
    return problems


# ---------------------------------------------------------------------------
# File format


def _directive_to_obj(directive: Directive) -> dict:
    obj: dict = {"kind": directive.kind}
    if directive.mode is not None:
        obj["mode"] = directive.mode
    if directive.threshold is not None:
        obj["threshold"] = directive.threshold
    return obj


def _rule_to_obj(rule: MoralRule) -> dict:
    obj: dict = {
        "name": rule.name,
        "priority": rule.priority,
        "summary": rule.summary,
        "guidance": rule.guidance,
    }
    if rule.directives:
        obj["directives"] = [_directive_to_obj(d) for d in rule.directives]
    return obj


def serialize_constitution(constitution: Constitution) -> str:
    """Render as a YAML document; parse_constitution inverts this exactly."""
    doc = {
        "format_version": FORMAT_VERSION,
        "label": constitution.label,
        "provenance": constitution.provenance,
        "rules": [_rule_to_obj(r) for r in constitution.rules],
    }
    out = io.StringIO()
    yaml.safe_dump(doc, out, sort_keys=False, allow_unicode=True, width=88)
    return out.getvalue()


def _parse_directive(obj: object, where: str) -> Directive:
    if not isinstance(obj, dict):
        raise ConstitutionError(f"{where}: directive must be a mapping, got {type(obj).__name__}")
    unknown = set(obj) - {"kind", "mode", "threshold"}
    if unknown:
        raise ConstitutionError(f"{where}: unknown directive fields {sorted(unknown)}")
    if "kind" not in obj:
        raise ConstitutionError(f"{where}: directive missing 'kind'")
    try:
        return Directive(kind=obj["kind"], mode=obj.get("mode"), threshold=obj.get("threshold"))
    except ConstitutionError as exc:
        raise ConstitutionError(f"{where}: {exc}") from None


def _parse_rule(obj: object, index: int) -> MoralRule:
    where = f"rule {index}"
    if not isinstance(obj, dict):
        raise ConstitutionError(f"{where}: must be a mapping, got {type(obj).__name__}")
    unknown = set(obj) - {"name", "priority", "summary", "guidance", "directives"}
    if unknown:
        raise ConstitutionError(f"{where}: unknown fields {sorted(unknown)}")
    for required in ("name", "guidance", "priority"):
        if required not in obj:
            raise ConstitutionError(f"{where}: missing required field {required!r}")
    name = obj["name"]
    guidance = obj["guidance"]
    summary = obj.get("summary", "")
    priority = obj["priority"]
    if not isinstance(name, str):
        raise ConstitutionError(f"{where}: name must be a string")
    if not isinstance(guidance, str):
        raise ConstitutionError(f"{where}: guidance must be a string")
    if not isinstance(summary, str):
        raise ConstitutionError(f"{where}: summary must be a string")
    if isinstance(priority, bool) or not isinstance(priority, int):
        raise ConstitutionError(f"{where}: priority must be an integer, got {priority!r}")
    raw_directives = obj.get("directives", [])
    if not isinstance(raw_directives, list):
        raise ConstitutionError(f"{where}: directives must be a list")
    directives = tuple(
        _parse_directive(d, f"{where}, directive {j}") for j, d in enumerate(raw_directives, 1)
    )
    return MoralRule(
        name=name,
        guidance=guidance.rstrip("\n"),
        summary=summary.rstrip("\n"),
        priority=priority,
        directives=directives,
    )


def parse_constitution(text: str) -> Constitution:
    """Parse a YAML constitution document.

    Raises ConstitutionError carrying the YAML line for syntax errors
    and the rule index for semantic ones.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConstitutionError(f"invalid YAML{at}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConstitutionError("constitution document must be a YAML mapping")
    unknown = set(doc) - {"format_version", "label", "provenance", "rules"}
    if unknown:
        raise ConstitutionError(f"unknown top-level fields {sorted(unknown)}")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ConstitutionError(
            f"unsupported format_version {version!r}, expected {FORMAT_VERSION}"
        )
    label = doc.get("label")
    if not isinstance(label, str) or not label.strip():
        raise ConstitutionError("missing or empty 'label'")
    provenance = doc.get("provenance", "manual")
    if not isinstance(provenance, str):
        raise ConstitutionError("'provenance' must be a string")
    raw_rules = doc.get("rules")
    if not isinstance(raw_rules, list) or not raw_rules:
        raise ConstitutionError("'rules' must be a non-empty list")
    rules = tuple(_parse_rule(r, i) for i, r in enumerate(raw_rules, 1))
    constitution = Constitution(label=label, rules=rules, provenance=provenance)
    problems = validate_constitution(constitution)
    if problems:
        raise ConstitutionError("; ".join(problems))
    return constitution


def load_constitution(path: str) -> Constitution:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_constitution(fh.read())


def save_constitution(constitution: Constitution, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_constitution(constitution))
