"""Static checks over PROLEG rule bases.

The checks mechanize recurring structural defects of machine-drafted
legal rules, plus ordinary rule-base hygiene:

* PRESUPPOSED_CLAUSE: a body condition the rule's applicability already
  implies (configurable predicate list, e.g. ``data_is_processed/1``).
* INCONSISTENT_SIBLING_CONDITION: a condition that, if it belongs
  anywhere, belongs to every rule sharing the head, yet appears in only
  some of them.
* ORPHAN_EXCEPTION: an exception declared for a conclusion no rule
  derives.
* UNDEFINED_PREDICATE: a body or exception predicate with no defining
  rule that is not part of the declared fact schema.
* UNSTRATIFIED_EXCEPTION_CYCLE: a dependency cycle through an exception
  edge, which the evaluator would reject.

Linting is pure; findings come back ordered by source position.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .ast import (
    Atom,
    PredicateKey,
    Program,
    Variable,
    indicator,
    rename_atom,
    unify_atoms,
    variables_of,
)
from .engine import Unstratified, stratify

WARNING = "warning"
ERROR = "error"

_SEVERITY_RANK = {WARNING: 1, ERROR: 2}


class LintCheck(Enum):
    PRESUPPOSED_CLAUSE = "PRESUPPOSED_CLAUSE"
    INCONSISTENT_SIBLING_CONDITION = "INCONSISTENT_SIBLING_CONDITION"
    ORPHAN_EXCEPTION = "ORPHAN_EXCEPTION"
    UNDEFINED_PREDICATE = "UNDEFINED_PREDICATE"
    UNSTRATIFIED_EXCEPTION_CYCLE = "UNSTRATIFIED_EXCEPTION_CYCLE"


def _parse_indicator(text: str) -> PredicateKey:
    name, _, arity = text.partition("/")
    if not arity or not arity.isdigit():
        raise ValueError(f"expected 'name/arity', got {text!r}")
    return (name, int(arity))


@dataclass(frozen=True)
class LintConfig:
    """Predicate lists driving the configurable checks.

    Defaults target the GDPR Article 6 vocabulary but are plain data so
    the same checks transfer to other rule bases.
    """

    presupposed_predicates: tuple[PredicateKey, ...] = (
        ("data_is_processed", 1),
        ("processing_occurs", 1),
    )
    universal_condition_predicates: tuple[PredicateKey, ...] = (
        ("compliant_with_art5_principles", 1),
    )
    declared_fact_schema: tuple[PredicateKey, ...] = ()
    # When set, the sibling-consistency check considers every predicate
    # seen in some sibling body, not only the configured list.
    generic_siblings: bool = False

    @classmethod
    def from_obj(cls, obj: dict) -> "LintConfig":
        def keys(name: str, default: tuple[PredicateKey, ...]) -> tuple[PredicateKey, ...]:
            if name not in obj:
                return default
            return tuple(_parse_indicator(item) for item in obj[name])

        base = cls()
        return cls(
            presupposed_predicates=keys("presupposed_predicates", base.presupposed_predicates),
            universal_condition_predicates=keys(
                "universal_condition_predicates", base.universal_condition_predicates
            ),
            declared_fact_schema=keys("declared_fact_schema", base.declared_fact_schema),
            generic_siblings=bool(obj.get("generic_siblings", False)),
        )

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "LintConfig":
        return cls.from_obj(json.loads(Path(path).read_text(encoding="utf-8")))


DEFAULT_LINT_CONFIG = LintConfig()


@dataclass(frozen=True)
class LintFinding:
    check_id: LintCheck
    severity: str
    statement: str
    line: Optional[int]
    message: str
    related: tuple[str, ...] = field(default=())

    def to_obj(self) -> dict:
        return {
            "check_id": self.check_id.value,
            "severity": self.severity,
            "statement": self.statement,
            "line": self.line,
            "message": self.message,
            "related": list(self.related),
        }

    def __str__(self) -> str:
        where = f" (line {self.line})" if self.line is not None else ""
        suffix = f" [related: {', '.join(self.related)}]" if self.related else ""
        return (
            f"{self.severity}: {self.check_id.value} at {self.statement}{where}: "
            f"{self.message}{suffix}"
        )


def findings_to_json(findings: list[LintFinding]) -> str:
    return json.dumps([f.to_obj() for f in findings], indent=2)


def _heads_unify(decl_head: Atom, rule_head: Atom) -> bool:
    mapping = {name: Variable(f"_L_{name}") for name in variables_of(decl_head)}
    return unify_atoms(rename_atom(decl_head, mapping), rule_head) is not None


def lint(program: Program, config: Optional[LintConfig] = None) -> list[LintFinding]:
    """Run every check; findings are ordered by source position."""
    cfg = config or DEFAULT_LINT_CONFIG
    findings: list[LintFinding] = []
    defined = program.defined_predicates()
    schema = set(cfg.declared_fact_schema)

    presupposed = set(cfg.presupposed_predicates)
    for rule in program.rules:
        for atom in rule.body:
            if atom.key in presupposed:
                findings.append(
                    LintFinding(
                        LintCheck.PRESUPPOSED_CLAUSE,
                        WARNING,
                        f"rule {rule.id}",
                        rule.line,
                        f"condition '{atom}' is presupposed by the rule's "
                        "applicability and should be omitted",
                    )
                )

    by_head: dict[PredicateKey, list] = {}
    for rule in program.rules:
        by_head.setdefault(rule.head.key, []).append(rule)
    for head_key, group in by_head.items():
        if len(group) < 2:
            continue
        if cfg.generic_siblings:
            candidates = {atom.key for rule in group for atom in rule.body}
        else:
            candidates = set(cfg.universal_condition_predicates)
        for candidate in sorted(candidates):
            having = [r for r in group if any(a.key == candidate for a in r.body)]
            if having and len(having) < len(group):
                missing = tuple(r.id for r in group if r not in having)
                findings.append(
                    LintFinding(
                        LintCheck.INCONSISTENT_SIBLING_CONDITION,
                        WARNING,
                        f"rule {having[0].id}",
                        having[0].line,
                        f"condition '{indicator(candidate)}' appears in "
                        f"{len(having)} of {len(group)} rules for "
                        f"'{indicator(head_key)}'; a condition that applies to "
                        "every instance belongs in all sibling rules or none",
                        related=missing,
                    )
                )

    for index, decl in enumerate(program.exceptions, start=1):
        if not any(_heads_unify(decl.head, rule.head) for rule in program.rules):
            findings.append(
                LintFinding(
                    LintCheck.ORPHAN_EXCEPTION,
                    WARNING,
                    f"exception {index}",
                    decl.line,
                    f"exception declared for '{decl.head}' but no rule concludes it",
                )
            )

    reported: set[PredicateKey] = set()
    occurrences: list[tuple[Atom, str, Optional[int]]] = []
    for rule in program.rules:
        for atom in rule.body:
            occurrences.append((atom, f"rule {rule.id}", rule.line))
    for index, decl in enumerate(program.exceptions, start=1):
        occurrences.append((decl.exception, f"exception {index}", decl.line))
    for atom, statement, line in occurrences:
        key = atom.key
        if key in defined or key in schema or key in reported:
            continue
        reported.add(key)
        findings.append(
            LintFinding(
                LintCheck.UNDEFINED_PREDICATE,
                WARNING,
                statement,
                line,
                f"predicate '{indicator(key)}' has no defining rule and is "
                "not in the declared fact schema",
            )
        )

    try:
        stratify(program)
    except Unstratified as exc:
        cycle_preds = set(exc.cycle)
        line = None
        statement = "program"
        for index, decl in enumerate(program.exceptions, start=1):
            if decl.head.key in cycle_preds:
                line = decl.line
                statement = f"exception {index}"
                break
        pretty = " -> ".join(indicator(k) for k in exc.cycle + exc.cycle[:1])
        findings.append(
            LintFinding(
                LintCheck.UNSTRATIFIED_EXCEPTION_CYCLE,
                ERROR,
                statement,
                line,
                f"exception dependencies form a cycle: {pretty}",
            )
        )

    findings.sort(key=lambda f: f.line if f.line is not None else 10**9)
    return findings


def worst_severity(findings: list[LintFinding]) -> Optional[str]:
    """The most severe level present, or None for a clean result."""
    worst = None
    for finding in findings:
        if worst is None or _SEVERITY_RANK[finding.severity] > _SEVERITY_RANK[worst]:
            worst = finding.severity
    return worst


def severity_at_least(severity: str, threshold: str) -> bool:
    return _SEVERITY_RANK[severity] >= _SEVERITY_RANK[threshold]
