"""proleg: a toolchain for the PROLEG legal-reasoning language.

Parse rule bases and case facts, evaluate queries under
rule-with-exception semantics with full reasoning traces, render traces
as text, DOT, or JSON, convert a restricted Prolog dialect into PROLEG,
and lint rule bases for structural defects. The ``gdpr`` subpackage
ships an executable formalization of GDPR Article 6 with test cases.
"""

from .ast import (
    Atom,
    Compound,
    Constant,
    ExceptionDecl,
    FactBase,
    Integer,
    Program,
    Rule,
    SourceRef,
    Substitution,
    Term,
    Text,
    Variable,
    apply,
    unify,
)
from .convert import ConvertReport, PrologClause, convert_source, parse_prolog_subset, to_proleg
from .engine import (
    DepthExceeded,
    EngineConfig,
    EngineError,
    StepsExceeded,
    Unstratified,
    holds_all,
    solve,
    stratify,
)
from .lint import LintConfig, LintFinding, lint
from .parser import ParseError, ParseFailure, parse_atom, parse_facts, parse_program, serialize
from .trace import (
    EdgeKind,
    Outcome,
    TraceNode,
    render_dot,
    render_json,
    render_text,
    trace_from_json,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Compound",
    "Constant",
    "ConvertReport",
    "DepthExceeded",
    "EdgeKind",
    "EngineConfig",
    "EngineError",
    "ExceptionDecl",
    "FactBase",
    "Integer",
    "LintConfig",
    "LintFinding",
    "Outcome",
    "ParseError",
    "ParseFailure",
    "Program",
    "PrologClause",
    "Rule",
    "SourceRef",
    "StepsExceeded",
    "Substitution",
    "Term",
    "Text",
    "TraceNode",
    "Unstratified",
    "Variable",
    "apply",
    "convert_source",
    "holds_all",
    "lint",
    "parse_atom",
    "parse_facts",
    "parse_program",
    "parse_prolog_subset",
    "render_dot",
    "render_json",
    "render_text",
    "serialize",
    "solve",
    "stratify",
    "to_proleg",
    "trace_from_json",
    "unify",
]
