"""Shared test utilities: independent oracles and random generators.

The oracles here deliberately re-derive results from first principles
(naive rewriting, enumeration, a standalone negation-as-failure
fixpoint, a standalone DOT grammar checker) so the tested code paths
never verify themselves.
"""

from __future__ import annotations

import random
from itertools import product
from typing import Iterable, Optional

from proleg.ast import (
    Atom,
    Compound,
    Constant,
    ExceptionDecl,
    FactBase,
    Integer,
    Program,
    Rule,
    SourceRef,
    Term,
    Text,
    Variable,
)
from proleg.convert import PrologClause
from proleg.trace import EdgeKind, Outcome, TraceNode, iter_nodes

# ----------------------------------------------------------------------
# Substitution oracles.


def naive_substitute_once(bindings: dict[str, Term], term: Term) -> Term:
    """One parallel rewrite pass; no dereferencing."""
    if isinstance(term, Variable):
        return bindings.get(term.name, term)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(naive_substitute_once(bindings, a) for a in term.args))
    return term


def naive_apply_fixpoint(bindings: dict[str, Term], term: Term, limit: int = 200) -> Term:
    """Rewrite until nothing changes; diverges only on cyclic bindings."""
    current = term
    for _ in range(limit):
        nxt = naive_substitute_once(bindings, current)
        if nxt == current:
            return current
        current = nxt
    raise AssertionError("naive rewrite did not reach a fixpoint")


def term_variables(term: Term) -> list[str]:
    if isinstance(term, Variable):
        return [term.name]
    if isinstance(term, Compound):
        names: list[str] = []
        for arg in term.args:
            for name in term_variables(arg):
                if name not in names:
                    names.append(name)
        return names
    return []


def brute_force_unifiable(a: Term, b: Term, constants: Iterable[str]) -> bool:
    """Search all variable-to-constant assignments for a syntactic match."""
    names: list[str] = []
    for name in term_variables(a) + term_variables(b):
        if name not in names:
            names.append(name)
    pool = [Constant(c) for c in constants]
    for assignment in product(pool, repeat=len(names)):
        bindings = dict(zip(names, assignment))
        left = naive_apply_fixpoint(bindings, a)
        right = naive_apply_fixpoint(bindings, b)
        if left == right:
            return True
    return False


# ----------------------------------------------------------------------
# Random ground programs, stratified by construction: each predicate
# gets a level; rule bodies only mention same-or-lower levels, exception
# targets strictly lower ones. Any cycle then stays inside one level and
# cannot cross an exception edge.


def random_ground_program(
    rng: random.Random,
    max_preds: int = 12,
    max_rules: int = 20,
    max_exceptions: int = 6,
) -> tuple[Program, FactBase, list[Atom]]:
    n_preds = rng.randint(2, max_preds)
    levels: dict[str, int] = {}
    universe: list[Atom] = []
    for i in range(n_preds):
        name = f"p{i}"
        levels[name] = rng.randint(0, 3)
        if rng.random() < 0.3:
            universe.extend(Atom(name, (Constant(c),)) for c in ("c1", "c2"))
        else:
            universe.append(Atom(name))
    rules = []
    for k in range(rng.randint(0, max_rules)):
        head = rng.choice(universe)
        candidates = [a for a in universe if levels[a.predicate] <= levels[head.predicate]]
        body = tuple(rng.choice(candidates) for _ in range(rng.randint(0, 3)))
        rules.append(Rule(f"r{k + 1}", head, body))
    exceptions = []
    lower_pairs = [
        (h, e)
        for h in universe
        for e in universe
        if levels[e.predicate] < levels[h.predicate]
    ]
    if lower_pairs:
        for _ in range(rng.randint(0, max_exceptions)):
            head, exc = rng.choice(lower_pairs)
            exceptions.append(ExceptionDecl(head, exc))
    # Uniform over subsets of the atom universe.
    facts = FactBase(frozenset(a for a in universe if rng.random() < 0.5))
    return Program(tuple(rules), tuple(exceptions)), facts, universe


def random_prolog_program(
    rng: random.Random,
    max_preds: int = 10,
    max_clauses: int = 15,
    max_negated: int = 4,
) -> tuple[list[PrologClause], list[Atom]]:
    """Ground, stratified clauses in the supported dialect."""
    n_preds = rng.randint(2, max_preds)
    levels: dict[str, int] = {}
    universe: list[Atom] = []
    for i in range(n_preds):
        name = f"q{i}"
        levels[name] = rng.randint(0, 3)
        if rng.random() < 0.3:
            universe.extend(Atom(name, (Constant(c),)) for c in ("c1", "c2"))
        else:
            universe.append(Atom(name))
    clauses: list[PrologClause] = []
    negation_budget = max_negated
    for _ in range(rng.randint(1, max_clauses)):
        head = rng.choice(universe)
        level = levels[head.predicate]
        positives = [a for a in universe if levels[a.predicate] <= level]
        negatives = [a for a in universe if levels[a.predicate] < level]
        pos = tuple(rng.choice(positives) for _ in range(rng.randint(0, 3)))
        neg: tuple[Atom, ...] = ()
        if negatives and negation_budget > 0:
            count = rng.randint(0, min(2, negation_budget))
            neg = tuple(rng.choice(negatives) for _ in range(count))
            negation_budget -= len(neg)
        clauses.append(PrologClause(head, pos, neg))
    # A few plain facts so something is derivable.
    for _ in range(rng.randint(0, 4)):
        clauses.append(PrologClause(rng.choice(universe)))
    return clauses, universe


def naf_fixpoint(clauses: list[PrologClause]) -> frozenset[Atom]:
    """Stratified negation-as-failure model of ground clauses.

    Levels are recomputed here from scratch (iterative relaxation), so
    this oracle shares nothing with the converter or the engine.
    """
    preds = {c.head.predicate for c in clauses}
    for clause in clauses:
        for atom in clause.positive_body + clause.negated_body:
            preds.add(atom.predicate)
    level = {p: 0 for p in preds}
    for _ in range(len(preds) + 2):
        changed = False
        for clause in clauses:
            head = clause.head.predicate
            for atom in clause.positive_body:
                if level[head] < level[atom.predicate]:
                    level[head] = level[atom.predicate]
                    changed = True
            for atom in clause.negated_body:
                if level[head] < level[atom.predicate] + 1:
                    level[head] = level[atom.predicate] + 1
                    changed = True
        if not changed:
            break
    else:
        raise AssertionError("clauses are not stratified")
    true: set[Atom] = set()
    for current in range(max(level.values()) + 1):
        layer = [c for c in clauses if level[c.head.predicate] == current]
        changed = True
        while changed:
            changed = False
            for clause in layer:
                if clause.head in true:
                    continue
                if all(b in true for b in clause.positive_body) and not any(
                    g in true for g in clause.negated_body
                ):
                    true.add(clause.head)
                    changed = True
    return frozenset(true)


def ground_with(program: Program, constant: str = "case1") -> Program:
    """Instantiate every variable with one constant (exact for rule bases
    whose only terms are that case constant)."""
    c = Constant(constant)

    def g_term(term: Term) -> Term:
        if isinstance(term, Variable):
            return c
        if isinstance(term, Compound):
            return Compound(term.functor, tuple(g_term(a) for a in term.args))
        return term

    def g_atom(atom: Atom) -> Atom:
        return Atom(atom.predicate, tuple(g_term(a) for a in atom.args))

    rules = tuple(
        Rule(r.id, g_atom(r.head), tuple(g_atom(b) for b in r.body)) for r in program.rules
    )
    exceptions = tuple(
        ExceptionDecl(g_atom(d.head), g_atom(d.exception)) for d in program.exceptions
    )
    return Program(rules, exceptions)


# ----------------------------------------------------------------------
# Random syntactically-rich programs for parser round-trips.

_TEXT_CHARS = list(" abcxyz\"\\\n\t%().,<=#éß")


def _random_term(rng: random.Random, depth: int) -> Term:
    roll = rng.random()
    if depth <= 0 or roll < 0.45:
        kind = rng.randrange(4)
        if kind == 0:
            return Constant(f"c{rng.randint(0, 30)}")
        if kind == 1:
            return Variable(rng.choice(["X", "Y", "Zz", "_Tmp"]) + str(rng.randint(0, 9)))
        if kind == 2:
            return Integer(rng.randint(-999, 999))
        return Text("".join(rng.choice(_TEXT_CHARS) for _ in range(rng.randint(0, 6))))
    args = tuple(_random_term(rng, depth - 1) for _ in range(rng.randint(1, 3)))
    return Compound(f"f{rng.randint(0, 9)}", args)


def _random_atom(rng: random.Random) -> Atom:
    args = tuple(_random_term(rng, 2) for _ in range(rng.randint(0, 3)))
    return Atom(f"pred{rng.randint(0, 20)}", args)


def random_source_program(rng: random.Random) -> Program:
    rules = []
    for k in range(rng.randint(0, 8)):
        rule_id = f"r{k + 1}" if rng.random() < 0.8 else f"custom{k + 1}"
        source = None
        if rng.random() < 0.4:
            source = SourceRef("".join(rng.choice(_TEXT_CHARS) for _ in range(rng.randint(1, 10))))
        body = tuple(_random_atom(rng) for _ in range(rng.randint(0, 3)))
        rules.append(Rule(rule_id, _random_atom(rng), body, source=source))
    exceptions = []
    for _ in range(rng.randint(0, 3)):
        source = SourceRef("cite") if rng.random() < 0.3 else None
        exceptions.append(ExceptionDecl(_random_atom(rng), _random_atom(rng), source=source))
    return Program(tuple(rules), tuple(exceptions))


# ----------------------------------------------------------------------
# Independent DOT syntax checker (tokenizer plus a small recursive
# parser for the digraph subset, with node-declaration bookkeeping).


class DotSyntaxError(AssertionError):
    pass


def _dot_tokens(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == '"':
                    break
                j += 1
            if j >= n:
                raise DotSyntaxError("unterminated quoted string")
            tokens.append(("string", text[i + 1 : j]))
            i = j + 1
            continue
        if text.startswith("->", i):
            tokens.append(("arrow", "->"))
            i += 2
            continue
        if ch in "{}[]=;,":
            tokens.append((ch, ch))
            i += 1
            continue
        if ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("id", text[i:j]))
            i = j
            continue
        raise DotSyntaxError(f"unexpected character {ch!r} in DOT output")
    return tokens


def validate_dot(text: str) -> None:
    """Raise DotSyntaxError unless the text is a well-formed digraph."""
    tokens = _dot_tokens(text)
    pos = 0

    def peek() -> tuple[str, str]:
        return tokens[pos] if pos < len(tokens) else ("eof", "")

    def take(kind: str) -> tuple[str, str]:
        nonlocal pos
        tok = peek()
        if tok[0] != kind:
            raise DotSyntaxError(f"expected {kind}, found {tok}")
        pos += 1
        return tok

    def attr_list() -> None:
        take("[")
        while peek()[0] != "]":
            take("id")
            take("=")
            if peek()[0] in ("id", "string"):
                nonlocal_pos_advance()
            else:
                raise DotSyntaxError(f"bad attribute value: {peek()}")
            if peek()[0] == ",":
                take(",")
        take("]")

    def nonlocal_pos_advance() -> None:
        nonlocal pos
        pos += 1

    kind, value = take("id")
    if value != "digraph":
        raise DotSyntaxError("output must start with 'digraph'")
    if peek()[0] == "id":
        take("id")
    take("{")
    declared: set[str] = set()
    edges: list[tuple[str, str]] = []
    while peek()[0] != "}":
        tok = peek()
        if tok[0] not in ("id", "string"):
            raise DotSyntaxError(f"expected a statement, found {tok}")
        nonlocal_pos_advance()
        name = tok[1]
        if name in ("node", "edge", "graph") and peek()[0] == "[":
            attr_list()
        elif peek()[0] == "arrow":
            take("arrow")
            target = peek()
            if target[0] not in ("id", "string"):
                raise DotSyntaxError(f"bad edge target: {target}")
            nonlocal_pos_advance()
            if peek()[0] == "[":
                attr_list()
            edges.append((name, target[1]))
        else:
            declared.add(name)
            if peek()[0] == "[":
                attr_list()
        if peek()[0] == ";":
            take(";")
    take("}")
    if peek()[0] != "eof":
        raise DotSyntaxError(f"trailing content after '}}': {peek()}")
    for source, target in edges:
        if source not in declared or target not in declared:
            raise DotSyntaxError(f"edge references undeclared node: {source} -> {target}")


# ----------------------------------------------------------------------
# Trace invariants.


def assert_trace_invariants(root: TraceNode) -> None:
    for node, _edge in iter_nodes(root):
        assert node.outcome.glyph in ("o", "x")
        cond = [c for k, c in node.children if k is EdgeKind.CONDITION]
        exc = [c for k, c in node.children if k is EdgeKind.EXCEPTION]
        if node.defeated:
            assert node.outcome is Outcome.FAILURE, f"defeated success at {node.goal}"
            assert any(c.outcome is Outcome.SUCCESS for c in exc), (
                f"defeated node without a successful exception child: {node.goal}"
            )
        if node.via == "fact":
            assert node.children == ()
            assert node.outcome is Outcome.SUCCESS
        if node.outcome is Outcome.SUCCESS and node.via not in (None, "fact"):
            assert all(c.outcome is Outcome.SUCCESS for c in cond), (
                f"success node with failing condition: {node.goal}"
            )
            assert not any(c.outcome is Outcome.SUCCESS for c in exc), (
                f"success node with successful exception: {node.goal}"
            )
        if node.outcome is Outcome.FAILURE and node.children:
            if cond and all(c.outcome is Outcome.SUCCESS for c in cond):
                assert any(c.outcome is Outcome.SUCCESS for c in exc), (
                    f"failure with all conditions succeeding needs a defeat: {node.goal}"
                )


def first(iterable, default: Optional[object] = None):
    return next(iter(iterable), default)
