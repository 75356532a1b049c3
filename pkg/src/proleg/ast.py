"""Core data model for PROLEG knowledge bases.

Terms, atoms, rules, exception declarations, fact bases, and the
substitution machinery (application and most-general unification with
occurs check) that the evaluator builds on. Every value here is
immutable after construction, so programs and fact bases can be shared
freely between concurrent evaluations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_VARIABLE_RE = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z")

_TEXT_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def escape_text(value: str) -> str:
    """Escape a string for inclusion in double quotes in the surface syntax."""
    return "".join(_TEXT_ESCAPES.get(ch, ch) for ch in value)


@dataclass(frozen=True)
class Constant:
    """A named individual, e.g. ``case1``."""

    name: str

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid constant name: {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable:
    """A logic variable; names start with an uppercase letter or underscore."""

    name: str

    def __post_init__(self) -> None:
        if not _VARIABLE_RE.match(self.name):
            raise ValueError(f"invalid variable name: {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Integer:
    """A signed integer literal."""

    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Text:
    """A quoted string literal; may hold arbitrary characters."""

    value: str

    def __str__(self) -> str:
        return f'"{escape_text(self.value)}"'


@dataclass(frozen=True)
class Compound:
    """A functor applied to one or more argument terms."""

    functor: str
    args: tuple["Term", ...]

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.functor):
            raise ValueError(f"invalid functor name: {self.functor!r}")
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 1:
            raise ValueError("compound terms need at least one argument")

    def __str__(self) -> str:
        return f"{self.functor}({', '.join(str(a) for a in self.args)})"


Term = Union[Constant, Variable, Integer, Text, Compound]


@dataclass(frozen=True)
class Atom:
    """A predicate applied to zero or more terms.

    Predicates are keyed by name and arity: ``p/1`` and ``p/2`` are
    distinct predicates.
    """

    predicate: str
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.predicate):
            raise ValueError(f"invalid predicate name: {self.predicate!r}")
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def key(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    @property
    def indicator(self) -> str:
        return f"{self.predicate}/{len(self.args)}"

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"


PredicateKey = tuple[str, int]


def indicator(key: PredicateKey) -> str:
    """Render a (name, arity) predicate key as ``name/arity``."""
    return f"{key[0]}/{key[1]}"


@dataclass(frozen=True)
class SourceRef:
    """Provenance note linking a statement back to authoritative text."""

    citation: str
    note: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.citation:
            raise ValueError("source citation must be non-empty")


@dataclass(frozen=True)
class Rule:
    """A general rule: the head holds when every body atom holds.

    ``line`` is the 1-based source line of the statement when the rule
    came from a file; it never participates in structural equality.
    """

    id: str
    head: Atom
    body: tuple[Atom, ...] = ()
    source: Optional[SourceRef] = None
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.id):
            raise ValueError(f"invalid rule id: {self.id!r}")
        object.__setattr__(self, "body", tuple(self.body))

    @property
    def is_range_restricted(self) -> bool:
        """True when every head variable also occurs in the body."""
        body_vars = set()
        for atom in self.body:
            body_vars.update(variables_of(atom))
        return set(variables_of(self.head)) <= body_vars


@dataclass(frozen=True)
class ExceptionDecl:
    """Declares that a proven exception defeats the conclusion ``head``."""

    head: Atom
    exception: Atom
    source: Optional[SourceRef] = None
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Program:
    """An ordered rule base plus its exception declarations.

    Rule order is preserved: the evaluator tries rules in this order.
    """

    rules: tuple[Rule, ...] = ()
    exceptions: tuple[ExceptionDecl, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "exceptions", tuple(self.exceptions))
        seen: set[str] = set()
        for rule in self.rules:
            if rule.id in seen:
                raise ValueError(f"duplicate rule id: {rule.id!r}")
            seen.add(rule.id)

    def defined_predicates(self) -> frozenset[PredicateKey]:
        """Predicate keys that appear as the head of at least one rule."""
        return frozenset(rule.head.key for rule in self.rules)


@dataclass(frozen=True)
class FactBase:
    """The ground atoms describing one case, kept apart from the rules."""

    facts: frozenset[Atom] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "facts", frozenset(self.facts))
        for atom in self.facts:
            if not is_ground(atom):
                raise ValueError(f"facts must be ground: {atom}")

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.facts

    def __len__(self) -> int:
        return len(self.facts)


def is_ground(value: Union[Term, Atom]) -> bool:
    """True when the term or atom contains no variable anywhere."""
    for _ in _iter_variables(value):
        return False
    return True


def variables_of(value: Union[Term, Atom]) -> list[str]:
    """Variable names in first-occurrence order, without duplicates."""
    seen: list[str] = []
    for name in _iter_variables(value):
        if name not in seen:
            seen.append(name)
    return seen


def _iter_variables(value: Union[Term, Atom]) -> Iterator[str]:
    if isinstance(value, Variable):
        yield value.name
    elif isinstance(value, (Compound, Atom)):
        for arg in value.args:
            yield from _iter_variables(arg)


def rename_term(term: Term, mapping: Mapping[str, Variable]) -> Term:
    """Replace variables by name according to ``mapping``."""
    if isinstance(term, Variable):
        return mapping.get(term.name, term)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(rename_term(a, mapping) for a in term.args))
    return term


def rename_atom(atom: Atom, mapping: Mapping[str, Variable]) -> Atom:
    return Atom(atom.predicate, tuple(rename_term(a, mapping) for a in atom.args))


def canonical_atom(atom: Atom, prefix: str = "_G") -> Atom:
    """Rename the atom's variables to ``_G0, _G1, ...`` in occurrence order.

    Two atoms that are identical up to variable renaming canonicalise to
    the same atom, which is what the evaluator's loop check compares.
    """
    mapping = {
        name: Variable(f"{prefix}{i}") for i, name in enumerate(variables_of(atom))
    }
    return rename_atom(atom, mapping)


class Substitution:
    """An immutable finite map from variable names to terms.

    Bindings are triangular: a bound term may itself contain variables
    bound elsewhere in the map. ``apply`` dereferences fully, so its
    output mentions only unbound variables.
    """

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Optional[Mapping[str, Term]] = None) -> None:
        self._bindings: dict[str, Term] = dict(bindings) if bindings else {}

    def get(self, name: str) -> Optional[Term]:
        return self._bindings.get(name)

    def bind(self, name: str, term: Term) -> "Substitution":
        updated = dict(self._bindings)
        updated[name] = term
        return Substitution(updated)

    def items(self) -> Iterator[tuple[str, Term]]:
        return iter(self._bindings.items())

    def __contains__(self, name: str) -> bool:
        return name in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Substitution):
            return NotImplemented
        return self._bindings == other._bindings

    def __repr__(self) -> str:
        inner = ", ".join(f"{k} -> {v}" for k, v in sorted(self._bindings.items()))
        return f"{{{inner}}}"


EMPTY_SUBSTITUTION = Substitution()


def walk(subst: Substitution, term: Term) -> Term:
    """Follow variable bindings until a non-variable or unbound variable."""
    steps = 0
    limit = len(subst) + 1
    while isinstance(term, Variable):
        bound = subst.get(term.name)
        if bound is None:
            return term
        term = bound
        steps += 1
        if steps > limit:
            raise ValueError("cyclic substitution")
    return term


def apply(subst: Substitution, term: Term) -> Term:
    """Apply a substitution, dereferencing bindings all the way down.

    Ground terms and unbound variables come back unchanged; the result
    is a fixpoint of further application.
    """
    return _apply(subst, term, ())


def _apply(subst: Substitution, term: Term, trail: tuple[str, ...]) -> Term:
    while isinstance(term, Variable):
        bound = subst.get(term.name)
        if bound is None:
            return term
        if term.name in trail:
            raise ValueError(f"cyclic substitution through {term.name}")
        trail = trail + (term.name,)
        term = bound
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_apply(subst, a, trail) for a in term.args))
    return term


def apply_atom(subst: Substitution, atom: Atom) -> Atom:
    return Atom(atom.predicate, tuple(apply(subst, a) for a in atom.args))


def _occurs(subst: Substitution, name: str, term: Term) -> bool:
    term = walk(subst, term)
    if isinstance(term, Variable):
        return term.name == name
    if isinstance(term, Compound):
        return any(_occurs(subst, name, a) for a in term.args)
    return False


def unify(a: Term, b: Term, subst: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most-general unifier of two terms, or None when there is none.

    The occurs check is always on: a variable never unifies with a term
    containing it, so no cyclic binding can ever be produced.
    """
    s = subst if subst is not None else EMPTY_SUBSTITUTION
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = walk(s, x)
        y = walk(s, y)
        if x == y:
            continue
        if isinstance(x, Variable):
            if _occurs(s, x.name, y):
                return None
            s = s.bind(x.name, y)
            continue
        if isinstance(y, Variable):
            if _occurs(s, y.name, x):
                return None
            s = s.bind(y.name, x)
            continue
        if (
            isinstance(x, Compound)
            and isinstance(y, Compound)
            and x.functor == y.functor
            and len(x.args) == len(y.args)
        ):
            stack.extend(zip(x.args, y.args))
            continue
        return None
    return s


def unify_atoms(a: Atom, b: Atom, subst: Optional[Substitution] = None) -> Optional[Substitution]:
    """Unify two atoms; fails immediately unless predicate keys match."""
    if a.key != b.key:
        return None
    s = subst if subst is not None else EMPTY_SUBSTITUTION
    for x, y in zip(a.args, b.args):
        result = unify(x, y, s)
        if result is None:
            return None
        s = result
    return s
