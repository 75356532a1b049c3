"""Query evaluation under rule-with-exception semantics.

A goal instance succeeds when it matches a case fact, or when some rule
(tried in program order, with fresh variable renaming per use) has a
head unifying with the goal, every body atom succeeds left to right
under the accumulated substitution, and no declared exception whose
head unifies with the resolved goal instance can itself be proven. An
exception that succeeds defeats the conclusion instance outright, for
every rule deriving it.

Exception checking is negation as failure, so programs must stratify:
no dependency cycle may pass through an exception edge. ``stratify``
checks this and both evaluators require it.

Two evaluators are provided deliberately:

* ``solve``: backward chaining over a single goal, returning the
  outcome together with a full reasoning trace.
* ``holds_all``: a bottom-up stratum-by-stratum fixpoint over ground
  programs, returning every atom that holds. It shares no code with
  ``solve`` beyond the data model, so the two act as cross-checking
  routes to the same semantics.
"""

from __future__ import annotations

import sys
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Optional

from .ast import (
    Atom,
    ExceptionDecl,
    FactBase,
    PredicateKey,
    Program,
    Rule,
    Substitution,
    EMPTY_SUBSTITUTION,
    apply_atom,
    canonical_atom,
    indicator,
    is_ground,
    rename_atom,
    unify_atoms,
    variables_of,
    Variable,
)
from .trace import EdgeKind, FACT_MARKER, Outcome, TraceNode

# Python stack frames consumed per goal-nesting level, with slack.
_FRAMES_PER_LEVEL = 8
_FRAME_SLACK = 512


@dataclass(frozen=True)
class EngineConfig:
    """Resource limits for one evaluation."""

    max_depth: int = 512
    max_steps: int = 100_000
    loop_check: bool = True

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


DEFAULT_CONFIG = EngineConfig()


class EngineError(Exception):
    """Base class for evaluation failures that are not plain goal failure."""


class Unstratified(EngineError):
    """The program has a dependency cycle through an exception edge."""

    def __init__(self, cycle: list[PredicateKey]):
        self.cycle = list(cycle)
        pretty = " -> ".join(indicator(k) for k in self.cycle + self.cycle[:1])
        super().__init__(f"exception dependencies form a cycle: {pretty}")


class DepthExceeded(EngineError):
    def __init__(self, goal: Atom):
        self.goal = goal
        super().__init__(f"goal nesting exceeded the depth limit at {goal}")


class StepsExceeded(EngineError):
    def __init__(self) -> None:
        super().__init__("resolution step budget exhausted")


def _dependency_graph(
    program: Program,
) -> tuple[set[PredicateKey], set[tuple[PredicateKey, PredicateKey, bool]]]:
    """Nodes and (head, dependency, negative) edges of the program."""
    nodes: set[PredicateKey] = set()
    edges: set[tuple[PredicateKey, PredicateKey, bool]] = set()
    for rule in program.rules:
        nodes.add(rule.head.key)
        for atom in rule.body:
            nodes.add(atom.key)
            edges.add((rule.head.key, atom.key, False))
    for decl in program.exceptions:
        nodes.add(decl.head.key)
        nodes.add(decl.exception.key)
        edges.add((decl.head.key, decl.exception.key, True))
    return nodes, edges


def _strongly_connected(
    nodes: set[PredicateKey], succ: dict[PredicateKey, set[PredicateKey]]
) -> list[set[PredicateKey]]:
    """Kosaraju's algorithm, iterative."""
    order: list[PredicateKey] = []
    seen: set[PredicateKey] = set()
    for start in sorted(nodes):
        if start in seen:
            continue
        stack: list[tuple[PredicateKey, Optional[Iterator[PredicateKey]]]] = [(start, None)]
        while stack:
            node, it = stack.pop()
            if it is None:
                if node in seen:
                    continue
                seen.add(node)
                it = iter(sorted(succ.get(node, ())))
            advanced = False
            for nxt in it:
                if nxt not in seen:
                    stack.append((node, it))
                    stack.append((nxt, None))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
    pred: dict[PredicateKey, set[PredicateKey]] = defaultdict(set)
    for node, targets in succ.items():
        for target in targets:
            pred[target].add(node)
    components: list[set[PredicateKey]] = []
    assigned: set[PredicateKey] = set()
    for start in reversed(order):
        if start in assigned:
            continue
        component = {start}
        assigned.add(start)
        work = [start]
        while work:
            node = work.pop()
            for nxt in pred.get(node, ()):
                if nxt not in assigned:
                    assigned.add(nxt)
                    component.add(nxt)
                    work.append(nxt)
        components.append(component)
    return components


def _cycle_through(
    head: PredicateKey,
    target: PredicateKey,
    component: set[PredicateKey],
    succ: dict[PredicateKey, set[PredicateKey]],
) -> list[PredicateKey]:
    """A cycle [head, target, ...] using the negative edge head -> target."""
    parents: dict[PredicateKey, PredicateKey] = {}
    work = [target]
    visited = {target}
    while work:
        node = work.pop(0)
        if node == head:
            break
        for nxt in sorted(succ.get(node, ())):
            if nxt in component and nxt not in visited:
                visited.add(nxt)
                parents[nxt] = node
                work.append(nxt)
    path = [head]
    node = head
    while node != target:
        node = parents[node]
        path.append(node)
    path.reverse()  # now [target, ..., head]
    return [head] + path[:-1]


def stratify(program: Program) -> list[frozenset[PredicateKey]]:
    """Partition predicates into strata, lowest first.

    Within the returned partition, every rule-body dependency sits at
    the same stratum or lower, and every exception dependency sits
    strictly lower. Predicates defined only by facts land in stratum 0.
    Raises Unstratified when a cycle crosses an exception edge.
    """
    nodes, edges = _dependency_graph(program)
    if not nodes:
        return []
    succ: dict[PredicateKey, set[PredicateKey]] = defaultdict(set)
    for head, dep, _negative in edges:
        succ[head].add(dep)
    components = _strongly_connected(nodes, succ)
    component_of: dict[PredicateKey, int] = {}
    for index, component in enumerate(components):
        for node in component:
            component_of[node] = index
    for head, dep, negative in edges:
        if negative and component_of[head] == component_of[dep]:
            raise Unstratified(_cycle_through(head, dep, components[component_of[head]], succ))
    # Assign strata over the condensation, dependencies first.
    comp_edges: dict[int, set[tuple[int, bool]]] = defaultdict(set)
    indegree: dict[int, int] = {i: 0 for i in range(len(components))}
    reverse: dict[int, set[int]] = defaultdict(set)
    for head, dep, negative in edges:
        a, b = component_of[head], component_of[dep]
        if a != b:
            comp_edges[a].add((b, negative))
    for a, targets in comp_edges.items():
        indegree[a] = len({b for b, _ in targets})
        for b, _ in targets:
            reverse[b].add(a)
    stratum: dict[int, int] = {}
    ready = [i for i in range(len(components)) if indegree[i] == 0]
    while ready:
        comp = ready.pop()
        stratum[comp] = max(
            (stratum[b] + (1 if negative else 0) for b, negative in comp_edges.get(comp, ())),
            default=0,
        )
        for parent in reverse.get(comp, ()):
            indegree[parent] -= 1
            if indegree[parent] == 0:
                ready.append(parent)
    height = max(stratum.values()) + 1
    partition: list[set[PredicateKey]] = [set() for _ in range(height)]
    for index, component in enumerate(components):
        partition[stratum[index]].update(component)
    return [frozenset(level) for level in partition]


class _Resolver:
    """Backward-chaining search state for one solve call."""

    def __init__(self, program: Program, facts: FactBase, config: EngineConfig):
        self.config = config
        self.rules: dict[PredicateKey, list[Rule]] = defaultdict(list)
        for rule in program.rules:
            self.rules[rule.head.key].append(rule)
        self.exceptions = list(program.exceptions)
        # Sorted for run-to-run determinism; fact sets have no inherent order.
        self.facts: dict[PredicateKey, list[Atom]] = defaultdict(list)
        for fact in sorted(facts.facts, key=str):
            self.facts[fact.key].append(fact)
        self.steps = 0
        self.rename_serial = 0
        # Ground-goal memo tables. A success is valid in any context (the
        # proof found cannot run through a pruned ancestor). A plain
        # failure is recorded only when no loop prune fired against an
        # ancestor older than the goal, since such a prune could have cut
        # a proof that exists in other contexts; prune_log tracks the
        # stack positions the loop check matched.
        self.success_cache: set[Atom] = set()
        self.failure_cache: set[Atom] = set()
        self.prune_log: list[int] = []

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.config.max_steps:
            raise StepsExceeded()

    def _fresh_rule(self, rule: Rule) -> tuple[Atom, tuple[Atom, ...]]:
        self.rename_serial += 1
        serial = self.rename_serial
        names: list[str] = list(variables_of(rule.head))
        for atom in rule.body:
            for name in variables_of(atom):
                if name not in names:
                    names.append(name)
        mapping = {name: Variable(f"_R{serial}_{name}") for name in names}
        head = rename_atom(rule.head, mapping)
        body = tuple(rename_atom(a, mapping) for a in rule.body)
        return head, body

    def _fresh_exception(self, decl: ExceptionDecl) -> tuple[Atom, Atom]:
        self.rename_serial += 1
        serial = self.rename_serial
        names = list(variables_of(decl.head))
        for name in variables_of(decl.exception):
            if name not in names:
                names.append(name)
        mapping = {name: Variable(f"_R{serial}_{name}") for name in names}
        return rename_atom(decl.head, mapping), rename_atom(decl.exception, mapping)

    def _enter(self, goal: Atom, subst: Substitution, depth: int
               ) -> tuple[Atom, Atom]:
        """Shared entry bookkeeping: returns (resolved, canonical)."""
        self._tick()
        resolved = apply_atom(subst, goal)
        canon = canonical_atom(resolved)
        if depth > self.config.max_depth:
            raise DepthExceeded(canon)
        return resolved, canon

    # ------------------------------------------------------------------
    # Pure solution enumeration (no trace construction).
    #
    # A goal that is ground under the current substitution can add no
    # binding its caller could see, so one solution settles it; defeat
    # is likewise settled by the first derivation, because every
    # derivation resolves to the same conclusion instance.

    def solutions(self, goal: Atom, subst: Substitution, depth: int, ancestors: tuple
                  ) -> Iterator[Substitution]:
        resolved, canon = self._enter(goal, subst, depth)
        ground = is_ground(resolved)
        if ground:
            if canon in self.success_cache:
                yield subst
                return
            if canon in self.failure_cache:
                return
        if self.config.loop_check and canon in ancestors:
            self.prune_log.append(ancestors.index(canon))
            return
        position = len(ancestors)
        mark = len(self.prune_log)
        ancestors = ancestors + (canon,)
        yielded = False
        for fact in self.facts.get(goal.key, ()):
            bound = unify_atoms(goal, fact, subst)
            if bound is None:
                continue
            if ground:
                self.success_cache.add(canon)
                yield subst
                return
            yielded = True
            yield bound
        for rule in self.rules.get(goal.key, ()):
            head, body = self._fresh_rule(rule)
            bound = unify_atoms(goal, head, subst)
            if bound is None:
                continue
            for solution in self._body_solutions(body, bound, depth, ancestors):
                instance = apply_atom(solution, goal)
                defeated = self._defeating_exception(instance, depth, ancestors) is not None
                if ground:
                    if defeated:
                        # Every other derivation resolves to this same
                        # defeated instance; settled either way.
                        self.failure_cache.add(canon)
                        return
                    self.success_cache.add(canon)
                    yield subst
                    return
                if not defeated:
                    yielded = True
                    yield solution
        if ground and not yielded:
            tainted = any(index < position for index in self.prune_log[mark:])
            if not tainted:
                self.failure_cache.add(canon)

    def _body_solutions(self, body: tuple[Atom, ...], subst: Substitution, depth: int,
                        ancestors: tuple) -> Iterator[Substitution]:
        if not body:
            yield subst
            return
        for first in self.solutions(body[0], subst, depth + 1, ancestors):
            yield from self._body_solutions(body[1:], first, depth, ancestors)

    def _defeating_exception(self, instance: Atom, depth: int, ancestors: tuple
                             ) -> Optional[int]:
        """Index of the first declared exception that defeats the instance."""
        for index, decl in enumerate(self.exceptions):
            head, exc = self._fresh_exception(decl)
            bound = unify_atoms(instance, head)
            if bound is None:
                continue
            if next(self.solutions(exc, bound, depth + 1, ancestors), None) is not None:
                return index
        return None

    # ------------------------------------------------------------------
    # Trace construction. Mirrors the enumeration exactly; for failures
    # it records every applicable rule's partial subtree up to the first
    # failing condition, plus the exception checks when a rule body
    # succeeded but the conclusion was defeated.

    def trace_goal(self, goal: Atom, subst: Substitution, depth: int, ancestors: tuple
                   ) -> TraceNode:
        resolved, canon = self._enter(goal, subst, depth)
        ground = is_ground(resolved)
        if self.config.loop_check and canon in ancestors:
            if ground and canon in self.success_cache:
                # Proven earlier in the search; re-deriving here would loop.
                return TraceNode(canon, Outcome.SUCCESS, note="already established")
            self.prune_log.append(ancestors.index(canon))
            return TraceNode(canon, Outcome.FAILURE, note="loop detected")
        ancestors = ancestors + (canon,)
        for fact in self.facts.get(goal.key, ()):
            bound = unify_atoms(goal, fact, subst)
            if bound is not None:
                return TraceNode(
                    canonical_atom(apply_atom(bound, goal)), Outcome.SUCCESS, via=FACT_MARKER
                )
        attempts: list[tuple[EdgeKind, TraceNode]] = []
        defeated = False
        defeated_via: Optional[str] = None
        for rule in self.rules.get(goal.key, ()):
            head, body = self._fresh_rule(rule)
            bound = unify_atoms(goal, head, subst)
            if bound is None:
                continue
            witness: Optional[Substitution] = None
            if ground:
                # The first derivation settles a ground goal: any other
                # one resolves to the same instance and the same defeat.
                solution = next(self._body_solutions(body, bound, depth, ancestors), None)
                if solution is not None and (
                    self._defeating_exception(apply_atom(solution, goal), depth, ancestors)
                    is None
                ):
                    witness = solution
            else:
                for solution in self._body_solutions(body, bound, depth, ancestors):
                    instance = apply_atom(solution, goal)
                    if self._defeating_exception(instance, depth, ancestors) is None:
                        witness = solution
                        break
            if witness is not None:
                children = [
                    (EdgeKind.CONDITION, self.trace_goal(atom, witness, depth + 1, ancestors))
                    for atom in body
                ]
                instance = apply_atom(witness, goal)
                children.extend(self._exception_checks(instance, depth, ancestors))
                return TraceNode(
                    canonical_atom(instance),
                    Outcome.SUCCESS,
                    via=rule.id,
                    children=tuple(children),
                )
            # No undefeated solution: show the first-solution path.
            partial: list[tuple[EdgeKind, TraceNode]] = []
            current = bound
            completed = True
            for atom in body:
                child = self.trace_goal(atom, current, depth + 1, ancestors)
                partial.append((EdgeKind.CONDITION, child))
                if child.outcome is Outcome.FAILURE:
                    completed = False
                    break
                advanced = next(self.solutions(atom, current, depth + 1, ancestors), None)
                assert advanced is not None, "trace and enumeration disagree"
                current = advanced
            if completed:
                instance = apply_atom(current, goal)
                checks = self._exception_checks(instance, depth, ancestors)
                partial.extend(checks)
                if any(node.outcome is Outcome.SUCCESS for _, node in checks):
                    defeated = True
                    if defeated_via is None:
                        defeated_via = rule.id
            attempts.extend(partial)
        note = None if attempts else "no rule matched"
        return TraceNode(
            canon,
            Outcome.FAILURE,
            via=defeated_via,
            defeated=defeated,
            children=tuple(attempts),
            note=note,
        )

    def _exception_checks(self, instance: Atom, depth: int, ancestors: tuple
                          ) -> list[tuple[EdgeKind, TraceNode]]:
        """Exception subtrees in declaration order, stopping after a defeat."""
        checks: list[tuple[EdgeKind, TraceNode]] = []
        for decl in self.exceptions:
            head, exc = self._fresh_exception(decl)
            bound = unify_atoms(instance, head)
            if bound is None:
                continue
            node = self.trace_goal(exc, bound, depth + 1, ancestors)
            checks.append((EdgeKind.EXCEPTION, node))
            if node.outcome is Outcome.SUCCESS:
                break
        return checks


def _ensure_recursion_headroom(max_depth: int) -> None:
    needed = min(max_depth * _FRAMES_PER_LEVEL + _FRAME_SLACK, 100_000_000)
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)


def solve(program: Program, facts: FactBase, goal: Atom,
          config: Optional[EngineConfig] = None) -> tuple[Outcome, TraceNode]:
    """Evaluate one goal, returning its outcome and the full trace.

    Deterministic: identical inputs produce identical traces. Raises
    Unstratified, DepthExceeded, or StepsExceeded; a goal that merely
    cannot be proven is a normal FAILURE outcome, not an error.
    """
    cfg = config or DEFAULT_CONFIG
    stratify(program)
    _ensure_recursion_headroom(cfg.max_depth)
    resolver = _Resolver(program, facts, cfg)
    node = resolver.trace_goal(goal, EMPTY_SUBSTITUTION, 1, ())
    return node.outcome, node


def holds_all(program: Program, facts: FactBase,
              config: Optional[EngineConfig] = None) -> frozenset[Atom]:
    """Every ground atom that holds, computed bottom-up.

    Only defined for ground programs. Strata are processed lowest
    first; within a stratum, an atom is added once some rule's body all
    holds and no declared exception for it has been established. The
    config parameter is accepted for signature symmetry with ``solve``;
    the fixpoint needs no limits because it is monotone per stratum.
    """
    del config
    for rule in program.rules:
        if variables_of(rule.head) or any(variables_of(a) for a in rule.body):
            raise ValueError("holds_all requires a ground program")
    for decl in program.exceptions:
        if variables_of(decl.head) or variables_of(decl.exception):
            raise ValueError("holds_all requires a ground program")
    strata = stratify(program)
    level: dict[PredicateKey, int] = {}
    for index, stratum in enumerate(strata):
        for key in stratum:
            level[key] = index
    true: set[Atom] = set(facts.facts)
    for index in range(len(strata)):
        rules_here = [r for r in program.rules if level[r.head.key] == index]
        changed = True
        while changed:
            changed = False
            for rule in rules_here:
                if rule.head in true:
                    continue
                if not all(atom in true for atom in rule.body):
                    continue
                blocked = any(
                    decl.head == rule.head and decl.exception in true
                    for decl in program.exceptions
                )
                if not blocked:
                    true.add(rule.head)
                    changed = True
    return frozenset(true)
