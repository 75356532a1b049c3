"""Stratification, solve, holds_all, and their agreement."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from proleg.ast import Atom, Constant, FactBase, Program, Variable
from proleg.engine import (
    DepthExceeded,
    EngineConfig,
    StepsExceeded,
    Unstratified,
    holds_all,
    solve,
    stratify,
)
from proleg.parser import parse_facts, parse_program
from proleg.trace import Outcome, render_json

from helpers import assert_trace_invariants, random_ground_program

NO_FACTS = FactBase()


def outcome_of(source: str, goal: str, facts: str = "", config: EngineConfig | None = None):
    program = parse_program(source)
    out, trace = solve(program, parse_facts(facts), Atom(goal), config)
    return out, trace


class TestStratify:
    def test_exception_target_sits_below(self):
        program = parse_program("p <= q. exception(p, e). e <=.")
        strata = stratify(program)
        assert len(strata) == 2
        assert strata[0] == frozenset({("e", 0), ("q", 0)})
        assert strata[1] == frozenset({("p", 0)})

    def test_mutual_exceptions_rejected(self):
        program = parse_program("p <=. exception(p, q). q <=. exception(q, p).")
        with pytest.raises(Unstratified) as info:
            stratify(program)
        assert sorted(info.value.cycle) == [("p", 0), ("q", 0)]

    def test_positive_cycles_are_fine(self):
        program = parse_program("p <= q. q <= p.")
        strata = stratify(program)
        assert strata == [frozenset({("p", 0), ("q", 0)})]

    def test_empty_program(self):
        assert stratify(Program()) == []

    def test_longer_negative_cycle_reported(self):
        program = parse_program("p <= q. exception(q, r). r <= p. q <=.")
        with pytest.raises(Unstratified) as info:
            stratify(program)
        assert set(info.value.cycle) == {("p", 0), ("q", 0), ("r", 0)}


class TestSolve:
    def test_fact_lookup(self):
        out, trace = outcome_of("", "f", facts="")
        assert out is Outcome.FAILURE
        program = Program()
        out, trace = solve(program, parse_facts("f(a)."), Atom("f", (Constant("a"),)))
        assert out is Outcome.SUCCESS
        assert trace.via == "fact"

    def test_exception_defeats_proved_conclusion(self):
        out, trace = outcome_of("p <= q. q <=. exception(p, e). e <=.", "p")
        assert out is Outcome.FAILURE
        assert trace.defeated
        # Cross-check every atom against the bottom-up route.
        program = parse_program("p <= q. q <=. exception(p, e). e <=.")
        model = holds_all(program, NO_FACTS)
        assert model == frozenset({Atom("q"), Atom("e")})

    def test_unification_flows_through_body(self):
        program = parse_program("grandparent(X, Z) <= parent(X, Y), parent(Y, Z).")
        facts = parse_facts("parent(ann, bea). parent(bea, cal).")
        out, _ = solve(program, facts, Atom("grandparent", (Constant("ann"), Constant("cal"))))
        assert out is Outcome.SUCCESS
        out, _ = solve(program, facts, Atom("grandparent", (Constant("bea"), Constant("ann"))))
        assert out is Outcome.FAILURE

    def test_nonground_query_is_existential(self):
        program = parse_program("p(X) <= q(X).")
        facts = parse_facts("q(b).")
        out, trace = solve(program, facts, Atom("p", (Variable("W"),)))
        assert out is Outcome.SUCCESS
        assert str(trace.goal) == "p(b)"

    def test_facts_are_not_defeatable(self):
        program = parse_program("exception(p, e). e <=.")
        out, _ = solve(program, parse_facts("p."), Atom("p"))
        assert out is Outcome.SUCCESS

    def test_rule_order_respected_in_trace(self):
        program = parse_program("p <= a. p <= b.")
        out, trace = solve(program, parse_facts("b."), Atom("p"))
        assert out is Outcome.SUCCESS
        assert trace.via == "r2"

    def test_unstratified_rejected_up_front(self):
        program = parse_program("p <=. exception(p, q). q <=. exception(q, p).")
        with pytest.raises(Unstratified):
            solve(program, NO_FACTS, Atom("p"))

    def test_exception_variables_are_existential(self):
        # Variables in the exception beyond the conclusion's are checked
        # existentially against the resolved instance.
        program = parse_program("basis(X) <= ok(X).\nexception(basis(X), bad(X, Y)).")
        facts = parse_facts("ok(a). ok(b). bad(a, z).")
        defeated, trace = solve(program, facts, Atom("basis", (Constant("a"),)))
        assert defeated is Outcome.FAILURE
        assert trace.defeated
        witnesses = [str(c.goal) for k, c in trace.children if k.value == "exception"]
        assert witnesses == ["bad(a, z)"]
        standing, _ = solve(program, facts, Atom("basis", (Constant("b"),)))
        assert standing is Outcome.SUCCESS

    def test_integer_and_text_terms_evaluate(self):
        program = parse_program('labeled(N) <= score(N), label(N, "ok").')
        facts = parse_facts('score(-3). label(-3, "ok"). score(4).')
        from proleg.ast import Integer

        good, _ = solve(program, facts, Atom("labeled", (Integer(-3),)))
        bad, _ = solve(program, facts, Atom("labeled", (Integer(4),)))
        assert good is Outcome.SUCCESS
        assert bad is Outcome.FAILURE


class TestHoldsAll:
    def test_two_step_chain(self):
        program = parse_program("p <= q. q <=.")
        assert holds_all(program, NO_FACTS) == frozenset({Atom("p"), Atom("q")})

    def test_defeated_head_left_out(self):
        program = parse_program("p <=. exception(p, e). e <=.")
        model = holds_all(program, NO_FACTS)
        assert model == frozenset({Atom("e")})
        for atom in (Atom("p"), Atom("e")):
            out, _ = solve(program, NO_FACTS, atom)
            assert (out is Outcome.SUCCESS) == (atom in model)

    def test_unprovable_exception_leaves_conclusion(self):
        program = parse_program("p <=. exception(p, e).")
        assert holds_all(program, NO_FACTS) == frozenset({Atom("p")})

    def test_rejects_nonground_program(self):
        program = parse_program("p(X) <= q(X).")
        with pytest.raises(ValueError):
            holds_all(program, NO_FACTS)


class TestTermination:
    def test_self_recursion_fails_finitely(self):
        out, trace = outcome_of("p <= p.", "p")
        assert out is Outcome.FAILURE
        notes = [n.note for n, _ in _walk(trace)]
        assert "loop detected" in notes

    def test_depth_limit_without_loop_check(self):
        program = parse_program("p <= p.")
        config = EngineConfig(max_depth=64, loop_check=False)
        with pytest.raises(DepthExceeded):
            solve(program, NO_FACTS, Atom("p"), config)

    def test_step_budget(self):
        program = parse_program("p <= q, q, q. q <= a, b, c. a <=. b <=. c <=.")
        config = EngineConfig(max_steps=5)
        with pytest.raises(StepsExceeded):
            solve(program, NO_FACTS, Atom("p"), config)

    def test_mutual_recursion_fails_finitely(self):
        out, _ = outcome_of("p <= q. q <= p.", "p")
        assert out is Outcome.FAILURE


def _walk(node):
    from proleg.trace import iter_nodes

    return iter_nodes(node)


class TestConfig:
    def test_limits_validated(self):
        with pytest.raises(ValueError):
            EngineConfig(max_depth=0)
        with pytest.raises(ValueError):
            EngineConfig(max_steps=0)


def test_determinism_byte_identical_traces():
    program = parse_program(
        "p <= q, r. p <= s. q <=. r <= t. s <=. exception(p, e). e <= q."
    )
    facts = parse_facts("t.")
    first = render_json(solve(program, facts, Atom("p"))[1])
    second = render_json(solve(program, facts, Atom("p"))[1])
    assert first == second


def test_monotone_facts_without_exceptions():
    rng = random.Random(7)
    for _ in range(60):
        program, facts, universe = random_ground_program(rng, max_exceptions=0)
        assert not program.exceptions
        extra = FactBase(frozenset(set(facts.facts) | {rng.choice(universe)}))
        before = holds_all(program, facts)
        after = holds_all(program, extra)
        assert before <= after


def test_solve_agrees_with_holds_all_on_random_programs():
    rng = random.Random(20240812)
    for _ in range(150):
        program, facts, universe = random_ground_program(rng)
        model = holds_all(program, facts)
        for atom in universe:
            out, trace = solve(program, facts, atom)
            assert (out is Outcome.SUCCESS) == (atom in model), (
                f"disagreement on {atom}\nrules: {program.rules}\n"
                f"exceptions: {program.exceptions}\nfacts: {sorted(map(str, facts.facts))}"
            )
            assert_trace_invariants(trace)


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=80, deadline=None)
def test_solve_agrees_with_holds_all_hypothesis(seed):
    program, facts, universe = random_ground_program(random.Random(seed))
    model = holds_all(program, facts)
    for atom in universe:
        out, _ = solve(program, facts, atom)
        assert (out is Outcome.SUCCESS) == (atom in model)
