import itertools

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from robsynth.ltl import (
    And,
    Always,
    Atom,
    Eventually,
    FALSE,
    Implies,
    LtlError,
    Next,
    Not,
    Or,
    Reach,
    ReachAvoid,
    Recurrence,
    Safety,
    TRUE,
    Unsupported,
    Until,
    Verdict,
    WeakUntil,
    classify,
    complement_atoms,
    holds_in_labels,
    monitor,
    parse_ltl,
    print_ltl,
    to_pnf,
)

A, B = Atom("a"), Atom("b")

LABELS = [frozenset(), frozenset("a"), frozenset("b"), frozenset("ab")]


def all_traces(max_len):
    for k in range(1, max_len + 1):
        yield from itertools.product(LABELS, repeat=k)


atoms_st = st.sampled_from([A, B])
formulas_st = st.deferred(lambda: st.one_of(
    atoms_st,
    st.just(TRUE),
    st.just(FALSE),
    st.builds(Not, formulas_st),
    st.builds(Next, formulas_st),
    st.builds(Always, formulas_st),
    st.builds(Eventually, formulas_st),
    st.builds(And, formulas_st, formulas_st),
    st.builds(Or, formulas_st, formulas_st),
    st.builds(Implies, formulas_st, formulas_st),
    st.builds(Until, formulas_st, formulas_st),
    st.builds(WeakUntil, formulas_st, formulas_st),
))
traces_st = st.lists(st.sampled_from(LABELS), min_size=1, max_size=6)


def test_parse_goal_shape():
    ast = parse_ltl("G(!obstacle) & F goal")
    assert ast == And(Always(Not(Atom("obstacle"))), Eventually(Atom("goal")))


def test_parse_aliases():
    assert parse_ltl("[] a") == Always(A)
    assert parse_ltl("<> a") == Eventually(A)


def test_parse_error_dangling_until():
    with pytest.raises(LtlError):
        parse_ltl("a U")


def test_parse_undeclared_atom():
    with pytest.raises(LtlError, match="undeclared"):
        parse_ltl("a & c", declared_atoms=["a", "b"])


def test_precedence():
    ast = parse_ltl("!a & b U c | d")
    assert ast == Or(And(Not(A), Until(Atom("b"), Atom("c"))), Atom("d"))


def test_implication_expands_in_pnf():
    assert to_pnf(parse_ltl("a -> b")) == Or(Atom("a", complement=True), B)


def test_pnf_duality_always():
    assert to_pnf(Not(Always(A))) == Eventually(Atom("a", complement=True))


def test_pnf_idempotent():
    ast = to_pnf(parse_ltl("!(a U b) | G(a -> b)"))
    assert to_pnf(ast) == ast


def test_pnf_until_negation_bounded_equivalence():
    # exhaustive over every trace of length <= 6 on two atoms
    phi = Not(Until(A, B))
    pnf = to_pnf(phi)
    assert pnf == WeakUntil(Atom("b", complement=True),
                            And(Atom("a", complement=True),
                                Atom("b", complement=True)))
    for tr in all_traces(6):
        assert monitor(phi, tr) == monitor(pnf, tr)


def test_complement_atoms_collected():
    pnf = to_pnf(parse_ltl("!(a U b)"))
    assert complement_atoms(pnf) == {"a", "b"}


@settings(max_examples=400)
@given(formulas_st, traces_st)
def test_pnf_preserves_monitor_semantics(phi, tr):
    assert monitor(phi, tr) == monitor(to_pnf(phi), tr)


@settings(max_examples=300)
@given(formulas_st, traces_st, st.sampled_from(LABELS))
def test_decided_verdicts_persist_under_extension(phi, tr, extra):
    v = monitor(phi, tr)
    if v in (Verdict.SAT, Verdict.VIOLATED):
        assert monitor(phi, list(tr) + [extra]) == v


def test_classify_reach_avoid_with_initial():
    spec = classify(to_pnf(parse_ltl("init & G(!obstacle) & F goal")))
    assert spec.initial_atoms == (Atom("init"),)
    frag = spec.fragment
    assert isinstance(frag, ReachAvoid)
    assert frag.goal == Atom("goal")
    assert frag.invariant == Atom("obstacle", complement=True)


def test_classify_until_shape():
    spec = classify(to_pnf(parse_ltl("a U b")))
    assert spec.fragment == ReachAvoid(goal=B, invariant=A)


def test_classify_next_unsupported():
    spec = classify(to_pnf(parse_ltl("X goal")))
    assert isinstance(spec.fragment, Unsupported)


def test_classify_recurrence():
    spec = classify(to_pnf(parse_ltl("G F a")))
    assert spec.fragment == Recurrence(goal=A, invariant=TRUE)
    spec2 = classify(to_pnf(parse_ltl("G b & G F a")))
    assert spec2.fragment == Recurrence(goal=A, invariant=B)


def test_classify_safety_and_reach():
    assert classify(to_pnf(parse_ltl("G a"))).fragment == Safety(invariant=A)
    assert classify(to_pnf(parse_ltl("F a"))).fragment == Reach(goal=A)


def test_classify_rejects_double_goal():
    spec = classify(to_pnf(parse_ltl("F a & F b")))
    assert isinstance(spec.fragment, Unsupported)


def test_monitor_safety_never_sat_on_prefix():
    assert monitor(Always(A), [frozenset("a")] * 5) == Verdict.UNKNOWN
    assert monitor(Always(A), [frozenset("a"), frozenset()]) == Verdict.VIOLATED


def test_monitor_eventually_sat():
    assert monitor(Eventually(A), [frozenset(), frozenset("a")]) == Verdict.SAT


def test_monitor_until_violated_with_extension_oracle():
    phi = Until(A, B)
    prefix = [frozenset("a"), frozenset("a"), frozenset()]
    assert monitor(phi, prefix) == Verdict.VIOLATED
    # no extension of length <= 4 can rescue the verdict
    for k in range(1, 5):
        for ext in itertools.product(LABELS, repeat=k):
            assert monitor(phi, prefix + list(ext)) == Verdict.VIOLATED


def test_monitor_rejects_empty_trace():
    with pytest.raises(LtlError):
        monitor(A, [])


def test_holds_in_labels():
    assert holds_in_labels(And(A, Atom("b", complement=True)), {"a"})
    assert not holds_in_labels(A, set())
    assert holds_in_labels(Or(FALSE, TRUE), set())


def test_print_round_trip():
    for text in ("G(!a) & F b", "a U (b W a)", "X(a -> b) | false"):
        ast = parse_ltl(text)
        assert parse_ltl(print_ltl(ast)) == ast
