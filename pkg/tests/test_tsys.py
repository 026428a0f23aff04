from pathlib import Path

import numpy as np
import pytest

from generators import (
    quotient_system,
    random_overlay_triples,
    random_partition,
    random_system,
)
from robsynth.tsys import (
    InvalidOverlayError,
    Relation,
    TransitionSystemBuilder,
    TsysError,
    UncertainOverlay,
    apply_overlay,
    bounded_trace_inclusion,
    check_abstraction,
    check_alternating_sim,
    compose,
    dump_relation,
    dump_transition_system,
    implement_strategy,
    load_relation,
    load_transition_system,
)

FIX = Path(__file__).resolve().parents[1] / "configs" / "example1"


@pytest.fixture(scope="module")
def t1():
    return load_transition_system(FIX / "t1.ts")


@pytest.fixture(scope="module")
def t2():
    return load_transition_system(FIX / "t2.ts")


@pytest.fixture(scope="module")
def t3():
    return load_transition_system(FIX / "t3.ts")


@pytest.fixture(scope="module")
def alpha(t1, t2):
    return load_relation(FIX / "alpha.rel", t1, t2)


def test_post_pinned_rows(t1, t2):
    a = t1.action_index("a")
    assert t1.post_set(t1.state_index("x0"), a) == {t1.state_index("x0")}
    assert t2.post_set(t2.state_index("q1"), t2.action_index("3")) == {
        t2.state_index("q0"), t2.state_index("q1")}
    # unused action has an empty successor set
    assert t2.post_set(t2.state_index("q0"), t2.action_index("3")) == set()


def test_admissible(t1, t2):
    assert t1.admissible(t1.state_index("x2")) == (t1.action_index("a"),)
    assert set(t2.admissible(t2.state_index("q0"))) == {0, 1}


def test_apply_overlay_empty_identity(t1):
    assert apply_overlay(t1, UncertainOverlay(frozenset())) == t1


def test_apply_overlay_adds_single_triple(t1):
    x1, x2 = t1.state_index("x1"), t1.state_index("x2")
    a = t1.action_index("a")
    merged = apply_overlay(t1, UncertainOverlay.from_triples([(x2, a, x1)]))
    assert merged.num_transitions == t1.num_transitions + 1
    assert merged.post_set(x2, a) == {x1, x2}
    for q in range(t1.num_states):
        assert merged.admissible(q) == t1.admissible(q)
        assert merged.labels[q] == t1.labels[q]


def test_overlay_duplicate_rejected(t1):
    x0 = t1.state_index("x0")
    with pytest.raises(InvalidOverlayError, match="duplicates"):
        apply_overlay(t1, UncertainOverlay.from_triples([(x0, 0, x0)]))


def test_overlay_new_action_rejected(t1):
    x2, b = t1.state_index("x2"), t1.action_index("b")
    with pytest.raises(InvalidOverlayError, match="new action"):
        apply_overlay(t1, UncertainOverlay.from_triples([(x2, b, x2)]))


def test_abstraction_fails_for_t2(t1, t2, alpha):
    res = check_abstraction(t1, t2, alpha)
    assert not res.passed
    assert res.condition == 2
    q1, q2, a2 = res.counterexample
    assert t2.state_names[q2] == "q0"
    assert t2.action_names[a2] == "1"


def test_abstraction_passes_for_t3(t1, t3, alpha):
    res = check_abstraction(t1, t3, alpha)
    assert res.passed
    # replay every certificate entry against the defining inclusion
    for (q1, q2, a2), a1 in res.certificate.items():
        assert a1 in t1.admissible(q1)
        post2 = t3.post_set(q2, a2)
        for q in alpha.preimage(q2):
            assert alpha.image_of_set(t1.post(q, a1)) <= post2


def test_t3_robust_against_overlay(t1, t3, alpha):
    x1, x2 = t1.state_index("x1"), t1.state_index("x2")
    bumped = apply_overlay(
        t1, UncertainOverlay.from_triples([(x2, t1.action_index("a"), x1)]))
    assert check_abstraction(bumped, t3, alpha).passed


def test_identity_abstraction_passes(t1, t2, t3):
    for ts in (t1, t2, t3):
        assert check_abstraction(ts, ts, Relation.identity(ts.num_states)).passed


def test_alternating_sim_passes_for_t2(t1, t2, alpha):
    assert check_alternating_sim(t1, t2, alpha).passed


def test_alternating_weaker_than_abstraction():
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(60):
        ts = random_system(rng, total=True)
        assignment, nblocks = random_partition(rng, ts.num_states)
        quot, alpha = quotient_system(ts, assignment, nblocks)
        res = check_abstraction(ts, quot, alpha)
        if res.passed and alpha.is_single_valued():
            assert check_alternating_sim(ts, quot, alpha).passed
            hits += 1
    assert hits >= 30


def test_reflexivity_under_overlay():
    rng = np.random.default_rng(1)
    for _ in range(40):
        ts = random_system(rng)
        overlay = UncertainOverlay.from_triples(random_overlay_triples(rng, ts))
        bumped = apply_overlay(ts, overlay)
        assert check_abstraction(ts, bumped,
                                 Relation.identity(ts.num_states)).passed


def test_compose_identity_and_chain():
    r = Relation([(0, 1), (1, 0), (2, 1)])
    ident = Relation.identity(3)
    # compose(alpha1, alpha2) applies alpha1 first
    assert compose(r, Relation.identity(2)) == r
    assert compose(ident, r) == r
    chain = compose(Relation([(0, 5)]), Relation([(5, 7)]))
    assert chain == Relation([(0, 7)])


def test_transitivity_of_abstraction():
    rng = np.random.default_rng(2)
    done = 0
    while done < 40:
        ts = random_system(rng, total=True)
        assign1, nb1 = random_partition(rng, ts.num_states)
        mid, alpha1 = quotient_system(ts, assign1, nb1)
        assign2, nb2 = random_partition(rng, mid.num_states)
        top, alpha2 = quotient_system(mid, assign2, nb2)
        if not (check_abstraction(ts, mid, alpha1).passed
                and check_abstraction(mid, top, alpha2).passed):
            continue
        assert check_abstraction(ts, top, compose(alpha1, alpha2)).passed
        done += 1


def test_label_inclusion_on_certificates():
    rng = np.random.default_rng(3)
    for _ in range(25):
        ts = random_system(rng, total=True)
        assignment, nblocks = random_partition(rng, ts.num_states)
        quot, alpha = quotient_system(ts, assignment, nblocks)
        res = check_abstraction(ts, quot, alpha)
        assert res.passed
        for q1, q2 in alpha.pairs:
            assert quot.label_names(q2) <= ts.label_names(q1)


def test_trace_inclusion_horizon_zero(t1, t3, alpha):
    res = bounded_trace_inclusion(t1, {}, t3, {}, alpha, 0,
                                  initial=range(t1.num_states))
    assert res.passed


def test_trace_inclusion_example_strategy(t1, t3, alpha):
    cert = check_abstraction(t1, t3, alpha).certificate
    mu2 = {t3.state_index("q0"): t3.action_index("1"),
           t3.state_index("q1"): t3.action_index("3")}
    mu1 = implement_strategy(cert, alpha, mu2)
    assert set(mu1) == {0, 1, 2}
    res = bounded_trace_inclusion(t1, mu1, t3, mu2, alpha, 10,
                                  initial=[t1.state_index("x0")])
    assert res.passed


def test_trace_inclusion_detects_corruption(t1, t3, alpha):
    # steering x1 with action a lands in x2 whose only lift is Goal-labelled q1,
    # but a mu2 that never plays from q1 cannot follow
    mu1 = {t1.state_index("x0"): t1.action_index("b"),
           t1.state_index("x1"): t1.action_index("a"),
           t1.state_index("x2"): t1.action_index("a")}
    mu2 = {t3.state_index("q0"): t3.action_index("1")}
    res = bounded_trace_inclusion(t1, mu1, t3, mu2, alpha, 10,
                                  initial=[t1.state_index("x0")])
    assert not res.passed
    assert res.counterexample is not None


def test_text_round_trip(tmp_path, t1, t2, alpha):
    p = tmp_path / "sys.ts"
    dump_transition_system(t1, p)
    assert load_transition_system(p) == t1
    r = tmp_path / "rel.rel"
    dump_relation(alpha, t1, t2, r)
    assert load_relation(r, t1, t2) == alpha


def test_builder_rejects_terminal_state():
    b = TransitionSystemBuilder(["s0", "s1"], ["a"])
    b.add_transition(0, 0, 1)
    with pytest.raises(TsysError, match="terminal"):
        b.finalize()
    ts = b.add_transition(1, 0, 1).finalize()
    assert ts.num_transitions == 2


def test_relation_domain_gaps():
    r = Relation([(0, 0), (2, 1)])
    assert r.domain_gaps(3) == [1]
