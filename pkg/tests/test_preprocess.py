"""The preprocessing ladder: pass-level contracts and reconstruction soundness."""
from __future__ import annotations

import random

import pytest

from isingsat.cnf import Cnf, brute_force_solutions, evaluate, make_cnf
from isingsat.circuit import EncodingOption, gate_clauses
from isingsat.preprocess import (
    MAX_LEVEL,
    ConditionList,
    PrepState,
    branch_probe,
    clean_clauses,
    condition_2sat,
    detect_gate_groups,
    eliminate_pure_literals,
    ladder_profile,
    propagate_1sat,
    propagate_replaced_values,
    reconstruct,
    reencode_option2,
    run_ladder,
    subsume_clauses,
)

from conftest import check_reconstruction, random_3sat


def _state(cnf: Cnf, seed: int = 0) -> PrepState:
    return PrepState(num_vars=cnf.num_vars, clauses=list(cnf.clauses),
                     condition=ConditionList(), rng=random.Random(seed))


# ---------------------------------------------------------------------------
# condition list and reconstruct


def test_condition_list_views():
    cond = ConditionList()
    cond.add_fix(1, True)
    cond.add_sub(2, 1, -1)
    cond.add_pure(3, False)
    assert cond.fixed == {1: True}
    assert cond.substituted == {2: (1, -1)}
    assert cond.pure == {3: False}
    assert cond.values() == {1: True, 3: False}
    assert len(cond) == 3
    with pytest.raises(ValueError):
        cond.add_sub(4, 1, 0)


def test_reconstruct_negated_master():
    cond = ConditionList()
    cond.add_sub(1, 2, -1)  # a == not b
    out = reconstruct(cond, {2: False}, 2)
    assert out == {1: True, 2: False}


def test_reconstruct_chain_same_sign():
    # a -> b -> c, both same-sign, c true: everything true
    cond = ConditionList()
    cond.add_sub(1, 2, 1)
    cond.add_sub(2, 3, 1)
    out = reconstruct(cond, {3: True}, 3)
    assert out == {1: True, 2: True, 3: True}


def test_reconstruct_chain_signs_compose():
    cond = ConditionList()
    cond.add_sub(1, 2, -1)
    cond.add_sub(2, 3, -1)
    out = reconstruct(cond, {3: True}, 3)
    assert out == {1: True, 2: False, 3: True}


def test_reconstruct_later_fix_of_root_wins():
    # the root itself is fixed by a later pass; the sub must read that value
    cond = ConditionList()
    cond.add_sub(5, 2, 1)
    cond.add_fix(2, False)
    out = reconstruct(cond, {}, 5)
    assert out[5] is False and out[2] is False


def test_reconstruct_defaults_unconstrained():
    cond = ConditionList()
    cond.add_fix(1, True)
    out = reconstruct(cond, {}, 3)
    assert out == {1: True, 2: False, 3: False}
    out = reconstruct(cond, {}, 3, default=True)
    assert out[2] is True and out[3] is True


# ---------------------------------------------------------------------------
# gate-group detection and re-encoding


def _or_gate(a, b, c):
    return gate_clauses("OR", a, b, c, EncodingOption.OPTION1)


def test_detect_gate_groups_signatures():
    # (a v ~b)(~a v b): one negative literal in each clause -> BUFFER
    groups = detect_gate_groups([(1, -2), (-1, 2)])
    kinds = {g.kind for g in groups}
    assert "BUFFER" in kinds
    # (a v b)(~a v ~b): signature (0, 2) -> NOT
    groups = detect_gate_groups([(1, 2), (-1, -2)])
    assert {g.kind for g in groups} == {"NOT"}


def test_reencode_option2_rewrites_or_group():
    cnf = make_cnf(3, _or_gate(1, 2, 3))
    assert cnf.num_clauses == 4
    st = _state(cnf)
    rep = reencode_option2(st)
    assert rep.details["rewritten"] == 1
    assert len(st.clauses) == 3
    # projected solution set unchanged: c <-> (a or b)
    expect = {(a, b, a or b) for a in (False, True) for b in (False, True)}
    got = {(s[1], s[2], s[3]) for s in brute_force_solutions(make_cnf(3, st.clauses))}
    assert got == expect


def test_reencode_option2_leaves_xor_alone():
    clauses = gate_clauses("XOR", 1, 2, 3, EncodingOption.OPTION1)
    st = _state(make_cnf(3, clauses))
    rep = reencode_option2(st)
    assert rep.details["rewritten"] == 0
    assert st.clauses == list(clauses)


def test_reencode_option2_no_groups_identity():
    cnf = random_3sat(8, 12, random.Random(3))
    st = _state(cnf)
    reencode_option2(st)
    assert tuple(st.clauses) == cnf.clauses


# ---------------------------------------------------------------------------
# unit propagation


def test_propagate_1sat_or_gate_backward():
    # implication-form OR gate plus (~c): both inputs forced false
    clauses = gate_clauses("OR", 1, 2, 3, EncodingOption.OPTION2) + [(-3,)]
    st = _state(make_cnf(3, clauses))
    propagate_1sat(st)
    assert st.condition.fixed == {3: False, 1: False, 2: False}
    assert st.clauses == []


def test_propagate_1sat_satisfied_clause_removed():
    st = _state(make_cnf(3, [(1,), (1, 2, 3)]))
    propagate_1sat(st)
    assert st.condition.fixed == {1: True}
    assert st.clauses == []


def test_propagate_1sat_shrinks_clauses():
    st = _state(make_cnf(3, [(-1,), (1, 2, 3)]))
    propagate_1sat(st)
    assert st.clauses == [(2, 3)]


def test_propagate_1sat_conflict_marks_unsat():
    st = _state(make_cnf(1, [(1,), (-1,)]))
    propagate_1sat(st)  # must not raise
    assert st.unsat


# ---------------------------------------------------------------------------
# 2SAT conditioning


def test_condition_2sat_not_pair():
    # XOR with c fixed true collapses to (a v b)(~a v ~b): a NOT pair
    st = _state(make_cnf(2, [(1, 2), (-1, -2)]))
    rep = condition_2sat(st)
    assert st.condition.substituted == {2: (1, -1)}
    assert st.clauses == []  # both clauses became tautologies under b -> ~a
    assert rep.details["traversals"] == 2


def test_condition_2sat_buffer_pair():
    st = _state(make_cnf(2, [(1, -2), (-1, 2)]))
    condition_2sat(st)
    assert st.condition.substituted == {2: (1, 1)}


def test_condition_2sat_triple_group_queues_units():
    # (a v b)(a v ~b)(~a v b): only a=1,b=1 survives -> two unit clauses
    st = _state(make_cnf(2, [(1, 2), (1, -2), (-1, 2)]))
    rep = condition_2sat(st)
    assert (1,) in st.clauses and (2,) in st.clauses
    assert rep.details["triple_groups"] == 1


def test_condition_2sat_two_pattern_shared_coordinate():
    # (a v b)(a v ~b): survivors share a=1 -> unit (a) queued
    st = _state(make_cnf(2, [(1, 2), (1, -2)]))
    condition_2sat(st)
    assert (1,) in st.clauses


def test_condition_2sat_chain_composes_to_lowest_master():
    # b == a and c == b chain to the lowest-index master a
    clauses = [(1, -2), (-1, 2), (2, -3), (-2, 3)]
    st = _state(make_cnf(3, clauses))
    condition_2sat(st)
    assert st.condition.substituted == {2: (1, 1), 3: (1, 1)}
    assert st.clauses == []


def test_condition_2sat_chain_with_negation():
    # b == ~a, c == ~b: c == a
    clauses = [(1, 2), (-1, -2), (2, 3), (-2, -3)]
    st = _state(make_cnf(3, clauses))
    condition_2sat(st)
    assert st.condition.substituted == {2: (1, -1), 3: (1, 1)}


def test_condition_2sat_contradiction_is_unsat():
    # a == b and a == ~b together: the second relation degenerates to
    # contradictory queued units, and the ladder's follow-up propagation
    # surfaces the conflict
    clauses = [(1, -2), (-1, 2), (1, 2), (-1, -2)]
    st = _state(make_cnf(2, clauses))
    condition_2sat(st)
    assert (1,) in st.clauses and (-1,) in st.clauses
    res = run_ladder(make_cnf(2, clauses), 3)
    assert res.unsat


def test_condition_2sat_substitution_leaves_no_replaced_vars():
    rng = random.Random(9)
    for _ in range(30):
        n = rng.randint(3, 10)
        clauses = []
        for _ in range(rng.randint(2, 14)):
            w = rng.choice((2, 2, 2, 3))
            vs = rng.sample(range(1, n + 1), min(w, n))
            clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
        st = _state(make_cnf(n, clauses))
        rep = condition_2sat(st)
        assert rep.details["traversals"] == 2
        if st.unsat:
            continue
        replaced = set(st.condition.substituted)
        for c in st.clauses:
            assert not replaced & {abs(l) for l in c}


# ---------------------------------------------------------------------------
# replaced-value propagation


def test_rvp_master_value_flows():
    st = _state(make_cnf(2, []))
    st.condition.add_sub(1, 2, 1)
    st.condition.add_fix(2, True)
    propagate_replaced_values(st)
    assert st.condition.values()[1] is True


def test_rvp_negated_master():
    st = _state(make_cnf(2, []))
    st.condition.add_sub(1, 2, -1)
    st.condition.add_fix(2, False)
    propagate_replaced_values(st)
    assert st.condition.values()[1] is True


def test_rvp_cascades_chains():
    st = _state(make_cnf(3, []))
    st.condition.add_sub(2, 3, -1)
    st.condition.add_sub(1, 2, -1)
    st.condition.add_fix(3, True)
    rep = propagate_replaced_values(st)
    vals = st.condition.values()
    assert vals[2] is False and vals[1] is True
    assert rep.details["valued"] == 2


def test_rvp_never_touches_clauses():
    st = _state(make_cnf(2, [(1, 2)]))
    st.condition.add_sub(1, 2, 1)
    propagate_replaced_values(st)
    assert st.clauses == [(1, 2)]


# ---------------------------------------------------------------------------
# cleaning / subsumption / pure literals


def test_clean_duplicate_literal():
    st = _state(make_cnf(2, [(1, 1, 2)]))
    clean_clauses(st)
    assert st.clauses == [(1, 2)]


def test_clean_tautology_dropped():
    st = _state(make_cnf(2, [(1, -1, 2)]))
    clean_clauses(st)
    assert st.clauses == []


def test_clean_fixpoint():
    cnf = random_3sat(6, 10, random.Random(2))
    st = _state(cnf)
    clean_clauses(st)
    assert tuple(st.clauses) == cnf.clauses


def test_subsume_examples():
    st = _state(make_cnf(3, [(-2,), (-2, 3)]))
    subsume_clauses(st)
    assert st.clauses == [(-2,)]
    st = _state(make_cnf(3, [(1, 2), (1, 2, 3)]))
    subsume_clauses(st)
    assert st.clauses == [(1, 2)]
    st = _state(make_cnf(3, [(1, 2), (2, 3)]))
    subsume_clauses(st)
    assert st.clauses == [(1, 2), (2, 3)]


def test_subsume_duplicate_keeps_first():
    st = _state(make_cnf(2, [(1, 2), (2, 1)]))
    subsume_clauses(st)
    assert st.clauses == [(1, 2)]


def test_pure_literal_cascade():
    # a pure positive; fixing it removes all clauses, so b vanishes too
    st = _state(make_cnf(2, [(1, 2), (1, -2)]))
    eliminate_pure_literals(st)
    assert st.clauses == []
    assert st.condition.pure == {1: True, 2: True}


def test_pure_literal_negative_polarity():
    st = _state(make_cnf(2, [(-1, 2), (-1, -2)]))
    eliminate_pure_literals(st)
    assert st.condition.pure[1] is False


def test_pure_literal_mixed_polarity_untouched():
    cnf = make_cnf(2, [(1, 2), (-1, -2)])
    st = _state(cnf)
    eliminate_pure_literals(st)
    assert tuple(st.clauses) == cnf.clauses
    assert len(st.condition) == 0


def test_pure_literal_loses_only_nonrecorded_polarity():
    """The classic pass keeps exactly the solutions agreeing with the
    recorded polarity; reconstructed models always satisfy the input."""
    cnf = make_cnf(3, [(1, 2, 3)])
    st = _state(cnf)
    eliminate_pure_literals(st)
    full = reconstruct(st.condition, {}, 3)
    assert evaluate(cnf, full).all_satisfied
    assert full == {1: True, 2: True, 3: True}


# ---------------------------------------------------------------------------
# branching


def _hub_cnf():
    """Variable 1 sits in every clause: degree 5 vs mean well under ratio."""
    return make_cnf(6, [(1, 2, 3), (1, -2, 4), (-1, 4, 5), (1, 5, 6), (-1, -3, 6)])


def test_branch_probe_picks_max_degree():
    st = _state(_hub_cnf(), seed=3)
    rep = branch_probe(st)
    assert rep.details["guessed"] == 1
    assert st.branch_decisions[0].var == 1


def test_branch_probe_override_and_propagation():
    st = _state(_hub_cnf())
    st.branch_override = __import__("collections").deque([True])
    branch_probe(st)
    assert st.branch_decisions[0].value is True
    assert st.condition.fixed[1] is True
    # clauses containing +1 satisfied, -1 shortened
    for c in st.clauses:
        assert 1 not in {abs(l) for l in c}


def test_branch_probe_below_threshold_no_guess():
    # regular structure: every variable has identical degree
    st = _state(make_cnf(4, [(1, 2), (2, 3), (3, 4), (4, 1)]))
    rep = branch_probe(st)
    assert rep.details["guessed"] == 0
    assert st.branch_decisions == []


# variable 1 dominates the interaction graph and guessing it True yields
# the unit conflict (2), (~2) under propagation
_CLOSING = [(-1, 2), (-1, -2), (1, 3, 4), (1, -3, 4), (1, 3, -4)]


def test_branch_probe_wrong_guess_closes_branch():
    st = _state(make_cnf(4, _CLOSING))
    st.branch_override = __import__("collections").deque([True])
    branch_probe(st)
    assert st.branch_decisions[0].var == 1
    assert st.unsat  # scripted guesses are never flipped


def test_branch_probe_flip_on_conflict_retries():
    for seed in range(20):
        st = _state(make_cnf(4, _CLOSING), seed=seed)
        rep = branch_probe(st, flip_on_conflict=True)
        assert rep.details["guessed"] == 1
        assert st.branch_decisions[0].var == 1
        assert not st.unsat
        assert st.condition.fixed[1] is False
        if st.branch_decisions[0].flipped:
            assert rep.details["flipped"] == 1


def test_branch_probe_max_guesses_budget():
    st = _state(_hub_cnf(), seed=1)
    rep = branch_probe(st, max_guesses=3)
    assert rep.details["guessed"] <= 3
    assert len(st.branch_decisions) == rep.details["guessed"]


# ---------------------------------------------------------------------------
# the ladder end to end


def test_ladder_level_bounds():
    cnf = make_cnf(2, [(1, 2)])
    with pytest.raises(ValueError):
        run_ladder(cnf, -1)
    with pytest.raises(ValueError):
        run_ladder(cnf, MAX_LEVEL + 1)


def test_ladder_level0_identity():
    cnf = random_3sat(8, 20, random.Random(4))
    res = run_ladder(cnf, 0)
    assert res.cnf.clauses == cnf.clauses
    assert len(res.condition) == 0
    assert res.reports == ()


def test_ladder_report_chain_is_consistent():
    cnf = random_3sat(12, 40, random.Random(8))
    res = run_ladder(cnf, 6)
    for prev, nxt in zip(res.reports, res.reports[1:]):
        assert prev.vars_after == nxt.vars_before
        assert prev.clauses_after == nxt.clauses_before


def test_ladder_no_units_after_level2():
    rng = random.Random(13)
    for _ in range(15):
        cnf = random_3sat(rng.randint(5, 14), rng.randint(8, 45), rng)
        res = run_ladder(cnf, 2)
        if not res.unsat:
            assert all(len(c) != 1 for c in res.cnf.clauses)


def test_ladder_no_pair_groups_after_level3():
    rng = random.Random(14)
    for _ in range(15):
        cnf = random_3sat(rng.randint(5, 14), rng.randint(8, 45), rng)
        res = run_ladder(cnf, 3)
        if res.unsat:
            continue
        patterns = {}
        for c in res.cnf.clauses:
            if len(c) == 2:
                key = tuple(sorted(abs(l) for l in c))
                patterns.setdefault(key, set()).add(
                    tuple(1 if l > 0 else -1 for l in sorted(c, key=abs)))
        for pats in patterns.values():
            assert {(1, -1), (-1, 1)} != pats and {(1, 1), (-1, -1)} != pats


def test_ladder_clean_after_level5():
    rng = random.Random(15)
    for _ in range(10):
        cnf = random_3sat(rng.randint(5, 12), rng.randint(8, 40), rng)
        res = run_ladder(cnf, 5)
        if res.unsat:
            continue
        for c in res.cnf.clauses:
            assert len(set(c)) == len(c)
            assert not any(-l in c for l in c)


def test_ladder_no_subsumed_or_pure_after_level6():
    rng = random.Random(16)
    for _ in range(10):
        cnf = random_3sat(rng.randint(5, 12), rng.randint(8, 40), rng)
        res = run_ladder(cnf, 6)
        if res.unsat:
            continue
        sets = [frozenset(c) for c in res.cnf.clauses]
        for i, s in enumerate(sets):
            for j, t in enumerate(sets):
                if i != j:
                    assert not (s < t)
        pos = {abs(l) for c in res.cnf.clauses for l in c if l > 0}
        neg = {abs(l) for c in res.cnf.clauses for l in c if l < 0}
        assert pos == neg  # single-polarity variables all eliminated


def test_ladder_vars_monotone_over_levels():
    cnf = random_3sat(14, 55, random.Random(17))
    profile = ladder_profile(cnf, seed=3)
    assert profile == sorted(profile, reverse=True)
    assert len(profile) == MAX_LEVEL + 1


def test_ladder_unsat_input_flows_through():
    cnf = make_cnf(1, [(1,), (-1,)])
    for level in range(2, MAX_LEVEL + 1):
        res = run_ladder(cnf, level)
        assert res.unsat


# ---------------------------------------------------------------------------
# reconstruction soundness against the brute-force oracle


def test_reconstruction_bijective_levels_0_to_5():
    rng = random.Random(21)
    for i in range(40):
        n = rng.randint(4, 14)
        cnf = random_3sat(n, max(1, int(n * rng.uniform(3.0, 5.0))), rng)
        for level in range(0, 6):
            image, O, _ = check_reconstruction(cnf, level, seed=i)
            assert image == O, (i, level)


def test_reconstruction_levels_6_7_exact_unless_lossy_pure():
    rng = random.Random(22)
    for i in range(40):
        n = rng.randint(4, 14)
        cnf = random_3sat(n, max(1, int(n * rng.uniform(3.0, 5.0))), rng)
        for level in (6, 7):
            image, O, lossy = check_reconstruction(cnf, level, seed=i)
            if lossy:
                assert image <= O and (not O or image)
            else:
                assert image == O, (i, level)


def test_pure_elimination_shrinks_solution_set_of_loose_formula():
    """A non-backbone pure literal keeps satisfiability, not multiplicity:
    the single clause (1 v 2 v 3) has 7 models but one reconstruction."""
    cnf = make_cnf(3, [(1, 2, 3)])
    image, O, lossy = check_reconstruction(cnf, 6, seed=0)
    assert lossy
    assert len(O) == 7
    assert image == {frozenset({(1, True), (2, True), (3, True)})}


def test_reconstruction_branching_union_covers_multiple_guesses():
    rng = random.Random(23)
    for i in range(10):
        n = rng.randint(5, 10)
        cnf = random_3sat(n, int(n * 4.0), rng)
        image, O, lossy = check_reconstruction(cnf, 7, seed=i, max_guesses=2)
        if not lossy:
            assert image == O, i


def test_semiprime_ladder_full_reduction_and_reconstruction(catalog45):
    for bits, semiprime, cnf, nl in catalog45:
        profile = ladder_profile(cnf)
        assert profile[0] == profile[1] == (18 if bits == 4 else 28)
        for lvl in range(4, MAX_LEVEL + 1):
            assert profile[lvl] == 0  # fully conditioned at replaced-value prop
        res = run_ladder(cnf, 4)
        full = reconstruct(res.condition, {}, cnf.num_vars)
        assert evaluate(cnf, full).all_satisfied
        a = sum((1 << i) for i, v in enumerate(nl.input_bits_a) if full[v])
        b = sum((1 << i) for i, v in enumerate(nl.input_bits_b) if full[v])
        assert a * b == semiprime
