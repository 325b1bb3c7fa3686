from pathlib import Path

import numpy as np
import pytest

from corrplan.decomposition import NotTriangleFreeError, deterministic_points
from corrplan.gameio import builtin
from corrplan.oracle import (
    PlanPair,
    check_integral_lemmas,
    check_xi_equals_vsf,
    count_plan_pairs,
    fractional_vertex_probe,
    indicator_image,
    xi_vertex_set,
)
from corrplan.polytope import (
    CorrelationPlan,
    build_relevance_index,
    check_membership,
    constraint_system,
)
from corrplan.randomgames import random_public_chance_game
from corrplan.tree import EMPTY_SEQ, PlanCountError

FIXTURES = Path(__file__).parent / "fixtures"


def plan_by_choices(tree, player, wanted):
    """The reduced plan picking action index ``wanted[label]`` everywhere."""
    for plan in tree.reduced_plans(player):
        if all(
            plan.action_at(rec.ordinal) in (wanted.get(rec.label), None)
            for rec in tree.infosets_of(player)
        ) and all(
            plan.action_at(
                next(r.ordinal for r in tree.infosets_of(player) if r.label == lbl)
            )
            in (idx, None)
            for lbl, idx in wanted.items()
        ):
            return plan
    raise AssertionError("plan not found")


# -- indicator images ----------------------------------------------------------


def test_ex1_indicator_image_entries(ex1_bundle):
    tree, index, _, _ = ex1_bundle
    p1 = plan_by_choices(tree, 1, {"A": 0, "B": 0})  # actions 1 and 3
    p2 = plan_by_choices(tree, 2, {"C": 0})  # action 1
    image = indicator_image(tree, index, PlanPair(p1, p2))
    expected_ones = {
        ("∅", "∅"),
        ("∅", "C:1"),
        ("A:1", "∅"),
        ("B:3", "∅"),
        ("A:1", "C:1"),
        ("B:3", "C:1"),
    }
    ones = {
        (tree.seq_label(1, s1), tree.seq_label(2, s2))
        for (s1, s2), v in zip(index.pairs, image.values)
        if v == 1.0
    }
    assert ones == expected_ones


def test_empty_pair_entry_always_one(goof2_bundle):
    tree, index, _, _ = goof2_bundle
    for p1 in tree.reduced_plans(1)[:2]:
        for p2 in tree.reduced_plans(2)[:2]:
            image = indicator_image(tree, index, PlanPair(p1, p2))
            assert image.values[0] == 1.0


def test_images_are_exact_members(ex2_bundle):
    tree, index, _, system = ex2_bundle
    for p1 in tree.reduced_plans(1):
        for p2 in tree.reduced_plans(2):
            image = indicator_image(tree, index, PlanPair(p1, p2))
            report = check_membership(image, system, tol=0.0)
            assert report.member and report.max_violation == 0.0


def test_image_row_marginals_are_pure_strategies(goof2_bundle):
    # Entries along own chains are consistent: a prescribed sequence's
    # ancestors are prescribed too.
    tree, index, _, _ = goof2_bundle
    p1 = tree.reduced_plans(1)[0]
    p2 = tree.reduced_plans(2)[0]
    image = indicator_image(tree, index, PlanPair(p1, p2))
    for s1 in range(1, tree.num_sequences(1)):
        v = image.value_at(s1, EMPTY_SEQ)
        parent = tree.seq_parent(1, s1)
        assert v in (0.0, 1.0)
        assert v <= image.value_at(parent, EMPTY_SEQ)


# -- vertex sets -------------------------------------------------------------------


def test_ex1_has_eight_xi_vertices(ex1_bundle):
    tree, index, _, _ = ex1_bundle
    assert len(xi_vertex_set(tree, index)) == 8


def test_single_terminal_vertex_set(single_terminal):
    index = build_relevance_index(single_terminal)
    xs = xi_vertex_set(single_terminal, index)
    assert len(xs) == 1
    assert xs.plans[0].values.tolist() == [1.0]


def test_goofspiel2_vertex_fixture(goof2_bundle):
    tree, index, _, _ = goof2_bundle
    xs = xi_vertex_set(tree, index)
    frozen = (FIXTURES / "goofspiel2_vertices.txt").read_text()
    assert xs.to_lines() == frozen


def test_vertex_tags_generate_their_plans(ex2_bundle):
    tree, index, _, _ = ex2_bundle
    xs = xi_vertex_set(tree, index)
    for plan, tag in zip(xs.plans, xs.tags):
        again = indicator_image(tree, index, tag)
        assert np.array_equal(plan.values, again.values)


def test_pair_cap_enforced(goof3):
    index = build_relevance_index(goof3)
    with pytest.raises(PlanCountError):
        xi_vertex_set(goof3, index, cap=10**6)


# -- equality of the two polytopes ----------------------------------------------------


@pytest.mark.parametrize("name", ["EX1", "EX2"])
def test_builtin_equality(name):
    report = check_xi_equals_vsf(builtin(name))
    assert report.equal
    assert not report.missing_from_decomposition
    assert not report.missing_from_xi


def test_goofspiel2_equality(goof2):
    assert check_xi_equals_vsf(goof2).equal


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 5, 6, 11])
def test_random_game_equality(seed):
    tree = random_public_chance_game(seed)
    assert count_plan_pairs(tree) <= 10**4
    assert check_xi_equals_vsf(tree).equal


def test_equality_check_refuses_triangles(ex3):
    with pytest.raises(NotTriangleFreeError):
        check_xi_equals_vsf(ex3)


# -- lemma checks -----------------------------------------------------------------------


def test_deterministic_points_pass_lemmas(ex1_bundle):
    _, index, program, _ = ex1_bundle
    for plan in deterministic_points(program):
        assert check_integral_lemmas(plan, index).ok


def test_goofspiel2_images_pass_lemmas(goof2_bundle):
    tree, index, _, _ = goof2_bundle
    xs = xi_vertex_set(tree, index)
    for plan in xs.plans:
        assert check_integral_lemmas(plan, index).ok


def test_lemma_check_rejects_nonmember(ex1_bundle):
    _, index, _, _ = ex1_bundle
    values = np.zeros(len(index))
    values[0] = 1.0  # mass conservation broken everywhere below the root
    with pytest.raises(ValueError, match="not an exact member"):
        check_integral_lemmas(CorrelationPlan(index=index, values=values), index)


def test_lemma_check_rejects_fractional_input(ex1_bundle):
    tree, index, _, _ = ex1_bundle
    values = np.full(len(index), 0.5)
    values[0] = 1.0
    with pytest.raises(ValueError, match="not exactly"):
        check_integral_lemmas(CorrelationPlan(index=index, values=values), index)


# -- EX3 exploration ---------------------------------------------------------------------


def test_ex3_oracle_still_works(ex3):
    index = build_relevance_index(ex3)
    xs = xi_vertex_set(ex3, index)
    system = constraint_system(ex3, index)
    assert len(xs) == 16
    for plan in xs.plans:
        assert check_membership(plan, system, tol=0.0).member


def test_ex3_fractional_probe_is_sound(ex3):
    # Exploratory: a fractional vertex may or may not turn up; when it
    # does, it must satisfy the constraint rows exactly in rationals.
    from fractions import Fraction

    index = build_relevance_index(ex3)
    system = constraint_system(ex3, index)
    vertex = fractional_vertex_probe(ex3, seed=1, attempts=20)
    if vertex is None:
        return
    assert any(v.denominator != 1 for v in vertex)
    dense = system.matrix.toarray()
    for r in range(system.num_rows):
        total = sum(
            Fraction(int(dense[r, c])) * vertex[c] for c in range(len(index))
        )
        assert total == Fraction(int(system.rhs[r]))
    assert all(v >= 0 for v in vertex)
