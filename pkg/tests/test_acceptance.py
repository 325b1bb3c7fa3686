"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines
as they appear.  The optional long Goofspiel k=5 check only runs when
``CORRPLAN_RUN_K5=1`` is set (it needs tens of minutes and >> 8 GB RAM).
"""

import os
import time

import numpy as np
import pytest

from corrplan.cli import main as cli_main
from corrplan.decomposition import (
    NotTriangleFreeError,
    decompose,
    deterministic_points,
    evaluate_vertex,
    find_triangle,
    sample,
)
from corrplan.gameio import builtin, goofspiel
from corrplan.oracle import (
    check_integral_lemmas,
    count_plan_pairs,
    xi_vertex_set,
)
from corrplan.optimizer import OptimizeConfig, evaluate_objective, optimize
from corrplan.polytope import (
    LinearObjective,
    build_relevance_index,
    check_membership,
    constraint_system,
    payoff_objective,
)
from corrplan.randomgames import random_public_chance_game

MEMBERSHIP_TOL = 1e-9
OPTIMIZER_TOL = 1e-3
# Run the optimizer to a tighter internal target than the acceptance
# tolerance so the comparison against the brute-force optimum has margin.
OPTIMIZER_TARGET = 2e-4


def verdict(ok: bool, name: str, detail: str = "") -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def structural_counts(tree):
    index = build_relevance_index(tree)
    return (
        tree.infoset_count(),
        len(tree.connected_pairs()),
        tree.num_sequences(1) + tree.num_sequences(2),
        len(index),
    )


@pytest.fixture(scope="module")
def small_random_corpus():
    """25 seeded public-chance games with at most 10^4 plan pairs, with
    their decompositions and enumerated vertex points."""
    corpus = []
    seed = 0
    while len(corpus) < 25:
        tree = random_public_chance_game(seed)
        if count_plan_pairs(tree) <= 10**4:
            index = build_relevance_index(tree)
            program = decompose(tree, index)
            points = deterministic_points(program, cap=10**6)
            corpus.append((seed, tree, index, program, points))
        seed += 1
    return corpus


def test_criterion_1_goofspiel3_structural_counts():
    start = time.perf_counter()
    counts = structural_counts(goofspiel(3))
    elapsed = time.perf_counter() - start
    ok = counts == (426, 1077, 524, 3262) and elapsed < 1.0
    verdict(
        ok,
        "criterion 1: goofspiel(3) structural counts",
        f"got {counts}, expected (426, 1077, 524, 3262), {elapsed:.2f}s < 1s",
    )


def test_criterion_2_decomposition_step_counts():
    g3 = goofspiel(3)
    steps3 = decompose(g3).num_steps
    start = time.perf_counter()
    g4 = goofspiel(4)
    counts4 = structural_counts(g4)
    steps4 = decompose(g4, build_relevance_index(g4)).num_steps
    elapsed4 = time.perf_counter() - start
    ok = (
        steps3 == 2931
        and steps4 == 235956
        and counts4 == (17432, 80884, 21298, 265393)
        and elapsed4 < 60.0
    )
    verdict(
        ok,
        "criterion 2: decomposition step counts",
        f"k=3 {steps3} (want 2931); k=4 {steps4} (want 235956), "
        f"counts {counts4}, end-to-end {elapsed4:.1f}s < 60s",
    )


@pytest.mark.skipif(
    not os.environ.get("CORRPLAN_RUN_K5"),
    reason="optional 30-minute check; set CORRPLAN_RUN_K5=1 (needs >> 8 GB RAM)",
)
def test_criterion_2_optional_goofspiel5():
    start = time.perf_counter()
    g5 = goofspiel(5)
    counts5 = structural_counts(g5)
    steps5 = decompose(g5, build_relevance_index(g5)).num_steps
    elapsed = time.perf_counter() - start
    ok = (
        steps5 == 31901355
        and counts5 == (1175330, 10505585, 1428452, 36102736)
        and elapsed < 1800.0
    )
    verdict(
        ok,
        "criterion 2 (optional): goofspiel(5)",
        f"steps {steps5}, counts {counts5}, {elapsed:.0f}s < 1800s",
    )


def test_criterion_3_membership_of_random_evaluations():
    games = [builtin("EX1"), builtin("EX2"), goofspiel(2), goofspiel(3)]
    games += [random_public_chance_game(seed) for seed in range(100, 150)]
    worst = 0.0
    for tree in games:
        index = build_relevance_index(tree)
        program = decompose(tree, index)
        system = constraint_system(tree, index)
        for k in range(100):
            plan = sample(program, seed=k)
            report = check_membership(plan, system, tol=MEMBERSHIP_TOL)
            worst = max(worst, report.max_violation)
            if not report.member:
                verdict(
                    False,
                    "criterion 3: membership of random evaluations",
                    f"game {tree.name} seed {k} violates by {report.max_violation}",
                )
    verdict(
        True,
        "criterion 3: membership of random evaluations",
        f"{len(games)} games x 100 evaluations, max violation {worst:.2e} <= 1e-9",
    )


def test_criterion_4_integrality_and_lemmas(small_random_corpus):
    checked = 0
    corpus = [
        (builtin("EX1"), None),
        (builtin("EX2"), None),
        (goofspiel(2), None),
    ]
    for tree, _ in corpus:
        index = build_relevance_index(tree)
        program = decompose(tree, index)
        for plan in deterministic_points(program, cap=10**6):
            if not set(np.unique(plan.values)) <= {0.0, 1.0}:
                verdict(False, "criterion 4: integrality", f"{tree.name} fractional")
            report = check_integral_lemmas(plan, index)
            if not report.ok:
                verdict(False, "criterion 4: lemmas", f"{tree.name}: {report.failure}")
            checked += 1
    for seed, tree, index, program, points in small_random_corpus:
        for plan in points:
            if not set(np.unique(plan.values)) <= {0.0, 1.0}:
                verdict(False, "criterion 4: integrality", f"seed {seed} fractional")
            report = check_integral_lemmas(plan, index)
            if not report.ok:
                verdict(False, "criterion 4: lemmas", f"seed {seed}: {report.failure}")
            checked += 1
    # goofspiel(3) cannot be enumerated; audit sampled vertex points.
    g3 = goofspiel(3)
    index = build_relevance_index(g3)
    program = decompose(g3, index)
    rng = np.random.default_rng(0)
    sizes = program.split_sizes()
    for _ in range(100):
        choices = np.array([rng.integers(0, s) for s in sizes], dtype=np.int64)
        plan = evaluate_vertex(program, choices)
        if not set(np.unique(plan.values)) <= {0.0, 1.0}:
            verdict(False, "criterion 4: integrality", "goofspiel(3) fractional")
        report = check_integral_lemmas(plan, index)
        if not report.ok:
            verdict(False, "criterion 4: lemmas", f"goofspiel(3): {report.failure}")
        checked += 1
    verdict(
        True,
        "criterion 4: integrality and lemma checks",
        f"{checked} deterministic points, all exact {{0,1}} members",
    )


def test_criterion_5_oracle_equivalence(small_random_corpus):
    start = time.perf_counter()
    for name, tree in [("EX1", builtin("EX1")), ("EX2", builtin("EX2")), ("goofspiel(2)", goofspiel(2))]:
        index = build_relevance_index(tree)
        dec = {p.as_bits() for p in deterministic_points(decompose(tree, index), cap=10**6)}
        xi = xi_vertex_set(tree, index).bit_set()
        if dec != xi:
            verdict(False, "criterion 5: oracle equivalence", f"{name} differs")
    for seed, tree, index, program, points in small_random_corpus:
        dec = {p.as_bits() for p in points}
        xi = xi_vertex_set(tree, index).bit_set()
        if dec != xi:
            verdict(False, "criterion 5: oracle equivalence", f"seed {seed} differs")
    elapsed = time.perf_counter() - start
    ok = elapsed < 120.0
    verdict(
        ok,
        "criterion 5: oracle equivalence",
        f"3 named + 25 random games identical vertex sets, {elapsed:.1f}s < 120s",
    )


def test_criterion_6_triangle_freeness():
    start = time.perf_counter()
    witness = find_triangle(builtin("EX3"))
    if witness is None:
        verdict(False, "criterion 6: triangle-freeness", "EX3 witness missing")
    try:
        decompose(builtin("EX3"))
        verdict(False, "criterion 6: triangle-freeness", "EX3 was not refused")
    except NotTriangleFreeError:
        pass
    free_games = [builtin("EX1"), builtin("EX2"), goofspiel(2), goofspiel(3), goofspiel(4)]
    for tree in free_games:
        if find_triangle(tree) is not None:
            verdict(False, "criterion 6: triangle-freeness", f"{tree.name} not free")
    for seed in range(200):
        tree = random_public_chance_game(seed)
        if find_triangle(tree) is not None:
            verdict(False, "criterion 6: triangle-freeness", f"seed {seed} not free")
    elapsed = time.perf_counter() - start
    verdict(
        elapsed < 30.0,
        "criterion 6: triangle-freeness",
        f"EX3 refused with witness; 5 named + 200 random games free, "
        f"{elapsed:.1f}s < 30s",
    )


def test_criterion_7_optimizer_matches_brute_force():
    audits = {"violations": 0, "iterates": 0}

    def make_audit(system):
        def audit(t, plan):
            audits["iterates"] += 1
            if not check_membership(plan, system, tol=MEMBERSHIP_TOL).member:
                audits["violations"] += 1

        return audit

    g2 = goofspiel(2)
    index = build_relevance_index(g2)
    program = decompose(g2, index)
    system = constraint_system(g2, index)
    objective = payoff_objective(g2, index, 1.0, 1.0)
    oracle_opt = max(
        evaluate_objective(objective, p) for p in xi_vertex_set(g2, index).plans
    )
    res = optimize(
        program,
        objective,
        OptimizeConfig(max_iters=100_000, target_gap=OPTIMIZER_TARGET),
        iterate_hook=make_audit(system),
    )
    if not (res.iterations <= 100_000 and abs(res.value - oracle_opt) <= OPTIMIZER_TOL):
        verdict(
            False,
            "criterion 7: optimizer",
            f"goofspiel(2) value {res.value} vs optimum {oracle_opt}",
        )

    ex2 = builtin("EX2")
    index2 = build_relevance_index(ex2)
    program2 = decompose(ex2, index2)
    system2 = constraint_system(ex2, index2)
    vertices2 = xi_vertex_set(ex2, index2).plans
    worst_err = abs(res.value - oracle_opt)
    worst_iters = res.iterations
    for seed in range(20):
        rng = np.random.default_rng(seed)
        coeff = rng.choice([-1.0, 1.0], size=len(index2))
        obj = LinearObjective(index=index2, coefficients=coeff)
        opt2 = max(evaluate_objective(obj, p) for p in vertices2)
        r = optimize(
            program2,
            obj,
            OptimizeConfig(max_iters=100_000, target_gap=OPTIMIZER_TARGET),
            iterate_hook=make_audit(system2),
        )
        err = abs(r.value - opt2)
        worst_err = max(worst_err, err)
        worst_iters = max(worst_iters, r.iterations)
        if err > OPTIMIZER_TOL or r.iterations > 100_000:
            verdict(
                False,
                "criterion 7: optimizer",
                f"EX2 seed {seed}: value {r.value} vs optimum {opt2}",
            )
    verdict(
        audits["violations"] == 0,
        "criterion 7: optimizer matches brute force",
        f"worst error {worst_err:.2e} <= 1e-3, worst iterations {worst_iters}, "
        f"{audits['iterates']} iterates all feasible at 1e-9",
    )


def test_criterion_8_byte_identical_outputs(tmp_path, capsys):
    def run(*argv):
        try:
            code = cli_main(list(argv))
        except SystemExit as exc:
            code = exc.code
        out = capsys.readouterr().out
        return code, out

    ok = True
    details = []
    _, stats_a = run("stats", "--goofspiel", "3")
    _, stats_b = run("stats", "--goofspiel", "3")
    ok &= stats_a == stats_b
    details.append("stats")

    dump_a, dump_b = tmp_path / "a", tmp_path / "b"
    run("decompose", "--goofspiel", "2", "--dump", "--output", str(dump_a))
    run("decompose", "--goofspiel", "2", "--dump", "--output", str(dump_b))
    ok &= dump_a.read_bytes() == dump_b.read_bytes()
    details.append("decompose --dump")

    opt_args = (
        "optimize", "--goofspiel", "2", "--w1", "1", "--w2", "1",
        "--seed", "3", "--target-gap", "1e-3",
    )
    _, opt_a = run(*opt_args)
    _, opt_b = run(*opt_args)
    ok &= opt_a == opt_b
    details.append("optimize")

    verdict(
        ok,
        "criterion 8: byte-identical outputs",
        " + ".join(details) + " across two consecutive runs",
    )
