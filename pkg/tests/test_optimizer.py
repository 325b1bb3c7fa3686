import numpy as np
import pytest

from corrplan.oracle import PlanPair, indicator_image, xi_vertex_set
from corrplan.optimizer import (
    OptimizeConfig,
    OptimizeResult,
    evaluate_objective,
    optimize,
    vertex_optimum,
)
from corrplan.polytope import (
    CorrelationPlan,
    DimensionMismatchError,
    LinearObjective,
    check_membership,
    payoff_objective,
)


def result_fields(res: OptimizeResult):
    return (res.value, res.gap, res.iterations, res.plan.values.tobytes())


# -- evaluate_objective --------------------------------------------------------


def test_zero_objective_evaluates_to_zero(ex2_bundle):
    _, index, program, _ = ex2_bundle
    obj = LinearObjective(index=index, coefficients=np.zeros(len(index)))
    from corrplan.decomposition import sample

    assert evaluate_objective(obj, sample(program, 0)) == 0.0


def test_normalization_coefficient_gives_one(ex2_bundle):
    _, index, program, _ = ex2_bundle
    coeff = np.zeros(len(index))
    coeff[index.coord(0, 0)] = 1.0
    obj = LinearObjective(index=index, coefficients=coeff)
    from corrplan.decomposition import sample

    for seed in range(5):
        assert evaluate_objective(obj, sample(program, seed)) == 1.0


def test_objective_at_image_equals_tree_walk(goof2_bundle, payoff_oracle):
    tree, index, _, _ = goof2_bundle
    obj = payoff_objective(tree, index, 2.0, -1.0)
    p1 = tree.reduced_plans(1)[1]
    p2 = tree.reduced_plans(2)[2]
    image = indicator_image(tree, index, PlanPair(p1, p2))
    u1, u2 = payoff_oracle(tree, p1, p2)
    assert evaluate_objective(obj, image) == pytest.approx(2.0 * u1 - 1.0 * u2)


def test_dimension_mismatch(ex2_bundle, goof2_bundle):
    _, i_small, _, _ = ex2_bundle
    _, i_big, _, _ = goof2_bundle
    obj = LinearObjective(index=i_big, coefficients=np.zeros(len(i_big)))
    plan = CorrelationPlan(index=i_small, values=np.zeros(len(i_small)))
    with pytest.raises(DimensionMismatchError):
        evaluate_objective(obj, plan)


# -- optimize -------------------------------------------------------------------


def test_zero_objective_converges_immediately(ex2_bundle):
    _, index, program, _ = ex2_bundle
    obj = LinearObjective(index=index, coefficients=np.zeros(len(index)))
    res = optimize(program, obj, OptimizeConfig(target_gap=1e-9))
    assert res.iterations == 1
    assert res.gap == 0.0
    assert res.value == 0.0
    assert res.converged


def test_goofspiel2_social_welfare(goof2_bundle):
    tree, index, program, system = goof2_bundle
    obj = payoff_objective(tree, index, 1.0, 1.0)
    oracle_opt = max(
        evaluate_objective(obj, p) for p in xi_vertex_set(tree, index).plans
    )
    res = optimize(program, obj, OptimizeConfig(max_iters=100_000, target_gap=1e-3))
    assert res.converged
    assert res.certified
    assert abs(res.value - oracle_opt) <= 1e-3
    assert check_membership(res.plan, system, tol=1e-9).member
    # Certified gaps are nonnegative and the value never beats the exact
    # optimum (maximization).
    assert res.gap >= 0.0
    assert res.value <= oracle_opt + 1e-9


def test_minimization_sense(goof2_bundle):
    tree, index, program, _ = goof2_bundle
    coeff = payoff_objective(tree, index, 1.0, 1.0).coefficients
    obj = LinearObjective(index=index, coefficients=coeff, sense="min")
    oracle_min = min(
        evaluate_objective(LinearObjective(index=index, coefficients=coeff), p)
        for p in xi_vertex_set(tree, index).plans
    )
    res = optimize(program, obj, OptimizeConfig(max_iters=100_000, target_gap=1e-3))
    assert res.converged
    assert abs(res.value - oracle_min) <= 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_ex2_random_objectives(ex2_bundle, seed):
    tree, index, program, _ = ex2_bundle
    rng = np.random.default_rng(seed)
    coeff = rng.choice([-1.0, 1.0], size=len(index))
    obj = LinearObjective(index=index, coefficients=coeff)
    oracle_opt = max(
        evaluate_objective(obj, p) for p in xi_vertex_set(tree, index).plans
    )
    res = optimize(program, obj, OptimizeConfig(max_iters=100_000, target_gap=1e-3))
    assert res.converged and res.iterations <= 100_000
    assert abs(res.value - oracle_opt) <= 1e-3


def test_budget_exhaustion_flagged_not_raised(goof2_bundle):
    tree, index, program, _ = goof2_bundle
    obj = payoff_objective(tree, index, 1.0, 1.0)
    res = optimize(program, obj, OptimizeConfig(max_iters=3, target_gap=1e-9))
    assert not res.converged
    assert res.iterations == 3
    assert np.isfinite(res.value)


def test_nonfinite_objective_rejected(ex2_bundle):
    _, index, program, _ = ex2_bundle
    coeff = np.zeros(len(index))
    coeff[1] = np.nan
    obj = LinearObjective(index=index, coefficients=coeff)
    with pytest.raises(ValueError, match="non-finite"):
        optimize(program, obj)


def test_deterministic_bit_for_bit(goof2_bundle):
    tree, index, program, _ = goof2_bundle
    obj = payoff_objective(tree, index, 1.0, 0.5)
    cfg = OptimizeConfig(max_iters=500, target_gap=1e-12, seed=7)
    a = optimize(program, obj, cfg)
    b = optimize(program, obj, cfg)
    assert result_fields(a) == result_fields(b)


def test_iterates_and_average_feasible(goof2_bundle):
    tree, index, program, system = goof2_bundle
    obj = payoff_objective(tree, index, 1.0, 1.0)
    violations = []

    def audit(t, plan):
        report = check_membership(plan, system, tol=1e-9)
        if not report.member:
            violations.append((t, report))

    res = optimize(
        program, obj, OptimizeConfig(max_iters=300, target_gap=0.0), iterate_hook=audit
    )
    assert violations == []
    assert check_membership(res.plan, system, tol=1e-9).member


def test_average_value_improves_over_tail(goof2_bundle):
    # The running average's distance to the vertex optimum does not grow
    # over the last tenth of the run.
    tree, index, program, _ = goof2_bundle
    obj = payoff_objective(tree, index, 1.0, 1.0)
    res = optimize(program, obj, OptimizeConfig(max_iters=2000, target_gap=0.0))
    total = res.iterations
    res90 = optimize(program, obj, OptimizeConfig(max_iters=int(total * 0.9), target_gap=0.0))
    opt, _ = vertex_optimum(program, obj)
    assert abs(opt - res.value) <= abs(opt - res90.value) + 1e-12


def test_uncertified_gap_when_cap_too_small(goof2_bundle):
    tree, index, program, _ = goof2_bundle
    obj = payoff_objective(tree, index, 1.0, 1.0)
    res = optimize(
        program, obj, OptimizeConfig(max_iters=50, target_gap=1e-9, oracle_cap=1)
    )
    assert not res.certified
    assert res.best_iterate_value >= res.value - 1e-12
    # The regret bound really bounds the distance to the optimum (3.0).
    assert res.value + res.gap >= 3.0 - 1e-9


def test_uncertified_bound_on_goofspiel3(goof3_bundle):
    # Vertex enumeration is far out of reach here, so the optimizer reports
    # the regret-composition bound; any feasible vertex value must lie
    # below value + gap.
    from corrplan.decomposition import sample_vertex

    tree, index, program, _ = goof3_bundle
    obj = payoff_objective(tree, index, 1.0, 1.0)
    res = optimize(program, obj, OptimizeConfig(max_iters=4000, target_gap=0.05))
    assert not res.certified
    assert res.converged
    assert res.gap <= 0.05
    best_vertex = max(
        evaluate_objective(obj, sample_vertex(program, seed)) for seed in range(200)
    )
    assert best_vertex <= res.value + res.gap + 1e-9


def test_uncertified_zero_objective_stops_immediately(goof3_bundle):
    _, index, program, _ = goof3_bundle
    obj = LinearObjective(index=index, coefficients=np.zeros(len(index)))
    res = optimize(program, obj, OptimizeConfig(target_gap=1e-9))
    assert res.iterations == 1
    assert res.gap == 0.0
    assert not res.certified
