"""Linear-objective optimization over the correlation-plan polytope.

Regret matching runs on every simplex-split step of a scaled-extension
program.  Each iteration evaluates the program at the current per-split
strategies (always producing a member of the polytope), back-propagates the
objective gradient through the scaling forms in one reverse sweep to get
each split's local linear reward, and updates cumulative regrets.  The
uniform average of the iterates converges to the optimum of the linear
objective over the polytope.

When the program admits vertex enumeration within the configured cap, the
reported gap is certified against the exact vertex optimum.  Otherwise the
gap is the regret-composition bound: the per-split positive best-action
regrets, summed and divided by the iteration count, upper-bound the
distance between the average's value and the true optimum.  Such results
are flagged uncertified (no vertex enumeration backs them), but the bound
is sound and dominates the naive best-iterate-minus-average diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .decomposition import (
    DEFAULT_VERTEX_CAP,
    ScaledExtensionProgram,
    VertexCapError,
    deterministic_points,
)
from .polytope import CorrelationPlan, DimensionMismatchError, LinearObjective


@dataclass(frozen=True)
class OptimizeConfig:
    max_iters: int = 100_000
    target_gap: float = 1e-6
    seed: int = 0
    oracle_cap: int = DEFAULT_VERTEX_CAP
    log_every: int = 0  # 0 disables progress lines


@dataclass(frozen=True)
class OptimizeResult:
    plan: CorrelationPlan  # uniform average of all iterates
    value: float
    gap: float
    certified: bool
    converged: bool
    iterations: int
    best_iterate_value: float


def evaluate_objective(objective: LinearObjective, plan: CorrelationPlan) -> float:
    """Inner product of objective coefficients with plan values."""
    if plan.values.shape != objective.coefficients.shape:
        raise DimensionMismatchError("objective and plan dimensions differ")
    return float(objective.coefficients @ plan.values)


def vertex_optimum(
    program: ScaledExtensionProgram,
    objective: LinearObjective,
    cap: int = DEFAULT_VERTEX_CAP,
) -> tuple[float, CorrelationPlan]:
    """Exact optimum over the polytope via vertex enumeration.

    A linear objective attains its optimum at a vertex, and every vertex is
    a deterministic program point."""
    best_value = None
    best_plan = None
    sign = 1.0 if objective.sense == "max" else -1.0
    for plan in deterministic_points(program, cap=cap):
        v = sign * evaluate_objective(objective, plan)
        if best_value is None or v > best_value:
            best_value, best_plan = v, plan
    return sign * best_value, best_plan


def optimize(
    program: ScaledExtensionProgram,
    objective: LinearObjective,
    config: OptimizeConfig = OptimizeConfig(),
    log=None,
    iterate_hook=None,
) -> OptimizeResult:
    """Regret-matching loop; deterministic for a fixed config.

    Stops when the gap reaches ``config.target_gap`` or after
    ``config.max_iters`` iterations; in the latter case the result carries
    ``converged=False`` rather than raising.  Every iterate is a polytope
    member by construction, hence so is the returned average.

    ``iterate_hook(t, plan)`` is called with every iterate when given
    (meant for instrumentation and feasibility audits in tests).
    """
    if objective.index.pairs != program.index.pairs:
        raise DimensionMismatchError("objective built for a different index")
    if not np.all(np.isfinite(objective.coefficients)):
        raise ValueError("objective has non-finite coefficients")

    sign = 1.0 if objective.sense == "max" else -1.0
    coeff_fill = sign * objective.coefficients[program.fill_to_coord]

    opt: float | None = None
    try:
        opt_signed, _ = vertex_optimum(program, objective, cap=config.oracle_cap)
        opt = sign * opt_signed
    except VertexCapError:
        opt = None

    compiled = program.compiled()
    n_inputs = compiled.n_inputs
    offsets = compiled.split_in_start
    current = np.empty(n_inputs)
    for k in range(len(offsets) - 1):
        current[offsets[k] : offsets[k + 1]] = 1.0 / (offsets[k + 1] - offsets[k])
    regrets = np.zeros(n_inputs)

    value_sum = np.zeros(compiled.n_coords)
    best_iter_value = -np.inf
    iterations = 0
    avg_value = 0.0
    gap = np.inf
    converged = False

    block_starts = offsets[:-1]
    for t in range(1, config.max_iters + 1):
        iterations = t
        values = kernels.forward(compiled, current)
        if iterate_hook is not None:
            iterate_hook(t, program._plan_from_fill(values))
        value_sum += values
        iter_value = float(coeff_fill @ values)
        if iter_value > best_iter_value:
            best_iter_value = iter_value
        avg_value = float(coeff_fill @ value_sum) / t
        if opt is not None:
            # The average is always feasible, so in exact arithmetic it
            # cannot beat the vertex optimum; clamp away rounding dust.
            gap = max(0.0, opt - avg_value)
            if gap <= config.target_gap:
                converged = True
                if log is not None and config.log_every:
                    log(f"iter {t} value {sign * avg_value!r} gap {gap!r}")
                break
            rewards = kernels.backward(compiled, values, current, coeff_fill)
            current = kernels.regret_matching_step(compiled, regrets, rewards, current)
        else:
            rewards = kernels.backward(compiled, values, current, coeff_fill)
            current = kernels.regret_matching_step(compiled, regrets, rewards, current)
            # Regret-composition bound: optimum <= average value plus the
            # mean positive best-action regret accumulated per split.
            if len(block_starts):
                block_best = np.maximum.reduceat(regrets, block_starts)
                gap = float(np.clip(block_best, 0.0, None).sum()) / t
            else:
                gap = 0.0
            if gap <= config.target_gap:
                converged = True
                if log is not None and config.log_every:
                    log(f"iter {t} value {sign * avg_value!r} gap {gap!r}")
                break
        if log is not None and config.log_every and t % config.log_every == 0:
            log(f"iter {t} value {sign * avg_value!r} gap {gap!r}")

    avg_fill = value_sum / iterations
    plan = program._plan_from_fill(avg_fill)
    return OptimizeResult(
        plan=plan,
        value=sign * avg_value,
        gap=gap,
        certified=opt is not None,
        converged=converged,
        iterations=iterations,
        best_iterate_value=sign * best_iter_value,
    )
