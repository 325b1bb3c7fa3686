"""Benchmark the compiled kernels against the pure Python fallback.

Times one full optimizer iteration (forward evaluation, reverse gradient
sweep, regret-matching update) on the scaled-extension programs of the
built-in games and Goofspiel.  Run from the repository root:

    python benchmarks/bench_kernels.py [--ranks 4]
"""

import argparse
import time

import numpy as np

from corrplan import _kernels_py, kernels
from corrplan.decomposition import decompose
from corrplan.gameio import builtin, goofspiel
from corrplan.polytope import build_relevance_index, payoff_objective


def one_iteration(impl, cp, x, coeff_fill, regrets):
    out = np.zeros(cp.n_coords)
    out[0] = 1.0
    impl.forward(cp, x, out)
    grad = coeff_fill.copy()
    rewards = np.zeros(cp.n_inputs)
    impl.backward(cp, out, x, grad, rewards)
    nxt = np.empty_like(x)
    impl.regret_matching_step(cp, regrets, rewards, x, nxt)
    return nxt


def bench(tree, reps):
    index = build_relevance_index(tree)
    program = decompose(tree, index)
    cp = program.compiled()
    coeff_fill = payoff_objective(tree, index, 1.0, 1.0).coefficients[
        program.fill_to_coord
    ]
    x = np.concatenate(
        [np.full(s.size, 1.0 / s.size) for s in program.splits]
    ) if program.splits else np.zeros(0)

    rows = {}
    backends = [("python", _kernels_py)]
    if kernels._speedups is not None:
        backends.append(("compiled", kernels._speedups))
    for name, impl in backends:
        regrets = np.zeros(cp.n_inputs)
        one_iteration(impl, cp, x.copy(), coeff_fill, regrets)  # warm up
        start = time.perf_counter()
        for _ in range(reps):
            one_iteration(impl, cp, x.copy(), coeff_fill, regrets)
        rows[name] = (time.perf_counter() - start) / reps
    return program.num_steps, rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ranks", type=int, default=3, help="largest Goofspiel size")
    parser.add_argument("--reps", type=int, default=50)
    args = parser.parse_args()

    games = [("EX1", builtin("EX1")), ("EX2", builtin("EX2"))]
    games += [(f"goofspiel({k})", goofspiel(k)) for k in range(2, args.ranks + 1)]

    print(f"{'game':<14} {'steps':>8} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for name, tree in games:
        steps, rows = bench(tree, args.reps)
        py = rows["python"]
        if "compiled" in rows:
            cy = rows["compiled"]
            print(
                f"{name:<14} {steps:>8} {py * 1e3:>10.3f}ms {cy * 1e3:>10.3f}ms "
                f"{py / cy:>7.1f}x"
            )
        else:
            print(f"{name:<14} {steps:>8} {py * 1e3:>10.3f}ms {'n/a':>12} {'':>8}")


if __name__ == "__main__":
    main()
