"""Execution kernels for scaled-extension programs.

A program is compiled once into flat arrays; the per-iteration work of
evaluation, gradient back-propagation, and regret matching then runs over
those arrays.  Two interchangeable backends exist:

* ``compiled`` - a Cython extension (:mod:`corrplan._speedups`), used when
  it was built;
* ``python`` - a pure numpy implementation (:mod:`corrplan._kernels_py`).

Set ``CORRPLAN_PURE_PYTHON=1`` to force the fallback.  The two backends use
the same summation order per form, but tiny last-ulp differences between
numpy reductions and open-coded loops are possible; callers comparing
across backends should allow for that.  Within one backend all kernels are
deterministic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py

try:  # pragma: no cover - depends on the build
    from . import _speedups
except ImportError:  # pragma: no cover
    _speedups = None

if _speedups is not None and not os.environ.get("CORRPLAN_PURE_PYTHON"):
    _impl = _speedups
    BACKEND = "compiled"
else:
    _impl = _kernels_py
    BACKEND = "python"

KIND_SPLIT = 0
KIND_SUM = 1


@dataclass(frozen=True)
class CompiledProgram:
    """Flat-array form of a program (fill-order coordinates).

    ``kind[i]`` is 0 for a simplex split, 1 for a singleton sum.  Step ``i``
    writes ``out_len[i]`` entries starting at ``out_start[i]`` and scales by
    the sum of the entries at ``src_idx[src_start[i]:src_start[i]+src_len[i]]``.
    ``split_in_start`` gives each split's offset into the flattened input
    vector (length ``n_splits + 1``).
    """

    n_coords: int
    n_inputs: int
    kind: np.ndarray
    out_start: np.ndarray
    out_len: np.ndarray
    src_start: np.ndarray
    src_len: np.ndarray
    src_idx: np.ndarray
    split_in_start: np.ndarray


def compile_program(program) -> CompiledProgram:
    from .decomposition import SimplexSplit

    n_steps = len(program.steps)
    kind = np.empty(n_steps, dtype=np.int8)
    out_start = np.empty(n_steps, dtype=np.int64)
    out_len = np.empty(n_steps, dtype=np.int64)
    src_start = np.empty(n_steps, dtype=np.int64)
    src_len = np.empty(n_steps, dtype=np.int64)
    src_chunks: list[tuple[int, ...]] = []
    split_in_start = [0]
    total_src = 0
    for i, step in enumerate(program.steps):
        if isinstance(step, SimplexSplit):
            kind[i] = KIND_SPLIT
            out_start[i] = step.start
            out_len[i] = step.size
            split_in_start.append(split_in_start[-1] + step.size)
        else:
            kind[i] = KIND_SUM
            out_start[i] = step.target
            out_len[i] = 1
        src_start[i] = total_src
        src_len[i] = len(step.source)
        src_chunks.append(step.source)
        total_src += len(step.source)
    src_idx = np.fromiter(
        (p for chunk in src_chunks for p in chunk), dtype=np.int64, count=total_src
    )
    return CompiledProgram(
        n_coords=len(program.index),
        n_inputs=split_in_start[-1],
        kind=kind,
        out_start=out_start,
        out_len=out_len,
        src_start=src_start,
        src_len=src_len,
        src_idx=src_idx,
        split_in_start=np.array(split_in_start, dtype=np.int64),
    )


def forward(compiled: CompiledProgram, inputs_flat: np.ndarray) -> np.ndarray:
    """Run all steps; returns the fill-order value vector."""
    out = np.zeros(compiled.n_coords)
    out[0] = 1.0
    _impl.forward(compiled, np.ascontiguousarray(inputs_flat, dtype=np.float64), out)
    return out


def forward_vertex(compiled: CompiledProgram, choices: np.ndarray) -> np.ndarray:
    """Run all steps with a canonical basis vector per split."""
    out = np.zeros(compiled.n_coords)
    out[0] = 1.0
    _impl.forward_vertex(compiled, np.ascontiguousarray(choices, dtype=np.int64), out)
    return out


def backward(
    compiled: CompiledProgram,
    values: np.ndarray,
    inputs_flat: np.ndarray,
    objective_fill: np.ndarray,
) -> np.ndarray:
    """Reverse sweep: per-split local linear rewards for the objective.

    ``values`` must be the forward output for ``inputs_flat``.  Returns the
    flattened reward vector aligned with the inputs."""
    grad = objective_fill.copy()
    rewards = np.zeros(compiled.n_inputs)
    _impl.backward(compiled, values, inputs_flat, grad, rewards)
    return rewards


def regret_matching_step(
    compiled: CompiledProgram,
    regrets: np.ndarray,
    rewards: np.ndarray,
    current: np.ndarray,
) -> np.ndarray:
    """Accumulate per-block regrets and return the next strategy profile.

    Within each split block the regret of an input coordinate grows by its
    reward minus the block's realized reward; the next strategy is the
    normalized positive part, or uniform when no regret is positive."""
    nxt = np.empty_like(current)
    _impl.regret_matching_step(compiled, regrets, rewards, current, nxt)
    return nxt
