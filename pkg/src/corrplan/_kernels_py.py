"""Pure numpy kernel backend.

Semantically identical to the Cython backend in ``_speedups.pyx``; kept
small and obviously correct so it can serve as the reference in tests.
"""

from __future__ import annotations

import numpy as np


def forward(cp, x: np.ndarray, out: np.ndarray) -> None:
    kind = cp.kind
    out_start = cp.out_start
    out_len = cp.out_len
    src_start = cp.src_start
    src_len = cp.src_len
    src_idx = cp.src_idx
    in_start = cp.split_in_start
    split = 0
    for i in range(len(kind)):
        lo = src_start[i]
        scale = out[src_idx[lo : lo + src_len[i]]].sum()
        t = out_start[i]
        if kind[i] == 0:
            n = out_len[i]
            a = in_start[split]
            out[t : t + n] = scale * x[a : a + n]
            split += 1
        else:
            out[t] = scale


def forward_vertex(cp, choices: np.ndarray, out: np.ndarray) -> None:
    kind = cp.kind
    src_idx = cp.src_idx
    split = 0
    for i in range(len(kind)):
        lo = cp.src_start[i]
        scale = out[src_idx[lo : lo + cp.src_len[i]]].sum()
        if kind[i] == 0:
            out[cp.out_start[i] + choices[split]] = scale
            split += 1
        else:
            out[cp.out_start[i]] = scale


def backward(cp, values: np.ndarray, x: np.ndarray, grad: np.ndarray, rewards: np.ndarray) -> None:
    kind = cp.kind
    src_idx = cp.src_idx
    split = int((cp.kind == 0).sum())
    for i in range(len(kind) - 1, -1, -1):
        lo = cp.src_start[i]
        src = src_idx[lo : lo + cp.src_len[i]]
        t = cp.out_start[i]
        if kind[i] == 0:
            split -= 1
            n = cp.out_len[i]
            a = cp.split_in_start[split]
            seg = grad[t : t + n]
            scale = values[src].sum()
            rewards[a : a + n] = scale * seg
            grad[src] += seg @ x[a : a + n]
        else:
            grad[src] += grad[t]


def regret_matching_step(
    cp, regrets: np.ndarray, rewards: np.ndarray, current: np.ndarray, nxt: np.ndarray
) -> None:
    offsets = cp.split_in_start
    for k in range(len(offsets) - 1):
        a, b = offsets[k], offsets[k + 1]
        r = rewards[a:b]
        realized = r @ current[a:b]
        block = regrets[a:b]
        block += r - realized
        pos = np.maximum(block, 0.0)
        total = pos.sum()
        if total > 0.0:
            nxt[a:b] = pos / total
        else:
            nxt[a:b] = 1.0 / (b - a)
