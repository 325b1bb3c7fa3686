# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Cython kernel backend; mirrors ``_kernels_py`` exactly.

All loops run without the GIL-heavy numpy dispatch, which matters because
the optimizer calls these once per iteration."""

ctypedef signed char int8_t
ctypedef long long int64_t


def forward(cp, const double[::1] x, double[::1] out):
    cdef const int8_t[::1] kind = cp.kind
    cdef const int64_t[::1] out_start = cp.out_start
    cdef const int64_t[::1] out_len = cp.out_len
    cdef const int64_t[::1] src_start = cp.src_start
    cdef const int64_t[::1] src_len = cp.src_len
    cdef const int64_t[::1] src_idx = cp.src_idx
    cdef const int64_t[::1] in_start = cp.split_in_start
    cdef Py_ssize_t i, j, t, m, a
    cdef Py_ssize_t split = 0
    cdef double scale
    for i in range(kind.shape[0]):
        scale = 0.0
        for j in range(src_start[i], src_start[i] + src_len[i]):
            scale += out[src_idx[j]]
        t = out_start[i]
        if kind[i] == 0:
            m = out_len[i]
            a = in_start[split]
            for j in range(m):
                out[t + j] = scale * x[a + j]
            split += 1
        else:
            out[t] = scale


def forward_vertex(cp, const int64_t[::1] choices, double[::1] out):
    cdef const int8_t[::1] kind = cp.kind
    cdef const int64_t[::1] out_start = cp.out_start
    cdef const int64_t[::1] src_start = cp.src_start
    cdef const int64_t[::1] src_len = cp.src_len
    cdef const int64_t[::1] src_idx = cp.src_idx
    cdef Py_ssize_t i, j
    cdef Py_ssize_t split = 0
    cdef double scale
    for i in range(kind.shape[0]):
        scale = 0.0
        for j in range(src_start[i], src_start[i] + src_len[i]):
            scale += out[src_idx[j]]
        if kind[i] == 0:
            out[out_start[i] + choices[split]] = scale
            split += 1
        else:
            out[out_start[i]] = scale


def backward(cp, const double[::1] values, const double[::1] x,
             double[::1] grad, double[::1] rewards):
    cdef const int8_t[::1] kind = cp.kind
    cdef const int64_t[::1] out_start = cp.out_start
    cdef const int64_t[::1] out_len = cp.out_len
    cdef const int64_t[::1] src_start = cp.src_start
    cdef const int64_t[::1] src_len = cp.src_len
    cdef const int64_t[::1] src_idx = cp.src_idx
    cdef const int64_t[::1] in_start = cp.split_in_start
    cdef Py_ssize_t i, j, t, m, a
    cdef Py_ssize_t split = 0
    cdef double scale, gdot, g
    for i in range(kind.shape[0]):
        if kind[i] == 0:
            split += 1
    for i in range(kind.shape[0] - 1, -1, -1):
        t = out_start[i]
        if kind[i] == 0:
            split -= 1
            m = out_len[i]
            a = in_start[split]
            scale = 0.0
            for j in range(src_start[i], src_start[i] + src_len[i]):
                scale += values[src_idx[j]]
            gdot = 0.0
            for j in range(m):
                g = grad[t + j]
                rewards[a + j] = scale * g
                gdot += g * x[a + j]
            for j in range(src_start[i], src_start[i] + src_len[i]):
                grad[src_idx[j]] += gdot
        else:
            g = grad[t]
            for j in range(src_start[i], src_start[i] + src_len[i]):
                grad[src_idx[j]] += g


def regret_matching_step(cp, double[::1] regrets, const double[::1] rewards,
                         const double[::1] current, double[::1] nxt):
    cdef const int64_t[::1] offsets = cp.split_in_start
    cdef Py_ssize_t k, j, a, b
    cdef double realized, total, r
    for k in range(offsets.shape[0] - 1):
        a = offsets[k]
        b = offsets[k + 1]
        realized = 0.0
        for j in range(a, b):
            realized += rewards[j] * current[j]
        total = 0.0
        for j in range(a, b):
            regrets[j] += rewards[j] - realized
            r = regrets[j]
            if r > 0.0:
                total += r
        if total > 0.0:
            for j in range(a, b):
                r = regrets[j]
                nxt[j] = r / total if r > 0.0 else 0.0
        else:
            for j in range(a, b):
                nxt[j] = 1.0 / (b - a)
