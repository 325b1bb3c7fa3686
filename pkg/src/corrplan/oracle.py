"""Brute-force ground truth at desk scale.

The plan-pair route: a pair of reduced-normal-form plans maps to a {0,1}
correlation plan whose entry at (s1, s2) says whether both plans prescribe
their sequence.  Enumerating all pairs yields the vertex candidates of the
polytope of correlation plans; comparing that set against the deterministic
points of the scaled-extension program verifies, game by game, that the two
polytopes coincide.

All oracle arithmetic is over exact {0,1} floats, so set comparisons are
bitwise and need no tolerances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .decomposition import decompose, deterministic_points
from .polytope import (
    CorrelationPlan,
    RelevanceIndex,
    build_relevance_index,
    check_membership,
    constraint_system,
)
from .tree import EMPTY_SEQ, GameTree, PlanCountError, ReducedPlan

DEFAULT_PAIR_CAP = 10**6


@dataclass(frozen=True)
class PlanPair:
    plan1: ReducedPlan
    plan2: ReducedPlan


@dataclass(frozen=True)
class XiVertexSet:
    """Deduplicated {0,1} plan-pair images, each tagged with one generator."""

    index: RelevanceIndex
    plans: tuple[CorrelationPlan, ...]
    tags: tuple[PlanPair, ...]

    def __len__(self) -> int:
        return len(self.plans)

    def bit_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(p.as_bits() for p in self.plans)

    def to_lines(self) -> str:
        """One vector per line as a 0/1 string, sorted (fixture format)."""
        return "\n".join(
            "".join(str(b) for b in bits) for bits in sorted(self.bit_set())
        ) + "\n"


@dataclass(frozen=True)
class EqualityReport:
    equal: bool
    missing_from_decomposition: tuple[tuple[int, ...], ...]
    missing_from_xi: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class LemmaReport:
    ok: bool
    failure: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def indicator_image(
    tree: GameTree, index: RelevanceIndex, pair: PlanPair
) -> CorrelationPlan:
    """Image of the point mass on one plan pair: entry (s1, s2) is 1 iff
    plan1 prescribes s1 and plan2 prescribes s2."""
    m1 = np.array(tree.prescribed_mask(pair.plan1), dtype=bool)
    m2 = np.array(tree.prescribed_mask(pair.plan2), dtype=bool)
    pairs = np.array(index.pairs, dtype=np.int64)
    values = (m1[pairs[:, 0]] & m2[pairs[:, 1]]).astype(np.float64)
    return CorrelationPlan(index=index, values=values)


def count_plan_pairs(tree: GameTree) -> int:
    return tree.count_plans(1) * tree.count_plans(2)


def xi_vertex_set(
    tree: GameTree, index: RelevanceIndex, cap: int = DEFAULT_PAIR_CAP
) -> XiVertexSet:
    """All distinct plan-pair images, tagged with their first generator."""
    total = count_plan_pairs(tree)
    if total > cap:
        raise PlanCountError(f"{total} plan pairs exceed the cap {cap}")
    plans1 = tree.reduced_plans(1, cap=cap)
    plans2 = tree.reduced_plans(2, cap=cap)
    masks1 = [np.array(tree.prescribed_mask(p), dtype=bool) for p in plans1]
    masks2 = [np.array(tree.prescribed_mask(p), dtype=bool) for p in plans2]
    pairs = np.array(index.pairs, dtype=np.int64)
    col1 = pairs[:, 0]
    col2 = pairs[:, 1]
    seen: dict[bytes, tuple[np.ndarray, PlanPair]] = {}
    for (p1, m1), (p2, m2) in itertools.product(
        zip(plans1, masks1), zip(plans2, masks2)
    ):
        values = (m1[col1] & m2[col2]).astype(np.float64)
        key = values.tobytes()
        if key not in seen:
            seen[key] = (values, PlanPair(p1, p2))
    ordered = sorted(seen.values(), key=lambda item: item[0].tobytes())
    return XiVertexSet(
        index=index,
        plans=tuple(CorrelationPlan(index=index, values=v) for v, _ in ordered),
        tags=tuple(tag for _, tag in ordered),
    )


def check_xi_equals_vsf(
    tree: GameTree,
    pair_cap: int = DEFAULT_PAIR_CAP,
    vertex_cap: int = DEFAULT_PAIR_CAP,
) -> EqualityReport:
    """Compare plan-pair images against decomposition vertex points.

    Both routes are exact; equality certifies that the polytope of
    correlation plans and the mass-conservation polytope coincide for this
    game.  Raises on caps or a non-triangle-free input."""
    index = build_relevance_index(tree)
    program = decompose(tree, index)
    dec = {p.as_bits() for p in deterministic_points(program, cap=vertex_cap)}
    xi = xi_vertex_set(tree, index, cap=pair_cap).bit_set()
    return EqualityReport(
        equal=dec == xi,
        missing_from_decomposition=tuple(sorted(xi - dec)),
        missing_from_xi=tuple(sorted(dec - xi)),
    )


def check_integral_lemmas(plan: CorrelationPlan, index: RelevanceIndex) -> LemmaReport:
    """Zero-propagation and product identity for an integral member plan.

    Preconditions (checked): every entry is exactly 0 or 1 and the plan
    satisfies the mass-conservation rows exactly.  For such plans, a zero
    at (s1, empty) forces the whole s1 row to zero (symmetrically for
    columns), and every entry equals the product of its row and column
    marginals."""
    bits = plan.as_bits()  # raises on non-integral entries
    tree = index.tree
    system = constraint_system(tree, index)
    report = check_membership(plan, system, tol=0.0)
    if not report.member:
        raise ValueError(
            f"plan is not an exact member (violation {report.max_violation} "
            f"at {report.worst_row})"
        )
    row = {s1: bits[index.coord(s1, EMPTY_SEQ)] for s1 in range(tree.num_sequences(1))}
    col = {s2: bits[index.coord(EMPTY_SEQ, s2)] for s2 in range(tree.num_sequences(2))}
    for c, (s1, s2) in enumerate(index.pairs):
        v = bits[c]
        if row[s1] == 0 and v != 0:
            return LemmaReport(
                ok=False,
                failure=f"zero propagation: row {tree.seq_label(1, s1)} is 0 "
                f"but {index.pair_label(c)} = {v}",
            )
        if col[s2] == 0 and v != 0:
            return LemmaReport(
                ok=False,
                failure=f"zero propagation: column {tree.seq_label(2, s2)} is 0 "
                f"but {index.pair_label(c)} = {v}",
            )
        if v != row[s1] * col[s2]:
            return LemmaReport(
                ok=False,
                failure=f"product identity fails at {index.pair_label(c)}: "
                f"{v} != {row[s1]}*{col[s2]}",
            )
    return LemmaReport(ok=True)


# ---------------------------------------------------------------------------
# Exact rational vertex probing (exploratory tooling)
# ---------------------------------------------------------------------------


def _simplex_solve(
    rows: list[list[Fraction]], rhs: list[Fraction], objective: list[Fraction]
) -> list[Fraction] | None:
    """Maximize objective over {x >= 0 : rows x = rhs} with exact arithmetic.

    Two-phase tableau simplex with Bland's rule.  Returns an optimal basic
    feasible solution (a vertex), or None if infeasible/unbounded.  Only
    meant for tiny systems."""
    m, n = len(rows), len(objective)
    for r in range(m):
        if rhs[r] < 0:
            rows[r] = [-a for a in rows[r]]
            rhs[r] = -rhs[r]
    # Phase 1: artificial variables.
    tab = [rows[r] + [Fraction(int(i == r)) for i in range(m)] + [rhs[r]] for r in range(m)]
    basis = [n + r for r in range(m)]
    cost = [Fraction(0)] * n + [Fraction(1)] * m + [Fraction(0)]
    obj_row = [Fraction(0)] * (n + m + 1)
    for r in range(m):
        for j in range(n + m + 1):
            obj_row[j] -= tab[r][j]

    def pivot(tab, obj_row, basis, allowed_cols):
        while True:
            col = next((j for j in allowed_cols if obj_row[j] < 0), None)
            if col is None:
                return True
            best_r, best_ratio = None, None
            for r in range(len(tab)):
                if tab[r][col] > 0:
                    ratio = tab[r][-1] / tab[r][col]
                    if (
                        best_ratio is None
                        or ratio < best_ratio
                        or (ratio == best_ratio and basis[r] < basis[best_r])
                    ):
                        best_r, best_ratio = r, ratio
            if best_r is None:
                return False  # unbounded
            piv = tab[best_r][col]
            tab[best_r] = [a / piv for a in tab[best_r]]
            for r in range(len(tab)):
                if r != best_r and tab[r][col] != 0:
                    f = tab[r][col]
                    tab[r] = [a - f * b for a, b in zip(tab[r], tab[best_r])]
            f = obj_row[col]
            for j in range(len(obj_row)):
                obj_row[j] -= f * tab[best_r][j]
            basis[best_r] = col

    if not pivot(tab, obj_row, basis, list(range(n + m))):
        return None
    if obj_row[-1] != 0:
        return None  # infeasible
    # Drive artificials out of the basis where possible; drop their columns.
    for r in range(m):
        if basis[r] >= n:
            col = next((j for j in range(n) if tab[r][j] != 0), None)
            if col is not None:
                piv = tab[r][col]
                tab[r] = [a / piv for a in tab[r]]
                for r2 in range(m):
                    if r2 != r and tab[r2][col] != 0:
                        f = tab[r2][col]
                        tab[r2] = [a - f * b for a, b in zip(tab[r2], tab[r])]
                basis[r] = col
    tab = [row[:n] + [row[-1]] for row in tab]
    # Phase 2.
    obj_row = [-c for c in objective] + [Fraction(0)]
    for r in range(m):
        if basis[r] < n and obj_row[basis[r]] != 0:
            f = obj_row[basis[r]]
            for j in range(n + 1):
                obj_row[j] -= f * tab[r][j]
    if not pivot(tab, obj_row, basis, list(range(n))):
        return None
    x = [Fraction(0)] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tab[r][-1]
    return x


def fractional_vertex_probe(
    tree: GameTree, seed: int = 0, attempts: int = 20
) -> list[Fraction] | None:
    """Search for a fractional vertex of the mass-conservation polytope.

    Maximizes seeded random integer objectives with exact rational simplex;
    returns the first optimal vertex with a non-integer coordinate, if any
    turns up.  Exploratory: finding none proves nothing."""
    index = build_relevance_index(tree)
    system = constraint_system(tree, index)
    m = system.matrix.toarray()
    rows = [[Fraction(int(a)) for a in row] for row in m.astype(np.int64)]
    rhs = [Fraction(int(b)) for b in system.rhs.astype(np.int64)]
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        objective = [Fraction(int(c)) for c in rng.integers(-9, 10, size=len(index))]
        x = _simplex_solve([r[:] for r in rows], rhs[:], objective)
        if x is None:
            continue
        if any(v.denominator != 1 for v in x):
            return x
    return None
