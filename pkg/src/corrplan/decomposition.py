"""Triangle-freeness and the scaled-extension decomposition.

The decomposition expresses the correlation-plan polytope as a chain of
scaled extensions: starting from the fixed (empty, empty) entry, every
remaining coordinate is written exactly once, either by a *simplex split*
(an already-filled entry is divided among the actions of one information
set) or by a *singleton sum* (a new entry is the sum of already-filled
ones).  Such a chain exists exactly when no "triangle" occurs in the
information structure: two sibling information sets of one player (same
parent sequence) and two of the other such that three of the four cross
connections hold.

The recursion below processes a relevant sequence pair (s1, s2) and fills
every relevant pair below it.  At each level, every information set whose
connected partners force a constraint conflict must be the one that splits;
the rank comparison picks it.  Sibling information sets with no connected
partner at the level split freely.  Information sets left un-branched have
exactly one connected partner, and their rows/columns are recovered as sums
once that partner's block is complete.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .polytope import CorrelationPlan, RelevanceIndex, build_relevance_index
from .tree import EMPTY_SEQ, GameTree

DEFAULT_VERTEX_CAP = 10**6
SIMPLEX_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TriangleWitness:
    """Four information sets certifying that a game is not triangle-free.

    ``i1, i2`` are Player 1 ordinals with equal parent sequences, ``j1, j2``
    Player 2 ordinals with equal parent sequences, and the connections
    i1-j1, i2-j2, i1-j2 all hold.
    """

    i1: int
    i2: int
    j1: int
    j2: int
    labels: tuple[str, str, str, str]

    def __str__(self) -> str:
        a, b, c, d = self.labels
        return (
            f"infosets {a},{b} (Player 1) and {c},{d} (Player 2): "
            f"{a}~{c}, {b}~{d}, {a}~{d} all connected with matching parents"
        )


class NotTriangleFreeError(ValueError):
    def __init__(self, witness: TriangleWitness):
        super().__init__(f"game is not triangle-free: {witness}")
        self.witness = witness


class RankDichotomyError(AssertionError):
    """Internal check: both members of a connected pair claim rank > 1.

    This cannot happen in a triangle-free game; seeing it means the
    triangle-freeness check and the decomposition disagree."""


class VertexCapError(ValueError):
    pass


def find_triangle(tree: GameTree) -> TriangleWitness | None:
    """First triangle witness in deterministic scan order, or None.

    Scans connected infoset pairs (ascending ordinals).  A witness exists
    iff some connected pair has, within the sibling groups of its two parent
    sequences, more than one connection on each side.
    """
    for o1, o2 in tree.connected_pairs():
        s1 = tree.infoset_parent_seq(1, o1)
        s2 = tree.infoset_parent_seq(2, o2)
        siblings2 = tree.connected_with_parent(1, o1, s2)
        if len(siblings2) < 2:
            continue
        for j2 in siblings2:
            if j2 == o2 or tree.rank(2, j2, s1) < 2:
                continue
            i2 = next(
                o for o in tree.connected_with_parent(2, j2, s1) if o != o1
            )
            labels = (
                tree.infoset_label(1, o1),
                tree.infoset_label(1, i2),
                tree.infoset_label(2, o2),
                tree.infoset_label(2, j2),
            )
            return TriangleWitness(i1=o1, i2=i2, j1=o2, j2=j2, labels=labels)
    return None


def is_triangle_free(tree: GameTree) -> bool:
    return find_triangle(tree) is None


# ---------------------------------------------------------------------------
# Program representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SimplexSplit:
    """Write ``size`` fresh entries as (scale * simplex point).

    ``start`` is the first fill position written; the scale is the sum of
    the entries at the ``source`` fill positions (all written earlier)."""

    start: int
    size: int
    source: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class SingletonSum:
    """Write one fresh entry as the sum of earlier entries."""

    target: int
    source: tuple[int, ...]


Step = SimplexSplit | SingletonSum


@dataclass(frozen=True)
class ScaledExtensionProgram:
    """Ordered scaled-extension steps filling every relevant pair once.

    Fill position 0 holds the constant-1 (empty, empty) entry.
    ``fill_to_coord`` maps fill positions to relevance-index coordinates.
    """

    index: RelevanceIndex
    steps: tuple[Step, ...]
    fill_to_coord: np.ndarray
    coord_to_fill: np.ndarray

    @property
    def splits(self) -> list[SimplexSplit]:
        return [s for s in self.steps if isinstance(s, SimplexSplit)]

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def split_sizes(self) -> list[int]:
        return [s.size for s in self.steps if isinstance(s, SimplexSplit)]

    def vertex_combination_count(self) -> int:
        n = 1
        for s in self.split_sizes():
            n *= s
        return n

    def compiled(self) -> "kernels.CompiledProgram":
        cached = getattr(self, "_compiled_cache", None)
        if cached is None:
            cached = kernels.compile_program(self)
            object.__setattr__(self, "_compiled_cache", cached)
        return cached

    def _plan_from_fill(self, fill_values: np.ndarray) -> CorrelationPlan:
        values = np.empty(len(self.index))
        values[self.fill_to_coord] = fill_values
        return CorrelationPlan(index=self.index, values=values)


class _Builder:
    def __init__(self, index: RelevanceIndex):
        self.index = index
        c0 = index.coord(EMPTY_SEQ, EMPTY_SEQ)
        self.fill_of: dict[int, int] = {c0: 0}
        self.fill_to_coord: list[int] = [c0]
        self.steps: list[Step] = []

    def _positions(self, pairs) -> tuple[int, ...]:
        return tuple(self.fill_of[self.index.position[p]] for p in pairs)

    def _register(self, pair) -> int:
        coord = self.index.position[pair]
        if coord in self.fill_of:
            raise AssertionError(f"coordinate filled twice: {pair}")
        pos = len(self.fill_to_coord)
        self.fill_of[coord] = pos
        self.fill_to_coord.append(coord)
        return pos

    def split(self, target_pairs, source_pairs) -> None:
        source = self._positions(source_pairs)
        start = len(self.fill_to_coord)
        for pair in target_pairs:
            self._register(pair)
        self.steps.append(
            SimplexSplit(start=start, size=len(target_pairs), source=source)
        )

    def sum(self, target_pair, source_pairs) -> None:
        source = self._positions(source_pairs)
        target = self._register(target_pair)
        self.steps.append(SingletonSum(target=target, source=source))

    def finish(self) -> ScaledExtensionProgram:
        if len(self.fill_to_coord) != len(self.index):
            raise AssertionError(
                f"decomposition filled {len(self.fill_to_coord)} of "
                f"{len(self.index)} coordinates"
            )
        fill_to_coord = np.array(self.fill_to_coord, dtype=np.int64)
        coord_to_fill = np.empty_like(fill_to_coord)
        coord_to_fill[fill_to_coord] = np.arange(len(fill_to_coord), dtype=np.int64)
        return ScaledExtensionProgram(
            index=self.index,
            steps=tuple(self.steps),
            fill_to_coord=fill_to_coord,
            coord_to_fill=coord_to_fill,
        )


# ---------------------------------------------------------------------------
# Decomposition algorithm
# ---------------------------------------------------------------------------


class _TreeView:
    """Raw references to the tree's derived index for the hot recursion."""

    __slots__ = (
        "tree",
        "conn",
        "by_parent1",
        "by_parent2",
        "conn_wp1",
        "conn_wp2",
        "rank1",
        "rank2",
        "seq_if1",
        "seq_if2",
        "first1",
        "first2",
        "n_act1",
        "n_act2",
    )

    def __init__(self, tree: GameTree):
        tree._build_index()
        self.tree = tree
        self.conn = tree._conn
        self.by_parent1 = tree._by_parent[1]
        self.by_parent2 = tree._by_parent[2]
        self.conn_wp1 = tree._conn_by_parent[1]
        self.conn_wp2 = tree._conn_by_parent[2]
        self.rank1 = tree._rank_of[1]
        self.rank2 = tree._rank_of[2]
        self.seq_if1 = tree._seq_infoset[1]
        self.seq_if2 = tree._seq_infoset[2]
        self.first1 = tree._first_seq[1]
        self.first2 = tree._first_seq[2]
        self.n_act1 = [len(r.actions) for r in tree._infosets[1]]
        self.n_act2 = [len(r.actions) for r in tree._infosets[2]]

    def seqs1(self, o: int) -> range:
        start = self.first1[o]
        return range(start, start + self.n_act1[o])

    def seqs2(self, o: int) -> range:
        start = self.first2[o]
        return range(start, start + self.n_act2[o])


def decompose(tree: GameTree, index: RelevanceIndex | None = None) -> ScaledExtensionProgram:
    """Compute the scaled-extension program of a triangle-free game.

    Raises :class:`NotTriangleFreeError` otherwise.  Runtime is linear in
    the number of relevant sequence pairs.
    """
    witness = find_triangle(tree)
    if witness is not None:
        raise NotTriangleFreeError(witness)
    if index is None:
        index = build_relevance_index(tree)
    builder = _Builder(index)
    _decompose_pair(_TreeView(tree), builder, EMPTY_SEQ, EMPTY_SEQ)
    return builder.finish()


def _decompose_pair(tv: _TreeView, b: _Builder, s1: int, s2: int) -> None:
    """Fill every relevant pair strictly below (s1, s2)."""
    conn = tv.conn
    if2 = tv.seq_if2[s2] if s2 != EMPTY_SEQ else -1
    if1 = tv.seq_if1[s1] if s1 != EMPTY_SEQ else -1
    group1 = [
        o
        for o in tv.by_parent1.get(s1, ())
        if if2 < 0 or (o, if2) in conn
    ]
    group2 = [
        o
        for o in tv.by_parent2.get(s2, ())
        if if1 < 0 or (if1, o) in conn
    ]

    branch: list[tuple[int, int]] = []
    chosen: set[tuple[int, int]] = set()

    def mark(player: int, o: int) -> None:
        key = (player, o)
        if key not in chosen:
            chosen.add(key)
            branch.append(key)

    for o in group1:
        if tv.rank1[o].get(s2, 0) == 0:
            mark(1, o)
    for o in group2:
        if tv.rank2[o].get(s1, 0) == 0:
            mark(2, o)
    # A partner of o1 with parent s2 is automatically relevant to s1 (they
    # share a root path through s1's last action), so it is in group2.
    for o1 in group1:
        r1 = tv.rank1[o1].get(s2, 0)
        for o2 in tv.conn_wp1[o1].get(s2, ()):
            r2 = tv.rank2[o2].get(s1, 0)
            if r1 > 1 and r2 > 1:
                tree = tv.tree
                raise RankDichotomyError(
                    f"connected infosets {tree.infoset_label(1, o1)!r} and "
                    f"{tree.infoset_label(2, o2)!r} both have rank > 1 at "
                    f"({tree.seq_label(1, s1)},{tree.seq_label(2, s2)})"
                )
            if r1 >= r2:
                mark(1, o1)
            else:
                mark(2, o2)

    for player, o in branch:
        if player == 1:
            _branch_p1(tv, b, s1, s2, o)
        else:
            _branch_p2(tv, b, s1, s2, o)


def _branch_p1(tv: _TreeView, b: _Builder, s1: int, s2: int, o: int) -> None:
    seqs = tv.seqs1(o)
    b.split([(s, s2) for s in seqs], [(s1, s2)])
    for s in seqs:
        _decompose_pair(tv, b, s, s2)
    # The infoset's sibling partners on the other side have rank 1 here, so
    # their row entries for s1 are determined: sum this infoset's column.
    for o2 in tv.conn_wp1[o].get(s2, ()):
        for t in tv.seqs2(o2):
            b.sum((s1, t), [(s, t) for s in seqs])
            _fill_row(tv, b, s1, t, o)


def _branch_p2(tv: _TreeView, b: _Builder, s1: int, s2: int, o: int) -> None:
    seqs = tv.seqs2(o)
    b.split([(s1, s) for s in seqs], [(s1, s2)])
    for s in seqs:
        _decompose_pair(tv, b, s1, s)
    for o1 in tv.conn_wp2[o].get(s1, ()):
        for t in tv.seqs1(o1):
            b.sum((t, s2), [(t, s) for s in seqs])
            _fill_col(tv, b, t, s2, o)


def _fill_row(tv: _TreeView, b: _Builder, s1: int, s2: int, o1: int) -> None:
    """Extend row s1 below column s2; o1 is the Player 1 infoset whose
    column block is already complete.  Deeper Player 2 infosets connected to
    o1 yield sums; unconnected ones split freely."""
    conn = tv.conn
    if1 = tv.seq_if1[s1] if s1 != EMPTY_SEQ else -1
    for o2 in tv.by_parent2.get(s2, ()):
        if if1 >= 0 and (if1, o2) not in conn:
            continue
        seqs2 = tv.seqs2(o2)
        if (o1, o2) in conn:
            seqs1 = tv.seqs1(o1)
            for t in seqs2:
                b.sum((s1, t), [(s, t) for s in seqs1])
        else:
            b.split([(s1, t) for t in seqs2], [(s1, s2)])
        for t in seqs2:
            _fill_row(tv, b, s1, t, o1)


def _fill_col(tv: _TreeView, b: _Builder, s1: int, s2: int, o2: int) -> None:
    conn = tv.conn
    if2 = tv.seq_if2[s2] if s2 != EMPTY_SEQ else -1
    for o1 in tv.by_parent1.get(s1, ()):
        if if2 >= 0 and (o1, if2) not in conn:
            continue
        seqs1 = tv.seqs1(o1)
        if (o1, o2) in conn:
            seqs2 = tv.seqs2(o2)
            for t in seqs1:
                b.sum((t, s2), [(t, s) for s in seqs2])
        else:
            b.split([(t, s2) for t in seqs1], [(s1, s2)])
        for t in seqs1:
            _fill_col(tv, b, t, s2, o2)


# ---------------------------------------------------------------------------
# Program execution
# ---------------------------------------------------------------------------


def validate_inputs(program: ScaledExtensionProgram, inputs: list[np.ndarray]) -> np.ndarray:
    """Check one simplex point per split step and return them flattened."""
    splits = program.splits
    if len(inputs) != len(splits):
        raise ValueError(f"expected {len(splits)} simplex inputs, got {len(inputs)}")
    for k, (step, x) in enumerate(zip(splits, inputs)):
        if np.shape(x) != (step.size,):
            raise ValueError(
                f"input {k} has shape {np.shape(x)}, step expects ({step.size},)"
            )
    if not splits:
        return np.zeros(0)
    flat = np.concatenate([np.asarray(x, dtype=np.float64) for x in inputs])
    offsets = program.compiled().split_in_start
    bad = np.flatnonzero(flat < 0.0)
    if len(bad):
        k = int(np.searchsorted(offsets, bad[0], side="right")) - 1
        raise ValueError(f"input {k} has a negative entry")
    sums = np.add.reduceat(flat, offsets[:-1])
    off = np.flatnonzero(np.abs(sums - 1.0) > SIMPLEX_SUM_TOL)
    if len(off):
        k = int(off[0])
        raise ValueError(f"input {k} sums to {sums[k]!r}, not 1")
    return flat


def evaluate(program: ScaledExtensionProgram, inputs: list[np.ndarray]) -> CorrelationPlan:
    """Run the program on one simplex point per split step."""
    flat = validate_inputs(program, inputs)
    out = kernels.forward(program.compiled(), flat)
    return program._plan_from_fill(out)


def sample(program: ScaledExtensionProgram, seed: int) -> CorrelationPlan:
    """Evaluate at inputs drawn uniformly from each split's simplex.

    Uses the gamma construction of the flat Dirichlet, drawn in one batch
    across all splits: deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    compiled = program.compiled()
    gammas = rng.standard_gamma(1.0, size=compiled.n_inputs)
    offsets = compiled.split_in_start
    if compiled.n_inputs:
        sums = np.add.reduceat(gammas, offsets[:-1])
        flat = gammas / np.repeat(sums, np.diff(offsets))
    else:
        flat = gammas
    inputs = [
        flat[offsets[k] : offsets[k + 1]] for k in range(len(offsets) - 1)
    ]
    return evaluate(program, inputs)


def evaluate_vertex(program: ScaledExtensionProgram, choices) -> CorrelationPlan:
    """Evaluate at one canonical-basis vertex per split step."""
    splits = program.splits
    choices = np.asarray(choices, dtype=np.int64)
    if choices.shape != (len(splits),):
        raise ValueError(f"expected {len(splits)} vertex choices")
    for k, step in enumerate(splits):
        if not 0 <= choices[k] < step.size:
            raise ValueError(f"choice {k} out of range")
    out = kernels.forward_vertex(program.compiled(), choices)
    return program._plan_from_fill(out)


def sample_vertex(program: ScaledExtensionProgram, seed: int) -> CorrelationPlan:
    """Evaluate at a uniformly random vertex combination."""
    rng = np.random.default_rng(seed)
    choices = np.array(
        [rng.integers(0, step.size) for step in program.splits], dtype=np.int64
    )
    return evaluate_vertex(program, choices)


def deterministic_points(
    program: ScaledExtensionProgram, cap: int = DEFAULT_VERTEX_CAP
) -> list[CorrelationPlan]:
    """All distinct program outputs over vertex-input combinations.

    A split whose scale evaluates to zero writes zeros whatever vertex is
    chosen, so only one choice is explored for it; the set of outputs is
    unchanged and the enumeration stays proportional to the number of
    distinct support profiles.  ``cap`` bounds the combinations actually
    evaluated (after that pruning).

    Every output of a program built from a triangle-free game has exact
    {0,1} entries; this is asserted.  Results are deduplicated exactly and
    returned sorted by their bit patterns."""
    # Cheap refusals before any enumeration work: the raw combination
    # product bounds the pruned count, and so does the reduced-plan pair
    # count in every observed program (support profiles select one plan
    # per player).  Only when both bounds blow the cap do we refuse
    # outright; the in-loop counter below still guards the enumeration.
    if program.vertex_combination_count() > cap:
        tree = program.index.tree
        if tree.count_plans(1) * tree.count_plans(2) > cap:
            raise VertexCapError(
                f"vertex enumeration would exceed the cap {cap}"
            )
    steps = program.steps
    v = np.zeros(len(program.index))
    v[0] = 1.0
    seen: dict[bytes, np.ndarray] = {}
    leaves = 0
    # Depth-first over the choices of positive-scale splits.  Re-running the
    # tail of the step list after a backtrack is sound because each position
    # is written once, in step order, before anything reads it.
    frames: list[list] = []  # [step index, next choice, scale]
    i = 0
    while True:
        while i < len(steps):
            step = steps[i]
            scale = sum(v[p] for p in step.source)
            if isinstance(step, SimplexSplit):
                v[step.start : step.start + step.size] = 0.0
                v[step.start] = scale
                if scale != 0.0 and step.size > 1:
                    frames.append([i, 1, scale])
            else:
                v[step.target] = scale
            i += 1
        leaves += 1
        if leaves > cap:
            raise VertexCapError(
                f"more than {cap} pruned vertex combinations; raise the cap"
            )
        values = np.empty(len(program.index))
        values[program.fill_to_coord] = v
        if not np.all((values == 0.0) | (values == 1.0)):
            raise AssertionError("vertex evaluation produced a non-binary entry")
        key = values.tobytes()
        if key not in seen:
            seen[key] = values
        while frames:
            fi, choice, scale = frames[-1]
            step = steps[fi]
            if choice >= step.size:
                frames.pop()
                continue
            v[step.start : step.start + step.size] = 0.0
            v[step.start + choice] = scale
            frames[-1][1] += 1
            i = fi + 1
            break
        else:
            break
    plans = [
        CorrelationPlan(index=program.index, values=vals)
        for vals in sorted(seen.values(), key=lambda a: a.tobytes())
    ]
    return plans


def dump_program(program: ScaledExtensionProgram) -> str:
    """Deterministic text dump, one step per line."""
    index = program.index

    def coord_label(pos: int) -> str:
        return index.pair_label(int(program.fill_to_coord[pos]))

    def form(source: tuple[int, ...]) -> str:
        return "+".join(f"v{coord_label(p)}" for p in source)

    lines = []
    for step in program.steps:
        if isinstance(step, SimplexSplit):
            targets = " ".join(
                coord_label(p) for p in range(step.start, step.start + step.size)
            )
            lines.append(f"split {form(step.source)} -> {targets}")
        else:
            lines.append(f"sum {form(step.source)} -> {coord_label(step.target)}")
    return "\n".join(lines) + "\n"
