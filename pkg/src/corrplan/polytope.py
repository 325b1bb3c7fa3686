"""The polytope of mass-conserving correlation plans.

A correlation plan is a nonnegative vector indexed by the relevant sequence
pairs of the two players.  The polytope is cut out by one normalization row
(the empty/empty entry equals 1) and, for every information set paired with
every relevant opponent sequence, a row forcing the entries of the
information set's actions to sum to the parent entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .tree import EMPTY_SEQ, GameTree

DEFAULT_MEMBERSHIP_TOL = 1e-9


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class RelevanceIndex:
    """Dense bijection between relevant sequence pairs and coordinates.

    Pairs are sorted by (Player 1 sequence, Player 2 sequence); coordinate 0
    is always the (empty, empty) pair.
    """

    tree: GameTree
    pairs: tuple[tuple[int, int], ...]
    position: dict[tuple[int, int], int]

    def __len__(self) -> int:
        return len(self.pairs)

    def coord(self, s1: int, s2: int) -> int:
        return self.position[(s1, s2)]

    def pair_label(self, coord: int) -> str:
        s1, s2 = self.pairs[coord]
        return f"({self.tree.seq_label(1, s1)},{self.tree.seq_label(2, s2)})"


def build_relevance_index(tree: GameTree) -> RelevanceIndex:
    """Enumerate all relevant sequence pairs of the tree."""
    pairs = [(EMPTY_SEQ, EMPTY_SEQ)]
    pairs += [(EMPTY_SEQ, s2) for s2 in range(1, tree.num_sequences(2))]
    pairs += [(s1, EMPTY_SEQ) for s1 in range(1, tree.num_sequences(1))]
    for o1, o2 in tree.connected_pairs():
        for s1 in tree.seqs_of_infoset(1, o1):
            for s2 in tree.seqs_of_infoset(2, o2):
                pairs.append((s1, s2))
    pairs.sort()
    position = {pair: i for i, pair in enumerate(pairs)}
    if len(position) != len(pairs):
        raise AssertionError("relevant pair enumerated twice")
    return RelevanceIndex(tree=tree, pairs=tuple(pairs), position=position)


@dataclass(frozen=True)
class CorrelationPlan:
    """A candidate point of the polytope: one real per relevant pair."""

    index: RelevanceIndex
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.index),):
            raise DimensionMismatchError(
                f"plan has {self.values.shape} values for {len(self.index)} pairs"
            )
        if not np.isfinite(self.values).all():
            raise ValueError("plan entries must be finite")

    def value_at(self, s1: int, s2: int) -> float:
        return float(self.values[self.index.coord(s1, s2)])

    def as_bits(self) -> tuple[int, ...]:
        """Exact integer view; only valid for {0,1} plans."""
        out = []
        for x in self.values:
            if x == 0.0:
                out.append(0)
            elif x == 1.0:
                out.append(1)
            else:
                raise ValueError(f"entry {x!r} is not exactly 0 or 1")
        return tuple(out)


@dataclass(frozen=True)
class ConstraintSystem:
    """Sparse equality rows over a relevance index, plus nonnegativity.

    Row 0 is the normalization row.  Then one row per (Player 1 infoset,
    relevant Player 2 sequence) in (infoset ordinal, sequence) order, then
    the symmetric Player 2 family.
    """

    index: RelevanceIndex
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    row_labels: tuple[tuple, ...]

    @property
    def num_rows(self) -> int:
        return self.matrix.shape[0]

    def residuals(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values - self.rhs


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    max_violation: float
    worst_row: tuple | None


@dataclass(frozen=True)
class LinearObjective:
    """Linear functional over a relevance index."""

    index: RelevanceIndex
    coefficients: np.ndarray
    sense: str = "max"

    def __post_init__(self):
        if self.coefficients.shape != (len(self.index),):
            raise DimensionMismatchError("objective dimension mismatch")
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")


def constraint_system(tree: GameTree, index: RelevanceIndex) -> ConstraintSystem:
    """Build the mass-conservation equality rows for the tree.

    Cached on the index: repeated calls for the same index are free."""
    cached = getattr(index, "_system_cache", None)
    if cached is not None:
        return cached
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    rhs: list[float] = []
    labels: list[tuple] = []

    def add_row(entries: list[tuple[int, float]], b: float, label: tuple) -> None:
        r = len(rhs)
        for c, v in entries:
            rows.append(r)
            cols.append(c)
            data.append(v)
        rhs.append(b)
        labels.append(label)

    add_row([(index.coord(EMPTY_SEQ, EMPTY_SEQ), 1.0)], 1.0, ("norm",))

    for player, opp in ((1, 2), (2, 1)):
        for rec in tree.infosets_of(player):
            seqs = list(tree.seqs_of_infoset(player, rec.ordinal))
            for opp_seq in range(tree.num_sequences(opp)):
                if not tree.seq_relevant_to_infoset(opp, opp_seq, rec.ordinal):
                    continue
                if player == 1:
                    entries = [(index.coord(s, opp_seq), 1.0) for s in seqs]
                    entries.append((index.coord(rec.parent_seq, opp_seq), -1.0))
                else:
                    entries = [(index.coord(opp_seq, s), 1.0) for s in seqs]
                    entries.append((index.coord(opp_seq, rec.parent_seq), -1.0))
                add_row(entries, 0.0, (f"p{player}", rec.ordinal, opp_seq))

    matrix = sparse.csr_matrix(
        (data, (rows, cols)), shape=(len(rhs), len(index)), dtype=np.float64
    )
    system = ConstraintSystem(
        index=index,
        matrix=matrix,
        rhs=np.array(rhs, dtype=np.float64),
        row_labels=tuple(labels),
    )
    object.__setattr__(index, "_system_cache", system)
    return system


def check_membership(
    plan: CorrelationPlan,
    system: ConstraintSystem,
    tol: float = DEFAULT_MEMBERSHIP_TOL,
) -> MembershipReport:
    """Check nonnegativity and all equality rows to absolute tolerance."""
    if plan.index is not system.index and plan.index.pairs != system.index.pairs:
        raise DimensionMismatchError("plan and system use different indices")
    values = plan.values
    neg = -values.min() if len(values) else 0.0
    worst: tuple | None = None
    max_violation = 0.0
    if neg > 0.0:
        max_violation = float(neg)
        worst = ("nonneg", int(values.argmin()))
    res = np.abs(system.residuals(values))
    if len(res):
        r = int(res.argmax())
        if res[r] > max_violation:
            max_violation = float(res[r])
            worst = system.row_labels[r]
    return MembershipReport(
        member=bool(max_violation <= tol),
        max_violation=max_violation,
        worst_row=worst,
    )


def payoff_objective(
    tree: GameTree, index: RelevanceIndex, w1: float, w2: float
) -> LinearObjective:
    """Expected weighted payoff as a linear functional of the plan.

    Each terminal contributes its chance probability times
    ``w1*u1 + w2*u2`` to the coordinate of its last (Player 1, Player 2)
    sequence pair; that pair is always relevant because both lie on one
    root path.
    """
    coeff = np.zeros(len(index))
    for nid, p, s1, s2 in tree.terminal_profiles():
        u1, u2 = tree.nodes[nid].payoffs
        coeff[index.coord(s1, s2)] += p * (w1 * u1 + w2 * u2)
    return LinearObjective(index=index, coefficients=coeff, sense="max")


# ---------------------------------------------------------------------------
# Plain-text LP documents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpDocument:
    """Line-oriented LP: one objective row, equality rows, nonnegative vars.

    Grammar (one record per line)::

        min|max <coef>*<var> ...
        eq <coef>*<var> ... = <rhs>
        var <name> >= 0
    """

    sense: str
    objective: tuple[tuple[float, str], ...]
    rows: tuple[tuple[tuple[tuple[float, str], ...], float], ...]
    variables: tuple[str, ...]


def _var_name(index: RelevanceIndex, coord: int) -> str:
    s1, s2 = index.pairs[coord]
    return f"vsf_{s1}_{s2}"


def lp_document(system: ConstraintSystem, objective: LinearObjective) -> LpDocument:
    if objective.index.pairs != system.index.pairs:
        raise DimensionMismatchError("objective and system use different indices")
    index = system.index
    obj = tuple(
        (float(c), _var_name(index, i))
        for i, c in enumerate(objective.coefficients)
        if c != 0.0
    )
    rows = []
    m = system.matrix.tocsr()
    for r in range(system.num_rows):
        lo, hi = m.indptr[r], m.indptr[r + 1]
        terms = tuple(
            (float(m.data[k]), _var_name(index, int(m.indices[k])))
            for k in range(lo, hi)
        )
        rows.append((terms, float(system.rhs[r])))
    variables = tuple(_var_name(index, i) for i in range(len(index)))
    return LpDocument(
        sense=objective.sense, objective=obj, rows=tuple(rows), variables=variables
    )


def serialize_lp(doc: LpDocument) -> str:
    def terms(ts) -> str:
        return " ".join(f"{repr(c)}*{v}" for c, v in ts)

    lines = [f"{doc.sense} {terms(doc.objective)}".rstrip()]
    for ts, rhs in doc.rows:
        lines.append(f"eq {terms(ts)} = {repr(rhs)}")
    for v in doc.variables:
        lines.append(f"var {v} >= 0")
    return "\n".join(lines) + "\n"


def parse_lp(text: str) -> LpDocument:
    """Re-parse the format emitted by :func:`serialize_lp`."""
    sense = None
    objective: tuple = ()
    rows = []
    variables = []

    def parse_terms(tokens: list[str]) -> tuple[tuple[float, str], ...]:
        out = []
        for tok in tokens:
            c, star, v = tok.partition("*")
            if not star:
                raise ValueError(f"bad term {tok!r}")
            out.append((float(c), v))
        return tuple(out)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head in ("min", "max"):
            if sense is not None:
                raise ValueError(f"line {lineno}: second objective row")
            sense = head
            objective = parse_terms(tokens[1:])
        elif head == "eq":
            if "=" not in tokens:
                raise ValueError(f"line {lineno}: equality row without '='")
            at = len(tokens) - 1 - tokens[::-1].index("=")
            rows.append((parse_terms(tokens[1:at]), float(tokens[at + 1])))
        elif head == "var":
            if tokens[2:] != [">=", "0"]:
                raise ValueError(f"line {lineno}: expected 'var <name> >= 0'")
            variables.append(tokens[1])
        else:
            raise ValueError(f"line {lineno}: unknown record {head!r}")
    if sense is None:
        raise ValueError("no objective row")
    return LpDocument(
        sense=sense, objective=objective, rows=tuple(rows), variables=tuple(variables)
    )


def export_lp(system: ConstraintSystem, objective: LinearObjective) -> str:
    """Standalone LP text for optimizing the objective over the polytope."""
    return serialize_lp(lp_document(system, objective))
