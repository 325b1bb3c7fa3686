"""Two-player extensive-form game trees and their structural relations.

A :class:`GameTree` is an immutable tree of chance, decision, and terminal
nodes.  After construction it exposes the derived structure that the rest of
the package consumes: per-player information sets and sequences, the
cross-player connectedness relation, sequence-pair relevance, ranks, and
reduced-normal-form plan enumeration.

Players are numbered 1 and 2.  Sequences are represented as small integers
per player; index 0 is always the empty sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

CHANCE = "chance"
DECISION = "decision"
TERMINAL = "terminal"

EMPTY_SEQ = 0

PROB_TOL = 1e-12


class GameStructureError(ValueError):
    """A tree violates a structural invariant (bad probabilities, mixed
    infoset action lists, malformed links, ...)."""


class PerfectRecallError(GameStructureError):
    """A player forgets their own earlier observations or moves."""


class PlanCountError(ValueError):
    """Reduced-plan enumeration would exceed the configured cap."""


@dataclass(frozen=True, slots=True)
class Node:
    """One tree node.

    ``labels`` holds the outgoing edge labels (action labels for decision
    nodes, outcome labels for chance nodes) aligned with ``children``.
    """

    kind: str
    parent: int  # -1 for the root
    action: str | None  # edge label from the parent, None for the root
    children: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()
    player: int | None = None  # decision nodes only
    infoset: str | None = None  # decision nodes only
    probs: tuple[float, ...] = ()  # chance nodes only
    payoffs: tuple[float, float] | None = None  # terminal nodes only


@dataclass(frozen=True, slots=True)
class Infoset:
    """Information set of one player: label, dense ordinal, member nodes."""

    player: int
    ordinal: int
    label: str
    actions: tuple[str, ...]
    nodes: tuple[int, ...]
    parent_seq: int  # sequence index of the player's last own move above


@dataclass(frozen=True, slots=True)
class PerfectRecallReport:
    ok: bool
    infoset: str | None = None
    history_a: tuple | None = None
    history_b: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ReducedPlan:
    """Action choice for every own information set reachable under the plan.

    ``choices`` maps infoset ordinal to action index; unreachable infosets
    are absent.
    """

    player: int
    choices: tuple[tuple[int, int], ...]
    _lookup: dict = field(repr=False, compare=False, hash=False, default=None)

    def action_at(self, infoset_ordinal: int) -> int | None:
        if self._lookup is None:
            object.__setattr__(self, "_lookup", dict(self.choices))
        return self._lookup.get(infoset_ordinal)


class GameTree:
    """Validated two-player extensive-form game.

    Use :func:`build_tree` (or the builders in :mod:`corrplan.gameio`) to
    construct one.  Structural invariants are checked at construction time;
    perfect recall is checked by the callers that promise it (all builders
    and the parser do).  Instances are immutable after construction and safe
    to share across threads.
    """

    def __init__(self, nodes: list[Node], name: str = "game"):
        self.name = name
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.root = 0
        self._validate_structure()
        self._infoset_map: dict[str, list[int]] = self._group_infosets()
        self._index_built = False

    # -- structural validation -------------------------------------------

    def _validate_structure(self) -> None:
        if not self.nodes:
            raise GameStructureError("empty tree")
        if self.nodes[0].parent != -1:
            raise GameStructureError("node 0 must be the root (parent=-)")
        seen_child = set()
        for nid, node in enumerate(self.nodes):
            if nid > 0:
                if node.parent < 0 or node.parent >= nid:
                    raise GameStructureError(
                        f"node {nid}: parent must be an earlier node (pre-order)"
                    )
            if len(set(node.labels)) != len(node.labels):
                raise GameStructureError(f"node {nid}: duplicate edge labels")
            if len(node.labels) != len(node.children):
                raise GameStructureError(f"node {nid}: labels/children mismatch")
            for cid in node.children:
                if cid <= nid or cid >= len(self.nodes):
                    raise GameStructureError(f"node {nid}: bad child id {cid}")
                if self.nodes[cid].parent != nid:
                    raise GameStructureError(f"node {cid}: parent link mismatch")
                if cid in seen_child:
                    raise GameStructureError(f"node {cid} linked twice")
                seen_child.add(cid)
            if node.kind == DECISION:
                if node.player not in (1, 2):
                    raise GameStructureError(f"node {nid}: player must be 1 or 2")
                if not node.infoset:
                    raise GameStructureError(f"node {nid}: missing infoset label")
                if not node.children:
                    raise GameStructureError(f"node {nid}: decision without actions")
            elif node.kind == CHANCE:
                if len(node.probs) != len(node.children):
                    raise GameStructureError(f"node {nid}: probs/children mismatch")
                if any(p < 0 for p in node.probs):
                    raise GameStructureError(f"node {nid}: negative probability")
                total = sum(node.probs)
                if abs(total - 1.0) > PROB_TOL:
                    raise GameStructureError(
                        f"node {nid}: probabilities sum {total!r}"
                    )
            elif node.kind == TERMINAL:
                if node.children:
                    raise GameStructureError(f"node {nid}: terminal with children")
                if node.payoffs is None or len(node.payoffs) != 2:
                    raise GameStructureError(f"node {nid}: terminal needs payoffs")
            else:
                raise GameStructureError(f"node {nid}: unknown kind {node.kind!r}")
        n_linked = len(seen_child)
        if n_linked != len(self.nodes) - 1:
            raise GameStructureError("tree has unlinked nodes")

    def _group_infosets(self) -> dict[str, list[int]]:
        groups: dict[str, list[int]] = {}
        for nid, node in enumerate(self.nodes):
            if node.kind == DECISION:
                groups.setdefault(node.infoset, []).append(nid)
        for label, members in groups.items():
            first = self.nodes[members[0]]
            for nid in members[1:]:
                node = self.nodes[nid]
                if node.player != first.player:
                    raise GameStructureError(
                        f"infoset {label!r} mixes players {first.player} and {node.player}"
                    )
                if node.labels != first.labels:
                    raise GameStructureError(
                        f"infoset {label!r} has nodes with different action lists"
                    )
        return groups

    def same_structure(self, other: "GameTree") -> bool:
        """Exact structural equality: same name, nodes, links, labels,
        probabilities, and payoffs."""
        return self.name == other.name and self.nodes == other.nodes

    # -- paths and own histories -----------------------------------------

    def path_to(self, nid: int) -> list[int]:
        """Node ids from the root down to ``nid`` inclusive."""
        path = []
        while nid != -1:
            path.append(nid)
            nid = self.nodes[nid].parent
        path.reverse()
        return path

    def own_history(self, nid: int, player: int) -> tuple[tuple[str, str], ...]:
        """(infoset label, action label) pairs of ``player`` above ``nid``."""
        hist = []
        node = self.nodes[nid]
        while node.parent != -1:
            parent = self.nodes[node.parent]
            if parent.kind == DECISION and parent.player == player:
                hist.append((parent.infoset, node.action))
            node = parent
        hist.reverse()
        return tuple(hist)

    # -- derived index -----------------------------------------------------

    def _build_index(self) -> None:
        if self._index_built:
            return
        report = validate_perfect_recall(self)
        if not report.ok:
            raise PerfectRecallError(
                f"infoset {report.infoset!r} has divergent own histories "
                f"{report.history_a} vs {report.history_b}"
            )

        # Infoset ordinals follow first-node pre-order, per player.
        infosets: dict[int, list[Infoset]] = {1: [], 2: []}
        ordinal_of: dict[str, int] = {}
        order: dict[int, list[str]] = {1: [], 2: []}
        for nid, node in enumerate(self.nodes):
            if node.kind == DECISION and node.infoset not in ordinal_of:
                ordinal_of[node.infoset] = len(order[node.player])
                order[node.player].append(node.infoset)

        # Sequence indices: 0 is the empty sequence; each infoset contributes
        # one index per action, in infoset-ordinal then action order.
        seq_infoset: dict[int, list[int]] = {1: [-1], 2: [-1]}
        seq_action: dict[int, list[int]] = {1: [-1], 2: [-1]}
        first_seq: dict[int, list[int]] = {1: [], 2: []}
        for player in (1, 2):
            for label in order[player]:
                members = self._infoset_map[label]
                actions = self.nodes[members[0]].labels
                first_seq[player].append(len(seq_infoset[player]))
                o = ordinal_of[label]
                for a in range(len(actions)):
                    seq_infoset[player].append(o)
                    seq_action[player].append(a)

        def seq_of_pair(player: int, infoset_label: str, action_label: str) -> int:
            members = self._infoset_map[infoset_label]
            actions = self.nodes[members[0]].labels
            return (
                first_seq[player][ordinal_of[infoset_label]]
                + actions.index(action_label)
            )

        # Parent sequences from the shared own history of each infoset.
        records: dict[int, list[Infoset]] = {1: [], 2: []}
        parent_seq: dict[int, list[int]] = {1: [], 2: []}
        for player in (1, 2):
            for label in order[player]:
                members = self._infoset_map[label]
                hist = self.own_history(members[0], player)
                pseq = (
                    EMPTY_SEQ
                    if not hist
                    else seq_of_pair(player, hist[-1][0], hist[-1][1])
                )
                records[player].append(
                    Infoset(
                        player=player,
                        ordinal=ordinal_of[label],
                        label=label,
                        actions=self.nodes[members[0]].labels,
                        nodes=tuple(members),
                        parent_seq=pseq,
                    )
                )
                parent_seq[player].append(pseq)

        # Connectedness: walk the tree keeping the stack of (player, infoset
        # ordinal) pairs on the current path; a decision node is connected to
        # every opposite-player infoset above it.
        conn: set[tuple[int, int]] = set()

        def visit(nid: int, above: list[tuple[int, int]]) -> list[tuple[int, int]]:
            node = self.nodes[nid]
            if node.kind != DECISION:
                return above
            o = ordinal_of[node.infoset]
            for player, anc in above:
                if player != node.player:
                    pair = (anc, o) if node.player == 2 else (o, anc)
                    conn.add(pair)
            return above + [(node.player, o)]

        todo: list[tuple[int, list[tuple[int, int]]]] = [(self.root, [])]
        while todo:
            nid, above = todo.pop()
            below = visit(nid, above)
            for cid in self.nodes[nid].children:
                todo.append((cid, below))

        conn_of: dict[int, list[list[int]]] = {
            1: [[] for _ in records[1]],
            2: [[] for _ in records[2]],
        }
        for o1, o2 in sorted(conn):
            conn_of[1][o1].append(o2)
            conn_of[2][o2].append(o1)

        # Connected opponents grouped by their parent sequence (ascending
        # within each group); rank(I, sigma) is the group size.
        conn_by_parent: dict[int, list[dict[int, list[int]]]] = {1: [], 2: []}
        rank_of: dict[int, list[dict[int, int]]] = {1: [], 2: []}
        for player, opp in ((1, 2), (2, 1)):
            for o, partners in enumerate(conn_of[player]):
                groups: dict[int, list[int]] = {}
                for j in partners:
                    groups.setdefault(parent_seq[opp][j], []).append(j)
                conn_by_parent[player].append(groups)
                rank_of[player].append({ps: len(g) for ps, g in groups.items()})

        by_parent: dict[int, dict[int, list[int]]] = {1: {}, 2: {}}
        for player in (1, 2):
            for rec in records[player]:
                by_parent[player].setdefault(rec.parent_seq, []).append(rec.ordinal)

        self._infosets = records
        self._infoset_ordinal = ordinal_of
        self._seq_infoset = seq_infoset
        self._seq_action = seq_action
        self._first_seq = first_seq
        self._parent_seq = parent_seq
        self._conn = conn
        self._conn_of = conn_of
        self._conn_by_parent = conn_by_parent
        self._rank_of = rank_of
        self._by_parent = by_parent
        self._index_built = True

    # -- public structure API ----------------------------------------------

    def infosets_of(self, player: int) -> tuple[Infoset, ...]:
        self._build_index()
        return tuple(self._infosets[player])

    def infoset_count(self) -> int:
        self._build_index()
        return len(self._infosets[1]) + len(self._infosets[2])

    def num_sequences(self, player: int) -> int:
        self._build_index()
        return len(self._seq_infoset[player])

    def seq_parent(self, player: int, seq: int) -> int:
        """Parent sequence of ``seq``: the previous own sequence on its path."""
        self._build_index()
        if seq == EMPTY_SEQ:
            raise ValueError("the empty sequence has no parent")
        return self._parent_seq[player][self._seq_infoset[player][seq]]

    def seq_members(self, player: int, seq: int) -> tuple[int, int]:
        """(infoset ordinal, action index) of a non-empty sequence."""
        self._build_index()
        if seq == EMPTY_SEQ:
            raise ValueError("the empty sequence has no infoset")
        return self._seq_infoset[player][seq], self._seq_action[player][seq]

    def seqs_of_infoset(self, player: int, ordinal: int) -> range:
        """Sequence indices (I, a) for all actions a of infoset ``ordinal``."""
        self._build_index()
        start = self._first_seq[player][ordinal]
        return range(start, start + len(self._infosets[player][ordinal].actions))

    def seq_label(self, player: int, seq: int) -> str:
        if seq == EMPTY_SEQ:
            return "∅"
        o, a = self.seq_members(player, seq)
        rec = self._infosets[player][o]
        return f"{rec.label}:{rec.actions[a]}"

    def infosets_with_parent(self, player: int, seq: int) -> list[int]:
        """Ordinals of the player's infosets whose parent sequence is ``seq``."""
        self._build_index()
        return self._by_parent[player].get(seq, [])

    def infoset_parent_seq(self, player: int, ordinal: int) -> int:
        self._build_index()
        return self._parent_seq[player][ordinal]

    def infoset_label(self, player: int, ordinal: int) -> str:
        self._build_index()
        return self._infosets[player][ordinal].label

    def infoset_num_actions(self, player: int, ordinal: int) -> int:
        self._build_index()
        return len(self._infosets[player][ordinal].actions)

    def connected(self, o1: int, o2: int) -> bool:
        """Whether Player 1's infoset ``o1`` and Player 2's ``o2`` share a
        root path (a node of one is an ancestor of a node of the other)."""
        self._build_index()
        return (o1, o2) in self._conn

    def infosets_connected(self, a: Infoset, b: Infoset) -> bool:
        """Connectedness of two infoset records; the relation is only
        defined across players, so same-player queries are rejected."""
        if a.player == b.player:
            raise ValueError("connectedness is defined between opposite players")
        if a.player == 1:
            return self.connected(a.ordinal, b.ordinal)
        return self.connected(b.ordinal, a.ordinal)

    def connected_ordinals(self, player: int, ordinal: int) -> list[int]:
        """Connected opponent infoset ordinals, ascending."""
        self._build_index()
        return self._conn_of[player][ordinal]

    def connected_with_parent(self, player: int, ordinal: int, opp_seq: int) -> list[int]:
        """Connected opponent infosets whose parent sequence is ``opp_seq``
        (ascending); its length equals ``rank(player, ordinal, opp_seq)``."""
        self._build_index()
        return self._conn_by_parent[player][ordinal].get(opp_seq, [])

    def connected_pairs(self) -> list[tuple[int, int]]:
        """All connected (Player 1 ordinal, Player 2 ordinal) pairs, sorted."""
        self._build_index()
        return sorted(self._conn)

    def rank(self, player: int, ordinal: int, opp_seq: int) -> int:
        """Number of opponent infosets with parent sequence ``opp_seq``
        connected to the given infoset."""
        self._build_index()
        return self._rank_of[player][ordinal].get(opp_seq, 0)

    def seq_relevant_to_infoset(self, player: int, seq: int, opp_ordinal: int) -> bool:
        """Whether ``seq`` (of ``player``) is relevant for the opponent
        infoset ``opp_ordinal``: empty, or in an infoset connected to it."""
        self._build_index()
        if seq == EMPTY_SEQ:
            return True
        o = self._seq_infoset[player][seq]
        pair = (o, opp_ordinal) if player == 1 else (opp_ordinal, o)
        return pair in self._conn

    def relevant(self, s1: int, s2: int) -> bool:
        """Relevance of the sequence pair (s1 of Player 1, s2 of Player 2)."""
        self._build_index()
        if s1 == EMPTY_SEQ or s2 == EMPTY_SEQ:
            return True
        return (self._seq_infoset[1][s1], self._seq_infoset[2][s2]) in self._conn

    def descends(self, player: int, seq: int, ancestor: int) -> bool:
        """Whether ``seq`` equals ``ancestor`` or lies below its action."""
        self._build_index()
        if ancestor == EMPTY_SEQ:
            return True
        s = seq
        while s != EMPTY_SEQ:
            if s == ancestor:
                return True
            s = self._parent_seq[player][self._seq_infoset[player][s]]
        return False

    # -- terminals ----------------------------------------------------------

    def terminal_profiles(self) -> list[tuple[int, float, int, int]]:
        """(node id, chance probability, last P1 sequence, last P2 sequence)
        for every terminal node."""
        self._build_index()
        out = []
        todo: list[tuple[int, float, int, int]] = [(self.root, 1.0, EMPTY_SEQ, EMPTY_SEQ)]
        while todo:
            nid, p, s1, s2 = todo.pop()
            node = self.nodes[nid]
            if node.kind == TERMINAL:
                out.append((nid, p, s1, s2))
            elif node.kind == CHANCE:
                for cid, prob in zip(node.children, node.probs):
                    todo.append((cid, p * prob, s1, s2))
            else:
                o = self._infoset_ordinal[node.infoset]
                base = self._first_seq[node.player][o]
                for a, cid in enumerate(node.children):
                    if node.player == 1:
                        todo.append((cid, p, base + a, s2))
                    else:
                        todo.append((cid, p, s1, base + a))
        out.sort()
        return out

    # -- reduced-normal-form plans ------------------------------------------

    def count_plans(self, player: int) -> int:
        """Number of reduced-normal-form plans of ``player``."""
        self._build_index()
        memo: dict[int, int] = {}

        def below(seq: int) -> int:
            if seq in memo:
                return memo[seq]
            total = 1
            for o in self.infosets_with_parent(player, seq):
                total *= sum(below(s) for s in self.seqs_of_infoset(player, o))
            memo[seq] = total
            return total

        return below(EMPTY_SEQ)

    def reduced_plans(self, player: int, cap: int = 10**6) -> list[ReducedPlan]:
        """Enumerate all reduced-normal-form plans of ``player``.

        Refuses with :class:`PlanCountError` when the count exceeds ``cap``.
        """
        self._build_index()
        n = self.count_plans(player)
        if n > cap:
            raise PlanCountError(
                f"player {player} has {n} reduced plans, above the cap {cap}"
            )

        def below(seq: int) -> list[tuple[tuple[int, int], ...]]:
            partials: list[tuple[tuple[int, int], ...]] = [()]
            for o in self.infosets_with_parent(player, seq):
                variants = []
                for a, s in enumerate(self.seqs_of_infoset(player, o)):
                    for rest in below(s):
                        variants.append(((o, a),) + rest)
                partials = [
                    p + v for p in partials for v in variants
                ]
            return partials

        plans = [
            ReducedPlan(player=player, choices=tuple(sorted(ch)))
            for ch in below(EMPTY_SEQ)
        ]
        return plans

    def plan_prescribes(self, plan: ReducedPlan, seq: int) -> bool:
        """Whether the plan plays every own action on the path to ``seq``
        (and ``seq``'s own action itself).  Always true for the empty one."""
        self._build_index()
        player = plan.player
        s = seq
        while s != EMPTY_SEQ:
            o, a = self.seq_members(player, s)
            if plan.action_at(o) != a:
                return False
            s = self._parent_seq[player][o]
        return True

    def prescribed_mask(self, plan: ReducedPlan) -> list[bool]:
        """``mask[s]`` is True iff the plan prescribes sequence ``s``."""
        self._build_index()
        player = plan.player
        n = self.num_sequences(player)
        mask = [False] * n
        mask[EMPTY_SEQ] = True
        for s in range(1, n):
            o, a = self._seq_infoset[player][s], self._seq_action[player][s]
            mask[s] = plan.action_at(o) == a and mask[self._parent_seq[player][o]]
        return mask


def validate_perfect_recall(tree: GameTree) -> PerfectRecallReport:
    """Check that within each information set all nodes carry the same
    own-player (infoset, action) history.  Chance and opponent moves are
    ignored.  Returns the offending infoset and two divergent histories on
    failure."""
    for label, members in tree._infoset_map.items():
        player = tree.nodes[members[0]].player
        ref = tree.own_history(members[0], player)
        for nid in members[1:]:
            hist = tree.own_history(nid, player)
            if hist != ref:
                return PerfectRecallReport(
                    ok=False, infoset=label, history_a=ref, history_b=hist
                )
    return PerfectRecallReport(ok=True)


def build_tree(nodes: list[Node], name: str = "game") -> GameTree:
    """Construct and fully validate a tree (including perfect recall).

    The derived index is built eagerly so the returned tree is immutable
    and safe for concurrent read-only use."""
    tree = GameTree(nodes, name=name)
    report = validate_perfect_recall(tree)
    if not report.ok:
        raise PerfectRecallError(
            f"infoset {report.infoset!r} has divergent own histories: "
            f"{report.history_a} vs {report.history_b}"
        )
    tree._build_index()
    return tree


class TreeBuilder:
    """Incremental pre-order construction of a node list."""

    def __init__(self):
        self._nodes: list[dict] = []

    def _add(self, parent: int, action: str | None, **kw) -> int:
        nid = len(self._nodes)
        if parent >= 0:
            pn = self._nodes[parent]
            pn["children"] = pn["children"] + (nid,)
            pn["labels"] = pn["labels"] + (action,)
        self._nodes.append(
            dict(parent=parent, action=action, children=(), labels=(), **kw)
        )
        return nid

    def chance(self, parent: int = -1, action: str | None = None) -> int:
        return self._add(parent, action, kind=CHANCE)

    def decision(
        self, parent: int, action: str | None, player: int, infoset: str
    ) -> int:
        return self._add(parent, action, kind=DECISION, player=player, infoset=infoset)

    def terminal(
        self, parent: int, action: str, payoffs: tuple[float, float]
    ) -> int:
        return self._add(
            parent, action, kind=TERMINAL, payoffs=(float(payoffs[0]), float(payoffs[1]))
        )

    def set_probs(self, nid: int, probs: list[float]) -> None:
        self._nodes[nid]["probs"] = tuple(probs)

    def finish(self, name: str = "game") -> GameTree:
        nodes = []
        for raw in self._nodes:
            kind = raw.pop("kind")
            if kind == CHANCE and "probs" not in raw:
                raw["probs"] = ()
            nodes.append(Node(kind=kind, **raw))
        return build_tree(nodes, name=name)
