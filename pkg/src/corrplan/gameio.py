"""Game construction and serialization.

The text format is line oriented (UTF-8, ``#`` starts a comment):

    game "<name>"
    chance <id> parent=<id|-> action=<label|-> outcomes=<label:prob,...>
    decision <id> parent=<id> action=<label|-> player=<1|2> infoset=<label> actions=<label,...>
    terminal <id> parent=<id> action=<label> payoffs=<u1>,<u2>

Nodes appear in pre-order; ``parent=-`` only for the root.  Parsing
validates the tree fully, including perfect recall, and round-trips
losslessly with :func:`serialize_efg`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .tree import (
    CHANCE,
    DECISION,
    TERMINAL,
    GameStructureError,
    GameTree,
    Node,
    TreeBuilder,
    build_tree,
)

BUILTIN_NAMES = ("EX1", "EX2", "EX3")

GOOFSPIEL_MIN_RANKS = 2
GOOFSPIEL_MAX_RANKS = 6


class EfgSyntaxError(ValueError):
    """Malformed input text; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class GoofspielParams:
    """Limited-information Goofspiel configuration.

    Only the ``ranks`` count varies; the tie rule (tied prizes are
    discarded) and the observation rule (players learn win/lose/tie, never
    the opposing bid) are fixed and validated as such.
    """

    ranks: int
    tie_rule: str = "discard"
    observation_rule: str = "winner-only"

    def __post_init__(self):
        if not (GOOFSPIEL_MIN_RANKS <= self.ranks <= GOOFSPIEL_MAX_RANKS):
            raise ValueError(
                f"ranks must be between {GOOFSPIEL_MIN_RANKS} and "
                f"{GOOFSPIEL_MAX_RANKS}, got {self.ranks}"
            )
        if self.tie_rule != "discard":
            raise ValueError("only the 'discard' tie rule is supported")
        if self.observation_rule != "winner-only":
            raise ValueError("only the 'winner-only' observation rule is supported")


def _fmt_float(x: float) -> str:
    return repr(float(x))


def serialize_efg(tree: GameTree) -> str:
    """Render a tree in the line format above (pre-order, deterministic)."""
    lines = [f'game "{tree.name}"']
    for nid, node in enumerate(tree.nodes):
        parent = "-" if node.parent == -1 else f"n{node.parent}"
        action = node.action if node.action is not None else "-"
        if node.kind == CHANCE:
            outcomes = ",".join(
                f"{lab}:{_fmt_float(p)}" for lab, p in zip(node.labels, node.probs)
            )
            lines.append(f"chance n{nid} parent={parent} action={action} outcomes={outcomes}")
        elif node.kind == DECISION:
            acts = ",".join(node.labels)
            lines.append(
                f"decision n{nid} parent={parent} action={action} "
                f"player={node.player} infoset={node.infoset} actions={acts}"
            )
        else:
            u1, u2 = node.payoffs
            lines.append(
                f"terminal n{nid} parent={parent} action={action} "
                f"payoffs={_fmt_float(u1)},{_fmt_float(u2)}"
            )
    return "\n".join(lines) + "\n"


def _parse_fields(parts: list[str], lineno: int) -> dict[str, str]:
    fields = {}
    for part in parts:
        if "=" not in part:
            raise EfgSyntaxError(lineno, f"expected key=value, got {part!r}")
        key, _, value = part.partition("=")
        if key in fields:
            raise EfgSyntaxError(lineno, f"duplicate field {key!r}")
        fields[key] = value
    return fields


def _require(fields: dict[str, str], keys: tuple[str, ...], lineno: int) -> None:
    for key in keys:
        if key not in fields:
            raise EfgSyntaxError(lineno, f"missing field {key!r}")
    extra = set(fields) - set(keys)
    if extra:
        raise EfgSyntaxError(lineno, f"unexpected fields {sorted(extra)}")


def parse_efg(text: str) -> GameTree:
    """Parse the text format; returns a fully validated tree.

    Raises :class:`EfgSyntaxError` for grammar problems and
    :class:`~corrplan.tree.GameStructureError` (or its perfect-recall
    subclass) for semantic ones.
    """
    name = "game"
    raw_nodes: list[dict] = []
    ids: dict[str, int] = {}
    pending_children: dict[int, list[tuple[str, int]]] = {}

    lineno = 0
    saw_game = False
    for raw in text.splitlines():
        lineno += 1
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "game":
            rest = line[len("game") :].strip()
            if not (rest.startswith('"') and rest.endswith('"') and len(rest) >= 2):
                raise EfgSyntaxError(lineno, "game name must be double-quoted")
            name = rest[1:-1]
            saw_game = True
            continue
        if kind not in (CHANCE, DECISION, TERMINAL):
            raise EfgSyntaxError(lineno, f"unknown record {kind!r}")
        if len(parts) < 2:
            raise EfgSyntaxError(lineno, "missing node id")
        node_id = parts[1]
        if node_id in ids:
            raise EfgSyntaxError(lineno, f"duplicate node id {node_id!r}")
        fields = _parse_fields(parts[2:], lineno)

        if kind == CHANCE:
            _require(fields, ("parent", "action", "outcomes"), lineno)
        elif kind == DECISION:
            _require(
                fields, ("parent", "action", "player", "infoset", "actions"), lineno
            )
        else:
            _require(fields, ("parent", "action", "payoffs"), lineno)

        parent_id = fields["parent"]
        if parent_id == "-":
            parent = -1
            if raw_nodes:
                raise EfgSyntaxError(lineno, "parent=- is only allowed for the root")
            if fields["action"] != "-":
                raise EfgSyntaxError(lineno, "the root cannot carry an action")
        else:
            if parent_id not in ids:
                raise EfgSyntaxError(
                    lineno, f"parent {parent_id!r} not defined yet (pre-order required)"
                )
            parent = ids[parent_id]
            if fields["action"] == "-":
                raise EfgSyntaxError(lineno, "non-root node needs action=<label>")
        action = None if fields["action"] == "-" else fields["action"]

        nid = len(raw_nodes)
        ids[node_id] = nid
        if parent >= 0:
            pending_children.setdefault(parent, []).append((action, nid))

        rec: dict = {"kind": kind, "parent": parent, "action": action}
        if kind == CHANCE:
            outcome_labels, probs = [], []
            if fields["outcomes"]:
                for item in fields["outcomes"].split(","):
                    lab, colon, prob = item.rpartition(":")
                    if not colon:
                        raise EfgSyntaxError(
                            lineno, f"outcome {item!r} must be label:probability"
                        )
                    try:
                        probs.append(float(prob))
                    except ValueError:
                        raise EfgSyntaxError(lineno, f"bad probability {prob!r}")
                    outcome_labels.append(lab)
            rec["outcome_labels"] = outcome_labels
            rec["probs"] = probs
        elif kind == DECISION:
            try:
                player = int(fields["player"])
            except ValueError:
                raise EfgSyntaxError(lineno, f"bad player {fields['player']!r}")
            rec["player"] = player
            rec["infoset"] = fields["infoset"]
            rec["action_labels"] = fields["actions"].split(",") if fields["actions"] else []
        else:
            try:
                u1_s, u2_s = fields["payoffs"].split(",")
                rec["payoffs"] = (float(u1_s), float(u2_s))
            except ValueError:
                raise EfgSyntaxError(
                    lineno, f"payoffs must be <u1>,<u2>, got {fields['payoffs']!r}"
                )
        rec["lineno"] = lineno
        raw_nodes.append(rec)

    if not raw_nodes:
        raise EfgSyntaxError(lineno if saw_game else 1, "no nodes in document")

    nodes = []
    for nid, rec in enumerate(raw_nodes):
        children = pending_children.get(nid, [])
        child_labels = tuple(lab for lab, _ in children)
        child_ids = tuple(cid for _, cid in children)
        kind = rec["kind"]
        if kind == CHANCE:
            declared = tuple(rec["outcome_labels"])
            if child_labels != declared:
                raise GameStructureError(
                    f"line {rec['lineno']}: chance node children {child_labels} "
                    f"do not match declared outcomes {declared}"
                )
            nodes.append(
                Node(
                    kind=CHANCE,
                    parent=rec["parent"],
                    action=rec["action"],
                    children=child_ids,
                    labels=child_labels,
                    probs=tuple(rec["probs"]),
                )
            )
        elif kind == DECISION:
            declared = tuple(rec["action_labels"])
            if child_labels != declared:
                raise GameStructureError(
                    f"line {rec['lineno']}: decision node children {child_labels} "
                    f"do not match declared actions {declared}"
                )
            nodes.append(
                Node(
                    kind=DECISION,
                    parent=rec["parent"],
                    action=rec["action"],
                    children=child_ids,
                    labels=child_labels,
                    player=rec["player"],
                    infoset=rec["infoset"],
                )
            )
        else:
            if children:
                raise GameStructureError(
                    f"line {rec['lineno']}: terminal node has children"
                )
            nodes.append(
                Node(
                    kind=TERMINAL,
                    parent=rec["parent"],
                    action=rec["action"],
                    payoffs=rec["payoffs"],
                )
            )
    return build_tree(nodes, name=name)


# ---------------------------------------------------------------------------
# Built-in example games
# ---------------------------------------------------------------------------


def builtin(name: str) -> GameTree:
    """One of the three built-in example games.

    All three share the same 8-leaf tree: a fair two-outcome chance root,
    then Player 1 (observing chance, infosets A and B with actions 1-4),
    then Player 2.  They differ in what Player 2 observes:

    * ``EX1`` - Player 2 observes nothing: a single infoset C.
    * ``EX2`` - Player 2 observes the chance outcome only: infosets C, D.
    * ``EX3`` - Player 2 observes Player 1's move index but not chance:
      infoset C pools actions 1/3, infoset D pools actions 2/4.

    Payoffs are all zero; the games exist for their information structure.
    """
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin {name!r}; choose from {BUILTIN_NAMES}")

    if name == "EX1":
        p2_infosets = {"1": "C", "2": "C", "3": "C", "4": "C"}
        p2_actions = {"C": ("1", "2")}
    elif name == "EX2":
        p2_infosets = {"1": "C", "2": "C", "3": "D", "4": "D"}
        p2_actions = {"C": ("1", "2"), "D": ("3", "4")}
    else:
        p2_infosets = {"1": "C", "2": "D", "3": "C", "4": "D"}
        p2_actions = {"C": ("1", "2"), "D": ("3", "4")}

    b = TreeBuilder()
    root = b.chance()
    for outcome, infoset, acts in (("l", "A", ("1", "2")), ("r", "B", ("3", "4"))):
        d1 = b.decision(root, outcome, player=1, infoset=infoset)
        for act in acts:
            d2 = b.decision(d1, act, player=2, infoset=p2_infosets[act])
            for act2 in p2_actions[p2_infosets[act]]:
                b.terminal(d2, act2, (0.0, 0.0))
    b.set_probs(root, [0.5, 0.5])
    return b.finish(name=name)


# ---------------------------------------------------------------------------
# Goofspiel
# ---------------------------------------------------------------------------


def _outcome_char(own: int, other: int) -> str:
    if own > other:
        return "W"
    if own < other:
        return "L"
    return "T"


def goofspiel(params: GoofspielParams | int) -> GameTree:
    """Limited-information Goofspiel with ``ranks`` cards per deck.

    Each round a chance node publicly reveals one of the remaining prize
    cards (uniformly), Player 1 bids a card from hand, then Player 2 bids
    without seeing Player 1's bid.  Both players then observe only
    win/lose/tie.  Tied prizes are discarded.  Payoffs are the sums of
    prize values won.  The last round is still materialized as single-action
    decision nodes.

    Information-set labels encode exactly the acting player's view: the
    per-round (prize, own bid, outcome) triples plus the current prize.
    """
    if isinstance(params, int):
        params = GoofspielParams(ranks=params)
    k = params.ranks
    b = TreeBuilder()

    def view_label(player: int, rounds: tuple, own_bids: tuple, prize: int) -> str:
        parts = []
        for (p, b1, b2), own in zip(rounds, own_bids):
            other = b2 if player == 1 else b1
            parts.append(f"{p}{own}{_outcome_char(own, other)}")
        return f"{player}:" + ".".join(parts) + f"|{prize}"

    def payoffs(rounds: tuple) -> tuple[float, float]:
        u1 = sum(p for p, b1, b2 in rounds if b1 > b2)
        u2 = sum(p for p, b1, b2 in rounds if b2 > b1)
        return (float(u1), float(u2))

    def grow(parent: int, action: str | None, prizes: tuple, h1: tuple, h2: tuple, rounds: tuple):
        if not prizes:
            b.terminal(parent, action, payoffs(rounds))
            return
        node = b.chance(parent, action)
        b.set_probs(node, [1.0 / len(prizes)] * len(prizes))
        for prize in prizes:
            bids1 = view_label(1, rounds, tuple(r[1] for r in rounds), prize)
            d1 = b.decision(node, str(prize), player=1, infoset=bids1)
            for bid1 in h1:
                bids2 = view_label(2, rounds, tuple(r[2] for r in rounds), prize)
                d2 = b.decision(d1, str(bid1), player=2, infoset=bids2)
                for bid2 in h2:
                    grow(
                        d2,
                        str(bid2),
                        tuple(p for p in prizes if p != prize),
                        tuple(x for x in h1 if x != bid1),
                        tuple(x for x in h2 if x != bid2),
                        rounds + ((prize, bid1, bid2),),
                    )

    hand = tuple(range(1, k + 1))
    grow(-1, None, hand, hand, hand, ())
    return b.finish(name=f"goofspiel({k})")
