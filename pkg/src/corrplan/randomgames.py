"""Seeded random games for property testing.

Two families share one generator core; in both, each player observes their
own past actions and nothing about the opponent's, and information sets
pool all nodes with the same interleaved view (observed events in path
order), which guarantees perfect recall by construction.

* :func:`random_public_chance_game` - every chance outcome is observed by
  both players; all such games are triangle-free.
* :func:`random_private_chance_game` - chance outcomes are observed by
  Player 1 only and neither player sees opponent moves; Player 2's blindness
  makes distinct same-parent infosets impossible on their side, so these are
  triangle-free too, while exercising the decomposition beyond the
  public-chance family.
* :func:`random_mixed_observation_game` - Player 2 sees Player 1's moves
  but not chance; these games regularly contain triangles and exercise the
  witness reporting.
"""

from __future__ import annotations

import numpy as np

from .tree import GameTree, TreeBuilder


def _random_game(
    seed: int,
    chance_observers: tuple[int, ...],
    max_depth: int,
    max_actions: int,
    payoff_range: int,
    name: str,
    action_observers: dict[int, tuple[int, ...]] | None = None,
) -> GameTree:
    if action_observers is None:
        action_observers = {1: (1,), 2: (2,)}
    rng = np.random.default_rng(seed)
    b = TreeBuilder()
    # Nodes sharing an infoset must share an action list, so the branching
    # factor is drawn once per infoset label.
    action_counts: dict[str, int] = {}

    def view_label(player: int, view: tuple) -> str:
        return f"{player}:" + (".".join(view) if view else "root")

    def grow(parent: int, action: str | None, depth: int, views: dict[int, tuple]):
        if depth >= max_depth:
            kind = "terminal"
        else:
            kind = rng.choice(
                ["decision", "decision", "chance", "terminal"],
                p=[0.35, 0.35, 0.2, 0.1],
            )
        if kind == "terminal":
            u1 = int(rng.integers(-payoff_range, payoff_range + 1))
            u2 = int(rng.integers(-payoff_range, payoff_range + 1))
            b.terminal(parent, action, (float(u1), float(u2)))
            return
        if kind == "chance":
            n_act = int(rng.integers(2, max_actions + 1))
            weights = rng.integers(1, 5, size=n_act)
            total = int(weights.sum())
            node = b.chance(parent, action)
            for i in range(n_act):
                new_views = {
                    p: views[p] + (f"c{i}",) if p in chance_observers else views[p]
                    for p in (1, 2)
                }
                grow(node, f"c{i}", depth + 1, new_views)
            b.set_probs(node, [int(w) / total for w in weights])
        else:
            player = int(rng.integers(1, 3))
            label = view_label(player, views[player])
            n_act = action_counts.get(label)
            if n_act is None:
                n_act = int(rng.integers(2, max_actions + 1))
                action_counts[label] = n_act
            node = b.decision(parent, action, player=player, infoset=label)
            for i in range(n_act):
                new_views = {
                    p: views[p] + (f"a{player}.{i}",)
                    if p in action_observers[player]
                    else views[p]
                    for p in (1, 2)
                }
                grow(node, f"a{i}", depth + 1, new_views)

    grow(-1, None, 0, {1: (), 2: ()})
    return b.finish(name=name)


def random_public_chance_game(
    seed: int,
    max_depth: int = 4,
    max_actions: int = 3,
    payoff_range: int = 3,
) -> GameTree:
    """Random bounded-depth game whose chance outcomes both players see.

    Deterministic for a given seed.  Chance weights are small integer
    ratios (probabilities sum to 1 within float error); payoffs are small
    integers."""
    return _random_game(
        seed,
        chance_observers=(1, 2),
        max_depth=max_depth,
        max_actions=max_actions,
        payoff_range=payoff_range,
        name=f"random-public-chance-{seed}",
    )


def random_private_chance_game(
    seed: int,
    max_depth: int = 4,
    max_actions: int = 3,
    payoff_range: int = 3,
) -> GameTree:
    """Random bounded-depth game whose chance outcomes only Player 1 sees."""
    return _random_game(
        seed,
        chance_observers=(1,),
        max_depth=max_depth,
        max_actions=max_actions,
        payoff_range=payoff_range,
        name=f"random-private-chance-{seed}",
    )


def random_mixed_observation_game(
    seed: int,
    max_depth: int = 4,
    max_actions: int = 3,
    payoff_range: int = 3,
) -> GameTree:
    """Random game where Player 2 sees Player 1's moves but not chance.

    This observation pattern routinely produces triangles: Player 1's
    sibling infosets split on chance while Player 2's split on the observed
    move, and the cross connections overlap."""
    return _random_game(
        seed,
        chance_observers=(1,),
        max_depth=max_depth,
        max_actions=max_actions,
        payoff_range=payoff_range,
        name=f"random-mixed-observation-{seed}",
        action_observers={1: (1, 2), 2: (2,)},
    )
