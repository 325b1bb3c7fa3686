import pytest

from corrplan.decomposition import decompose
from corrplan.gameio import builtin, goofspiel
from corrplan.polytope import build_relevance_index, constraint_system
from corrplan.tree import Node, build_tree


@pytest.fixture(scope="session")
def ex1():
    return builtin("EX1")


@pytest.fixture(scope="session")
def ex2():
    return builtin("EX2")


@pytest.fixture(scope="session")
def ex3():
    return builtin("EX3")


@pytest.fixture(scope="session")
def goof2():
    return goofspiel(2)


@pytest.fixture(scope="session")
def goof3():
    return goofspiel(3)


@pytest.fixture(scope="session")
def single_terminal():
    return build_tree(
        [Node(kind="terminal", parent=-1, action=None, payoffs=(0.0, 0.0))],
        name="leaf",
    )


def _bundle(tree):
    index = build_relevance_index(tree)
    return tree, index, decompose(tree, index), constraint_system(tree, index)


def expected_payoff_under_plans(tree, plan1, plan2):
    """Independent oracle: expected payoffs of a deterministic plan pair by
    a direct tree walk, weighting terminals by chance probabilities."""

    def walk(nid, prob):
        node = tree.nodes[nid]
        if node.kind == "terminal":
            return prob * node.payoffs[0], prob * node.payoffs[1]
        if node.kind == "chance":
            u1 = u2 = 0.0
            for cid, p in zip(node.children, node.probs):
                a, b = walk(cid, prob * p)
                u1 += a
                u2 += b
            return u1, u2
        plan = plan1 if node.player == 1 else plan2
        o = next(
            r.ordinal for r in tree.infosets_of(node.player) if r.label == node.infoset
        )
        choice = plan.action_at(o)
        if choice is None:
            return 0.0, 0.0
        return walk(node.children[choice], prob)

    return walk(0, 1.0)


@pytest.fixture(scope="session")
def payoff_oracle():
    return expected_payoff_under_plans


@pytest.fixture(scope="session")
def ex1_bundle(ex1):
    return _bundle(ex1)


@pytest.fixture(scope="session")
def ex2_bundle(ex2):
    return _bundle(ex2)


@pytest.fixture(scope="session")
def goof2_bundle(goof2):
    return _bundle(goof2)


@pytest.fixture(scope="session")
def goof3_bundle(goof3):
    return _bundle(goof3)
