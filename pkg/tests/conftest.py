"""Shared fixtures and brute-force oracles.

The oracles here walk the tree graph directly (edge deletion + BFS) and share
no code with the library's mask-based routines.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction

import pytest

from mtree import WeightedTree, parse_newick

T5_NEWICK = "((1:1,2:1):1,3:1,(4:1,5:1):1);"
STAR5_NEWICK = "(1:1,2:1,3:1,4:1,5:1);"

# w([V]) of T5 for every 3-subset, computed by hand from the drawing
T5_TABLE = {
    "123": 4, "124": 5, "125": 5, "134": 5, "135": 5,
    "145": 5, "234": 5, "235": 5, "245": 5, "345": 4,
}


@pytest.fixture
def t5():
    return parse_newick(T5_NEWICK)


@pytest.fixture
def star5():
    return parse_newick(STAR5_NEWICK)


def adjacency(tree: WeightedTree):
    adj = {v: {} for v in tree.vertices}
    for u, v, w in tree.edges():
        adj[u][v] = w
        adj[v][u] = w
    return adj


def component(adj, start, banned):
    """Vertices reachable from ``start`` without crossing edge ``banned``."""
    seen = {start}
    todo = deque([start])
    while todo:
        x = todo.popleft()
        for y in adj[x]:
            if frozenset((x, y)) == banned or y in seen:
                continue
            seen.add(y)
            todo.append(y)
    return seen


def leaf_labels(tree, verts):
    return {tree.label_of(v) for v in verts if tree.is_leaf(v)}


def brute_subtree_weight(tree: WeightedTree, leaves) -> Fraction:
    leaves = set(leaves)
    adj = adjacency(tree)
    total = 0
    for u, v, w in tree.edges():
        side = leaf_labels(tree, component(adj, u, frozenset((u, v))))
        if leaves & side and leaves - side:
            total += w
    return total


def brute_path_length(tree: WeightedTree, a: str, b: str):
    adj = adjacency(tree)
    start, goal = tree.leaf(a), tree.leaf(b)
    dist = {start: 0}
    todo = deque([start])
    while todo:
        x = todo.popleft()
        for y, w in adj[x].items():
            if y not in dist:
                dist[y] = dist[x] + w
                todo.append(y)
    return dist[goal]


def brute_splits(tree: WeightedTree):
    """{(frozenset side containing smallest label): weight} per edge."""
    adj = adjacency(tree)
    first = min(tree.labels)
    out = {}
    for u, v, w in tree.edges():
        side = leaf_labels(tree, component(adj, u, frozenset((u, v))))
        if first not in side:
            side = set(tree.labels) - side
        out[frozenset(side)] = w
    return out


def true_quartet(tree: WeightedTree, i, j, k, l) -> str:
    """'ij|kl', 'ik|jl', 'il|jk' or 'star', read off the split set."""
    for side in brute_splits(tree):
        for name, (a, b) in {
            "ij|kl": ((i, j), (k, l)),
            "ik|jl": ((i, k), (j, l)),
            "il|jk": ((i, l), (j, k)),
        }.items():
            if (set(a) <= side and not set(b) & side) or (set(b) <= side and not set(a) & side):
                return name
    return "star"


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
