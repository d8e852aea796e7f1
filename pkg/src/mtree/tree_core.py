"""Unrooted leaf-labelled trees with positive edge weights.

A :class:`WeightedTree` is immutable. Vertices are arbitrary hashable ids;
leaves (degree-1 vertices) carry distinct string labels and internal vertices
carry none. Degree-2 vertices are forbidden, so a tree is determined by its
split-weight set (see :func:`splits_of`).

Leaf labels have a canonical order (plain string sort). Subsets of leaves are
handled internally as bitmasks over canonical indices; every edge stores the
mask of leaves on its far side from an internal root, so the weight of the
smallest subtree spanning a leaf set is one pass over the edges.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .errors import TreeError
from .scalar import Scalar, ScalarMode

EXACT = ScalarMode(True)


@dataclass(frozen=True)
class Split:
    """Bipartition of the leaf labels; ``side_a`` holds the smallest label."""

    side_a: frozenset
    side_b: frozenset

    @classmethod
    def of(cls, side: Iterable[str], labels: Iterable[str]) -> "Split":
        side = frozenset(side)
        rest = frozenset(labels) - side
        if not side or not rest:
            raise ValueError("a split needs two non-empty sides")
        if min(side | rest) in side:
            return cls(side, rest)
        return cls(rest, side)

    @property
    def trivial(self) -> bool:
        return len(self.side_a) == 1 or len(self.side_b) == 1

    def separates(self, a: Iterable[str], b: Iterable[str]) -> bool:
        a, b = set(a), set(b)
        return (a <= self.side_a and b <= self.side_b) or (a <= self.side_b and b <= self.side_a)

    def __str__(self):
        return f"{','.join(sorted(self.side_a))}|{','.join(sorted(self.side_b))}"


class WeightedTree:
    """Immutable unrooted tree with labelled leaves and positive edge weights.

    Parameters
    ----------
    edges : iterable of (u, v, weight)
        Undirected edges between hashable vertex ids.
    labels : mapping vertex -> str
        Labels of the leaves. Must cover exactly the degree-1 vertices.
    mode : ScalarMode
        Arithmetic mode; weights are coerced into it.
    """

    def __init__(self, edges: Iterable[tuple], labels: Mapping[Hashable, str], mode: ScalarMode = EXACT):
        self.mode = mode
        adj: dict = {}
        for u, v, w in edges:
            if u == v:
                raise TreeError(f"self-loop at vertex {u!r}")
            w = mode.coerce(w)
            if not w > 0:
                raise TreeError(f"edge ({u!r}, {v!r}) has non-positive weight {w}")
            adj.setdefault(u, {})
            adj.setdefault(v, {})
            if v in adj[u]:
                raise TreeError(f"duplicate edge ({u!r}, {v!r})")
            adj[u][v] = w
            adj[v][u] = w
        self._adj = adj
        self._check_shape(labels)
        self._label = {v: labels[v] for v in adj if len(adj[v]) == 1}
        self._leaf = {lab: v for v, lab in self._label.items()}
        self.labels: tuple[str, ...] = tuple(sorted(self._leaf))
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._build_edge_masks()

    def _check_shape(self, labels):
        adj = self._adj
        if not adj:
            raise TreeError("empty tree")
        n_edges = sum(len(nb) for nb in adj.values()) // 2
        if n_edges != len(adj) - 1:
            raise TreeError("graph is not a tree (edge count != vertex count - 1)")
        start = next(iter(adj))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != len(adj):
            raise TreeError("graph is not connected")
        for v, nb in adj.items():
            if len(nb) == 2:
                raise TreeError(f"vertex {v!r} has degree 2")
        seen_labels = set()
        for v, nb in adj.items():
            if len(nb) == 1:
                lab = labels.get(v)
                if not isinstance(lab, str) or not lab:
                    raise TreeError(f"leaf {v!r} has no label")
                if lab in seen_labels:
                    raise TreeError(f"duplicate leaf label {lab!r}")
                seen_labels.add(lab)
            elif v in labels:
                raise TreeError(f"internal vertex {v!r} carries label {labels[v]!r}")
        extra = set(labels) - set(adj)
        if extra:
            raise TreeError(f"labels given for unknown vertices {sorted(map(repr, extra))}")

    def _build_edge_masks(self):
        # root at the internal neighbour of the smallest leaf (a leaf for n == 2)
        first = self._leaf[self.labels[0]]
        root = next(iter(self._adj[first]))
        if len(self._adj[root]) == 1:
            root = first
        self._root = root
        parent = {root: None}
        order = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in self._adj[u]:
                if v not in parent:
                    parent[v] = u
                    order.append(v)
                    queue.append(v)
        below = {}
        for v in reversed(order):
            mask = 1 << self._index[self._label[v]] if v in self._label else 0
            for c in self._adj[v]:
                if parent.get(c) == v:
                    mask |= below[c]
            below[v] = mask
        self._parent = parent
        self._order = order
        self._below = below
        # (child, parent, mask of leaves under child, weight)
        self._edge_masks = [(v, parent[v], below[v], self._adj[v][parent[v]]) for v in order[1:]]
        self._full = (1 << len(self.labels)) - 1

    # ------------------------------------------------------------------ #
    # basic accessors

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def vertices(self) -> tuple:
        return tuple(self._adj)

    def neighbors(self, v) -> tuple:
        return tuple(self._adj[v])

    def degree(self, v) -> int:
        return len(self._adj[v])

    def weight(self, u, v) -> Scalar:
        return self._adj[u][v]

    def edges(self) -> list[tuple]:
        """All edges as ``(u, v, weight)``, in a fixed order."""
        return [(p, c, w) for c, p, _, w in self._edge_masks]

    def is_leaf(self, v) -> bool:
        return v in self._label

    def label_of(self, v) -> str | None:
        return self._label.get(v)

    def leaf(self, label: str):
        try:
            return self._leaf[label]
        except KeyError:
            raise KeyError(f"unknown leaf label {label!r}") from None

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown leaf label {label!r}") from None

    def internal_edges(self) -> list[tuple]:
        return [(u, v, w) for u, v, w in self.edges() if not self.is_leaf(u) and not self.is_leaf(v)]

    def total_weight(self) -> Scalar:
        return sum((w for _, _, _, w in self._edge_masks), self.mode.coerce(0))

    def leaf_mask(self, labels: Iterable[str]) -> int:
        mask = 0
        for lab in labels:
            mask |= 1 << self.index(lab)
        return mask

    def labels_of_mask(self, mask: int) -> frozenset:
        return frozenset(lab for i, lab in enumerate(self.labels) if mask >> i & 1)

    def side(self, u, v) -> frozenset:
        """Labels of the leaves in the component of T - (u, v) containing v."""
        if self._parent.get(v) == u:
            mask = self._below[v]
        elif self._parent.get(u) == v:
            mask = self._full & ~self._below[u]
        else:
            raise KeyError(f"no edge ({u!r}, {v!r})")
        return self.labels_of_mask(mask)

    def edge_mask(self, u, v) -> int:
        """Mask of leaves on v's side of edge (u, v)."""
        if self._parent.get(v) == u:
            return self._below[v]
        if self._parent.get(u) == v:
            return self._full & ~self._below[u]
        raise KeyError(f"no edge ({u!r}, {v!r})")

    # ------------------------------------------------------------------ #

    def subtree_weight_mask(self, mask: int) -> Scalar:
        total = self.mode.coerce(0)
        for _, _, below, w in self._edge_masks:
            if below & mask and mask & ~below:
                total += w
        return total

    def steiner_edges_mask(self, mask: int) -> list[tuple]:
        return [(p, c) for c, p, below, _ in self._edge_masks if below & mask and mask & ~below]

    def scaled(self, factor) -> "WeightedTree":
        factor = self.mode.coerce(factor)
        return WeightedTree(((u, v, w * factor) for u, v, w in self.edges()), self._label, self.mode)

    def with_mode(self, mode: ScalarMode) -> "WeightedTree":
        return WeightedTree(self.edges(), self._label, mode)

    def __repr__(self):
        return f"WeightedTree(n={self.n}, edges={len(self._edge_masks)}, mode={self.mode.name})"


# ---------------------------------------------------------------------- #
# operations


def subtree_weight(tree: WeightedTree, leaves: Iterable[str]) -> Scalar:
    """Total weight of the smallest subtree spanning ``leaves``."""
    leaves = list(leaves)
    if not leaves:
        raise ValueError("leaf set must be non-empty")
    return tree.subtree_weight_mask(tree.leaf_mask(leaves))


def steiner_edges(tree: WeightedTree, leaves: Iterable[str]) -> frozenset:
    """Edges (as frozensets of their two endpoints) of the smallest spanning subtree."""
    mask = tree.leaf_mask(leaves)
    return frozenset(frozenset(e) for e in tree.steiner_edges_mask(mask))


def path_length(tree: WeightedTree, a: str, b: str) -> Scalar:
    return subtree_weight(tree, (a, b))


def splits_of(tree: WeightedTree) -> dict[Split, Scalar]:
    """One split per edge, mapped to the edge weight."""
    out = {}
    for _, _, below, w in tree._edge_masks:
        out[Split.of(tree.labels_of_mask(below), tree.labels)] = w
    return out


def topology(tree: WeightedTree) -> frozenset:
    """The split set without weights."""
    return frozenset(splits_of(tree))


def same_tree(a: WeightedTree, b: WeightedTree, tol: float = 0.0) -> bool:
    """Equality as leaf-labelled weighted trees, by split-weight sets."""
    sa, sb = splits_of(a), splits_of(b)
    if sa.keys() != sb.keys():
        return False
    return all(abs(sa[s] - sb[s]) <= tol for s in sa)


def tree_from_splits(splits: Mapping[Split, Scalar], mode: ScalarMode = EXACT) -> WeightedTree:
    """Build the unique tree whose split-weight set is ``splits``.

    All trivial splits must be present; non-trivial ones must be pairwise
    compatible.
    """
    if not splits:
        raise TreeError("no splits")
    labels = sorted(next(iter(splits)).side_a | next(iter(splits)).side_b)
    root_leaf = labels[0]
    # orient every split as the cluster not containing root_leaf
    clusters = {}
    for s, w in splits.items():
        side = s.side_b if root_leaf in s.side_a else s.side_a
        clusters[frozenset(side)] = w
    for lab in labels:
        if frozenset([lab]) not in clusters and lab != root_leaf:
            raise TreeError(f"missing trivial split for {lab!r}")
    top = frozenset(labels[1:])
    if top not in clusters:
        raise TreeError(f"missing trivial split for {root_leaf!r}")
    root_weight = clusters.pop(top)
    ordered = sorted(clusters, key=lambda c: (len(c), sorted(c)))
    edges = [(("leaf", root_leaf), ("node", top), root_weight)]
    labels_of = {("leaf", root_leaf): root_leaf}
    for c in ordered:
        parents = [p for p in ordered if len(p) > len(c) and c < p]
        for p in ordered:
            if p != c and not (c <= p or p <= c or not (c & p)):
                raise TreeError(f"incompatible splits {sorted(c)} and {sorted(p)}")
        parent = min(parents, key=len) if parents else top
        if len(c) == 1:
            (lab,) = c
            vid = ("leaf", lab)
            labels_of[vid] = lab
        else:
            vid = ("node", c)
        edges.append((("node", parent), vid, clusters[c]))
    return WeightedTree(edges, labels_of, mode)


def random_tree(
    n: int,
    m_floor: int = 2,
    seed: int = 0,
    weight_range: tuple = (1, 10),
    mode: ScalarMode = EXACT,
    contract_prob: float = 0.1,
    labels: Iterable[str] | None = None,
) -> WeightedTree:
    """Random tree on ``n`` leaves, deterministic in ``seed``.

    A uniform binary topology is grown by attaching each new leaf to a
    uniformly chosen edge; each internal edge is then contracted
    independently with probability ``contract_prob``. In exact mode weights are
    rationals ``p/q`` in ``weight_range`` with a random denominator ``q <= 8``;
    in float mode they are uniform draws.
    """
    if n < max(3, 2 * m_floor - 1):
        raise ValueError(f"n={n} is below max(3, 2*{m_floor}-1)")
    lo, hi = (mode.coerce(x) for x in weight_range)
    if not 0 < lo <= hi:
        raise ValueError(f"weight range must be positive and ordered, got {weight_range}")
    rng = random.Random(seed)
    names = list(labels) if labels is not None else [str(i + 1) for i in range(n)]
    if len(names) != n:
        raise ValueError("need exactly n labels")

    # leaves are 0..n-1, internal vertices n, n+1, ...
    edges = [(0, n), (1, n), (2, n)]
    next_id = n + 1
    for leaf in range(3, n):
        u, v = edges.pop(rng.randrange(len(edges)))
        mid = next_id
        next_id += 1
        edges += [(u, mid), (mid, v), (leaf, mid)]

    # contract internal edges
    alias = {}

    def find(x):
        while x in alias:
            x = alias[x]
        return x

    kept = []
    for u, v in edges:
        if u >= n and v >= n and rng.random() < contract_prob:
            ru, rv = find(u), find(v)
            alias[rv] = ru
        else:
            kept.append((u, v))
    kept = [(find(u), find(v)) for u, v in kept]

    def draw():
        if lo == hi:
            return lo
        if mode.exact:
            q = rng.randint(1, 8)
            a = -(-lo * q // 1)  # ceil
            b = hi * q // 1
            return Fraction(rng.randint(int(a), int(b)), q)
        return rng.uniform(float(lo), float(hi))

    weighted = [(u, v, draw()) for u, v in kept]
    return WeightedTree(weighted, {i: names[i] for i in range(n)}, mode)
