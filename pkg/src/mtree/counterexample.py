"""Two different caterpillars on n = 2m - 2 leaves with the same m-map.

T is the path v_1 .. v_n with a pendant leaf w_i hanging off v_i for
2 <= i <= n-1; the path ends are leaves themselves (w_1 = v_1, w_n = v_n).
T' swaps where w_{m-1} and w_m hang: (v_{m-1}, w_{m-1}) and (v_m, w_m) become
(v_m, w_{m-1}) and (v_{m-1}, w_m). Corresponding edges carry equal weights.
Every m-subset spans corresponding edge sets in both trees, because the
middle edge (v_{m-1}, v_m) has m - 1 leaves on each side and is always used.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .scalar import ScalarMode
from .subsets import iter_masks
from .tree_core import EXACT, WeightedTree


@dataclass(frozen=True)
class CaterpillarPair:
    t: WeightedTree
    t_prime: WeightedTree
    m: int
    # edge of t (frozenset of endpoints) -> corresponding edge of t_prime
    edge_bijection: dict

    @property
    def n(self) -> int:
        return 2 * self.m - 2


def _primes(k: int) -> list[int]:
    out = []
    c = 2
    while len(out) < k:
        if all(c % p for p in out if p * p <= c):
            out.append(c)
        c += 1
    return out


def caterpillar_edges(n: int) -> list[tuple]:
    """Edges of T in canonical order: path edges, then pendant edges."""
    path = [(f"v{i - 1}", f"v{i}") for i in range(2, n + 1)]
    pendant = [(f"v{i}", f"w{i}") for i in range(2, n)]
    return path + pendant


def build_counterexample(
    m: int,
    weights: Sequence | None = None,
    seed: int | None = None,
    mode: ScalarMode = EXACT,
) -> CaterpillarPair:
    """Build (T, T') for n = 2m - 2.

    ``weights`` gives one positive weight per edge in :func:`caterpillar_edges`
    order. Without it, a ``seed`` draws random rationals in [1, 10]; with
    neither, the weights are the primes 2, 3, 5, ... .
    """
    if m < 3:
        raise ValueError(f"the construction needs m >= 3, got {m}")
    n = 2 * m - 2
    edges = caterpillar_edges(n)
    if weights is None:
        if seed is None:
            weights = _primes(len(edges))
        else:
            rng = random.Random(seed)
            weights = [Fraction(rng.randint(8, 80), 8) for _ in edges]
            if not mode.exact:
                weights = [float(w) for w in weights]
    weights = [mode.coerce(w) for w in weights]
    if len(weights) != len(edges):
        raise ValueError(f"need {len(edges)} weights, got {len(weights)}")
    if any(not w > 0 for w in weights):
        raise ValueError("weights must be positive")

    swap = {
        (f"v{m - 1}", f"w{m - 1}"): (f"v{m}", f"w{m - 1}"),
        (f"v{m}", f"w{m}"): (f"v{m - 1}", f"w{m}"),
    }
    prime_edges = [swap.get(e, e) for e in edges]

    labels = {f"w{i}": f"w{i}" for i in range(2, n)}
    labels["v1"] = "w1"
    labels[f"v{n}"] = f"w{n}"
    t = WeightedTree([(a, b, w) for (a, b), w in zip(edges, weights)], labels, mode)
    tp = WeightedTree([(a, b, w) for (a, b), w in zip(prime_edges, weights)], labels, mode)
    bijection = {frozenset(e): frozenset(p) for e, p in zip(edges, prime_edges)}
    return CaterpillarPair(t, tp, m, bijection)


def verify_pair(pair: CaterpillarPair, size: int | None = None) -> bool:
    """Check that every ``size``-subset (default m) spans corresponding edges.

    This compares edge sets, not weights, so it is independent of the weights.
    """
    size = pair.m if size is None else size
    t, tp = pair.t, pair.t_prime
    labels = t.labels
    if tp.labels != labels:
        return False
    for mask in iter_masks(len(labels), size):
        subset = [labels[i] for i in range(len(labels)) if mask >> i & 1]
        span = {frozenset(e) for e in t.steiner_edges_mask(t.leaf_mask(subset))}
        span_p = {frozenset(e) for e in tp.steiner_edges_mask(tp.leaf_mask(subset))}
        if {pair.edge_bijection[e] for e in span} != span_p:
            return False
    return True
