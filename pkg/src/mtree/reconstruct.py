"""Recover a tree from its m-subtree weights (n >= 2m - 1).

Three phases:

1. topology, by inserting leaves one at a time and locating each with quartet
   queries answered from the map (:func:`quartet_oracle`);
2. internal edge weights, each from one four-term combination of map values
   (:func:`recover_internal_edge_weight`);
3. leaf edge weights, from differences of leaf sums plus one normalising
   subset (:func:`recover_leaf_edge_weights`).

For a quartet i, j, k, l and a set R of m - 2 other leaves, write
``s_ij = D(Rij) + D(Rkl)`` and likewise ``s_ik``, ``s_il``. On a tree map the
two largest are equal and the smallest is smaller by the length of the part of
the i,j / k,l bridge path lying outside the subtree spanned by R (for m >= 3;
for m = 2 by twice the bridge length). A quartet is resolved iff some R leaves
part of the bridge uncovered.
"""

from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field
from typing import Iterable

from .errors import BelowThresholdError, NotRealizableError
from .mdissim import MMap, compute_mmap
from .scalar import Scalar, ScalarMode
from .subsets import iter_sub_masks, members
from .tree_core import WeightedTree, splits_of, topology


class Outcome(str, enum.Enum):
    IJ_KL = "ij|kl"
    IK_JL = "ik|jl"
    IL_JK = "il|jk"
    STAR = "star"
    UNDETERMINED = "undetermined"


_RESOLVED = (Outcome.IJ_KL, Outcome.IK_JL, Outcome.IL_JK)


@dataclass(frozen=True)
class QuartetCall:
    quartet: tuple
    outcome: Outcome
    witness: frozenset | None = None

    @property
    def resolved(self) -> bool:
        return self.outcome in _RESOLVED

    def partner(self, label: str) -> str | None:
        """The label paired with ``label`` in a resolved outcome, else None."""
        if not self.resolved:
            return None
        i, j, k, l = self.quartet
        pairs = {
            Outcome.IJ_KL: ((i, j), (k, l)),
            Outcome.IK_JL: ((i, k), (j, l)),
            Outcome.IL_JK: ((i, l), (j, k)),
        }[self.outcome]
        for a, b in pairs:
            if label == a:
                return b
            if label == b:
                return a
        raise KeyError(label)

    def split(self) -> tuple | None:
        if not self.resolved:
            return None
        a = self.partner(self.quartet[0])
        first = frozenset((self.quartet[0], a))
        return first, frozenset(self.quartet) - first


@dataclass
class Stats:
    quartet_queries: int = 0
    r_candidates: int = 0
    timings: dict = field(default_factory=dict)


@dataclass
class ReconstructionResult:
    tree: WeightedTree
    stats: Stats
    unique: bool = True
    warnings: list = field(default_factory=list)


def _quartet_masks(mmap: MMap, quartet):
    if len(set(quartet)) != 4:
        raise ValueError(f"quartet labels must be distinct, got {quartet!r}")
    try:
        return [1 << mmap.index[q] for q in quartet]
    except KeyError as exc:
        raise KeyError(f"unknown label {exc.args[0]!r}") from None


def quartet_oracle(
    mmap: MMap,
    i: str,
    j: str,
    k: str,
    l: str,
    *,
    pooled: bool | None = None,
    exhaustive: bool = False,
    stats: Stats | None = None,
) -> QuartetCall:
    """Decide the quartet topology of i, j, k, l from map values alone.

    Default (exact-mode) rule: scan R over the (m-2)-subsets of the other
    labels in colex order. An R whose smallest sum is strictly smaller than the
    other two, which are equal, certifies that split and ends the scan
    (unless ``exhaustive``). An R where the two largest sums differ makes the
    call UNDETERMINED; so does a second R certifying a different split when
    ``exhaustive`` is set. If every R gives a three-way tie the quartet is a
    STAR.

    Pooled rule (default in float mode, for noisy maps): the three sums are
    totalled over all R and the smallest total decides, with tolerance
    ``tol * #R``. The witness is the R with the largest margin for the split.
    """
    quartet = (i, j, k, l)
    bi, bj, bk, bl = _quartet_masks(mmap, quartet)
    mode = mmap.mode
    if pooled is None:
        pooled = not mode.exact
    n, m = mmap.n, mmap.m
    qmask = bi | bj | bk | bl
    pool = [t for t in range(n) if not qmask >> t & 1]
    val = mmap.by_mask
    if stats is not None:
        stats.quartet_queries += 1

    def sums(r):
        return (
            val[r | bi | bj] + val[r | bk | bl],
            val[r | bi | bk] + val[r | bj | bl],
            val[r | bi | bl] + val[r | bj | bk],
        )

    def labels_of(r):
        return frozenset(mmap.labels[t] for t in members(r))

    if pooled:
        totals = [mode.coerce(0)] * 3
        best = [None, None, None]
        count = 0
        for r in iter_sub_masks(pool, m - 2):
            count += 1
            s = sums(r)
            for t in range(3):
                totals[t] += s[t]
                margin = min(s[u] for u in range(3) if u != t) - s[t]
                if best[t] is None or margin > best[t][0]:
                    best[t] = (margin, r)
        if stats is not None:
            stats.r_candidates += count
        tol = mode.eps * max(1, count)
        order = sorted(range(3), key=lambda t: totals[t])
        t0, t1, t2 = (totals[t] for t in order)
        if t2 - t0 <= tol:
            return QuartetCall(quartet, Outcome.STAR)
        if t1 - t0 > tol:
            return QuartetCall(quartet, _RESOLVED[order[0]], labels_of(best[order[0]][1]))
        return QuartetCall(quartet, Outcome.UNDETERMINED)

    found = None
    for r in iter_sub_masks(pool, m - 2):
        if stats is not None:
            stats.r_candidates += 1
        s = sums(r)
        order = sorted(range(3), key=lambda t: s[t])
        lo, mid, hi = (s[t] for t in order)
        if mode.eq(lo, hi):
            continue
        if not mode.eq(mid, hi):
            return QuartetCall(quartet, Outcome.UNDETERMINED)
        if found is None:
            found = (_RESOLVED[order[0]], labels_of(r))
            if not exhaustive:
                break
        elif found[0] != _RESOLVED[order[0]]:
            return QuartetCall(quartet, Outcome.UNDETERMINED)
    if found is None:
        return QuartetCall(quartet, Outcome.STAR)
    return QuartetCall(quartet, found[0], found[1])


class _CachedOracle:
    def __init__(self, mmap, pooled, stats):
        self.mmap = mmap
        self.pooled = pooled
        self.stats = stats
        self.cache = {}

    def __call__(self, i, j, k, l) -> QuartetCall:
        key = frozenset((i, j, k, l))
        call = self.cache.get(key)
        if call is None:
            call = quartet_oracle(self.mmap, i, j, k, l, pooled=self.pooled, stats=self.stats)
            self.cache[key] = call
        return call


def _check_threshold(mmap: MMap, force: bool):
    if mmap.n < 2 * mmap.m - 1 and not force:
        raise BelowThresholdError(
            f"n={mmap.n} < 2m-1={2 * mmap.m - 1}: the m-map does not determine the tree"
        )


def reconstruct_topology(
    mmap: MMap,
    *,
    force: bool = False,
    pooled: bool | None = None,
    stats: Stats | None = None,
) -> WeightedTree:
    """Tree topology realising ``mmap``; every edge gets the placeholder weight 1.

    Leaves are inserted in label order. The first label r acts as a root; a new
    leaf x walks down from r's neighbour. At vertex v, entered from p, with
    child components C_1..C_d and representatives c_q (smallest label), the
    quartet (r, c_q', c_q, x) with q' = q+1 mod d is queried for each q:
    x paired with a representative claims that component, x paired with r
    votes "above v", and a star votes "at v".
    """
    _check_threshold(mmap, force)
    n = mmap.n
    if n < 3:
        raise ValueError("need at least 3 leaves")
    labels = mmap.labels
    oracle = _CachedOracle(mmap, pooled, stats if stats is not None else Stats())

    adj = {0: {n}, 1: {n}, 2: {n}, n: {0, 1, 2}}
    next_id = n + 1

    def rep(parent, v):
        # smallest leaf index in the component of v away from parent
        best = n
        stack = [(parent, v)]
        while stack:
            p, u = stack.pop()
            if u < n:
                best = min(best, u)
                continue
            stack.extend((u, w) for w in adj[u] if w != p)
        return best

    def subdivide(a, b, x):
        nonlocal next_id
        mid = next_id
        next_id += 1
        adj[a].discard(b)
        adj[b].discard(a)
        adj[mid] = {a, b, x}
        adj[a].add(mid)
        adj[b].add(mid)
        adj[x] = {mid}

    r = 0
    for x in range(3, n):
        parent = r
        (v,) = adj[r]
        while True:
            children = sorted((u for u in adj[v] if u != parent), key=lambda u: rep(v, u))
            reps = [rep(v, u) for u in children]
            d = len(children)
            claimed, above, stars = set(), 0, 0
            first_call = None
            for q in range(d):
                q2 = (q + 1) % d
                call = oracle(labels[r], labels[reps[q2]], labels[reps[q]], labels[x])
                first_call = first_call or call
                if call.outcome is Outcome.UNDETERMINED:
                    raise NotRealizableError("map is not realizable by a tree: contradictory quartet sums", call.quartet)
                if call.outcome is Outcome.STAR:
                    stars += 1
                    continue
                partner = call.partner(labels[x])
                if partner == labels[reps[q]]:
                    claimed.add(q)
                elif partner == labels[reps[q2]]:
                    claimed.add(q2)
                else:
                    above += 1
            if len(claimed) == 1 and not above:
                (q,) = claimed
                u = children[q]
                if u < n:
                    subdivide(v, u, x)
                    break
                parent, v = v, u
            elif not claimed and not above and stars:
                adj[v].add(x)
                adj[x] = {v}
                break
            elif not claimed and not stars and above == d:
                subdivide(parent, v, x)
                break
            else:
                raise NotRealizableError(
                    f"map is not realizable by a tree: contradictory placement votes for {labels[x]!r}",
                    first_call.quartet,
                )

    edges = [(u, w, 1) for u in adj for w in adj[u] if u < w]
    return WeightedTree(edges, {t: labels[t] for t in range(n)}, mmap.mode)


def four_term(mmap: MMap, i: str, j: str, k: str, l: str, R: Iterable[str]) -> Scalar:
    """D(Rik) + D(Rjl) - D(Rij) - D(Rkl)."""
    r = mmap.mask(R)
    bi, bj, bk, bl = _quartet_masks(mmap, (i, j, k, l))
    val = mmap.by_mask
    return val[r | bi | bk] + val[r | bj | bl] - val[r | bi | bj] - val[r | bk | bl]


def edge_witnesses(mmap: MMap, topo: WeightedTree, u, v):
    """All valid (i, j, k, l, R) for internal edge (u, v), smallest first.

    i, j lie in distinct components of T - u not containing v; k, l likewise
    at v; R avoids i, j, k, l and lies on one side of the edge.
    """
    if topo.is_leaf(u) or topo.is_leaf(v):
        raise ValueError("edge must join two internal vertices")
    idx = mmap.index

    def comps(a, b):
        return sorted(
            (sorted(idx[lab] for lab in topo.side(a, c)) for c in topo.neighbors(a) if c != b),
            key=lambda c: c[0],
        )

    cu, cv = comps(u, v), comps(v, u)
    side_u = mmap.mask(topo.side(v, u))
    side_v = mmap.mask(topo.side(u, v))
    pairs_u = [(a, b) for x in range(len(cu)) for y in range(x + 1, len(cu)) for a in cu[x] for b in cu[y]]
    pairs_v = [(a, b) for x in range(len(cv)) for y in range(x + 1, len(cv)) for a in cv[x] for b in cv[y]]
    pairs_u = sorted(tuple(sorted(p)) for p in pairs_u)
    pairs_v = sorted(tuple(sorted(p)) for p in pairs_v)
    labels = mmap.labels
    for i, j in pairs_u:
        for k, l in pairs_v:
            used = (1 << i) | (1 << j) | (1 << k) | (1 << l)
            pool = [t for t in range(mmap.n) if not used >> t & 1]
            for r in iter_sub_masks(pool, mmap.m - 2):
                if (r & ~side_u) == 0 or (r & ~side_v) == 0:
                    yield labels[i], labels[j], labels[k], labels[l], frozenset(labels[t] for t in members(r))


def recover_internal_edge_weight(mmap: MMap, topo: WeightedTree, edge) -> Scalar:
    """Weight of internal edge ``edge = (u, v)`` of ``topo``.

    Equals D(Rik) + D(Rjl) - D(Rij) - D(Rkl) for m >= 3 and half of it for
    m = 2, using the smallest valid (i, j, k, l, R).
    """
    u, v = edge[0], edge[1]
    # orient so the canonical choice does not depend on the caller's order
    if min(mmap.index[lab] for lab in topo.side(v, u)) > min(mmap.index[lab] for lab in topo.side(u, v)):
        u, v = v, u
    try:
        i, j, k, l, R = next(edge_witnesses(mmap, topo, u, v))
    except StopIteration:
        raise NotRealizableError(f"no valid R for edge ({u!r}, {v!r}); is n >= 2m-1?") from None
    value = four_term(mmap, i, j, k, l, R)
    if mmap.m == 2:
        value = value / 2
    if not mmap.mode.positive(value):
        raise NotRealizableError(f"recovered internal edge weight {value} is not positive", (i, j, k, l))
    return value


def recover_leaf_edge_weights(mmap: MMap, topo: WeightedTree) -> WeightedTree:
    """Fill in leaf edge weights, given correct internal edge weights in ``topo``.

    With leafsum(V) = D(V) minus the internal edges spanned by V, each
    difference w(e_1) - w(e_j) is leafsum(S+1) - leafsum(S+j) for the smallest
    (m-1)-subset S avoiding 1 and j; the first m-subset then fixes w(e_1).
    """
    mode = mmap.mode
    n, m = mmap.n, mmap.m
    internal = []
    for a, b, w in topo.internal_edges():
        internal.append((mmap.mask(topo.side(a, b)), w))
    full = (1 << n) - 1
    val = mmap.by_mask

    def leafsum(mask):
        total = val[mask]
        for side, w in internal:
            if mask & side and mask & (full & ~side):
                total -= w
        return total

    delta = [mode.coerce(0)] * n
    for j in range(1, n):
        pool = [t for t in range(n) if t not in (0, j)]
        S = next(iter_sub_masks(pool, m - 1))
        delta[j] = leafsum(S | 1) - leafsum(S | 1 << j)
    V0 = (1 << m) - 1
    w1 = leafsum(V0) + sum((delta[j] for j in range(1, m)), mode.coerce(0))
    w1 = w1 / m if mode.exact else w1 / float(m)
    leaf_w = {}
    for j in range(n):
        w = w1 - delta[j]
        if not mode.positive(w):
            raise NotRealizableError(f"recovered leaf edge weight {w} for {mmap.labels[j]!r} is not positive")
        leaf_w[mmap.labels[j]] = w

    edges = []
    labels = {}
    for a, b, w in topo.edges():
        if topo.is_leaf(a) or topo.is_leaf(b):
            leaf = a if topo.is_leaf(a) else b
            w = leaf_w[topo.label_of(leaf)]
        edges.append((a, b, w))
    for vtx in topo.vertices:
        if topo.is_leaf(vtx):
            labels[vtx] = topo.label_of(vtx)
    return WeightedTree(edges, labels, mode)


def realizes(tree: WeightedTree, mmap: MMap, tol: float | None = None) -> bool:
    """True if ``tree``'s m-subtree weights match ``mmap`` (within ``tol``)."""
    if set(tree.labels) != set(mmap.labels):
        return False
    if tol is None:
        tol = mmap.mode.eps
    for subset, value in mmap.items():
        w = tree.subtree_weight_mask(tree.leaf_mask(subset))
        if abs(w - value) > tol:
            return False
    return True


def reconstruct(
    mmap: MMap,
    *,
    force: bool = False,
    pooled: bool | None = None,
    verify: bool = True,
) -> ReconstructionResult:
    """Rebuild the tree whose m-subtree weights are ``mmap``.

    Raises :class:`BelowThresholdError` when n < 2m - 1 unless ``force``;
    with ``force`` the result is marked non-unique. Raises
    :class:`NotRealizableError` when a phase fails or, with ``verify``, when the
    rebuilt tree does not reproduce the map.
    """
    _check_threshold(mmap, force)
    stats = Stats()
    t0 = time.perf_counter()
    topo = reconstruct_topology(mmap, force=force, pooled=pooled, stats=stats)
    t1 = time.perf_counter()
    edges = []
    for u, v, _ in topo.edges():
        if topo.is_leaf(u) or topo.is_leaf(v):
            edges.append((u, v, 1))
        else:
            edges.append((u, v, recover_internal_edge_weight(mmap, topo, (u, v))))
    labels = {x: topo.label_of(x) for x in topo.vertices if topo.is_leaf(x)}
    partial = WeightedTree(edges, labels, mmap.mode)
    t2 = time.perf_counter()
    tree = recover_leaf_edge_weights(mmap, partial)
    t3 = time.perf_counter()
    stats.timings = {"topology": t1 - t0, "internal": t2 - t1, "leaves": t3 - t2}
    result = ReconstructionResult(tree, stats, unique=mmap.n >= 2 * mmap.m - 1)
    if not result.unique:
        result.warnings.append(
            f"n={mmap.n} < 2m-1={2 * mmap.m - 1}: other trees may realise the same map"
        )
    if verify and not realizes(tree, mmap):
        raise NotRealizableError("reconstructed tree does not reproduce the map")
    return result


# ---------------------------------------------------------------------- #
# robustness harness


@dataclass
class PerturbationReport:
    trials: int
    identical: int
    weights_recovered: int = 0
    max_weight_error: float = 0.0

    @property
    def rate(self) -> float:
        return self.identical / self.trials if self.trials else 1.0


def min_edge_weight(tree: WeightedTree) -> Scalar:
    return min(w for _, _, w in tree.edges())


def perturbation_trial(
    tree: WeightedTree,
    m: int,
    delta_frac: float,
    seed: int = 0,
    trials: int = 100,
    tol: float = 1e-12,
) -> PerturbationReport:
    """Add uniform noise in [-delta_frac*e_min, +delta_frac*e_min] to every map
    value and count the trials whose reconstructed topology is unchanged.

    With ``delta_frac == 0`` the map is reconstructed in the tree's own mode and
    weights must come back exactly.
    """
    if not 0 <= delta_frac < 0.5:
        raise ValueError(f"delta_frac must lie in [0, 0.5), got {delta_frac}")
    if tree.n < 2 * m - 1:
        raise BelowThresholdError(f"n={tree.n} < 2m-1={2 * m - 1}")
    truth = topology(tree)
    exact_map = compute_mmap(tree, m)
    report = PerturbationReport(trials, 0)
    if delta_frac == 0:
        want = splits_of(tree)
        for _ in range(trials):
            got = reconstruct(exact_map).tree
            if topology(got) == truth:
                report.identical += 1
            got_w = splits_of(got)
            if got_w.keys() == want.keys():
                err = max(float(abs(got_w[s] - want[s])) for s in want)
                report.max_weight_error = max(report.max_weight_error, err)
                if err == 0:
                    report.weights_recovered += 1
        return report

    fmode = ScalarMode(False, tol)
    base = exact_map.with_mode(fmode)
    bound = delta_frac * float(min_edge_weight(tree))
    rng = random.Random(seed)
    want = splits_of(tree)
    for _ in range(trials):
        noisy = base.map_values(lambda x: x + rng.uniform(-bound, bound))
        try:
            topo = reconstruct_topology(noisy)
        except NotRealizableError:
            continue
        if topology(topo) != truth:
            continue
        report.identical += 1
        try:
            got = reconstruct(noisy, verify=False).tree
        except NotRealizableError:
            continue
        got_w = splits_of(got)
        err = max(abs(got_w[s] - float(want[s])) for s in want)
        report.weights_recovered += 1
        report.max_weight_error = max(report.max_weight_error, err)
    return report
