"""Non-adaptive baselines run under a matched query budget.

All three baselines produce a size-k pruning and spend exactly the same
number of basic and node queries as a reference adaptive run (see
match_budget), making their output weightings directly comparable.

WEIGHT ignores samples for its split choices and always splits the pruning
node with the largest known mass.  UNIFORM and EMPIRICAL draw their whole
basic-query budget up front, uniformly from the full leaf set, and score
every candidate node from the drawn leaves that happen to fall under it:
UNIFORM with the unbiased discrepancy estimate, EMPIRICAL with the plug-in
sum (n/m) * sum |node_average - z|, which looks like the discrepancy but
concentrates around the wrong value when rare heavy leaves are missed.
"""

from __future__ import annotations

import random
from bisect import insort
from dataclasses import dataclass

import numpy as np

from awpkit.engine import PruningResult, refine_with_queries
from awpkit.estimator import NodeStats
from awpkit.oracle import Oracle
from awpkit.tree import HierTree, InvariantError, induced_weighting, is_pruning

MASS_TOL = 1e-12


@dataclass(frozen=True)
class Budget:
    """Query allowance: basic (leaf) queries and node (subtree mass) queries."""

    basic: int
    node: int

    def __post_init__(self):
        if self.basic < 0 or self.node < 0:
            raise ValueError("budget counts must be non-negative")


def match_budget(result: PruningResult) -> Budget:
    """Budget equal to what a finished run actually spent."""
    return Budget(result.ledger.basic_queries, result.ledger.node_queries)


def uniform_score(w_star: float, n_leaves: int, values) -> float:
    """Unbiased discrepancy estimate of a node from a uniform subsample."""
    arr = np.asarray(values, dtype=float)
    m = arr.size
    if m == 0:
        raise ValueError("empty subsample")
    avg = w_star / n_leaves
    return w_star + (n_leaves / m) * (float(np.abs(arr - avg).sum()) - float(arr.sum()))


def empirical_score(w_star: float, n_leaves: int, values) -> float:
    """Plug-in deviation sum (n/m) * sum |node_average - z|."""
    arr = np.asarray(values, dtype=float)
    m = arr.size
    if m == 0:
        raise ValueError("empty subsample")
    avg = w_star / n_leaves
    return (n_leaves / m) * float(np.abs(avg - arr).sum())


def _check_run_args(tree: HierTree, oracle: Oracle, k: int, budget: Budget) -> None:
    if oracle.tree is not tree:
        raise ValueError("oracle is bound to a different tree")
    if not (1 <= k <= tree.leaf_count_total):
        raise ValueError(f"k must be in 1..{tree.leaf_count_total}, got {k}")
    if budget.node < k - 1:
        raise ValueError(f"node budget {budget.node} cannot cover {k - 1} splits")


def _split_node(tree, oracle, pruning, weights, trace, v) -> None:
    l = tree.left(v)
    r = tree.right(v)
    w_r = oracle.query_node(r)
    w_l = weights[v] - w_r
    if w_l < 0.0:
        if w_l < -MASS_TOL:
            raise InvariantError(f"child mass {w_l!r} below zero at node {v}")
        w_l = 0.0
    pruning.remove(v)
    insort(pruning, l)
    insort(pruning, r)
    weights[l] = w_l
    weights[r] = w_r
    trace.append(("SPLIT", v, w_r))
    if not is_pruning(tree, pruning):
        raise InvariantError(f"pruning broken after splitting node {v}")


def _draw_all(tree, oracle, rng, count, trace, queried):
    """Uniform-with-replacement leaf draws over the whole leaf set,
    attributed to the root (they serve no single node)."""
    root = tree.root_id
    n = tree.leaf_count_total
    positions = np.empty(count, dtype=np.int64)
    values = np.empty(count, dtype=float)
    order = tree.leaf_order
    for i in range(count):
        pos = rng.randrange(n)
        label = order[pos]
        val = oracle.query_leaf(label, attributed_to=root)
        positions[i] = pos
        values[i] = val
        queried[label] = val
        trace.append(("SAMPLE", root, label, val))
    return positions, values


def _finish(tree, oracle, pruning, weights, trace, queried, stats, early_stop) -> PruningResult:
    ptuple = tuple(pruning)
    node_weights = {v: weights[v] for v in ptuple}
    w_p = induced_weighting(tree, ptuple, node_weights)
    w_ref = refine_with_queries(tree, ptuple, node_weights, queried)
    return PruningResult(
        pruning=ptuple,
        node_weights=node_weights,
        w_p=w_p,
        w_p_refined=w_ref,
        ledger=oracle.ledger.snapshot(),
        stats=stats,
        trace=tuple(trace),
        early_stop=early_stop,
    )


def run_weight(tree: HierTree, oracle: Oracle, k: int, budget: Budget, seed: int) -> PruningResult:
    """Split the heaviest pruning node k-1 times, then spend the whole
    basic budget on uniform leaf draws used only to refine the output."""
    _check_run_args(tree, oracle, k, budget)
    pruning = [tree.root_id]
    weights = {tree.root_id: 1.0}
    trace: list[tuple] = []
    early_stop = None
    for _ in range(k - 1):
        target = -1
        best = -1.0
        for v in pruning:
            if tree.is_leaf(v):
                continue
            if weights[v] > best:
                best = weights[v]
                target = v
        if target < 0:
            early_stop = "all-leaves"
            break
        _split_node(tree, oracle, pruning, weights, trace, target)
    rng = random.Random(seed)
    queried: dict[str, float] = {}
    _draw_all(tree, oracle, rng, budget.basic, trace, queried)
    stats = {v: NodeStats(v, weights[v], tree.leaf_count(v)) for v in pruning}
    return _finish(tree, oracle, pruning, weights, trace, queried, stats, early_stop)


def _run_scored(tree, oracle, k, budget, seed, score_fn) -> PruningResult:
    _check_run_args(tree, oracle, k, budget)
    rng = random.Random(seed)
    trace: list[tuple] = []
    queried: dict[str, float] = {}
    positions, values = _draw_all(tree, oracle, rng, budget.basic, trace, queried)
    sort_idx = np.argsort(positions, kind="stable")
    pos_sorted = positions[sort_idx]
    val_sorted = values[sort_idx]

    def subsample(v):
        lo, hi = tree.span(v)
        i0 = int(np.searchsorted(pos_sorted, lo, side="left"))
        i1 = int(np.searchsorted(pos_sorted, hi, side="left"))
        return val_sorted[i0:i1]

    pruning = [tree.root_id]
    weights = {tree.root_id: 1.0}
    scores: dict[int, float | None] = {}
    early_stop = None
    for _ in range(k - 1):
        target = -1
        best = None
        heaviest = -1
        heaviest_w = -1.0
        for v in pruning:
            if tree.is_leaf(v):
                continue
            if weights[v] > heaviest_w:
                heaviest_w = weights[v]
                heaviest = v
            if v not in scores:
                sub = subsample(v)
                scores[v] = score_fn(weights[v], tree.leaf_count(v), sub) if sub.size else None
            s = scores[v]
            if s is None:
                continue
            if best is None or s > best:
                best = s
                target = v
        if target < 0:
            if heaviest < 0:
                early_stop = "all-leaves"
                break
            # No candidate received any draw: fall back to the heaviest node.
            target = heaviest
        _split_node(tree, oracle, pruning, weights, trace, target)
    stats = {
        v: NodeStats(v, weights[v], tree.leaf_count(v), samples=[float(x) for x in subsample(v)])
        for v in pruning
    }
    return _finish(tree, oracle, pruning, weights, trace, queried, stats, early_stop)


def run_uniform(tree: HierTree, oracle: Oracle, k: int, budget: Budget, seed: int) -> PruningResult:
    """Score candidate splits with the unbiased discrepancy estimate over a
    fixed, uniformly pre-drawn sample."""
    return _run_scored(tree, oracle, k, budget, seed, uniform_score)


def run_empirical(tree: HierTree, oracle: Oracle, k: int, budget: Budget, seed: int) -> PruningResult:
    """Score candidate splits with the plug-in deviation sum over a fixed,
    uniformly pre-drawn sample."""
    return _run_scored(tree, oracle, k, budget, seed, empirical_score)
