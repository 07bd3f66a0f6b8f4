"""Adaptive pruning search driven by weight queries.

Starting from the pruning {root} (whose mass is 1 by definition, so the
root is never queried), the loop repeatedly samples a uniform leaf from the
pruning node with the largest optimistic discrepancy estimate, then splits
any node whose pessimistic estimate, scaled by the margin factor beta,
still dominates every rival's optimistic estimate.  Each split costs one
node query, for the right child only; the left child's mass is the
difference.  The loop stops at the requested pruning size, or early when
only leaves remain or a basic-query cap is reached.

Every oracle interaction is recorded in a trace (SAMPLE and SPLIT events)
from which a run can be replayed and audited without the oracle.
"""

from __future__ import annotations

import random
from bisect import insort
from dataclasses import dataclass
from math import fsum, inf

from awpkit.estimator import NodeStats, confidence_radius, estimate_discrepancy
from awpkit.oracle import Oracle, QueryLedger
from awpkit.tree import (
    HierTree,
    InvariantError,
    Weighting,
    induced_weighting,
    is_pruning,
    tv_distance,
)

RADIUS_MODES = ("hoeffding", "bernstein", "min")

# Tolerance for a derived left-child mass coming out barely negative.
MASS_TOL = 1e-12


@dataclass(frozen=True)
class EngineConfig:
    """Run parameters.

    beta is the split margin (> 1): larger values split sooner at the price
    of a looser approximation guarantee.  max_basic_queries, when set, hard
    stops the run before the next draw once the ledger reaches the cap.
    """

    k: int
    delta: float = 0.05
    beta: float = 4.0
    seed: int = 0
    radius_mode: str = "min"
    max_basic_queries: int | None = None
    strict_paper: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not self.beta > 1.0:
            raise ValueError(f"beta must exceed 1, got {self.beta!r}")
        if self.radius_mode not in RADIUS_MODES:
            raise ValueError(f"radius_mode must be one of {RADIUS_MODES}, got {self.radius_mode!r}")
        if self.max_basic_queries is not None and self.max_basic_queries < 0:
            raise ValueError("max_basic_queries must be non-negative")


@dataclass
class PruningResult:
    """Outcome of a pruning search (adaptive or baseline).

    w_p spreads each pruning node's mass uniformly over its leaves;
    w_p_refined additionally pins every leaf whose weight was individually
    queried to its true value and spreads only the residual mass.
    early_stop is None for a normal finish, else "all-leaves" or
    "max-queries".
    """

    pruning: tuple[int, ...]
    node_weights: dict[int, float]
    w_p: Weighting
    w_p_refined: Weighting
    ledger: QueryLedger
    stats: dict[int, NodeStats]
    trace: tuple[tuple, ...]
    early_stop: str | None = None

    def trace_lines(self) -> list[str]:
        out = []
        for ev in self.trace:
            if ev[0] == "SAMPLE":
                out.append(f"SAMPLE {ev[1]} {ev[2]} {ev[3]!r}")
            else:
                out.append(f"SPLIT {ev[1]} {ev[2]!r}")
        return out


def sc_satisfied(beta: float, estimate: float, radius: float, rival_ucb: float) -> bool:
    """Split criterion: beta * (estimate - radius) >= max rival optimistic
    value.  rival_ucb is -inf when the node has no rivals, which makes the
    criterion vacuously true."""
    return beta * (estimate - radius) >= rival_ucb


class AwpRun:
    """Mutable state of one adaptive run; drive via sample_step and
    split_check, or use run_awp for the full loop."""

    def __init__(self, tree: HierTree, oracle: Oracle, config: EngineConfig):
        if oracle.tree is not tree:
            raise ValueError("oracle is bound to a different tree")
        if not (2 <= config.k <= tree.leaf_count_total):
            raise ValueError(f"k must be in 2..{tree.leaf_count_total}, got {config.k}")
        self.tree = tree
        self.oracle = oracle
        self.config = config
        self.rng = random.Random(config.seed)
        root = tree.root_id
        # Root mass is 1 by definition of a weighting; never queried.
        self.stats: dict[int, NodeStats] = {root: NodeStats(root, 1.0, tree.leaf_count(root))}
        self.pruning: list[int] = [root]
        self._ucb: dict[int, float] = {root: inf}
        self._lcb: dict[int, float] = {root: -inf}
        self.trace: list[tuple] = []
        self.queried: dict[str, float] = {}
        self.early_stop: str | None = None

    # -- scoring -----------------------------------------------------------

    def _rescore(self, v: int) -> None:
        if self.tree.is_leaf(v):
            self._ucb[v] = 0.0
            self._lcb[v] = 0.0
            return
        st = self.stats[v]
        if st.m == 0:
            self._ucb[v] = inf
            self._lcb[v] = -inf
            return
        d = estimate_discrepancy(st)
        r = confidence_radius(
            st,
            self.config.k,
            self.config.delta,
            self.config.radius_mode,
            strict_paper=self.config.strict_paper,
        )
        self._ucb[v] = d + r
        self._lcb[v] = d - r

    def _internal_candidates(self) -> list[int]:
        return [v for v in self.pruning if not self.tree.is_leaf(v)]

    # -- one basic query ---------------------------------------------------

    def sample_step(self) -> int:
        """Draw one leaf from the most promising internal pruning node
        (largest optimistic estimate, smallest id on ties) and record its
        weight.  Returns the sampled node's id."""
        target = -1
        best = -inf
        for v in self.pruning:
            if self.tree.is_leaf(v):
                continue
            u = self._ucb[v]
            if u > best:
                best = u
                target = v
        if target < 0:
            raise InvariantError("no internal node available to sample")
        lo, hi = self.tree.span(target)
        label = self.tree.leaf_order[self.rng.randrange(lo, hi)]
        value = self.oracle.query_leaf(label, attributed_to=target)
        self.queried[label] = value
        self.stats[target].push(value)
        self.trace.append(("SAMPLE", target, label, value))
        self._rescore(target)
        return target

    # -- splitting ---------------------------------------------------------

    def _split(self, v: int) -> None:
        l = self.tree.left(v)
        r = self.tree.right(v)
        w_r = self.oracle.query_node(r)
        w_l = self.stats[v].w_star - w_r
        if w_l < 0.0:
            if w_l < -MASS_TOL:
                raise InvariantError(f"child mass {w_l!r} below zero at node {v}")
            w_l = 0.0
        self.pruning.remove(v)
        insort(self.pruning, l)
        insort(self.pruning, r)
        self.stats[l] = NodeStats(l, w_l, self.tree.leaf_count(l))
        self.stats[r] = NodeStats(r, w_r, self.tree.leaf_count(r))
        self._rescore(l)
        self._rescore(r)
        del self._ucb[v], self._lcb[v]
        self.trace.append(("SPLIT", v, w_r))
        if not is_pruning(self.tree, self.pruning):
            raise InvariantError(f"pruning broken after splitting node {v}")

    def split_check(self) -> list[int]:
        """Split, in ascending node-id order, every node whose split
        criterion holds, re-checking after each split, until none qualifies
        or the pruning reaches size k.  Returns the nodes split."""
        performed = []
        beta = self.config.beta
        while len(self.pruning) < self.config.k:
            # Top two optimistic values let each node see max over rivals in O(1).
            top1_node = -1
            top1 = -inf
            top2 = -inf
            for v in self.pruning:
                u = self._ucb[v]
                if u > top1:
                    top2 = top1
                    top1 = u
                    top1_node = v
                elif u > top2:
                    top2 = u
            found = -1
            for v in self.pruning:
                if self.tree.is_leaf(v) or self.stats[v].m == 0:
                    continue
                rival = top2 if v == top1_node else top1
                # Same test as sc_satisfied: lcb is estimate minus radius.
                if beta * self._lcb[v] >= rival:
                    found = v
                    break
            if found < 0:
                break
            self._split(found)
            performed.append(found)
        return performed

    # -- assembling the outcome -------------------------------------------

    def result(self) -> PruningResult:
        pruning = tuple(self.pruning)
        node_weights = {v: self.stats[v].w_star for v in pruning}
        w_p = induced_weighting(self.tree, pruning, node_weights)
        w_ref = refine_with_queries(self.tree, pruning, node_weights, self.queried)
        return PruningResult(
            pruning=pruning,
            node_weights=node_weights,
            w_p=w_p,
            w_p_refined=w_ref,
            ledger=self.oracle.ledger.snapshot(),
            stats=dict(self.stats),
            trace=tuple(self.trace),
            early_stop=self.early_stop,
        )


def run_awp(tree: HierTree, oracle: Oracle, config: EngineConfig) -> PruningResult:
    """Run the adaptive loop to a size-k pruning (or an early stop)."""
    state = AwpRun(tree, oracle, config)
    cap = config.max_basic_queries
    while len(state.pruning) < config.k:
        if not state._internal_candidates():
            state.early_stop = "all-leaves"
            break
        if cap is not None and oracle.ledger.basic_queries >= cap:
            state.early_stop = "max-queries"
            break
        state.sample_step()
        state.split_check()
    return state.result()


def refine_with_queries(
    tree: HierTree,
    pruning,
    node_weights,
    queried: dict[str, float],
) -> Weighting:
    """Weighting that pins individually queried leaves to their known
    weights and spreads each node's residual mass uniformly over its
    unqueried leaves."""
    out: dict[str, float] = {}
    for v in pruning:
        lo, hi = tree.span(v)
        labels = tree.leaf_order[lo:hi]
        known = [(lab, queried[lab]) for lab in labels if lab in queried]
        residual = node_weights[v] - fsum(val for _, val in known)
        if residual < 0.0:
            # Queried masses can only overshoot the node total by rounding.
            residual = 0.0
        rest = len(labels) - len(known)
        share = residual / rest if rest else 0.0
        for lab in labels:
            out[lab] = share
        for lab, val in known:
            out[lab] = val
    return Weighting({lab: out[lab] for lab in tree.leaf_order})


def normalized_distance(result: PruningResult, truth) -> float:
    """Total variation distance between the refined output weighting and
    the true target."""
    return tv_distance(result.w_p_refined, truth)


def dump_trace(result: PruningResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in result.trace_lines():
            fh.write(line + "\n")
