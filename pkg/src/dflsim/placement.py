"""Adversary-selection strategies over a communication graph.

Five strategies share one interface: uniform random, top eigenvector
centrality, top degree centrality, greedy influence-region spreading
(`maxspan`), and the spreading strategy refined by probabilistic hops
toward locally central neighbors (`maxspan-hop`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import (
    Graph,
    bfs_cluster,
    clustering_coefficients,
    degree_centrality,
    degree_variance_normalized,
    eigenvector_centrality,
)

STRATEGY_IDS = ("random", "eigen", "degree", "maxspan", "maxspan-hop")


@dataclass(frozen=True)
class HoppingParams:
    """Decision-boundary and decay parameters for the hopping mechanism.

    The defaults center the logistic decision boundary at normalized
    clustering = normalized degree variance = 0.5; none of them carries a
    ground-truth claim and all are config-exposed.
    """

    alpha0: float = 5.0
    alpha1: float = -0.5
    alpha2: float = -0.5
    decay: float = 1.0

    def __post_init__(self):
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")


@dataclass(frozen=True)
class AdversarySet:
    """Ordered selection of adversarial node indices plus provenance."""

    members: tuple[int, ...]
    strategy: str
    seed: Optional[int] = None
    hop_trace: Optional[tuple[tuple[int, tuple[int, ...]], ...]] = None

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise ValueError("adversary members must be distinct")


def _check_count(n: int, n_advs: int) -> None:
    if not (1 <= n_advs <= n):
        raise ValueError(f"need 1 <= n_advs <= {n}, got {n_advs}")


def place_random(g: Graph, n_advs: int, rng: np.random.Generator) -> AdversarySet:
    """Uniform sample of n_advs distinct nodes."""
    _check_count(g.n, n_advs)
    members = rng.choice(g.n, size=n_advs, replace=False)
    return AdversarySet(members=tuple(int(v) for v in members),
                        strategy="random")


def place_centrality(g: Graph, n_advs: int,
                     measure: str = "eigen") -> AdversarySet:
    """The n_advs nodes with the highest centrality, ties by lowest index."""
    _check_count(g.n, n_advs)
    if measure == "eigen":
        values = eigenvector_centrality(g)
    elif measure == "degree":
        values = degree_centrality(g).astype(float)
    else:
        raise ValueError(f"unknown centrality measure {measure!r}")
    order = np.argsort(-values, kind="stable")
    return AdversarySet(members=tuple(int(v) for v in order[:n_advs]),
                        strategy=measure)


def influence_clusters(g: Graph, n_advs: int) -> list[frozenset[int]]:
    """BFS influence region of every node, sized floor(n / n_advs)."""
    s_cluster = max(1, g.n // n_advs)
    return [bfs_cluster(g, v, s_cluster) for v in range(g.n)]


def greedy_overlap(g: Graph, members: tuple[int, ...],
                   n_advs: Optional[int] = None) -> int:
    """Accumulated influence-region overlap of a selection, in its order."""
    clusters = influence_clusters(g, n_advs or len(members))
    covered: set[int] = set()
    total = 0
    for a in members:
        total += len(clusters[a] & covered)
        covered |= clusters[a]
    return total


def place_maxspan(g: Graph, n_advs: int, rng: np.random.Generator, *,
                  first: Optional[int] = None) -> AdversarySet:
    """Greedy spread of adversaries by minimizing influence-region overlap.

    The first node is drawn uniformly at random (or pinned via `first`,
    a testing and analysis hook); each following pick is the honest node
    whose BFS influence region overlaps least with the regions already
    claimed, ties broken by lowest node index.
    """
    _check_count(g.n, n_advs)
    clusters = influence_clusters(g, n_advs)
    if first is None:
        first = int(rng.integers(g.n))
    elif not (0 <= first < g.n):
        raise ValueError(f"first pick {first} out of range")
    members = [first]
    covered = set(clusters[first])
    honest = sorted(set(range(g.n)) - {first})
    while len(members) < n_advs:
        o_min = math.inf
        a_best = -1
        for v in honest:
            o = len(clusters[v] & covered)
            if o < o_min:
                o_min = o
                a_best = v
        members.append(a_best)
        covered |= clusters[a_best]
        honest.remove(a_best)
    return AdversarySet(members=tuple(members), strategy="maxspan")


def hop_probability(c_hat: float, var_hat: float, params: HoppingParams,
                    t: int, n: int) -> float:
    """Probability of one more hop after t hops on an n-node graph.

    Product of a logistic decision term over the normalized clustering
    coefficient and degree variance, and an exponential decay in the hop
    count scaled by log n.
    """
    if n <= 1:
        raise ValueError(f"need n >= 2 (log n > 0), got {n}")
    if t < 0:
        raise ValueError(f"hop count must be >= 0, got {t}")
    z = params.alpha0 * (c_hat + params.alpha1) * (var_hat + params.alpha2)
    if z > 700.0:  # exp would overflow; logistic is 0 to double precision
        logistic = 0.0
    else:
        logistic = 1.0 / (1.0 + math.exp(z))
    return logistic * math.exp(-params.decay * t / math.log(n))


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.zeros_like(values, dtype=float)
    return (values - lo) / (hi - lo)


def place_maxspan_hopping(g: Graph, n_advs: int, params: HoppingParams,
                          rng: np.random.Generator, *,
                          first: Optional[int] = None) -> AdversarySet:
    """Greedy spreading followed by probabilistic hops to central neighbors.

    Each placed adversary independently keeps hopping to its highest
    eigenvector-centrality out-neighbor (excluding current adversaries)
    while uniform draws stay below the hop probability; the hop chance
    decays with hops already taken. Records the hop trace per adversary.
    """
    base = place_maxspan(g, n_advs, rng, first=first)
    c_hat = _minmax(clustering_coefficients(g))
    var_hat = degree_variance_normalized(g)
    centrality: Optional[np.ndarray] = None

    def rank(v: int) -> tuple[float, int]:
        # centrality is only needed once a hop has several candidates, so
        # compute it lazily (single-neighbor hops work even on graphs where
        # power iteration would not converge)
        nonlocal centrality
        if centrality is None:
            centrality = eigenvector_centrality(g)
        return (float(centrality[v]), -v)

    members = list(base.members)
    current = set(members)
    trace = []
    for idx, start in enumerate(base.members):
        a = start
        hops: list[int] = []
        t = 0
        while True:
            p = hop_probability(float(c_hat[start]), var_hat, params, t, g.n)
            if rng.random() >= p:
                break
            candidates = [v for v in g.out_neighbors[a] if v not in current]
            if not candidates:
                break
            if len(candidates) == 1:
                target = candidates[0]
            else:
                target = max(candidates, key=rank)
            current.remove(a)
            current.add(target)
            a = target
            hops.append(target)
            t += 1
        members[idx] = a
        trace.append((start, tuple(hops)))
    return AdversarySet(members=tuple(members), strategy="maxspan-hop",
                        hop_trace=tuple(trace))


def place(g: Graph, strategy: str, n_advs: int, rng: np.random.Generator,
          hopping: Optional[HoppingParams] = None) -> AdversarySet:
    """Dispatch by strategy identifier (see STRATEGY_IDS)."""
    if strategy == "random":
        return place_random(g, n_advs, rng)
    if strategy in ("eigen", "degree"):
        return place_centrality(g, n_advs, measure=strategy)
    if strategy == "maxspan":
        return place_maxspan(g, n_advs, rng)
    if strategy == "maxspan-hop":
        return place_maxspan_hopping(g, n_advs, hopping or HoppingParams(), rng)
    raise ValueError(f"unknown strategy {strategy!r}; "
                     f"expected one of {STRATEGY_IDS}")
