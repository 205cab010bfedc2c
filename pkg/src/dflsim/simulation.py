"""Decentralized training engine: consensus gradient tracking under attack.

Every epoch is synchronous: all nodes update from the previous epoch's
snapshot. Honest nodes mix in-neighbor models (self term included so the
mixing weights are row-stochastic) and maintain a gradient-tracker vector;
adversarial nodes, once the attack epoch passes, ignore their neighbors
and descend on an FGSM-poisoned copy of their own shard.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import learning
from .graphs import EmptyGraphError, Graph, GraphFamily, apply_failures
from .learning import Dataset, Model, fgsm_poison, loss_and_grad, model_dim
from .metrics import EpochMetrics
from .placement import HoppingParams, place

GRAPH_FAMILIES = ("er", "dg", "pa")

HONEST = "honest"
ADVERSARY = "adversary"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NodeState:
    """Per-node view of the engine state at one epoch."""

    model: Model
    tracker: np.ndarray
    shard: Dataset
    role: str
    epsilon: float = 0.0


@dataclass(frozen=True)
class SimulationConfig:
    """Complete description of one simulated training run."""

    graph_family: str = "dg"
    graph_param: float = 0.2
    n: int = 25
    strategy: str = "random"
    n_advs: int = 5
    epochs: int = 60
    t_attack: int = 15
    epsilon: float = 250.0
    epsilon_scale: float = 0.002
    alpha: float = 0.05
    local_iters: int = 1
    classes: int = 10
    feature_dim: int = 20
    samples_per_node: int = 20
    classes_per_node: int = 10
    spread: float = 0.3
    test_samples: int = 200
    p_node_fail: float = 0.0
    p_link_fail: float = 0.0
    hopping: HoppingParams = field(default_factory=HoppingParams)
    tracker_mixing: str = "in_self"
    seed: int = 1

    def __post_init__(self):
        if self.graph_family not in GRAPH_FAMILIES:
            raise ValueError(f"unknown graph family {self.graph_family!r}")
        if not (0 <= self.t_attack <= self.epochs):
            raise ValueError(f"need 0 <= t_attack <= epochs, got "
                             f"{self.t_attack} vs {self.epochs}")
        if not (0 <= self.n_advs < self.n):
            raise ValueError(f"need 0 <= n_advs < n, got {self.n_advs}")
        if not (1 <= self.classes_per_node <= self.classes):
            raise ValueError(f"need 1 <= classes_per_node <= classes, got "
                             f"{self.classes_per_node} vs {self.classes}")
        if self.alpha <= 0:
            raise ValueError("learning rate must be positive")
        if self.epsilon < 0 or self.epsilon_scale < 0:
            raise ValueError("attack power must be non-negative")
        if self.local_iters < 1:
            raise ValueError("local_iters must be >= 1")
        if self.tracker_mixing not in ("in_self", "literal_out"):
            raise ValueError(f"unknown tracker_mixing {self.tracker_mixing!r}")

    @property
    def effective_epsilon(self) -> float:
        return self.epsilon * self.epsilon_scale


def seed_streams(master: int) -> dict[str, np.random.Generator]:
    """Deterministic named substreams so baseline and attacked runs share
    graph, data, placement, and failure randomness."""
    children = np.random.SeedSequence(master).spawn(5)
    names = ("graph", "data", "placement", "failures", "test")
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def build_graph(cfg: SimulationConfig, rng: np.random.Generator) -> Graph:
    return GraphFamily(cfg.graph_family, cfg.graph_param).generate(cfg.n, rng)


def honest_step(i: int, g: Graph, x_prev: np.ndarray, y_prev: np.ndarray,
                alpha: float, grad_fn: Callable[[np.ndarray], np.ndarray],
                grad_prev: np.ndarray,
                tracker_mixing: str = "in_self") -> tuple[np.ndarray, np.ndarray]:
    """One honest update of node i from the epoch snapshot.

    Model: average of in-neighbor models plus self, minus alpha times the
    tracker. Tracker: mixed trackers plus the gradient difference at the
    new and old local models. With `literal_out` the tracker mix runs over
    out-neighbors without a self term. A node with an empty mixing set
    degenerates to self-only weights.
    """
    in_set = list(g.in_neighbors[i]) + [i]
    x_i = x_prev[in_set].mean(axis=0) - alpha * y_prev[i]
    if tracker_mixing == "in_self":
        mix_set = in_set
    else:
        mix_set = list(g.out_neighbors[i]) or [i]
    y_mixed = y_prev[mix_set].mean(axis=0)
    y_i = y_mixed + grad_fn(x_i) - grad_prev
    return x_i, y_i


def adversary_step(x_prev_i: np.ndarray, shard: Dataset, n_classes: int,
                   dim: int, alpha: float,
                   epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """One adversarial update: descend on the FGSM-poisoned shard, ignoring
    all neighbors. The poisoned copy is rebuilt from the clean shard at the
    current model. Returns the new model and the broadcast tracker (the
    gradient of the poisoned loss at the new model)."""
    model = Model.from_flat(x_prev_i, n_classes, dim)
    poisoned = fgsm_poison(shard, model, epsilon)
    _, grad = loss_and_grad(model, poisoned)
    x = x_prev_i - alpha * grad
    new_model = Model.from_flat(x, n_classes, dim)
    poisoned = fgsm_poison(shard, new_model, epsilon)
    _, tracker = loss_and_grad(new_model, poisoned)
    return x, tracker


class Simulation:
    """State and epoch loop for one run (attacked or adversary-free)."""

    def __init__(self, cfg: SimulationConfig, attacked: bool = True,
                 graph: Optional[Graph] = None):
        self.cfg = cfg
        self.attacked = attacked
        streams = seed_streams(cfg.seed)
        self.graph = graph if graph is not None else build_graph(
            cfg, streams["graph"])
        if self.graph.n != cfg.n:
            raise SimulationError("provided graph size disagrees with config")

        per_class = max(1, round(cfg.n * cfg.samples_per_node / cfg.classes))
        train = learning.synth_dataset(cfg.classes, cfg.feature_dim,
                                       per_class, cfg.spread, streams["data"])
        self.shards = learning.partition(train, cfg.n, cfg.classes_per_node,
                                         streams["data"])
        test_per_class = max(1, cfg.test_samples // cfg.classes)
        self.test_set = learning.synth_dataset(cfg.classes, cfg.feature_dim,
                                               test_per_class, cfg.spread,
                                               streams["test"])

        # The placement is computed from the same stream in both variants;
        # the baseline keeps those nodes honest but still leaves them out
        # of the accuracy average, so the two traces are comparable
        # node-for-node (and identical until the attack actually fires).
        self.roles = np.array([HONEST] * cfg.n, dtype=object)
        self.counted = np.ones(cfg.n, dtype=bool)
        if cfg.n_advs > 0:
            selection = place(self.graph, cfg.strategy, cfg.n_advs,
                              streams["placement"], hopping=cfg.hopping)
            self.adversaries = selection
            for v in selection.members:
                self.counted[v] = False
                if attacked:
                    self.roles[v] = ADVERSARY
        else:
            self.adversaries = None
        self._failure_rng = streams["failures"]
        self._failures_applied = False

        p = model_dim(cfg.classes, cfg.feature_dim)
        n = cfg.n
        self.X = np.zeros((n, p))
        self.G = np.stack([self._clean_grad(i, self.X[i]) for i in range(n)])
        self.Y = self.G.copy()

    # -- helpers ------------------------------------------------------- #

    def _clean_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        model = Model.from_flat(x, self.cfg.classes, self.cfg.feature_dim)
        return loss_and_grad(model, self.shards[i])[1]

    def node_states(self) -> list[NodeState]:
        cfg = self.cfg
        eps = cfg.effective_epsilon
        return [NodeState(model=Model.from_flat(self.X[i], cfg.classes,
                                                cfg.feature_dim),
                          tracker=self.Y[i], shard=self.shards[i],
                          role=str(self.roles[i]),
                          epsilon=eps if self.roles[i] == ADVERSARY else 0.0)
                for i in range(self.graph.n)]

    def honest_mask(self) -> np.ndarray:
        return self.roles == HONEST

    def consensus_error(self) -> float:
        mean = self.X.mean(axis=0)
        return float(np.max(np.linalg.norm(self.X - mean, axis=1)))

    def _measure(self, epoch: int) -> EpochMetrics:
        cfg = self.cfg
        honest = np.nonzero(self.counted & self.honest_mask())[0]
        if len(honest) == 0:
            raise SimulationError("no honest nodes left to measure")
        accs = [learning.accuracy(
            Model.from_flat(self.X[i], cfg.classes, cfg.feature_dim),
            self.test_set) for i in honest]
        return EpochMetrics(epoch=epoch, accuracy=float(np.mean(accs)),
                            n_honest_alive=len(honest))

    def _apply_failures(self) -> None:
        cfg = self.cfg
        if cfg.p_node_fail == 0 and cfg.p_link_fail == 0:
            return
        try:
            new_graph, index_map = apply_failures(
                self.graph, cfg.p_node_fail, cfg.p_link_fail,
                self._failure_rng)
        except EmptyGraphError as exc:
            raise SimulationError("network failure removed every node") from exc
        survivors = sorted(index_map, key=index_map.get)
        self.graph = new_graph
        self.X = self.X[survivors]
        self.Y = self.Y[survivors]
        self.G = self.G[survivors]
        self.shards = [self.shards[v] for v in survivors]
        self.roles = self.roles[survivors]
        self.counted = self.counted[survivors]

    # -- epoch loop ---------------------------------------------------- #

    def _advance(self, epoch: int) -> None:
        cfg = self.cfg
        attacking = self.attacked and epoch > cfg.t_attack
        if epoch == cfg.t_attack + 1 and not self._failures_applied:
            # the one-shot failure event fires when the attack switches on
            self._apply_failures()
            self._failures_applied = True
        g = self.graph
        n = g.n
        x_prev, y_prev, g_prev = self.X, self.Y, self.G
        x_new = np.empty_like(x_prev)
        y_new = np.empty_like(y_prev)
        g_new = np.empty_like(g_prev)
        eps = cfg.effective_epsilon
        for i in range(n):
            if attacking and self.roles[i] == ADVERSARY:
                xi = x_prev[i]
                for _ in range(cfg.local_iters):
                    xi, yi = adversary_step(xi, self.shards[i], cfg.classes,
                                            cfg.feature_dim, cfg.alpha, eps)
                x_new[i], y_new[i] = xi, yi
                g_new[i] = yi
            else:
                grad_fn = lambda x, i=i: self._clean_grad(i, x)
                xi, yi = honest_step(i, g, x_prev, y_prev, cfg.alpha,
                                     grad_fn, g_prev[i], cfg.tracker_mixing)
                for _ in range(cfg.local_iters - 1):
                    g_old = self._clean_grad(i, xi)
                    xi = xi - cfg.alpha * g_old
                    yi = yi + self._clean_grad(i, xi) - g_old
                x_new[i], y_new[i] = xi, yi
                g_new[i] = self._clean_grad(i, xi)
        self.X, self.Y, self.G = x_new, y_new, g_new

    def run(self) -> list[EpochMetrics]:
        trace = [self._measure(0)]
        for epoch in range(1, self.cfg.epochs + 1):
            self._advance(epoch)
            trace.append(self._measure(epoch))
        return trace


def run_simulation(cfg: SimulationConfig,
                   graph: Optional[Graph] = None
                   ) -> tuple[list[EpochMetrics], list[EpochMetrics]]:
    """Run the attacked configuration and its adversary-free twin.

    Both runs share every seed (graph, data, placement, failures), so the
    traces agree exactly through the attack epoch. Trace entries cover
    epochs 0 (initial models) through cfg.epochs; adversaries act, and the
    failure event fires, from epoch t_attack + 1 onward.
    """
    attacked = Simulation(cfg, attacked=True, graph=graph).run()
    baseline = Simulation(cfg, attacked=False, graph=graph).run()
    return attacked, baseline
