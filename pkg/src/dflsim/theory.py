"""Numerical check of the adversarial-impact lower bound, plus a runtime
probe for the greedy placement algorithm.

The bound concerns consensus-only aggregation (neighbor averaging without
a self term, divided by the common degree) on regular symmetric graphs,
with adversaries that keep every stochastic-gradient coordinate at or
above a floor. Both sides of the inequality are estimated by Monte Carlo
over paired minibatch draws: an attacked trajectory and an all-honest
twin share every random choice.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import Graph, circulant_graph, eigenvector_centrality, gen_erdos_renyi
from .placement import place_maxspan


class AssumptionError(ValueError):
    """The scenario violates a structural assumption of the bound."""


def check_regular_symmetric(g: Graph) -> int:
    """Return the common degree d, or raise if g is not a symmetric
    d-regular digraph."""
    for i, j in g.edges:
        if (j, i) not in g.edges:
            raise AssumptionError(f"edge ({i}, {j}) has no reverse; "
                                  "adjacency must be symmetric")
    degrees = {len(ns) for ns in g.out_neighbors}
    if len(degrees) != 1:
        raise AssumptionError(f"graph is not regular (degrees {sorted(degrees)})")
    d = degrees.pop()
    if d < 1:
        raise AssumptionError("degree must be at least 1")
    return d


def consensus_only_step(x: np.ndarray, g: Graph, alpha: float,
                        grads: np.ndarray) -> np.ndarray:
    """One aggregation step x <- (E x) / d - alpha * grads.

    No self term: each node averages exactly its neighbors. Valid only on
    regular symmetric graphs, where E/d is doubly stochastic.
    """
    d = check_regular_symmetric(g)
    mixed = np.zeros_like(x)
    for i in range(g.n):
        mixed[i] = x[list(g.out_neighbors[i])].sum(axis=0) / d
    return mixed - alpha * grads


@dataclass(frozen=True)
class BoundScenario:
    """One verification cell: graph, adversary set, and loss data.

    Per-node losses are mean squared distances to a private target cloud,
    so a stochastic gradient at x is x minus a minibatch mean of targets.
    data_scale keeps honest gradients small relative to delta_min, the
    regime in which the adversarial floor binds.
    """

    graph: Graph
    adversaries: tuple[int, ...]
    delta_min: float
    alpha: float = 0.05
    horizon: int = 20
    dim: int = 2
    n_samples: int = 20
    batch_size: int = 10
    data_scale: float = 0.1
    data_seed: int = 0
    scenario_id: str = ""

    def __post_init__(self):
        check_regular_symmetric(self.graph)
        if len(set(self.adversaries)) != len(self.adversaries):
            raise AssumptionError("adversary set has duplicates")
        for a in self.adversaries:
            if not (0 <= a < self.graph.n):
                raise AssumptionError(f"adversary {a} out of range")
        if self.alpha <= 0 or self.horizon < 0 or self.dim < 1:
            raise AssumptionError("need alpha > 0, horizon >= 0, dim >= 1")
        if not (1 <= self.batch_size <= self.n_samples):
            raise AssumptionError("need 1 <= batch_size <= n_samples")

    @property
    def degree(self) -> int:
        return len(self.graph.out_neighbors[0])

    def targets(self) -> np.ndarray:
        rng = np.random.default_rng(self.data_seed)
        return self.data_scale * rng.standard_normal(
            (self.graph.n, self.n_samples, self.dim))


@dataclass(frozen=True)
class BoundResult:
    scenario_id: str
    n: int
    d: int
    n_advs: int
    delta_min: float
    alpha: float
    horizon: int
    trials: int
    lhs: float
    rhs: float
    margin: float
    stderr: float
    passed: bool


def _bound_trials(scenario: BoundScenario, trials: int,
                  rng: np.random.Generator
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-trial (lhs, adversary-term, honest-term) samples."""
    g = scenario.graph
    n, p = g.n, scenario.dim
    d = check_regular_symmetric(g)
    e = g.adjacency_matrix()
    m = e / d
    adv = np.array(sorted(scenario.adversaries), dtype=int)
    adv_mask = np.zeros(n, dtype=bool)
    adv_mask[adv] = True
    v = eigenvector_centrality(g)
    targets = scenario.targets()
    alpha = scenario.alpha
    delta = scenario.delta_min

    lhs = np.empty(trials)
    adv_term = np.empty(trials)
    hon_term = np.empty(trials)
    for trial in range(trials):
        batches = rng.integers(0, scenario.n_samples,
                               size=(scenario.horizon + 1, n,
                                     scenario.batch_size))
        x_att = np.zeros((n, p))
        x_hon = np.zeros((n, p))
        s_adv = np.zeros(p)
        s_hon = np.zeros(p)
        for step in range(scenario.horizon + 1):
            batch_means = np.take_along_axis(
                targets, batches[step][:, :, None], axis=1).mean(axis=1)
            g_att = x_att - batch_means
            g_hon = x_hon - batch_means
            g_att[adv_mask] = np.maximum(g_att[adv_mask], delta)
            s_adv += (v[adv_mask, None] * (delta - g_hon[adv_mask])).sum(axis=0)
            s_hon += (v[~adv_mask, None]
                      * (g_att[~adv_mask] - g_hon[~adv_mask])).sum(axis=0)
            x_att = m @ x_att - alpha * g_att
            x_hon = m @ x_hon - alpha * g_hon
        lhs[trial] = np.sum((x_att - x_hon) ** 2)
        adv_term[trial] = alpha ** 2 * np.sum(s_adv ** 2)
        hon_term[trial] = alpha ** 2 * np.sum(s_hon ** 2)
    return lhs, adv_term, hon_term


def lower_bound_sides(scenario: BoundScenario, trials: int,
                      rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimates of both sides of the impact inequality.

    lhs is the expected squared Frobenius distance between attacked and
    honest model stacks after the horizon; rhs is the centrality-weighted
    adversarial term minus the honest drift term.
    """
    lhs, adv_term, hon_term = _bound_trials(scenario, trials, rng)
    return float(lhs.mean()), float(adv_term.mean() - hon_term.mean())


def verify_lower_bound(scenarios: Sequence[BoundScenario], trials: int,
                       rng: np.random.Generator) -> list[BoundResult]:
    """Evaluate every scenario; a cell passes when lhs >= rhs within three
    standard errors of the Monte Carlo margin."""
    results = []
    for scenario in scenarios:
        lhs, adv_term, hon_term = _bound_trials(scenario, trials, rng)
        margins = lhs - adv_term + hon_term
        margin = float(margins.mean())
        stderr = float(margins.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        results.append(BoundResult(
            scenario_id=scenario.scenario_id or f"n{scenario.graph.n}"
            f"_a{len(scenario.adversaries)}_d{scenario.delta_min}",
            n=scenario.graph.n, d=scenario.degree,
            n_advs=len(scenario.adversaries), delta_min=scenario.delta_min,
            alpha=scenario.alpha, horizon=scenario.horizon, trials=trials,
            lhs=float(lhs.mean()),
            rhs=float(adv_term.mean() - hon_term.mean()),
            margin=margin, stderr=stderr, passed=margin >= -3.0 * stderr))
    return results


def default_scenario_grid(n_advs_values: Sequence[int] = (1, 2, 3),
                          delta_values: Sequence[float] = (0.5, 1.0, 2.0),
                          horizon: int = 20, alpha: float = 0.05,
                          dim: int = 2, data_seed: int = 0
                          ) -> list[BoundScenario]:
    """The standard grid: an 8-node 3-regular symmetric graph (a cycle with
    diameter chords), adversaries at the lowest indices."""
    g = circulant_graph(8, (1, 4))
    grid = []
    for k in n_advs_values:
        for delta in delta_values:
            grid.append(BoundScenario(
                graph=g, adversaries=tuple(range(k)), delta_min=delta,
                alpha=alpha, horizon=horizon, dim=dim, data_seed=data_seed,
                scenario_id=f"adv{k}_delta{delta:g}"))
    return grid


# --------------------------- complexity probe -------------------------- #

@dataclass(frozen=True)
class TimingRow:
    n: int
    median_seconds: float
    cv: float  # coefficient of variation across repeats


@dataclass(frozen=True)
class TimingReport:
    rows: tuple[TimingRow, ...]
    loglog_slope: float


def complexity_probe(sizes: Sequence[int], n_adv_fraction: float = 0.1,
                     repeats: int = 5, p: float = 0.2,
                     seed: int = 0) -> TimingReport:
    """Median wall time of the greedy placement per graph size, with the
    fitted log-log slope across sizes."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        g = gen_erdos_renyi(n, p, rng)
        n_advs = max(1, int(round(n_adv_fraction * n)))
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            place_maxspan(g, n_advs, rng)
            times.append(time.perf_counter() - t0)
        med = float(np.median(times))
        cv = float(np.std(times) / np.mean(times)) if np.mean(times) > 0 else 0.0
        rows.append(TimingRow(n=n, median_seconds=med, cv=cv))
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r.n for r in rows]),
                                 np.log([max(r.median_seconds, 1e-9)
                                         for r in rows]), 1)[0])
    else:
        slope = 0.0
    return TimingReport(rows=tuple(rows), loglog_slope=slope)
