"""Synthetic classification task, linear softmax model, and data poisoning.

The learning task is a desk-scale stand-in for image classification:
Gaussian blobs around fixed unit-norm class directions, classified by a
linear softmax model with analytic gradients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PartitionError(ValueError):
    """A node ended up with an empty data shard."""


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray  # (m, dim) float
    labels: np.ndarray    # (m,) int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2D array")
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must have equal length")
        if len(self.features) == 0:
            raise ValueError("dataset needs at least one sample")

    @property
    def n_samples(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class Model:
    """Linear softmax classifier: C x dim weight matrix plus C biases."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.bias])

    @classmethod
    def from_flat(cls, vec: np.ndarray, n_classes: int, dim: int) -> "Model":
        if vec.shape != (n_classes * dim + n_classes,):
            raise ValueError(f"expected flat dim {n_classes * (dim + 1)}, "
                             f"got {vec.shape}")
        w = vec[: n_classes * dim].reshape(n_classes, dim)
        return cls(weights=w, bias=vec[n_classes * dim:])

    @classmethod
    def zeros(cls, n_classes: int, dim: int) -> "Model":
        return cls(weights=np.zeros((n_classes, dim)), bias=np.zeros(n_classes))


def model_dim(n_classes: int, dim: int) -> int:
    return n_classes * dim + n_classes


def class_means(n_classes: int, dim: int) -> np.ndarray:
    """Fixed deterministic unit-norm class directions (orthonormal when
    dim >= n_classes)."""
    rng = np.random.default_rng(20240101)
    base = rng.standard_normal((dim, max(n_classes, 1)))
    if dim >= n_classes:
        q, _ = np.linalg.qr(base)
        means = q[:, :n_classes].T
    else:
        means = base[:, :n_classes].T
    return means / np.linalg.norm(means, axis=1, keepdims=True)


def synth_dataset(n_classes: int, dim: int, per_class: int, spread: float,
                  rng: np.random.Generator) -> Dataset:
    """per_class samples around each class mean, Gaussian noise of scale
    spread; sample order is interleaved by class then shuffled."""
    if n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {n_classes}")
    if dim < 1 or per_class < 1:
        raise ValueError("dim and per_class must be positive")
    means = class_means(n_classes, dim)
    labels = np.repeat(np.arange(n_classes), per_class)
    noise = rng.standard_normal((n_classes * per_class, dim))
    features = means[labels] + spread * noise
    order = rng.permutation(len(labels))
    return Dataset(features=features[order], labels=labels[order])


def partition(dataset: Dataset, n_nodes: int, classes_per_node: int,
              rng: np.random.Generator) -> list[Dataset]:
    """Split a dataset into one shard per node.

    classes_per_node == C gives the IID split: one shuffle, then even
    chunks. Otherwise each node receives classes_per_node classes assigned
    round-robin over a shuffled class list, and each class's samples are
    divided evenly among the nodes owning it.
    """
    n_classes = int(dataset.labels.max()) + 1
    if not (1 <= classes_per_node <= n_classes):
        raise ValueError(f"need 1 <= classes_per_node <= {n_classes}, "
                         f"got {classes_per_node}")
    if n_nodes < 1:
        raise ValueError("need at least one node")

    if classes_per_node == n_classes:
        order = rng.permutation(dataset.n_samples)
        chunks = np.array_split(order, n_nodes)
        shards = []
        for chunk in chunks:
            if len(chunk) == 0:
                raise PartitionError("a node received zero samples")
            shards.append(Dataset(features=dataset.features[chunk],
                                  labels=dataset.labels[chunk]))
        return shards

    class_cycle = rng.permutation(n_classes)
    owners: dict[int, list[int]] = {c: [] for c in range(n_classes)}
    pos = 0
    for node in range(n_nodes):
        for _ in range(classes_per_node):
            owners[int(class_cycle[pos % n_classes])].append(node)
            pos += 1

    per_node_idx: list[list[np.ndarray]] = [[] for _ in range(n_nodes)]
    for c in range(n_classes):
        if not owners[c]:
            continue
        idx = np.nonzero(dataset.labels == c)[0]
        idx = idx[rng.permutation(len(idx))]
        for owner, part in zip(owners[c], np.array_split(idx, len(owners[c]))):
            if len(part):
                per_node_idx[owner].append(part)

    shards = []
    for node in range(n_nodes):
        if not per_node_idx[node]:
            raise PartitionError(f"node {node} received zero samples")
        idx = np.concatenate(per_node_idx[node])
        shards.append(Dataset(features=dataset.features[idx],
                              labels=dataset.labels[idx]))
    return shards


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(model: Model, data: Dataset) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of softmax predictions and its flat gradient."""
    probs = _softmax(data.features @ model.weights.T + model.bias)
    m = data.n_samples
    picked = probs[np.arange(m), data.labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    dz = probs.copy()
    dz[np.arange(m), data.labels] -= 1.0
    dz /= m
    grad_w = dz.T @ data.features
    grad_b = dz.sum(axis=0)
    return loss, np.concatenate([grad_w.ravel(), grad_b])


def input_gradient(model: Model, data: Dataset) -> np.ndarray:
    """Gradient of the mean cross-entropy with respect to the features."""
    probs = _softmax(data.features @ model.weights.T + model.bias)
    dz = probs
    dz[np.arange(data.n_samples), data.labels] -= 1.0
    return (dz @ model.weights) / data.n_samples


def fgsm_poison(data: Dataset, model: Model, epsilon: float) -> Dataset:
    """Shift every feature by epsilon times the sign of its loss gradient."""
    if epsilon < 0:
        raise ValueError(f"attack power must be >= 0, got {epsilon}")
    shifted = data.features + epsilon * np.sign(input_gradient(model, data))
    return Dataset(features=shifted, labels=data.labels)


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    return np.argmax(features @ model.weights.T + model.bias, axis=1)


def accuracy(model: Model, data: Dataset) -> float:
    return float(np.mean(predict(model, data.features) == data.labels))


def train_centralized(data: Dataset, n_classes: int, alpha: float = 0.5,
                      iters: int = 1500) -> Model:
    """Plain gradient descent to convergence on pooled data (oracle use)."""
    dim = data.features.shape[1]
    theta = np.zeros(model_dim(n_classes, dim))
    for _ in range(iters):
        _, grad = loss_and_grad(Model.from_flat(theta, n_classes, dim), data)
        theta -= alpha * grad
    return Model.from_flat(theta, n_classes, dim)
