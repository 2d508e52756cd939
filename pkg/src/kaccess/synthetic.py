"""Planted-cluster accessibility matrices with known ground truth.

These generators exist as testing oracles: the group structure is known, so
clustering and model-selection behaviour can be checked against it. The cost
model is additive and directed: leaving sample i costs ``escape[i]``,
arriving at sample j costs ``depth[j]``, and crossing between groups adds a
hop cost, with a fraction of cross-group transitions blocked entirely. The
resulting matrices are genuinely asymmetric.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kaccess.cluster import ClusteringResult
from kaccess.matrix import (
    DEFAULT_FLOOR,
    UNREACHABLE,
    AccessibilityMatrix,
    access_from_time,
    as_accessibility_matrix,
)


@dataclass(frozen=True)
class PlantedSpec:
    """Parameters of the planted generator.

    Defaults give: within-group accessibility >= exp(-0.7) ~ 0.497 and
    cross-group accessibility <= exp(-3) ~ 0.0498 (or the floor when
    blocked), i.e. a tenfold separation.
    """

    n: int
    k_star: int
    escape_max: float = 0.2
    depth_max: float = 0.5
    hop_cost: float = 3.0
    block_prob: float = 0.2
    seed: int = 0

    def validate(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.k_star <= self.n:
            raise ValueError(f"k_star must lie in [1, {self.n}], got {self.k_star}")
        for name in ("escape_max", "depth_max", "hop_cost"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.block_prob <= 1.0:
            raise ValueError(f"block_prob must lie in [0, 1], got {self.block_prob}")


@dataclass(frozen=True, eq=False)
class PlantedData:
    """Generated matrix plus the raw ingredients, for independent checking."""

    spec: PlantedSpec
    matrix: AccessibilityMatrix
    labels: np.ndarray
    escape: np.ndarray
    depth: np.ndarray
    blocked: np.ndarray

    def times(self) -> np.ndarray:
        """Reconstruct the underlying time costs (inf where blocked)."""
        cross = self.labels[:, None] != self.labels[None, :]
        t = self.escape[:, None] + self.depth[None, :] + self.spec.hop_cost * cross
        return np.where(self.blocked, UNREACHABLE, t)


def balanced_labels(n: int, k: int) -> np.ndarray:
    """Contiguous groups whose sizes differ by at most one."""
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    return np.repeat(np.arange(k), sizes)


def generate_planted_data(spec: PlantedSpec, floor: float = DEFAULT_FLOOR) -> PlantedData:
    """Build a planted matrix deterministically from the spec's seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    labels = balanced_labels(spec.n, spec.k_star)
    escape = rng.uniform(0.0, spec.escape_max, spec.n)
    depth = rng.uniform(0.0, spec.depth_max, spec.n)
    cross = labels[:, None] != labels[None, :]
    blocked = cross & (rng.random((spec.n, spec.n)) < spec.block_prob)
    times = escape[:, None] + depth[None, :] + spec.hop_cost * cross
    times = np.where(blocked, UNREACHABLE, times)
    values = access_from_time(times, floor)
    np.fill_diagonal(values, 1.0)
    matrix = AccessibilityMatrix(values, floor=floor)
    return PlantedData(
        spec=spec, matrix=matrix, labels=labels, escape=escape, depth=depth, blocked=blocked
    )


def generate_planted(spec: PlantedSpec, floor: float = DEFAULT_FLOOR):
    """Planted matrix and ground-truth labels (see generate_planted_data)."""
    data = generate_planted_data(spec, floor)
    return data.matrix, data.labels


def brute_force_best_g(matrix, n_clusters: int):
    """Exhaustive optimum of the clustering objective G, for small n only.

    For a fixed centroid set the assignment maximizing
    ``min_i A[assignment[i], i]`` is the per-sample argmax, so enumerating
    centroid combinations covers every (assignment, centroids) choice
    exactly. Ties fall to the lexicographically first combination.
    """
    m = as_accessibility_matrix(matrix, validate=False)
    A = m.values
    n = m.n
    if n > 10:
        raise ValueError(f"brute force is limited to n <= 10, got n={n}")
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must lie in [1, {n}], got {n_clusters}")
    cols = np.arange(n)
    best_g = -np.inf
    best = None
    for combo in itertools.combinations(range(n), n_clusters):
        rows = A[list(combo), :]
        positions = rows.argmax(axis=0)
        g = float(rows[positions, cols].min())
        if g > best_g:
            best_g = g
            best = (combo, positions)
    combo, positions = best
    assignment = np.asarray(combo)[positions]
    result = ClusteringResult(
        centroid_indices=combo,
        assignment=assignment,
        objective_trace=(best_g,),
        iterations=0,
        seed=None,
    )
    return best_g, result


def save_labels_csv(labels, path):
    with Path(path).open("w", newline="") as f:
        f.write("index,group\n")
        for i, g in enumerate(labels):
            f.write(f"{i},{int(g)}\n")


def load_labels_csv(path) -> np.ndarray:
    path = Path(path)
    with path.open() as f:
        header = f.readline().strip()
        if header != "index,group":
            raise ValueError(f"{path}: bad header {header!r}")
        pairs = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            i, g = line.split(",")
            pairs.append((int(i), int(g)))
    pairs.sort()
    return np.array([g for _, g in pairs], dtype=int)
