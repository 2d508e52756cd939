"""K-Access: directed-similarity clustering by alternating local search.

Operates on a precomputed accessibility matrix where ``A[i, j]`` is the
accessibility from sample i to sample j. Centroids are actual samples
(medoid style). The assignment step sends every sample to the centroid with
the highest accessibility *to* it; the update step moves each centroid to
the member with the best worst-case accessibility to its cluster mates.

Both steps are non-decreasing in the objective

    G = min_i A[assignment[i], i]

and G only takes values that occur as matrix entries, so the alternation
terminates. All argmax/argmin ties resolve to the lowest candidate index
(for assignment: the earliest centroid in ``centroid_indices``), which makes
runs bit-reproducible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from kaccess.matrix import DEFAULT_FLOOR, as_accessibility_matrix


class EmptyClusterError(RuntimeError):
    """A cluster lost all members; only duplicate samples can cause this."""


class NonConvergenceError(RuntimeError):
    """Assignments were still changing at the iteration cap.

    The alternation provably terminates under deterministic tie-breaking, so
    hitting the cap indicates a bug or corrupted input, not a tuning problem.
    """


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    """Outcome of one clustering run.

    ``centroid_indices`` holds k distinct sample indices; ``assignment[i]``
    is the centroid sample index that sample i belongs to. The objective
    trace records G after the initial assignment and after every subsequent
    update and assignment half-step, and is non-decreasing.
    """

    centroid_indices: tuple
    assignment: np.ndarray
    objective_trace: tuple
    iterations: int
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=int)
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)
        object.__setattr__(self, "centroid_indices", tuple(int(c) for c in self.centroid_indices))
        object.__setattr__(self, "objective_trace", tuple(float(g) for g in self.objective_trace))

    @property
    def n_clusters(self) -> int:
        return len(self.centroid_indices)

    @property
    def n_samples(self) -> int:
        return self.assignment.size

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    def labels(self) -> np.ndarray:
        """Assignment expressed as cluster positions 0..k-1."""
        lookup = {c: pos for pos, c in enumerate(self.centroid_indices)}
        return np.array([lookup[int(c)] for c in self.assignment], dtype=int)

    def members(self, centroid: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == centroid)

    def cluster_sizes(self) -> np.ndarray:
        return np.array([self.members(c).size for c in self.centroid_indices], dtype=int)

    def to_dict(self) -> dict:
        return {
            "k": self.n_clusters,
            "seed": self.seed,
            "cIndex": list(self.centroid_indices),
            "assignment": [int(a) for a in self.assignment],
            "gTrace": list(self.objective_trace),
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ClusteringResult":
        return cls(
            centroid_indices=tuple(obj["cIndex"]),
            assignment=np.asarray(obj["assignment"], dtype=int),
            objective_trace=tuple(obj["gTrace"]),
            iterations=int(obj["iterations"]),
            seed=obj.get("seed"),
        )


def save_clustering_json(result: ClusteringResult, path):
    with Path(path).open("w") as f:
        json.dump(result.to_dict(), f, indent=2)
        f.write("\n")


def load_clustering_json(path) -> ClusteringResult:
    with Path(path).open() as f:
        return ClusteringResult.from_dict(json.load(f))


def _check_k(n_clusters: int, n: int):
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must lie in [1, {n}], got {n_clusters}")


def _check_centroids(centroid_indices, n: int) -> np.ndarray:
    c = np.asarray(centroid_indices, dtype=int)
    if c.size == 0:
        raise ValueError("centroid list must be non-empty")
    if len(set(c.tolist())) != c.size:
        raise ValueError(f"centroid indices must be distinct, got {c.tolist()}")
    if c.min() < 0 or c.max() >= n:
        raise ValueError(f"centroid index out of range [0, {n})")
    return c


def init_centroids(matrix, n_clusters: int, seed: int = 0) -> tuple:
    """Seed the search with k mutually hard-to-reach samples.

    The first centroid is drawn uniformly from all samples; each following
    one minimizes the summed two-way accessibility to the centroids chosen
    so far, i.e. it is the sample furthest from all of them.
    """
    m = as_accessibility_matrix(matrix, validate=False)
    A = m.values
    n = m.n
    _check_k(n_clusters, n)
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    caccess = np.zeros(n)
    for _ in range(1, n_clusters):
        last = chosen[-1]
        caccess = caccess + A[last, :] + A[:, last]
        masked = caccess.copy()
        masked[chosen] = np.inf
        chosen.append(int(np.argmin(masked)))
    return tuple(chosen)


def assign(matrix, centroid_indices) -> np.ndarray:
    """Send every sample to the centroid with the highest accessibility to it."""
    m = as_accessibility_matrix(matrix, validate=False)
    c = _check_centroids(centroid_indices, m.n)
    winners = np.argmax(m.values[c, :], axis=0)  # first max = earliest centroid
    return c[winners]


def update_centroids(matrix, centroid_indices, assignment) -> tuple:
    """Move each centroid to the member with maximal worst-case accessibility.

    For cluster i the new centroid is the member j maximizing
    ``min over members l of A[j, l]``; singleton clusters keep their sole
    member. Raises :class:`EmptyClusterError` if a cluster has no members,
    naming the duplicate pair responsible.
    """
    m = as_accessibility_matrix(matrix, validate=False)
    A = m.values
    c = _check_centroids(centroid_indices, m.n)
    assignment = np.asarray(assignment, dtype=int)
    new = []
    for ci in c:
        members = np.flatnonzero(assignment == ci)
        if members.size == 0:
            _raise_empty(A, int(ci), assignment)
        sub = A[np.ix_(members, members)]
        worst = sub.min(axis=1)
        new.append(int(members[np.argmax(worst)]))  # members ascending: tie -> lowest
    return tuple(new)


def _raise_empty(A: np.ndarray, centroid: int, assignment: np.ndarray):
    taken_by = int(assignment[centroid])
    raise EmptyClusterError(
        f"cluster of centroid {centroid} has no members: sample {centroid} was "
        f"captured by centroid {taken_by} (accessibility {float(A[taken_by, centroid])!r}); "
        f"samples {taken_by} and {centroid} look like duplicates"
    )


def objective_g(matrix, assignment) -> float:
    """G = min over samples of the accessibility from their centroid to them."""
    m = as_accessibility_matrix(matrix, validate=False)
    a = np.asarray(assignment, dtype=int)
    return float(m.values[a, np.arange(a.size)].min())


def k_access(
    matrix,
    n_clusters: int,
    seed: int = 0,
    max_iter: int = 1000,
    init=None,
    validate: bool = True,
) -> ClusteringResult:
    """Cluster a directed accessibility matrix into ``n_clusters`` groups.

    Alternates assignment and centroid-update steps until the assignment
    array is unchanged between consecutive iterations. ``init`` may supply
    explicit initial centroid indices (the seed then only labels the run).

    Raises :class:`NonConvergenceError` if ``max_iter`` is hit while the
    assignment is still changing, and :class:`EmptyClusterError` when
    duplicate samples drain a cluster.
    """
    m = as_accessibility_matrix(matrix, validate=validate)
    A = m.values
    n = m.n
    _check_k(n_clusters, n)
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if init is not None:
        cidx = _check_centroids(init, n)
        if cidx.size != n_clusters:
            raise ValueError(f"init has {cidx.size} centroids, expected {n_clusters}")
        cidx = tuple(int(c) for c in cidx)
    else:
        cidx = init_centroids(m, n_clusters, seed)

    assignment = assign(m, cidx)
    _ensure_no_empty(A, cidx, assignment)
    trace = [objective_g(m, assignment)]

    iterations = 0
    converged = False
    for _ in range(max_iter):
        previous = assignment
        new_cidx = update_centroids(m, cidx, assignment)
        relabel = np.arange(n)
        relabel[np.asarray(cidx)] = new_cidx
        mid_assignment = relabel[assignment]
        cidx = new_cidx
        trace.append(objective_g(m, mid_assignment))
        assert trace[-1] >= trace[-2], "objective decreased after update step"
        assignment = assign(m, cidx)
        _ensure_no_empty(A, cidx, assignment)
        trace.append(objective_g(m, assignment))
        assert trace[-1] >= trace[-2], "objective decreased after assignment step"
        iterations += 1
        if np.array_equal(previous, assignment):
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"assignment still changing after {max_iter} iterations (n={n}, k={n_clusters})"
        )
    assert np.isin(np.asarray(trace), A).all(), "objective left the set of matrix entries"
    return ClusteringResult(
        centroid_indices=cidx,
        assignment=assignment,
        objective_trace=tuple(trace),
        iterations=iterations,
        seed=seed,
    )


def _ensure_no_empty(A: np.ndarray, centroid_indices, assignment: np.ndarray):
    present = set(assignment.tolist())
    for c in centroid_indices:
        if int(c) not in present:
            _raise_empty(A, int(c), assignment)


def k_access_best_of(
    matrix,
    n_clusters: int,
    restarts: int = 5,
    seed: int = 0,
    max_iter: int = 1000,
    validate: bool = True,
) -> ClusteringResult:
    """Diversified multistart; keeps the run with the highest final G.

    The first restart uses the canonical furthest-first initialization. Later
    restarts alternate between perturbing the incumbent (swapping in its
    bottleneck sample, the arg-min of G, as a centroid) and uniformly random
    centroid sets. The alternation escapes shallow basins that reseeding the
    first centroid alone cannot leave. Deterministic given (matrix, k,
    restarts, seed); ties keep the earliest restart.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    m = as_accessibility_matrix(matrix, validate=validate)
    n = m.n
    best = k_access(m, n_clusters, seed=seed, max_iter=max_iter, validate=False)
    tried = {frozenset(best.centroid_indices)}
    for r in range(1, restarts):
        init = None
        if r % 2 == 1:
            served = m.values[best.assignment, np.arange(n)]
            bottleneck = int(np.argmin(served))
            if bottleneck not in best.centroid_indices:
                swapped = list(best.centroid_indices)
                swapped[((r - 1) // 2) % n_clusters] = bottleneck
                init = tuple(swapped)
        if init is None or frozenset(init) in tried:
            rng = np.random.default_rng(seed + r)
            init = tuple(int(x) for x in rng.choice(n, size=n_clusters, replace=False))
        tried.add(frozenset(init))
        result = k_access(m, n_clusters, seed=seed + r, max_iter=max_iter, init=init, validate=False)
        if result.objective > best.objective:
            best = result
    return best


class KAccess(ClusterMixin, BaseEstimator):
    """Clusterer over a precomputed directed accessibility matrix.

    Drop-in sklearn-style estimator: ``fit(X)`` takes the (n, n) matrix of
    accessibility values (row i = accessibility from sample i), analogous to
    clusterers with a precomputed affinity. Runs ``n_restarts`` seeded
    searches and keeps the best final objective.

    Parameters
    ----------
    n_clusters : int, default=8
        Number of clusters to form.
    n_restarts : int, default=5
        Independent seeded runs; the highest-objective run wins.
    random_state : int, default=0
        Base seed. Unlike most sklearn estimators this defaults to a fixed
        value: identical inputs must give bit-identical results.
    max_iter : int, default=1000
        Safety cap; the alternation terminates long before this.
    floor : float, default=1e-8
        Lower clamp used when X is a raw array.
    validate : bool, default=True
        Check matrix invariants (range, unit diagonal, NaN) before fitting.

    Attributes
    ----------
    centroid_indices_ : ndarray of shape (n_clusters,)
        Sample indices of the discovered centroids.
    labels_ : ndarray of shape (n_samples,)
        Cluster position (0..k-1) of every sample.
    assignment_ : ndarray of shape (n_samples,)
        Centroid sample index of every sample.
    objective_trace_ : ndarray
        Non-decreasing trace of the clustering objective.
    n_iter_ : int
        Iterations of the winning run.
    result_ : ClusteringResult
        Full record of the winning run.
    """

    def __init__(
        self,
        n_clusters: int = 8,
        n_restarts: int = 5,
        random_state: int = 0,
        max_iter: int = 1000,
        floor: float = DEFAULT_FLOOR,
        validate: bool = True,
    ):
        self.n_clusters = n_clusters
        self.n_restarts = n_restarts
        self.random_state = random_state
        self.max_iter = max_iter
        self.floor = floor
        self.validate = validate

    def fit(self, X, y=None):
        m = as_accessibility_matrix(X, floor=self.floor, validate=self.validate)
        result = k_access_best_of(
            m,
            self.n_clusters,
            restarts=self.n_restarts,
            seed=self.random_state,
            max_iter=self.max_iter,
            validate=False,
        )
        self.result_ = result
        self.centroid_indices_ = np.array(result.centroid_indices, dtype=int)
        self.assignment_ = np.array(result.assignment)
        self.labels_ = result.labels()
        self.objective_trace_ = np.array(result.objective_trace)
        self.n_iter_ = result.iterations
        return self
