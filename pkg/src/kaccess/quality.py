"""Cluster-quality scoring and model selection for accessibility clusterings.

A good clustering has high intra-cluster accessibility (every member is easy
to reach from its centroid) and low inter-cluster accessibility (clusters do
not overlap). The index combines both on a log scale and charges a penalty
of ``alpha`` per one-sample cluster:

    index = mean(log a_intra) - mean(log a_inter) - alpha * n_singletons

where ``a_intra[i]`` is the minimum accessibility from centroid i to its
members, and ``a_inter[i, j]`` is the mean accessibility from the members of
cluster i to centroid j (diagonal fixed at 1, so the mean over all k*k
entries includes k zero logs). Larger is better.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kaccess.cluster import (
    ClusteringResult,
    EmptyClusterError,
    NonConvergenceError,
    k_access,
)
from kaccess.matrix import as_accessibility_matrix


@dataclass(frozen=True, eq=False)
class QualityReport:
    """Quality breakdown for one clustering: see the module docstring."""

    intra: np.ndarray
    inter: np.ndarray
    singleton_centroids: tuple
    alpha: float
    index: float

    @property
    def n_singletons(self) -> int:
        return len(self.singleton_centroids)

    def to_dict(self) -> dict:
        return {
            "aIntra": [float(x) for x in self.intra],
            "aInter": [[float(x) for x in row] for row in self.inter],
            "omega": list(self.singleton_centroids),
            "alpha": self.alpha,
            "index": self.index,
        }


def intra_accessibility(matrix, result: ClusteringResult) -> np.ndarray:
    """Per cluster: minimum accessibility from the centroid to its members."""
    m = as_accessibility_matrix(matrix, validate=False)
    out = np.empty(result.n_clusters)
    for i, c in enumerate(result.centroid_indices):
        members = result.members(c)
        out[i] = m.values[c, members].min()
    return out


def inter_accessibility(matrix, result: ClusteringResult) -> np.ndarray:
    """Pairwise cluster accessibility: mean member-to-foreign-centroid value.

    ``inter[i, j]`` averages the accessibility from every member of cluster i
    to the centroid of cluster j; the diagonal is exactly 1.
    """
    m = as_accessibility_matrix(matrix, validate=False)
    k = result.n_clusters
    inter = np.ones((k, k))
    member_lists = [result.members(c) for c in result.centroid_indices]
    for i in range(k):
        for j, cj in enumerate(result.centroid_indices):
            if i != j:
                inter[i, j] = m.values[member_lists[i], cj].mean()
    return inter


def quality_index(matrix, result: ClusteringResult, alpha: float = 1.0) -> QualityReport:
    """Score a clustering; larger is better. ``alpha`` >= 0 weighs singletons."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    intra = intra_accessibility(matrix, result)
    inter = inter_accessibility(matrix, result)
    singletons = tuple(
        int(c) for c in result.centroid_indices if result.members(c).size == 1
    )
    index = float(
        np.mean(np.log(intra)) - np.mean(np.log(inter)) - alpha * len(singletons)
    )
    return QualityReport(
        intra=intra,
        inter=inter,
        singleton_centroids=singletons,
        alpha=alpha,
        index=index,
    )


@dataclass(frozen=True)
class SweepRun:
    """One (k, seed) attempt inside a sweep; ``error`` set when it failed."""

    k: int
    seed: int
    index: float
    iterations: int
    n_singletons: int
    error: str | None = None


@dataclass(frozen=True, eq=False)
class SweepRecord:
    k: int
    report: QualityReport
    result: ClusteringResult


@dataclass(frozen=True, eq=False)
class SweepResult:
    records: tuple
    runs: tuple
    best_k: int

    def record_for(self, k: int) -> SweepRecord:
        for rec in self.records:
            if rec.k == k:
                return rec
        raise KeyError(k)

    @property
    def best(self) -> SweepRecord:
        return self.record_for(self.best_k)


def sweep_k(
    matrix,
    k_min: int,
    k_max: int,
    alpha: float = 1.0,
    restarts: int = 5,
    seed: int = 0,
    max_iter: int = 1000,
) -> SweepResult:
    """Try every k in [k_min, k_max], keeping the best-index run per k.

    Each k gets ``restarts`` runs with seeds ``seed..seed+restarts-1``. A run
    that fails (non-convergence, duplicate-drained cluster) is recorded with
    its error and skipped; it never aborts the sweep. ``best_k`` is the
    lowest k attaining the maximal index.
    """
    m = as_accessibility_matrix(matrix)
    if not 1 <= k_min <= k_max <= m.n:
        raise ValueError(f"need 1 <= k_min <= k_max <= {m.n}, got [{k_min}, {k_max}]")
    records = []
    runs = []
    for k in range(k_min, k_max + 1):
        best = None
        for r in range(restarts):
            run_seed = seed + r
            try:
                result = k_access(m, k, seed=run_seed, max_iter=max_iter, validate=False)
            except (NonConvergenceError, EmptyClusterError) as e:
                runs.append(SweepRun(k, run_seed, math.nan, 0, 0, error=str(e)))
                continue
            report = quality_index(m, result, alpha)
            runs.append(
                SweepRun(k, run_seed, report.index, result.iterations, report.n_singletons)
            )
            if best is None or report.index > best.report.index:
                best = SweepRecord(k, report, result)
        if best is not None:
            records.append(best)
    if not records:
        raise RuntimeError("every run in the sweep failed")
    best_k = records[0].k
    best_index = records[0].report.index
    for rec in records[1:]:
        if rec.report.index > best_index:
            best_k, best_index = rec.k, rec.report.index
    return SweepResult(records=tuple(records), runs=tuple(runs), best_k=best_k)


def chord_edges(inter: np.ndarray, hi: float = 0.15, lo: float = 0.05) -> list:
    """Flatten an inter-cluster matrix into chord-diagram edges.

    Returns ``(src, dst, value, tier)`` tuples over off-diagonal pairs:
    values >= ``hi`` are tier ``highlighted``, values in (lo, hi) are
    ``normal``, values <= ``lo`` are omitted entirely.
    """
    if not 0 <= lo <= hi <= 1:
        raise ValueError(f"need 0 <= lo <= hi <= 1, got lo={lo}, hi={hi}")
    inter = np.asarray(inter)
    edges = []
    k = inter.shape[0]
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            v = float(inter[i, j])
            if v <= lo:
                continue
            tier = "highlighted" if v >= hi else "normal"
            edges.append((i, j, v, tier))
    return edges


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def save_sweep_csv(sweep: SweepResult, path):
    with Path(path).open("w", newline="") as f:
        f.write("k,seed,index,iterations,numSingletons\n")
        for run in sweep.runs:
            f.write(
                f"{run.k},{run.seed},{'%.17g' % run.index},"
                f"{run.iterations},{run.n_singletons}\n"
            )


def save_sweep_reports_json(sweep: SweepResult, path):
    obj = {
        "bestK": sweep.best_k,
        "reports": {str(rec.k): rec.report.to_dict() for rec in sweep.records},
    }
    with Path(path).open("w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def save_chord_csv(edges, path):
    with Path(path).open("w", newline="") as f:
        f.write("srcCluster,dstCluster,aInter,tier\n")
        for src, dst, value, tier in edges:
            f.write(f"{src},{dst},{'%.17g' % value},{tier}\n")
