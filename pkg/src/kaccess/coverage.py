"""Effective exploration regions and coverage analysis of initial-state sets.

The effective region of a source state is every sample it can reach within a
time budget t0, i.e. every j with ``A[source, j] > exp(-t0)``. A good set of
initial states covers most of the population with little overlap between its
regions; this module measures that, it does not optimize it.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kaccess.matrix import as_accessibility_matrix


@dataclass(frozen=True)
class InitialStateSet:
    """Distinct sample indices with a display label."""

    indices: tuple
    label: str = ""

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"indices must be distinct, got {idx}")
        if any(i < 0 for i in idx):
            raise ValueError("indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Coverage of one initial-state set at time budget ``t0``.

    ``coverage`` is the fraction of the population inside at least one
    region; ``overlap_ratio`` is the fraction of region membership that is
    redundant, (sum |R_i| - |union R_i|) / sum |R_i|; ``per_state`` counts
    how many regions contain each sample.
    """

    label: str
    t0: float
    coverage: float
    overlap_ratio: float
    per_state: np.ndarray

    def histogram(self) -> dict:
        return dict(sorted(Counter(self.per_state.tolist()).items()))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "t0": self.t0,
            "coverage": self.coverage,
            "overlapRatio": self.overlap_ratio,
            "perStateHistogram": {str(k): v for k, v in self.histogram().items()},
        }


def effective_region(matrix, source: int, t0: float) -> np.ndarray:
    """Samples reachable from ``source`` within ``t0`` seconds.

    Membership is strict (time cost < t0 means accessibility > exp(-t0)),
    and floor-valued entries are always outside: unreachable stays
    unreachable no matter how generous the budget.
    """
    if t0 <= 0:
        raise ValueError(f"t0 must be > 0, got {t0}")
    m = as_accessibility_matrix(matrix, validate=False)
    if not 0 <= source < m.n:
        raise ValueError(f"source index {source} out of range [0, {m.n})")
    threshold = max(math.exp(-t0), m.floor)
    return np.flatnonzero(m.values[source, :] > threshold)


def coverage_report(matrix, init_set: InitialStateSet, t0: float = 3.0) -> CoverageReport:
    m = as_accessibility_matrix(matrix, validate=False)
    if init_set.indices and max(init_set.indices) >= m.n:
        raise ValueError(f"init set index out of range [0, {m.n})")
    per_state = np.zeros(m.n, dtype=int)
    total = 0
    for s in init_set.indices:
        region = effective_region(m, s, t0)
        per_state[region] += 1
        total += region.size
    covered = int(np.count_nonzero(per_state))
    return CoverageReport(
        label=init_set.label,
        t0=t0,
        coverage=covered / m.n,
        overlap_ratio=(total - covered) / max(1, total),
        per_state=per_state,
    )


def compare_initializations(matrix, sets, t0: float = 3.0) -> list:
    """Rank initial-state sets by coverage (descending), then overlap.

    Ties keep the input order, so the ranking is deterministic even for
    duplicate labels.
    """
    if not sets:
        raise ValueError("need at least one initial-state set")
    reports = [coverage_report(matrix, s, t0) for s in sets]
    return sorted(reports, key=lambda r: (-r.coverage, r.overlap_ratio))


def random_initial_set(n: int, size: int, seed: int = 0, label: str = "random") -> InitialStateSet:
    """Uniformly drawn distinct sample indices, for baseline comparisons."""
    if not 1 <= size <= n:
        raise ValueError(f"size must lie in [1, {n}], got {size}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=size, replace=False)
    return InitialStateSet(indices=tuple(int(i) for i in sorted(idx)), label=label)


def save_coverage_json(reports, path):
    ranked = sorted(reports, key=lambda r: (-r.coverage, r.overlap_ratio))
    obj = {
        "t0": reports[0].t0 if reports else None,
        "sets": [r.to_dict() for r in reports],
        "ranking": [r.label for r in ranked],
    }
    with Path(path).open("w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def save_coverage_csv(reports, path):
    with Path(path).open("w", newline="") as f:
        f.write("label,t0,coverage,overlapRatio\n")
        for r in reports:
            f.write(f"{r.label},{'%.17g' % r.t0},{'%.17g' % r.coverage},{'%.17g' % r.overlap_ratio}\n")
