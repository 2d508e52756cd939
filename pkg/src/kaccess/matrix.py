"""Accessibility values and matrices: conversion, validation, file formats.

Accessibility is a directed similarity in [0, 1]: a transition that takes
``t`` seconds has accessibility ``exp(-t)``. Values are clamped below by a
strictly positive floor so that log-based scores downstream always stay
finite; unreachable transitions (``t = UNREACHABLE``) land exactly on the
floor. Self-transitions cost nothing, so every matrix carries an exact unit
diagonal.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Distinguished time cost of a transition that cannot be completed.
UNREACHABLE = math.inf

#: Stand-in for zero accessibility; keeps logarithms finite.
DEFAULT_FLOOR = 1e-8


class MatrixFormatError(ValueError):
    """A matrix file could not be parsed."""


class InvariantViolationError(ValueError):
    """Data failed its structural invariants; see ``.report`` for details."""

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report


def access_from_time(seconds, floor: float = DEFAULT_FLOOR):
    """Map a time cost in seconds to an accessibility value in [floor, 1].

    ``seconds`` may be a scalar or an ndarray. ``UNREACHABLE`` (infinity)
    maps exactly to ``floor``; zero maps to 1. Total on valid inputs.
    """
    if not 0.0 < floor < 1.0:
        raise ValueError(f"floor must lie in (0, 1), got {floor}")
    t = np.asarray(seconds, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise ValueError("time costs must be non-negative or UNREACHABLE")
    a = np.maximum(np.exp(-t), floor)
    if t.ndim == 0:
        return float(a)
    return a


@dataclass(frozen=True, eq=False)
class AccessibilityMatrix:
    """Dense n-by-n directed accessibility matrix.

    ``values[i, j]`` is the accessibility from sample i to sample j. No
    symmetry is assumed or imposed. Instances are immutable (the array is
    marked read-only) and safe to share across parallel workers.
    """

    values: np.ndarray
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {vals.shape}")
        if vals.shape[0] < 1:
            raise ValueError("matrix needs at least one sample")
        if not 0.0 < self.floor < 1.0:
            raise ValueError(f"floor must lie in (0, 1), got {self.floor}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Violation:
    """One failed invariant: ``kind`` is 'nan', 'range' or 'diagonal'."""

    kind: str
    index: tuple
    value: float

    def __str__(self) -> str:
        where = ",".join(str(i) for i in self.index)
        return f"{self.kind} at [{where}]: {self.value!r}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple
    warnings: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_failed(self):
        if self.ok:
            return
        shown = "; ".join(str(v) for v in self.violations[:5])
        extra = len(self.violations) - 5
        if extra > 0:
            shown += f"; and {extra} more"
        raise InvariantViolationError(f"matrix invariants violated: {shown}", self)


def validate_matrix(matrix: AccessibilityMatrix) -> ValidationReport:
    """Check every matrix invariant, reporting all violations with indices.

    Never raises on bad data; callers decide via ``report.raise_if_failed()``.
    Off-diagonal entries equal to exactly 1 are flagged as warnings because
    they indicate duplicate samples, which break centroid self-assignment.
    """
    vals = matrix.values
    n = matrix.n
    violations = []
    warnings = []
    for i, j in zip(*np.nonzero(np.isnan(vals))):
        violations.append(Violation("nan", (int(i), int(j)), float("nan")))
    finite = ~np.isnan(vals)
    bad = finite & ((vals < matrix.floor) | (vals > 1.0))
    off = ~np.eye(n, dtype=bool)
    for i, j in zip(*np.nonzero(bad & off)):
        violations.append(Violation("range", (int(i), int(j)), float(vals[i, j])))
    diag = np.diagonal(vals)
    for i in np.nonzero(finite.diagonal() & (diag != 1.0))[0]:
        violations.append(Violation("diagonal", (int(i),), float(diag[i])))
    for i, j in zip(*np.nonzero((vals == 1.0) & off)):
        warnings.append(Violation("duplicate", (int(i), int(j)), 1.0))
    return ValidationReport(tuple(violations), tuple(warnings))


def as_accessibility_matrix(X, floor: float = DEFAULT_FLOOR, validate: bool = True) -> AccessibilityMatrix:
    """Coerce an array-like (or pass through a matrix); optionally validate."""
    if isinstance(X, AccessibilityMatrix):
        m = X
    else:
        m = AccessibilityMatrix(np.asarray(X, dtype=float), floor=floor)
    if validate:
        validate_matrix(m).raise_if_failed()
    return m


# ---------------------------------------------------------------------------
# File formats. CSV: a header line `n=<int>,floor=<float>` followed by n rows
# of n comma-separated values, printed with 17 significant digits so files
# round-trip without loss. JSON: the same fields as one object.
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(r"^n=(\d+),floor=([^,\s]+)$")


def save_matrix_csv(matrix: AccessibilityMatrix, path):
    path = Path(path)
    with path.open("w", newline="") as f:
        f.write(f"n={matrix.n},floor={matrix.floor!r}\n")
        for row in matrix.values:
            f.write(",".join("%.17g" % x for x in row) + "\n")


def load_matrix_csv(path) -> AccessibilityMatrix:
    path = Path(path)
    with path.open() as f:
        header = f.readline().strip()
        m = _HEADER_RE.match(header)
        if not m:
            raise MatrixFormatError(f"{path}: bad header line {header!r}")
        n = int(m.group(1))
        try:
            floor = float(m.group(2))
        except ValueError as e:
            raise MatrixFormatError(f"{path}: bad floor in header: {e}") from e
        rows = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != n:
                raise MatrixFormatError(
                    f"{path}:{lineno}: expected {n} values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as e:
                raise MatrixFormatError(f"{path}:{lineno}: {e}") from e
    if len(rows) != n:
        raise MatrixFormatError(f"{path}: expected {n} rows, got {len(rows)}")
    try:
        matrix = AccessibilityMatrix(np.array(rows), floor=floor)
    except ValueError as e:
        raise MatrixFormatError(f"{path}: {e}") from e
    validate_matrix(matrix).raise_if_failed()
    return matrix


def save_matrix_json(matrix: AccessibilityMatrix, path):
    obj = {
        "n": matrix.n,
        "floor": matrix.floor,
        "entries": [[float(x) for x in row] for row in matrix.values],
    }
    with Path(path).open("w") as f:
        json.dump(obj, f)
        f.write("\n")


def load_matrix_json(path) -> AccessibilityMatrix:
    path = Path(path)
    try:
        with path.open() as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise MatrixFormatError(f"{path}: {e}") from e
    for key in ("n", "floor", "entries"):
        if key not in obj:
            raise MatrixFormatError(f"{path}: missing key {key!r}")
    entries = np.asarray(obj["entries"], dtype=float)
    if entries.shape != (obj["n"], obj["n"]):
        raise MatrixFormatError(
            f"{path}: entries shape {entries.shape} does not match n={obj['n']}"
        )
    matrix = AccessibilityMatrix(entries, floor=float(obj["floor"]))
    validate_matrix(matrix).raise_if_failed()
    return matrix
