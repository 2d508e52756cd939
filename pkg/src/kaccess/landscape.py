"""Analytic settling environment: a 1-D potential landscape whose local
minima play the role of a robot's static poses.

The potential is piecewise linear on [0, 1]. Dropping a point mass anywhere
and letting it settle lands it in a local minimum; probing a transition
between two minima costs travel time plus a penalty proportional to the
barrier that must be climbed, and fails outright when the barrier exceeds a
budget. This is the smallest environment that produces stable states,
asymmetric transition costs, and unreachable pairs, so an accessibility
matrix can be estimated in milliseconds instead of simulator-hours.
Matrices estimated elsewhere can be dropped in through the CSV format.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kaccess.matrix import (
    DEFAULT_FLOOR,
    UNREACHABLE,
    AccessibilityMatrix,
    access_from_time,
)


@dataclass(frozen=True)
class StateVector:
    """A settled state: ``values`` holds (position, potential)."""

    id: int
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("state needs at least one feature")
        if any(not np.isfinite(v) for v in vals):
            raise ValueError(f"state features must be finite, got {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> float:
        return self.values[0]

    @property
    def u(self) -> float:
        return self.values[1]


@dataclass(frozen=True)
class ProbeProtocol:
    """Probe settings: give up after ``time_cap`` seconds, clamp at ``floor``."""

    time_cap: float = 3.0
    floor: float = DEFAULT_FLOOR
    closeness_tol: float = 1e-3

    def __post_init__(self):
        if self.time_cap <= 0:
            raise ValueError(f"time_cap must be > 0, got {self.time_cap}")


@dataclass(frozen=True, eq=False)
class SettlingEnvironment:
    """Piecewise-linear potential U(x) on [0, 1] with motion parameters.

    Travel runs at ``speed`` units/s. Climbing a barrier of height b costs
    ``barrier_penalty * b`` extra seconds and is impossible when
    b > ``barrier_budget``.
    """

    breakpoints: np.ndarray
    heights: np.ndarray
    speed: float = 1.0
    barrier_budget: float = 0.6
    barrier_penalty: float = 2.0

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        h = np.asarray(self.heights, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or bp.shape != h.shape:
            raise ValueError("need matching 1-D breakpoints and heights, length >= 2")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.speed <= 0:
            raise ValueError(f"speed must be > 0, got {self.speed}")
        bp.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "heights", h)

    @classmethod
    def random(
        cls,
        n_breakpoints: int = 24,
        seed: int = 0,
        min_minima: int = 2,
        speed: float = 1.0,
        barrier_budget: float = 0.6,
        barrier_penalty: float = 2.0,
    ) -> "SettlingEnvironment":
        """Draw a random landscape with at least ``min_minima`` local minima.

        Heights are uniform in [0, 1]; landscapes with too few minima are
        redrawn from the same stream, so the result is seed-deterministic.
        """
        if n_breakpoints < max(3, 2 * min_minima - 1):
            raise ValueError(
                f"{n_breakpoints} breakpoints cannot hold {min_minima} minima"
            )
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            interior = np.sort(rng.uniform(0.0, 1.0, n_breakpoints - 2))
            bp = np.concatenate(([0.0], interior, [1.0]))
            if np.any(np.diff(bp) <= 0):
                continue
            h = rng.uniform(0.0, 1.0, n_breakpoints)
            env = cls(
                breakpoints=bp,
                heights=h,
                speed=speed,
                barrier_budget=barrier_budget,
                barrier_penalty=barrier_penalty,
            )
            if env.minima_indices().size >= min_minima:
                return env
        raise RuntimeError("could not draw a landscape with enough minima")

    def potential(self, x):
        return np.interp(x, self.breakpoints, self.heights)

    def minima_indices(self) -> np.ndarray:
        """Breakpoint indices that are strict local minima (endpoints count)."""
        h = self.heights
        n = h.size
        idx = []
        for i in range(n):
            left_higher = i == 0 or h[i] < h[i - 1]
            right_higher = i == n - 1 or h[i] < h[i + 1]
            if left_higher and right_higher:
                idx.append(i)
        return np.array(idx, dtype=int)

    def descend(self, x: float) -> float:
        """Settle a point mass released at ``x``; returns the rest position."""
        bp = self.breakpoints
        h = self.heights
        x = float(np.clip(x, bp[0], bp[-1]))
        j = int(np.searchsorted(bp, x))
        if j < bp.size and bp[j] == x:
            pass  # released exactly on a breakpoint
        else:
            # interior of segment (j-1, j): roll to its lower end first
            left, right = j - 1, j
            if h[left] <= h[right]:
                j = left
            else:
                j = right
        while True:
            left_h = h[j - 1] if j > 0 else np.inf
            right_h = h[j + 1] if j < h.size - 1 else np.inf
            if h[j] <= left_h and h[j] <= right_h:
                return float(bp[j])
            j = j - 1 if left_h < right_h else j + 1

    def segment_max(self, xa: float, xb: float) -> float:
        """Maximum potential along the straight path from xa to xb."""
        lo, hi = (xa, xb) if xa <= xb else (xb, xa)
        bp = self.breakpoints
        first = int(np.searchsorted(bp, lo, side="right"))
        last = int(np.searchsorted(bp, hi, side="left"))
        inner = self.heights[first:last].max(initial=-np.inf)
        return float(max(self.potential(lo), self.potential(hi), inner))


def sample_static_states(
    env: SettlingEnvironment, count: int, seed: int = 0, tol: float = 1e-3
) -> list:
    """Drop ``count`` points uniformly, settle each, deduplicate the minima.

    Returns the distinct rest states sorted by position, each a
    :class:`StateVector` of (position, potential). Positions closer than
    ``tol`` collapse into one state. Deterministic per seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    starts = rng.uniform(env.breakpoints[0], env.breakpoints[-1], count)
    rest = sorted(env.descend(x) for x in starts)
    kept = []
    for x in rest:
        if not kept or x - kept[-1] > tol:
            kept.append(x)
    return [
        StateVector(id=i, values=(x, float(env.potential(x)))) for i, x in enumerate(kept)
    ]


def probe_transition(
    env: SettlingEnvironment,
    src: StateVector,
    dst: StateVector,
    protocol: ProbeProtocol = ProbeProtocol(),
) -> float:
    """Time cost of commanding a move from one settled state to another.

    Returns seconds, or ``UNREACHABLE`` when the barrier between the states
    exceeds the budget or the move would exceed the protocol's time cap.
    """
    if src.x == dst.x:
        return 0.0
    barrier = env.segment_max(src.x, dst.x) - env.potential(src.x)
    if barrier > env.barrier_budget:
        return UNREACHABLE
    t = abs(dst.x - src.x) / env.speed + env.barrier_penalty * barrier
    return t if t <= protocol.time_cap else UNREACHABLE


def estimate_matrix(
    env: SettlingEnvironment,
    states: list,
    protocol: ProbeProtocol = ProbeProtocol(),
    log_path=None,
) -> AccessibilityMatrix:
    """All-pairs probing of the given states into an accessibility matrix.

    Pairs are independent, so any probing schedule yields the same matrix;
    the diagonal is pinned to 1 without probing. ``log_path`` optionally
    records every probe as one JSON line.
    """
    n = len(states)
    if n < 1:
        raise ValueError("need at least one state")
    xs = [s.x for s in states]
    if len(set(xs)) != n:
        raise ValueError("states must be distinct")
    times = np.zeros((n, n))
    log = [] if log_path is not None else None
    for i, si in enumerate(states):
        for j, sj in enumerate(states):
            if i == j:
                continue
            t = probe_transition(env, si, sj, protocol)
            times[i, j] = t
            if log is not None:
                log.append(
                    {"from": i, "to": j, "seconds": "unreachable" if t == UNREACHABLE else t}
                )
    values = access_from_time(times, protocol.floor)
    np.fill_diagonal(values, 1.0)
    if log is not None:
        with Path(log_path).open("w") as f:
            for entry in log:
                f.write(json.dumps(entry) + "\n")
    return AccessibilityMatrix(values, floor=protocol.floor)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_states_csv(states, path):
    with Path(path).open("w", newline="") as f:
        f.write("id,x,u\n")
        for s in states:
            f.write(f"{s.id},{'%.17g' % s.x},{'%.17g' % s.u}\n")


def load_states_csv(path) -> list:
    path = Path(path)
    with path.open() as f:
        header = f.readline().strip()
        if header != "id,x,u":
            raise ValueError(f"{path}: bad header {header!r}")
        states = []
        for line in f:
            line = line.strip()
            if not line:
                continue
            sid, x, u = line.split(",")
            states.append(StateVector(id=int(sid), values=(float(x), float(u))))
    return states


def save_environment_json(env: SettlingEnvironment, path):
    obj = {
        "breakpoints": [float(x) for x in env.breakpoints],
        "heights": [float(h) for h in env.heights],
        "speed": env.speed,
        "barrier_budget": env.barrier_budget,
        "barrier_penalty": env.barrier_penalty,
    }
    with Path(path).open("w") as f:
        json.dump(obj, f)
        f.write("\n")


def load_environment_json(path) -> SettlingEnvironment:
    with Path(path).open() as f:
        obj = json.load(f)
    return SettlingEnvironment(
        breakpoints=np.asarray(obj["breakpoints"], dtype=float),
        heights=np.asarray(obj["heights"], dtype=float),
        speed=float(obj["speed"]),
        barrier_budget=float(obj["barrier_budget"]),
        barrier_penalty=float(obj["barrier_penalty"]),
    )
