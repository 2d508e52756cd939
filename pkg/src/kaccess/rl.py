"""Tabular episodic learner over a sampled state graph.

Desk-scale proxy for studying how the choice of initial states affects
learning speed. States are the samples behind an accessibility matrix;
an action commands a transition to one of the current state's most
accessible targets and succeeds with probability equal to that
accessibility (an interpretation: the metric orders transitions by ease, so
it doubles as a success probability), otherwise the state is unchanged.
Episodes start uniformly from a chosen initial-state set and end on reaching
the goal set or after a fixed step budget.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kaccess.coverage import InitialStateSet
from kaccess.matrix import AccessibilityMatrix, as_accessibility_matrix
from kaccess.synthetic import PlantedSpec, generate_planted_data


@dataclass(frozen=True, eq=False)
class RecoveryTask:
    """Reach any goal state within ``episode_steps`` commanded transitions.

    The action set of each state is truncated to its ``max_targets`` most
    accessible targets to keep the table small; this shapes difficulty and
    is deliberate.
    """

    matrix: AccessibilityMatrix
    goal_set: frozenset
    episode_steps: int = 75
    step_cost: float = -0.01
    goal_reward: float = 1.0
    max_targets: int = 16

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_accessibility_matrix(self.matrix, validate=False))
        goals = frozenset(int(g) for g in self.goal_set)
        if not goals:
            raise ValueError("goal_set must be non-empty")
        if min(goals) < 0 or max(goals) >= self.matrix.n:
            raise ValueError(f"goal index out of range [0, {self.matrix.n})")
        object.__setattr__(self, "goal_set", goals)
        if self.episode_steps < 1:
            raise ValueError(f"episode_steps must be >= 1, got {self.episode_steps}")
        if self.max_targets < 1:
            raise ValueError(f"max_targets must be >= 1, got {self.max_targets}")


@dataclass(frozen=True)
class LearnerConfig:
    episodes: int = 400
    exploration_rate: float = 0.1
    learning_rate: float = 0.5
    discount: float = 0.987
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError(f"episodes must be >= 0, got {self.episodes}")
        if not 0.0 <= self.exploration_rate <= 1.0:
            raise ValueError(f"exploration_rate must lie in [0, 1], got {self.exploration_rate}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")


@dataclass(frozen=True, eq=False)
class TrainingResult:
    """Learning curve plus the learned table (which is also the policy)."""

    returns: np.ndarray
    successes: np.ndarray
    q_values: np.ndarray
    targets: np.ndarray
    init_set: InitialStateSet
    config: LearnerConfig

    @property
    def episodes(self) -> int:
        return self.returns.size


def action_targets(task: RecoveryTask) -> np.ndarray:
    """Per state: its most accessible targets, best first, self excluded."""
    A = task.matrix.values
    n = task.matrix.n
    if n < 2:
        raise ValueError("need at least two states to act")
    m = min(task.max_targets, n - 1)
    targets = np.empty((n, m), dtype=int)
    for i in range(n):
        order = np.argsort(-A[i], kind="stable")  # ties -> lowest index
        targets[i] = order[order != i][:m]
    return targets


def run_training(task: RecoveryTask, init_set: InitialStateSet, config: LearnerConfig) -> TrainingResult:
    """Epsilon-greedy tabular Q-learning; bit-reproducible per seed.

    Episodes start uniformly from ``init_set``. A start already inside the
    goal set scores an immediate success worth ``goal_reward``. Returns the
    per-episode return and success flag along with the learned table.
    """
    if not init_set.indices:
        raise ValueError("init_set must be non-empty")
    A = task.matrix.values
    if max(init_set.indices) >= task.matrix.n:
        raise ValueError(f"init index out of range [0, {task.matrix.n})")
    targets = action_targets(task)
    n, m = targets.shape
    q = np.zeros((n, m))
    rng = np.random.default_rng(config.seed)
    goal = np.zeros(n, dtype=bool)
    goal[list(task.goal_set)] = True
    starts = np.asarray(init_set.indices)
    returns = np.zeros(config.episodes)
    successes = np.zeros(config.episodes, dtype=bool)
    for e in range(config.episodes):
        s = int(starts[rng.integers(starts.size)])
        if goal[s]:
            returns[e] = task.goal_reward
            successes[e] = True
            continue
        total = 0.0
        for _ in range(task.episode_steps):
            if rng.random() < config.exploration_rate:
                a = int(rng.integers(m))
            else:
                a = int(np.argmax(q[s]))
            tgt = int(targets[s, a])
            s2 = tgt if rng.random() < A[s, tgt] else s
            done = goal[s2]
            r = task.step_cost + (task.goal_reward if done else 0.0)
            best_next = 0.0 if done else float(q[s2].max())
            q[s, a] += config.learning_rate * (r + config.discount * best_next - q[s, a])
            total += r
            s = s2
            if done:
                successes[e] = True
                break
        returns[e] = total
    return TrainingResult(
        returns=returns,
        successes=successes,
        q_values=q,
        targets=targets,
        init_set=init_set,
        config=config,
    )


def evaluate_policy(
    task: RecoveryTask,
    policy: TrainingResult,
    test_set: InitialStateSet,
    trials: int = 1,
    seed: int = 0,
) -> float:
    """Greedy success rate over ``trials`` rollouts from every test state."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not test_set.indices:
        raise ValueError("test_set must be non-empty")
    A = task.matrix.values
    q = policy.q_values
    targets = policy.targets
    goal = np.zeros(task.matrix.n, dtype=bool)
    goal[list(task.goal_set)] = True
    rng = np.random.default_rng(seed)
    wins = 0
    for start in test_set.indices:
        for _ in range(trials):
            s = int(start)
            if goal[s]:
                wins += 1
                continue
            for _ in range(task.episode_steps):
                a = int(np.argmax(q[s]))
                tgt = int(targets[s, a])
                if rng.random() < A[s, tgt]:
                    s = tgt
                if goal[s]:
                    wins += 1
                    break
    return wins / (len(test_set.indices) * trials)


def episodes_to_success(
    successes: np.ndarray, threshold: float = 0.9, window: int = 50
) -> int:
    """Episodes until the trailing success rate first reaches ``threshold``.

    Returns the episode count (>= window) at which the mean success over the
    last ``window`` episodes reaches the threshold, or ``len + 1`` when it
    never does (a censored value that still ranks after every real one).
    """
    s = np.asarray(successes, dtype=np.int64)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if s.size >= window:
        # integer window counts keep the threshold comparison exact
        counts = np.convolve(s, np.ones(window, dtype=np.int64), mode="valid")
        hits = np.flatnonzero(counts + 1e-9 >= threshold * window)
        if hits.size:
            return int(hits[0]) + window
    return s.size + 1


def standard_benchmark(seed: int = 0, n: int = 40, k_star: int = 4):
    """The planted benchmark used for initial-state comparisons.

    Escape costs are drawn wide (up to 3 s) so that states differ strongly
    in how easily they can leave: cluster centroids, which maximize
    worst-case outgoing accessibility, are genuinely better launch pads than
    typical states. The goal is the three easiest-to-enter states of the
    first group. Returns (task, planted_data).
    """
    spec = PlantedSpec(
        n=n,
        k_star=k_star,
        escape_max=3.0,
        depth_max=0.5,
        hop_cost=2.0,
        block_prob=0.2,
        seed=seed,
    )
    data = generate_planted_data(spec)
    block = np.flatnonzero(data.labels == 0)
    goal = block[np.argsort(data.depth[block], kind="stable")[:3]]
    task = RecoveryTask(matrix=data.matrix, goal_set=frozenset(int(g) for g in goal))
    return task, data


def compare_training(
    task: RecoveryTask,
    sets,
    config: LearnerConfig,
    threshold: float = 0.9,
    window: int = 50,
) -> dict:
    """Train one arm per initial-state set and summarize episodes-to-threshold."""
    arms = []
    for init_set in sets:
        result = run_training(task, init_set, config)
        tail = result.successes[-window:] if result.episodes else result.successes
        arms.append(
            {
                "label": init_set.label,
                "indices": list(init_set.indices),
                "episodesToThreshold": episodes_to_success(result.successes, threshold, window),
                "finalSuccessRate": float(tail.mean()) if tail.size else 0.0,
            }
        )
    return {
        "episodes": config.episodes,
        "threshold": threshold,
        "window": window,
        "arms": arms,
    }


def save_curve_csv(result: TrainingResult, path):
    with Path(path).open("w", newline="") as f:
        f.write("episode,return,success\n")
        for e in range(result.episodes):
            f.write(f"{e},{'%.17g' % result.returns[e]},{int(result.successes[e])}\n")


def save_summary_json(summary: dict, path):
    with Path(path).open("w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
