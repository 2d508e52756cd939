"""Command-line pipeline: sample -> estimate -> cluster/sweep -> evaluate -> train.

Every subcommand writes its artifacts plus a run manifest (content hashes,
seed, version) into the output directory, so runs can be audited and
reproduced byte for byte. Exit codes: 0 ok, 2 bad arguments or missing
input, 3 parse or invariant failure, 4 non-convergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from kaccess import __version__
from kaccess.cluster import (
    EmptyClusterError,
    NonConvergenceError,
    k_access_best_of,
    load_clustering_json,
    save_clustering_json,
)
from kaccess.coverage import (
    InitialStateSet,
    compare_initializations,
    random_initial_set,
    save_coverage_csv,
    save_coverage_json,
)
from kaccess.landscape import (
    ProbeProtocol,
    SettlingEnvironment,
    estimate_matrix,
    load_environment_json,
    load_states_csv,
    sample_static_states,
    save_environment_json,
    save_states_csv,
)
from kaccess.matrix import (
    InvariantViolationError,
    MatrixFormatError,
    load_matrix_csv,
    save_matrix_csv,
)
from kaccess.quality import (
    chord_edges,
    quality_index,
    save_chord_csv,
    save_sweep_csv,
    save_sweep_reports_json,
    sweep_k,
)
from kaccess.rl import (
    LearnerConfig,
    RecoveryTask,
    compare_training,
    run_training,
    save_curve_csv,
    save_summary_json,
)
from kaccess.synthetic import PlantedSpec, generate_planted_data, save_labels_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NONCONVERGENCE = 4


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, params: dict, inputs: dict, outputs: dict, seed):
    # output paths are recorded relative to the manifest so that two runs of
    # the same config into different directories stay byte-identical
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "parameters": params,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
        "outputs": {
            name: {"path": str(Path(p).relative_to(out_dir)), "sha256": _sha256(p)}
            for name, p in outputs.items()
        },
    }
    path = out_dir / f"{command}.manifest.json"
    with path.open("w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_indices(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as e:
        raise ValueError(f"bad index list {text!r}: {e}") from e


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    out = _out_dir(args)
    spec = PlantedSpec(
        n=args.n,
        k_star=args.k_star,
        escape_max=args.escape_max,
        depth_max=args.depth_max,
        hop_cost=args.hop_cost,
        block_prob=args.block_prob,
        seed=args.seed,
    )
    data = generate_planted_data(spec, floor=args.floor)
    matrix_path = out / "matrix.csv"
    labels_path = out / "labels.csv"
    save_matrix_csv(data.matrix, matrix_path)
    save_labels_csv(data.labels, labels_path)
    _write_manifest(
        out,
        "generate",
        params=vars(args) | {"func": None},
        inputs={},
        outputs={"matrix": matrix_path, "labels": labels_path},
        seed=args.seed,
    )
    print(f"wrote {matrix_path} ({data.matrix.n}x{data.matrix.n}) and {labels_path}")
    return EXIT_OK


def cmd_sample(args) -> int:
    out = _out_dir(args)
    env = SettlingEnvironment.random(
        n_breakpoints=args.breakpoints,
        seed=args.seed,
        speed=args.speed,
        barrier_budget=args.barrier_budget,
        barrier_penalty=args.barrier_penalty,
    )
    states = sample_static_states(env, args.count, seed=args.seed + 1, tol=args.closeness_tol)
    env_path = out / "environment.json"
    states_path = out / "states.csv"
    save_environment_json(env, env_path)
    save_states_csv(states, states_path)
    _write_manifest(
        out,
        "sample",
        params=vars(args) | {"func": None},
        inputs={},
        outputs={"environment": env_path, "states": states_path},
        seed=args.seed,
    )
    print(f"settled {args.count} drops into {len(states)} distinct states -> {states_path}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    out = _out_dir(args)
    env = load_environment_json(args.environment)
    states = load_states_csv(args.states)
    protocol = ProbeProtocol(time_cap=args.time_cap, floor=args.floor)
    log_path = out / "probes.jsonl" if args.probe_log else None
    matrix = estimate_matrix(env, states, protocol, log_path=log_path)
    matrix_path = out / "matrix.csv"
    save_matrix_csv(matrix, matrix_path)
    outputs = {"matrix": matrix_path}
    if log_path is not None:
        outputs["probes"] = log_path
    _write_manifest(
        out,
        "estimate",
        params=vars(args) | {"func": None},
        inputs={"environment": Path(args.environment), "states": Path(args.states)},
        outputs=outputs,
        seed=None,
    )
    print(f"probed {matrix.n}x{matrix.n} transitions -> {matrix_path}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    out = _out_dir(args)
    matrix = load_matrix_csv(args.input)
    result = k_access_best_of(
        matrix, args.k, restarts=args.restarts, seed=args.seed, max_iter=args.max_iter
    )
    cluster_path = out / "clustering.json"
    save_clustering_json(result, cluster_path)
    _write_manifest(
        out,
        "cluster",
        params=vars(args) | {"func": None},
        inputs={"matrix": Path(args.input)},
        outputs={"clustering": cluster_path},
        seed=args.seed,
    )
    print(
        f"k={result.n_clusters} centroids {list(result.centroid_indices)} "
        f"objective={result.objective:.6g} -> {cluster_path}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    matrix = load_matrix_csv(args.input)
    sweep = sweep_k(
        matrix,
        args.k_min,
        args.k_max,
        alpha=args.alpha,
        restarts=args.restarts,
        seed=args.seed,
        max_iter=args.max_iter,
    )
    csv_path = out / "sweep.csv"
    reports_path = out / "sweep_reports.json"
    cluster_path = out / "clustering.json"
    save_sweep_csv(sweep, csv_path)
    save_sweep_reports_json(sweep, reports_path)
    save_clustering_json(sweep.best.result, cluster_path)
    _write_manifest(
        out,
        "sweep",
        params=vars(args) | {"func": None},
        inputs={"matrix": Path(args.input)},
        outputs={"sweep": csv_path, "reports": reports_path, "clustering": cluster_path},
        seed=args.seed,
    )
    print(f"best k = {sweep.best_k} (index {sweep.best.report.index:.6g}) -> {csv_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    matrix = load_matrix_csv(args.input)
    clustering = load_clustering_json(args.clustering)
    sets = [InitialStateSet(indices=clustering.centroid_indices, label="centroids")]
    for i in range(args.random_sets):
        sets.append(
            random_initial_set(
                matrix.n, len(clustering.centroid_indices), seed=args.seed + 1 + i, label=f"random-{i}"
            )
        )
    ranked = compare_initializations(matrix, sets, t0=args.t0)
    json_path = out / "coverage.json"
    csv_path = out / "coverage.csv"
    save_coverage_json(ranked, json_path)
    save_coverage_csv(ranked, csv_path)
    _write_manifest(
        out,
        "evaluate",
        params=vars(args) | {"func": None},
        inputs={"matrix": Path(args.input), "clustering": Path(args.clustering)},
        outputs={"coverage_json": json_path, "coverage_csv": csv_path},
        seed=args.seed,
    )
    best = ranked[0]
    print(f"best set: {best.label} coverage={best.coverage:.3f} overlap={best.overlap_ratio:.3f}")
    return EXIT_OK


def cmd_train(args) -> int:
    out = _out_dir(args)
    matrix = load_matrix_csv(args.input)
    inputs = {"matrix": Path(args.input)}
    if args.clustering:
        clustering = load_clustering_json(args.clustering)
        init = InitialStateSet(indices=clustering.centroid_indices, label="centroids")
        inputs["clustering"] = Path(args.clustering)
    elif args.init:
        init = InitialStateSet(indices=_parse_indices(args.init), label="custom")
    else:
        raise ValueError("train needs --clustering or --init")
    goal = _parse_indices(args.goal)
    task = RecoveryTask(matrix=matrix, goal_set=frozenset(goal))
    config = LearnerConfig(
        episodes=args.episodes,
        exploration_rate=args.exploration,
        learning_rate=args.learning_rate,
        discount=args.discount,
        seed=args.seed,
    )
    arms = [init]
    if args.compare_random:
        arms.append(random_initial_set(matrix.n, len(init), seed=args.seed + 1))
    outputs = {}
    for arm in arms:
        result = run_training(task, arm, config)
        curve_path = out / f"curve_{arm.label}.csv"
        save_curve_csv(result, curve_path)
        outputs[f"curve_{arm.label}"] = curve_path
    summary = compare_training(task, arms, config, threshold=args.threshold, window=args.window)
    summary_path = out / "training_summary.json"
    save_summary_json(summary, summary_path)
    outputs["summary"] = summary_path
    _write_manifest(
        out,
        "train",
        params=vars(args) | {"func": None},
        inputs=inputs,
        outputs=outputs,
        seed=args.seed,
    )
    for arm in summary["arms"]:
        print(
            f"{arm['label']}: episodes-to-{args.threshold:.0%} = {arm['episodesToThreshold']}"
            f" (final rate {arm['finalSuccessRate']:.3f})"
        )
    return EXIT_OK


def cmd_export_chord(args) -> int:
    out = _out_dir(args)
    matrix = load_matrix_csv(args.input)
    clustering = load_clustering_json(args.clustering)
    report = quality_index(matrix, clustering, alpha=args.alpha)
    edges = chord_edges(report.inter, hi=args.hi, lo=args.lo)
    chord_path = out / "chord.csv"
    save_chord_csv(edges, chord_path)
    _write_manifest(
        out,
        "export-chord",
        params=vars(args) | {"func": None},
        inputs={"matrix": Path(args.input), "clustering": Path(args.clustering)},
        outputs={"chord": chord_path},
        seed=None,
    )
    print(f"{len(edges)} edges -> {chord_path}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    with Path(args.config).open() as f:
        config = json.load(f)
    out = Path(args.output or config.get("output", "pipeline-out"))
    out.mkdir(parents=True, exist_ok=True)
    seed = int(config.get("seed", 0))

    sample_cfg = config.get("sample", {})
    est_cfg = config.get("estimate", {})
    sweep_cfg = config.get("sweep", {})
    eval_cfg = config.get("evaluate", {})
    train_cfg = config.get("train", {})
    chord_cfg = config.get("chord", {})

    # Stage 1: sample settled states from a seeded landscape.
    env = SettlingEnvironment.random(
        n_breakpoints=int(sample_cfg.get("breakpoints", 48)),
        seed=seed,
        speed=float(sample_cfg.get("speed", 1.0)),
        barrier_budget=float(sample_cfg.get("barrier_budget", 0.6)),
        barrier_penalty=float(sample_cfg.get("barrier_penalty", 2.0)),
    )
    states = sample_static_states(
        env,
        int(sample_cfg.get("count", 200)),
        seed=seed + 1,
        tol=float(sample_cfg.get("closeness_tol", 1e-3)),
    )
    save_environment_json(env, out / "environment.json")
    save_states_csv(states, out / "states.csv")

    # Stage 2: estimate the accessibility matrix by all-pairs probing.
    protocol = ProbeProtocol(
        time_cap=float(est_cfg.get("time_cap", 3.0)),
        floor=float(est_cfg.get("floor", 1e-8)),
    )
    log_path = out / "probes.jsonl" if est_cfg.get("probe_log", False) else None
    matrix = estimate_matrix(env, states, protocol, log_path=log_path)
    save_matrix_csv(matrix, out / "matrix.csv")

    # Stage 3: sweep k and keep the best clustering by quality index.
    sweep = sweep_k(
        matrix,
        int(sweep_cfg.get("k_min", 1)),
        min(int(sweep_cfg.get("k_max", 10)), matrix.n),
        alpha=float(sweep_cfg.get("alpha", 1.0)),
        restarts=int(sweep_cfg.get("restarts", 5)),
        seed=seed,
    )
    save_sweep_csv(sweep, out / "sweep.csv")
    save_sweep_reports_json(sweep, out / "sweep_reports.json")
    best = sweep.best
    save_clustering_json(best.result, out / "clustering.json")

    # Stage 4: chord export of the inter-cluster accessibility.
    edges = chord_edges(
        best.report.inter,
        hi=float(chord_cfg.get("hi", 0.15)),
        lo=float(chord_cfg.get("lo", 0.05)),
    )
    save_chord_csv(edges, out / "chord.csv")

    # Stage 5: coverage of centroids vs random sets of the same size.
    centroids = InitialStateSet(indices=best.result.centroid_indices, label="centroids")
    sets = [centroids]
    for i in range(int(eval_cfg.get("random_sets", 3))):
        sets.append(random_initial_set(matrix.n, len(centroids), seed=seed + 1 + i, label=f"random-{i}"))
    ranked = compare_initializations(matrix, sets, t0=float(eval_cfg.get("t0", 3.0)))
    save_coverage_json(ranked, out / "coverage.json")
    save_coverage_csv(ranked, out / "coverage.csv")

    # Stage 6: tabular learning towards the most precarious settled state.
    summary = None
    if matrix.n >= 2:
        goal_state = int(np.argmax([s.u for s in states]))
        task = RecoveryTask(matrix=matrix, goal_set=frozenset({goal_state}))
        learner = LearnerConfig(
            episodes=int(train_cfg.get("episodes", 300)),
            exploration_rate=float(train_cfg.get("exploration", 0.1)),
            learning_rate=float(train_cfg.get("learning_rate", 0.5)),
            discount=float(train_cfg.get("discount", 0.987)),
            seed=seed,
        )
        arms = [centroids, random_initial_set(matrix.n, len(centroids), seed=seed + 101)]
        for arm in arms:
            save_curve_csv(run_training(task, arm, learner), out / f"curve_{arm.label}.csv")
        summary = compare_training(
            task,
            arms,
            learner,
            threshold=float(train_cfg.get("threshold", 0.9)),
            window=int(train_cfg.get("window", 50)),
        )
        save_summary_json(summary, out / "training_summary.json")

    outputs = {p.name: p for p in sorted(out.iterdir()) if p.is_file() and not p.name.endswith("manifest.json")}
    _write_manifest(
        out,
        "pipeline",
        params={"config": str(args.config)},
        inputs={"config": Path(args.config)},
        outputs=outputs,
        seed=seed,
    )
    print(f"pipeline done: {matrix.n} states, best k = {sweep.best_k} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kaccess",
        description="Accessibility clustering and initial-state discovery toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="planted accessibility matrix with known groups")
    p.add_argument("--output", required=True)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--k-star", type=int, default=5)
    p.add_argument("--escape-max", type=float, default=0.2)
    p.add_argument("--depth-max", type=float, default=0.5)
    p.add_argument("--hop-cost", type=float, default=3.0)
    p.add_argument("--block-prob", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--floor", type=float, default=1e-8)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="settle random drops in a seeded landscape")
    p.add_argument("--output", required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--breakpoints", type=int, default=48)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--barrier-budget", type=float, default=0.6)
    p.add_argument("--barrier-penalty", type=float, default=2.0)
    p.add_argument("--closeness-tol", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="all-pairs probe of sampled states")
    p.add_argument("--output", required=True)
    p.add_argument("--states", required=True)
    p.add_argument("--environment", required=True)
    p.add_argument("--time-cap", type=float, default=3.0)
    p.add_argument("--floor", type=float, default=1e-8)
    p.add_argument("--probe-log", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("cluster", help="cluster a matrix at a fixed k")
    p.add_argument("--output", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=1000)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sweep", help="scan k and pick the best quality index")
    p.add_argument("--output", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=1000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evaluate", help="coverage of centroids vs random sets")
    p.add_argument("--output", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--clustering", required=True)
    p.add_argument("--t0", type=float, default=3.0)
    p.add_argument("--random-sets", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", help="tabular learning from an initial-state set")
    p.add_argument("--output", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--clustering")
    p.add_argument("--init", help="comma-separated sample indices")
    p.add_argument("--goal", required=True, help="comma-separated goal indices")
    p.add_argument("--episodes", type=int, default=400)
    p.add_argument("--exploration", type=float, default=0.1)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--discount", type=float, default=0.987)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare-random", action="store_true")
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--window", type=int, default=50)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-chord", help="chord-diagram edge list of inter-cluster accessibility")
    p.add_argument("--output", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--clustering", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=0.15)
    p.add_argument("--lo", type=float, default=0.05)
    p.set_defaults(func=cmd_export_chord)

    p = sub.add_parser("pipeline", help="run every stage from one config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the config's output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def _fail(code: int, kind: str, exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": kind, "exitCode": code, "detail": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        return _fail(EXIT_USAGE, "missing-input", e)
    except NonConvergenceError as e:
        return _fail(EXIT_NONCONVERGENCE, "non-convergence", e)
    except (MatrixFormatError, InvariantViolationError, json.JSONDecodeError) as e:
        return _fail(EXIT_DATA, "parse-or-invariant", e)
    except EmptyClusterError as e:
        return _fail(EXIT_DATA, "invariant", e)
    except (ValueError, KeyError) as e:
        return _fail(EXIT_DATA, "invalid-value", e)


if __name__ == "__main__":
    sys.exit(main())
