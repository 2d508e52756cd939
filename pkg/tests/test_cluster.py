import numpy as np
import pytest
from sklearn.base import clone

from kaccess import (
    AccessibilityMatrix,
    ClusteringResult,
    DEFAULT_FLOOR,
    EmptyClusterError,
    KAccess,
    NonConvergenceError,
    assign,
    brute_force_best_g,
    generate_planted,
    init_centroids,
    k_access,
    k_access_best_of,
    load_clustering_json,
    objective_g,
    save_clustering_json,
    update_centroids,
)
from kaccess.synthetic import PlantedSpec
from conftest import random_access_matrix


def seed_with_first_centroid(n, wanted):
    return next(
        s for s in range(1000) if np.random.default_rng(s).integers(n) == wanted
    )


def chain_matrix(n=5):
    """exp(-|i-j|): a path graph where clustering has to drift inwards."""
    idx = np.arange(n, dtype=float)
    return AccessibilityMatrix(np.exp(-np.abs(np.subtract.outer(idx, idx))))


def two_block_matrix(rng, n=6, within_low=0.5, floor=DEFAULT_FLOOR):
    """Two planted halves: within-group access >= within_low, across = floor."""
    vals = np.full((n, n), floor)
    half = n // 2
    for block in (range(half), range(half, n)):
        for i in block:
            for j in block:
                vals[i, j] = rng.uniform(within_low, 1.0)
    np.fill_diagonal(vals, 1.0)
    labels = np.array([0] * half + [1] * (n - half))
    return AccessibilityMatrix(vals, floor=floor), labels


class TestInitCentroids:
    def test_single_sample(self):
        m = AccessibilityMatrix(np.ones((1, 1)))
        assert init_centroids(m, 1, seed=0) == (0,)

    def test_far_sample_chosen_second(self):
        # sample 2 is nearly unreachable from 0 and 1, so it minimizes the
        # summed two-way accessibility to the first centroid
        vals = np.array(
            [
                [1.0, 0.9, 1e-8],
                [0.9, 1.0, 1e-8],
                [1e-8, 1e-8, 1.0],
            ]
        )
        m = AccessibilityMatrix(vals)
        seed = seed_with_first_centroid(3, 0)
        got = init_centroids(m, 2, seed=seed)
        assert got[0] == 0
        # oracle: CAccess[j] = A[0, j] + A[j, 0] minimized over j != 0
        caccess = vals[0, :] + vals[:, 0]
        expected = min((j for j in range(3) if j != 0), key=lambda j: caccess[j])
        assert got[1] == expected == 2

    def test_chain_matches_hand_oracle(self):
        rng = np.random.default_rng(3)
        m = random_access_matrix(rng, 8)
        A = m.values
        for first in range(8):
            seed = seed_with_first_centroid(8, first)
            got = init_centroids(m, 4, seed=seed)
            chosen = [first]
            while len(chosen) < 4:
                caccess = sum(A[c, :] + A[:, c] for c in chosen)
                best = min(
                    (j for j in range(8) if j not in chosen), key=lambda j: caccess[j]
                )
                chosen.append(best)
            assert list(got) == chosen

    def test_k_equals_n_is_permutation(self):
        rng = np.random.default_rng(1)
        m = random_access_matrix(rng, 6)
        got = init_centroids(m, 6, seed=7)
        assert sorted(got) == list(range(6))

    @pytest.mark.parametrize("k", [0, 7])
    def test_k_out_of_range_rejected(self, k):
        rng = np.random.default_rng(2)
        m = random_access_matrix(rng, 6)
        with pytest.raises(ValueError):
            init_centroids(m, k, seed=0)


class TestAssign:
    def test_centroids_self_assign(self):
        rng = np.random.default_rng(4)
        m = random_access_matrix(rng, 10)
        a = assign(m, (2, 5, 8))
        for c in (2, 5, 8):
            assert a[c] == c

    def test_argmax_row(self):
        vals = np.eye(4) + 0.01
        np.fill_diagonal(vals, 1.0)
        vals[0, 3] = 0.2
        vals[1, 3] = 0.7
        m = AccessibilityMatrix(np.clip(vals, 1e-8, 1.0))
        a = assign(m, (0, 1))
        assert a[3] == 1

    def test_tie_goes_to_earliest_centroid(self):
        vals = np.full((3, 3), 0.25)
        np.fill_diagonal(vals, 1.0)
        vals[0, 2] = 0.5
        vals[1, 2] = 0.5
        m = AccessibilityMatrix(vals)
        assert assign(m, (0, 1))[2] == 0
        assert assign(m, (1, 0))[2] == 1

    def test_rejects_duplicate_centroids(self):
        rng = np.random.default_rng(5)
        m = random_access_matrix(rng, 4)
        with pytest.raises(ValueError):
            assign(m, (1, 1))


class TestUpdateCentroids:
    def test_singleton_keeps_member(self):
        rng = np.random.default_rng(6)
        m = random_access_matrix(rng, 8)
        a = assign(m, (3, 7))
        a = np.where(np.arange(8) == 7, 7, 3)  # isolate 7 in its own cluster
        new = update_centroids(m, (3, 7), a)
        assert new[1] == 7

    def test_maximin_with_tie_broken_low(self):
        # row minima over the cluster: 0.3, 0.6, 0.6 -> tie between 1 and 2
        vals = np.array(
            [
                [1.0, 0.3, 0.5],
                [0.7, 1.0, 0.6],
                [0.6, 0.9, 1.0],
            ]
        )
        m = AccessibilityMatrix(vals)
        new = update_centroids(m, (0,), np.zeros(3, dtype=int))
        assert new == (1,)

    def test_stable_when_centroid_attains_maximin(self):
        vals = np.array(
            [
                [1.0, 0.2, 0.2],
                [0.9, 1.0, 0.8],
                [0.6, 0.5, 1.0],
            ]
        )
        m = AccessibilityMatrix(vals)
        # row minima: 0.2, 0.8, 0.5 -> centroid 1 is already the argmax
        new = update_centroids(m, (1,), np.ones(3, dtype=int))
        assert new == (1,)

    def test_empty_cluster_names_duplicates(self):
        vals = np.array(
            [
                [1.0, 1.0, 0.3],
                [1.0, 1.0, 0.3],
                [0.2, 0.2, 1.0],
            ]
        )
        m = AccessibilityMatrix(vals)
        with pytest.raises(EmptyClusterError, match="0 and 1"):
            k_access(m, 2, init=(0, 1))


class TestObjectiveG:
    def test_all_own_centroid_gives_one(self):
        rng = np.random.default_rng(7)
        m = random_access_matrix(rng, 5)
        assert objective_g(m, np.arange(5)) == 1.0

    def test_single_cluster_min(self):
        vals = np.array(
            [
                [1.0, 0.5, 0.25],
                [0.9, 1.0, 0.9],
                [0.9, 0.9, 1.0],
            ]
        )
        m = AccessibilityMatrix(vals)
        assert objective_g(m, np.zeros(3, dtype=int)) == 0.25

    def test_in_matrix_range(self):
        rng = np.random.default_rng(8)
        m = random_access_matrix(rng, 6)
        a = assign(m, (0, 3))
        assert m.floor <= objective_g(m, a) <= 1.0


class TestKAccess:
    def test_k1_centroid_is_global_maximin(self):
        rng = np.random.default_rng(9)
        m = random_access_matrix(rng, 12)
        result = k_access(m, 1, seed=0)
        assert result.n_clusters == 1
        assert set(result.assignment) == {result.centroid_indices[0]}
        # oracle: argmax_j min_l A[j, l]
        expected = max(range(12), key=lambda j: m.values[j, :].min())
        assert result.centroid_indices[0] == expected

    def test_recovers_two_planted_blocks(self):
        rng = np.random.default_rng(10)
        m, labels = two_block_matrix(rng, n=6)
        result = k_access_best_of(m, 2, restarts=5, seed=0)
        got = np.array([result.assignment[i] == result.assignment[0] for i in range(6)])
        assert np.array_equal(got, labels == labels[0])
        # the planted split is the unique brute-force optimum
        g_opt, bf = brute_force_best_g(m, 2)
        assert result.objective == pytest.approx(g_opt, abs=0)
        bf_split = np.array([bf.assignment[i] == bf.assignment[0] for i in range(6)])
        assert np.array_equal(bf_split, labels == labels[0])

    def test_random_small_instance_reaches_optimum(self):
        rng = np.random.default_rng(11)
        m = random_access_matrix(rng, 6)
        g_opt, _ = brute_force_best_g(m, 2)
        result = k_access_best_of(m, 2, restarts=10, seed=0)
        assert result.objective == pytest.approx(g_opt, abs=1e-12)

    def test_trace_non_decreasing_and_in_entry_set(self):
        rng = np.random.default_rng(12)
        for trial in range(40):
            n = int(rng.integers(5, 30))
            k = int(rng.integers(1, min(8, n) + 1))
            m = random_access_matrix(rng, n)
            result = k_access(m, k, seed=trial)
            trace = np.array(result.objective_trace)
            assert np.all(np.diff(trace) >= 0)
            assert np.isin(trace, m.values).all()

    def test_result_invariants(self):
        rng = np.random.default_rng(13)
        for trial in range(25):
            n = int(rng.integers(4, 25))
            k = int(rng.integers(1, min(6, n) + 1))
            m = random_access_matrix(rng, n)
            result = k_access(m, k, seed=trial)
            cidx = result.centroid_indices
            assert len(set(cidx)) == k
            assert set(result.assignment.tolist()) <= set(cidx)
            for c in cidx:
                assert result.assignment[c] == c  # pairwise-distinct samples
                assert result.members(c).size >= 1

    def test_deterministic(self):
        rng = np.random.default_rng(14)
        m = random_access_matrix(rng, 20)
        a = k_access(m, 4, seed=123)
        b = k_access(m, 4, seed=123)
        assert a.centroid_indices == b.centroid_indices
        assert np.array_equal(a.assignment, b.assignment)
        assert a.objective_trace == b.objective_trace
        assert a.iterations == b.iterations

    def test_fixed_point_of_own_output(self):
        rng = np.random.default_rng(15)
        m = random_access_matrix(rng, 18)
        result = k_access(m, 3, seed=5)
        again = k_access(m, 3, init=result.centroid_indices)
        assert again.iterations == 1
        assert np.array_equal(again.assignment, result.assignment)
        assert again.centroid_indices == result.centroid_indices

    def test_non_convergence_diagnostic(self):
        m = chain_matrix(5)
        assert k_access(m, 2, init=(0, 4)).iterations == 2
        with pytest.raises(NonConvergenceError):
            k_access(m, 2, init=(0, 4), max_iter=1)

    def test_rejects_bad_config(self):
        rng = np.random.default_rng(16)
        m = random_access_matrix(rng, 5)
        with pytest.raises(ValueError):
            k_access(m, 0)
        with pytest.raises(ValueError):
            k_access(m, 6)
        with pytest.raises(ValueError):
            k_access(m, 2, max_iter=0)
        with pytest.raises(ValueError):
            k_access(m, 2, init=(0, 0))
        with pytest.raises(ValueError):
            k_access(m, 3, init=(0, 1))

    def test_validates_matrix_by_default(self):
        vals = np.eye(3)
        vals[0, 1] = 2.0
        from kaccess import InvariantViolationError

        with pytest.raises(InvariantViolationError):
            k_access(vals, 2)

    def test_best_of_never_below_single_run(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            m = random_access_matrix(rng, 12)
            single = k_access(m, 3, seed=trial).objective
            best = k_access_best_of(m, 3, restarts=6, seed=trial).objective
            assert best >= single

    def test_planted_recovery_default_generator(self):
        from sklearn.metrics import adjusted_rand_score

        for seed in range(5):
            m, labels = generate_planted(PlantedSpec(n=40, k_star=4, seed=seed))
            result = k_access_best_of(m, 4, restarts=5, seed=seed)
            assert adjusted_rand_score(labels, result.labels()) >= 0.9


class TestClusteringResultSerialization:
    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(18)
        m = random_access_matrix(rng, 9)
        result = k_access(m, 3, seed=2)
        path = tmp_path / "clustering.json"
        save_clustering_json(result, path)
        loaded = load_clustering_json(path)
        assert loaded.centroid_indices == result.centroid_indices
        assert np.array_equal(loaded.assignment, result.assignment)
        assert loaded.objective_trace == result.objective_trace
        assert loaded.iterations == result.iterations
        assert loaded.seed == result.seed

    def test_dict_keys(self):
        rng = np.random.default_rng(19)
        m = random_access_matrix(rng, 4)
        d = k_access(m, 2, seed=0).to_dict()
        assert set(d) == {"k", "seed", "cIndex", "assignment", "gTrace", "iterations"}

    def test_labels_are_positions(self):
        result = ClusteringResult(
            centroid_indices=(3, 1),
            assignment=np.array([1, 1, 3, 3]),
            objective_trace=(0.5,),
            iterations=0,
        )
        assert result.labels().tolist() == [1, 1, 0, 0]


class TestEstimator:
    def test_fit_sets_attributes(self):
        rng = np.random.default_rng(20)
        m = random_access_matrix(rng, 15)
        est = KAccess(n_clusters=3, random_state=1).fit(m.values)
        assert est.centroid_indices_.shape == (3,)
        assert est.labels_.shape == (15,)
        assert set(est.labels_) == {0, 1, 2}
        assert est.n_iter_ >= 1
        assert np.all(np.diff(est.objective_trace_) >= 0)

    def test_fit_predict_matches_labels(self):
        rng = np.random.default_rng(21)
        m = random_access_matrix(rng, 12)
        est = KAccess(n_clusters=2, random_state=0)
        labels = est.fit_predict(m.values)
        assert np.array_equal(labels, est.labels_)

    def test_get_params_round_trip_and_clone(self):
        est = KAccess(n_clusters=4, n_restarts=2, random_state=9, max_iter=50)
        params = est.get_params()
        assert params["n_clusters"] == 4
        assert params["n_restarts"] == 2
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_deterministic_across_fits(self):
        rng = np.random.default_rng(22)
        m = random_access_matrix(rng, 14)
        a = KAccess(n_clusters=3, random_state=3).fit(m.values)
        b = KAccess(n_clusters=3, random_state=3).fit(m.values)
        assert np.array_equal(a.labels_, b.labels_)
        assert np.array_equal(a.centroid_indices_, b.centroid_indices_)

    def test_accepts_matrix_object(self):
        rng = np.random.default_rng(23)
        m = random_access_matrix(rng, 10)
        est = KAccess(n_clusters=2, random_state=0).fit(m)
        assert est.labels_.shape == (10,)
