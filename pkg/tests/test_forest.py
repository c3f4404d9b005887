import numpy as np
import pytest

from ballforest.core import ConfigError, CostCounters, DataObject, Dataset, EUCLIDEAN
from ballforest.forest import Forest, forest_knn, recall_at_k, select_indexes
from ballforest.ghtree import build, knn_search, estimate_query_radius
from ballforest.oracles import brute_knn
from ballforest.pipeline import BuildConfig, run_build
from ballforest.planner import GroupKind, IndexGroup, PlanSummary

from conftest import make_dataset


def query(coords):
    return DataObject(-1, np.array(coords, dtype=np.float64))


def forest_from_groups(ds, groups, neighbors=None, method="vbm"):
    neighbors = neighbors or {}
    trees = [
        build(g, ds, EUCLIDEAN, CostCounters(), tree_id=i, neighbor_ids=neighbors.get(i, []))
        for i, g in enumerate(groups)
    ]
    return Forest(trees=trees, method=method, plan_summary=PlanSummary(method), dataset=ds)


def group(ds, ids, kind=GroupKind.CLUSTER, gid=0):
    coords = ds.coords_of(ids)
    center = coords.mean(axis=0)
    radius = float(np.linalg.norm(coords - center, axis=1).max())
    return IndexGroup(gid, kind, list(ids), center, radius)


@pytest.fixture
def three_cluster_forest():
    rng = np.random.default_rng(7)
    blobs = [rng.standard_normal((40, 2)) + np.array(c) for c in [(0, 0), (30, 0), (60, 0)]]
    ds = Dataset(np.vstack(blobs))
    ids = [list(range(0, 40)), list(range(40, 80)), list(range(80, 120))]
    forest = forest_from_groups(ds, [group(ds, chunk, gid=i) for i, chunk in enumerate(ids)])
    return ds, forest


class TestSelectIndexes:
    def test_single_tree(self, counters):
        ds = make_dataset([[0.0], [1.0]])
        forest = forest_from_groups(ds, [group(ds, [0, 1])])
        assert [t.tree_id for t in select_indexes(forest, query([5.0]), EUCLIDEAN, counters)] == [0]

    def test_disjoint_clusters_pick_home_tree(self, three_cluster_forest, counters):
        _, forest = three_cluster_forest
        got = select_indexes(forest, query([30.5, 0.2]), EUCLIDEAN, counters)
        assert [t.tree_id for t in got] == [1]

    def test_costs_one_distance_one_comparison_per_tree(self, three_cluster_forest):
        _, forest = three_cluster_forest
        counters = CostCounters()
        select_indexes(forest, query([0.0, 0.0]), EUCLIDEAN, counters)
        assert counters.distance_count == 3
        assert counters.comparison_count == 3

    def test_neighbors_follow_closest(self):
        ds = make_dataset([[0.0], [1.0], [10.0], [11.0], [5.0], [6.0]])
        groups = [group(ds, [0, 1], gid=0), group(ds, [2, 3], gid=1),
                  group(ds, [4, 5], kind=GroupKind.BRIDGE, gid=2)]
        forest = forest_from_groups(ds, groups, neighbors={0: [2], 1: [2], 2: [0, 1]})
        got = select_indexes(forest, query([0.5]), EUCLIDEAN, CostCounters())
        assert [t.tree_id for t in got] == [0, 2]


class TestForestKnn:
    def test_exact_member_query_first_hit(self, three_cluster_forest):
        ds, forest = three_cluster_forest
        q = DataObject(-1, ds.matrix[50])
        result = forest_knn(forest, q, 3, EUCLIDEAN)
        assert result.hits[0] == (50, 0.0)

    def test_k_above_total_objects_returns_everything(self):
        ds = make_dataset([[0.0], [1.0], [40.0], [41.0]])
        forest = forest_from_groups(ds, [group(ds, [0, 1], gid=0), group(ds, [2, 3], gid=1)])
        result = forest_knn(forest, query([0.0]), 99, EUCLIDEAN)
        assert sorted(h[0] for h in result.hits) == [0, 1, 2, 3]
        assert sorted(result.searched_tree_ids) == [0, 1]

    def test_completion_fallback_matches_brute_force(self):
        ds = make_dataset([[float(i)] for i in range(6)] + [[float(40 + i)] for i in range(6)])
        forest = forest_from_groups(
            ds, [group(ds, list(range(6)), gid=0), group(ds, list(range(6, 12)), gid=1)]
        )
        q = query([2.0])
        result = forest_knn(forest, q, 9, EUCLIDEAN)
        truth = brute_knn(ds, q, 9, EUCLIDEAN)
        assert result.hits == truth
        assert result.searched_tree_ids == [0, 1]

    def test_k_zero_rejected(self, three_cluster_forest):
        _, forest = three_cluster_forest
        with pytest.raises(ConfigError):
            forest_knn(forest, query([0.0, 0.0]), 0, EUCLIDEAN)

    def test_dimension_mismatch_rejected(self, three_cluster_forest):
        _, forest = three_cluster_forest
        with pytest.raises(ConfigError):
            forest_knn(forest, query([0.0]), 3, EUCLIDEAN)

    def test_counter_additivity(self, three_cluster_forest):
        _, forest = three_cluster_forest
        result = forest_knn(forest, query([29.0, 1.0]), 5, EUCLIDEAN)
        expect_d = result.selection_counters.distance_count + sum(
            c.distance_count for c in result.tree_counters.values()
        )
        expect_c = result.selection_counters.comparison_count + sum(
            c.comparison_count for c in result.tree_counters.values()
        )
        assert result.counters.distance_count == expect_d
        assert result.counters.comparison_count == expect_c

    def test_parallel_matches_sequential(self):
        ds = make_dataset([[0.0], [1.0], [10.0], [11.0], [5.0], [6.0]])
        groups = [group(ds, [0, 1], gid=0), group(ds, [2, 3], gid=1),
                  group(ds, [4, 5], kind=GroupKind.BRIDGE, gid=2)]
        forest = forest_from_groups(ds, groups, neighbors={0: [2], 1: [2], 2: [0, 1]})
        for qv in ([0.5], [5.5], [10.5]):
            seq = forest_knn(forest, query(qv), 4, EUCLIDEAN, parallel=False)
            par = forest_knn(forest, query(qv), 4, EUCLIDEAN, parallel=True)
            assert seq.hits == par.hits
            assert seq.searched_tree_ids == par.searched_tree_ids
            assert seq.counters.distance_count == par.counters.distance_count

    def test_per_tree_hits_disjoint(self, three_cluster_forest):
        ds, forest = three_cluster_forest
        q = query([15.0, 0.0])
        result = forest_knn(forest, q, 10, EUCLIDEAN)
        assert len({h[0] for h in result.hits}) == len(result.hits)

    def test_baseline_equivalence(self):
        rng = np.random.default_rng(20)
        ds = Dataset(rng.standard_normal((80, 3)))
        result = run_build(ds, BuildConfig(method="baseline"))
        forest = result.forest
        assert len(forest.trees) == 1
        tree = forest.trees[0]
        for _ in range(10):
            q = query(rng.standard_normal(3))
            via_forest = forest_knn(forest, q, 7, EUCLIDEAN)
            counters = CostCounters()
            seed = estimate_query_radius(tree, q, 7, EUCLIDEAN, counters)
            direct = knn_search(tree, q, 7, EUCLIDEAN, counters, r_init=seed)
            assert via_forest.hits == direct

    def test_per_tree_results_match_per_tree_brute_force(self, three_cluster_forest):
        ds, forest = three_cluster_forest
        q = query([1.0, -0.5])
        result = forest_knn(forest, q, 5, EUCLIDEAN)
        tree = forest.trees[result.searched_tree_ids[0]]
        member_ids = sorted(
            oid for leaf in _leaves(tree.root) for oid in leaf
        )
        truth = brute_knn(ds, q, 5, EUCLIDEAN, member_ids=member_ids)
        assert result.hits == truth


def _leaves(node):
    from ballforest.ghtree import LeafNode

    if isinstance(node, LeafNode):
        yield node.bucket
    else:
        yield from _leaves(node.left)
        yield from _leaves(node.right)


class TestRecall:
    def _result(self, hits):
        return type("R", (), {"hits": hits})()

    def test_identical_lists(self):
        hits = [(0, 0.5), (1, 0.7)]
        assert recall_at_k(self._result(hits), hits) == 1.0

    def test_disjoint_lists(self):
        got = self._result([(0, 0.5), (1, 0.7)])
        assert recall_at_k(got, [(5, 1.5), (6, 1.7)]) == 0.0

    def test_partial_match(self):
        got = self._result([(i, float(i)) for i in range(10)])
        want = [(i, float(i)) for i in range(8)] + [(20, 99.0), (21, 100.0)]
        assert recall_at_k(got, want) == pytest.approx(0.8)

    def test_distance_ties_count_as_matches(self):
        got = self._result([(0, 1.0), (1, 2.0)])
        want = [(7, 1.0), (8, 2.0)]
        assert recall_at_k(got, want) == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            recall_at_k(self._result([(0, 0.1)]), [(0, 0.1), (1, 0.2)])
