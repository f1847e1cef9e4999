import numpy as np
import pytest

from language_diversity.clustering import (
    BRUTE_FORCE_LIMIT,
    Partition,
    avg_inter,
    avg_within,
    best_of_restarts,
    brute_force_best,
    directed_inter_community,
    find_optimum,
    inter_community,
    kmeans_language,
    worst_within,
)
from language_diversity.evolution import ModelParams, init_population
from language_diversity.language import ComprehensionCache, build_cache, overall_comprehension


def block_cache(sizes, within=0.9, across=0.1) -> ComprehensionCache:
    labels = np.repeat(np.arange(len(sizes)), sizes)
    f = np.where(labels[:, None] == labels[None, :], within, across)
    return ComprehensionCache.from_mutual(f)


def noisy_block_cache(rng: np.random.Generator, sizes) -> ComprehensionCache:
    """Communities with mutual comprehension in [0.6, 0.9] and at most 0.2 across."""

    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    same = labels[:, None] == labels[None, :]
    f = np.where(same, rng.uniform(0.6, 0.9, size=(n, n)), rng.uniform(0.0, 0.2, size=(n, n)))
    f = np.triu(f, 1)
    f = f + f.T + np.eye(n)
    order = rng.permutation(n)
    return ComprehensionCache.from_mutual(f[np.ix_(order, order)])


def random_block_sizes(rng: np.random.Generator, n: int, k: int):
    while True:
        cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False))
        sizes = np.diff(np.concatenate(([0], cuts, [n])))
        if np.all(sizes >= 2):
            return sizes.tolist()


def test_partition_orders_clusters_by_smallest_member():
    partition = Partition((frozenset({3, 1}), frozenset({0, 2})))
    assert partition.as_lists() == [[0, 2], [1, 3]]
    assert partition.k == 2
    assert partition.n == 4


def test_partition_from_labels():
    partition = Partition.from_labels([1, 1, 0, 2, 0])
    assert partition.as_lists() == [[0, 1], [2, 4], [3]]
    assert partition.sizes() == [2, 2, 1]


@pytest.mark.parametrize(
    "clusters, message",
    [
        ((), "at least one"),
        ((frozenset({0}), frozenset()), "non-empty"),
        ((frozenset({0, 1}), frozenset({1, 2})), "disjoint"),
        ((frozenset({0}), frozenset({2})), "cover"),
    ],
)
def test_partition_rejects_invalid_clusters(clusters, message):
    with pytest.raises(ValueError, match=message):
        Partition(clusters)


def test_avg_within_of_single_cluster_is_overall_comprehension():
    cache = init_population(ModelParams(n=9), np.random.default_rng(2)).cache
    assert avg_within(Partition((frozenset(range(9)),)), cache) == pytest.approx(overall_comprehension(cache))


def test_avg_within_of_singletons_is_zero():
    cache = block_cache([2, 2])
    assert avg_within(Partition.from_labels(range(4)), cache) == 0.0
    assert worst_within(Partition.from_labels(range(4)), cache) is None


def test_avg_within_averages_cluster_values():
    f = np.full((4, 4), 0.1)
    np.fill_diagonal(f, 1.0)
    f[0, 1] = f[1, 0] = 0.8
    f[2, 3] = f[3, 2] = 0.4
    cache = ComprehensionCache.from_mutual(f)
    partition = Partition.from_labels([0, 0, 1, 1])
    assert avg_within(partition, cache) == pytest.approx(0.6)
    assert worst_within(partition, cache) == pytest.approx(0.4)


def test_inter_community_of_identical_agents_is_one():
    cache = ComprehensionCache.from_mutual(np.ones((4, 4)))
    assert inter_community({0, 1}, {2, 3}, cache) == pytest.approx(1.0)


def test_inter_community_is_symmetric_and_reads_blocks():
    cache = block_cache([3, 3])
    assert inter_community({0, 1, 2}, {3, 4, 5}, cache) == pytest.approx(0.1)
    mixed = init_population(ModelParams(n=6), np.random.default_rng(4)).cache
    assert inter_community({0, 4}, {1, 2, 5}, mixed) == pytest.approx(inter_community({1, 2, 5}, {0, 4}, mixed))


def test_inter_community_rejects_overlap():
    with pytest.raises(ValueError, match="disjoint"):
        inter_community({0, 1}, {1, 2}, block_cache([2, 2]))


def test_directed_inter_community_averages_to_mutual():
    cache = build_cache(init_population(ModelParams(n=7), np.random.default_rng(6)).agents)
    a, b = {0, 3, 5}, {1, 2}
    directed = (directed_inter_community(a, b, cache) + directed_inter_community(b, a, cache)) / 2
    assert directed == pytest.approx(inter_community(a, b, cache), abs=1e-12)


def test_directed_inter_community_needs_directed_values():
    with pytest.raises(ValueError, match="Directed"):
        directed_inter_community({0}, {1}, block_cache([1, 1]))


def test_avg_inter_over_cluster_pairs():
    f = np.eye(3)
    f[0, 1] = f[1, 0] = 0.1
    f[0, 2] = f[2, 0] = 0.2
    f[1, 2] = f[2, 1] = 0.3
    cache = ComprehensionCache.from_mutual(f)
    assert avg_inter(Partition.from_labels([0, 1, 2]), cache) == pytest.approx(0.2)
    assert avg_inter(Partition.from_labels([0, 0, 1]), cache) == pytest.approx(0.25)
    assert avg_inter(Partition.from_labels([0, 1, 2]), ComprehensionCache.from_mutual(np.full((3, 3), 0.35))) == (
        pytest.approx(0.35)
    )


def test_avg_inter_needs_two_clusters():
    with pytest.raises(ValueError, match="two clusters"):
        avg_inter(Partition((frozenset(range(3)),)), block_cache([3]))


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_recovers_planted_communities(seed):
    result = kmeans_language(block_cache([4, 4]), 2, np.random.default_rng(seed))
    assert result.partition.as_lists() == [[0, 1, 2, 3], [4, 5, 6, 7]]
    assert result.w_avg == pytest.approx(0.9)
    assert result.i_avg == pytest.approx(0.1)
    assert result.converged


def test_kmeans_with_one_cluster():
    cache = init_population(ModelParams(n=10), np.random.default_rng(1)).cache
    result = kmeans_language(cache, 1, np.random.default_rng(0))
    assert result.partition.k == 1
    assert result.w_avg == pytest.approx(overall_comprehension(cache))
    assert result.i_avg is None
    assert result.converged
    assert result.passes == 1


@pytest.mark.parametrize("k", [2, 3, 5])
def test_kmeans_returns_k_clusters_covering_population(k):
    cache = init_population(ModelParams(n=15), np.random.default_rng(k)).cache
    result = kmeans_language(cache, k, np.random.default_rng(0))
    assert result.partition.k == k
    assert sorted(member for cluster in result.partition.as_lists() for member in cluster) == list(range(15))


def test_kmeans_rejects_too_many_clusters():
    with pytest.raises(ValueError, match="Cluster count"):
        kmeans_language(block_cache([2, 2]), 5, np.random.default_rng(0))


def test_kmeans_warns_when_pass_limit_is_hit(caplog):
    cache = noisy_block_cache(np.random.default_rng(0), [4, 4, 4])
    with caplog.at_level("WARNING"):
        results = [kmeans_language(cache, 3, np.random.default_rng(seed), max_passes=1) for seed in range(10)]
    unconverged = [result for result in results if not result.converged]
    assert all(result.passes == 1 for result in results)
    assert caplog.text.count("without converging") == len(unconverged)


def test_communities_understand_themselves_better_than_each_other():
    cache = block_cache([4, 4])
    for k in (2, 3):
        result = best_of_restarts(cache, k, 10, np.random.default_rng(k))
        assert result.i_avg < result.w_avg


def test_more_restarts_never_lower_the_result():
    cache = init_population(ModelParams(n=14), np.random.default_rng(9)).cache
    values = [best_of_restarts(cache, 3, restarts, np.random.default_rng(5)).w_avg for restarts in range(1, 11)]
    assert values == sorted(values)


def test_optimum_finds_three_planted_communities():
    optimum = find_optimum(block_cache([4, 4, 4]), 1, 10, 20, np.random.default_rng(0))
    assert optimum.k_star == 3
    assert optimum.w_star == pytest.approx(0.9)
    assert optimum.i_star == pytest.approx(0.1)
    assert optimum.partition.sizes() == [4, 4, 4]
    assert [k for k, _ in optimum.scan] == list(range(1, 11))


def test_constant_cache_prefers_a_single_community():
    optimum = find_optimum(ComprehensionCache.from_mutual(np.full((8, 8), 0.3)), 1, 5, 5, np.random.default_rng(0))
    assert optimum.k_star == 1
    assert optimum.w_star == pytest.approx(0.3)
    assert optimum.i_star is None


def test_optimum_validates_k_range():
    cache = block_cache([2, 2])
    for k_min, k_max in [(0, 2), (3, 2), (1, 5)]:
        with pytest.raises(ValueError):
            find_optimum(cache, k_min, k_max, 2, np.random.default_rng(0))


def test_optimum_is_deterministic_for_a_seed():
    cache = init_population(ModelParams(n=12), np.random.default_rng(3)).cache
    first = find_optimum(cache, 1, 5, 4, np.random.default_rng(17))
    second = find_optimum(cache, 1, 5, 4, np.random.default_rng(17))
    assert first == second


def test_brute_force_small_cases():
    cache = ComprehensionCache.from_mutual([[1.0, 0.2, 0.7], [0.2, 1.0, 0.4], [0.7, 0.4, 1.0]])
    best = brute_force_best(cache, 2)
    assert best.partition.as_lists() == [[0, 2], [1]]
    assert best.w_avg == pytest.approx(0.35)
    assert brute_force_best(cache, 3).w_avg == 0.0
    assert brute_force_best(block_cache([3, 3]), 2).partition.as_lists() == [[0, 1, 2], [3, 4, 5]]


def test_brute_force_refuses_large_populations():
    with pytest.raises(ValueError, match="at most"):
        brute_force_best(block_cache([BRUTE_FORCE_LIMIT, 1]), 2)


def test_optimum_matches_exhaustive_scan():
    rng = np.random.default_rng(31)
    cache = noisy_block_cache(rng, [3, 3, 3])
    exhaustive = [brute_force_best(cache, k).w_avg for k in range(1, 5)]
    optimum = find_optimum(cache, 1, 4, 20, np.random.default_rng(1))
    assert optimum.k_star == int(np.argmax(exhaustive)) + 1
    assert optimum.w_star == pytest.approx(max(exhaustive), abs=1e-12)


def test_restarts_come_close_to_exhaustive_optimum():
    # Caches have planted communities. With independent uniform entries the
    # exhaustive winner is often one close pair plus everyone else, a split the
    # assignment rule cannot hold: outsiders move into the pair.
    rng = np.random.default_rng(2024)
    close = 0
    for _ in range(100):
        n = int(rng.integers(4, 10))
        k = int(rng.integers(2, 4)) if n >= 6 else 2
        cache = noisy_block_cache(rng, random_block_sizes(rng, n, k))
        exhaustive = brute_force_best(cache, k).w_avg
        found = best_of_restarts(cache, k, 20, rng).w_avg
        assert found <= exhaustive + 1e-12
        if found >= 0.98 * exhaustive:
            close += 1
    assert close >= 95
