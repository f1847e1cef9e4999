"""Language community detection by k-means over mutual comprehension."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .language import ComprehensionCache, within_community_comprehension
from .random_streams import RandomStreams

logger = logging.getLogger(__name__)

BRUTE_FORCE_LIMIT = 12
_MOVE_TOLERANCE = 1e-12
# Scores closer than this count as tied; ties keep the earlier (smaller K) winner.
_TIE_TOLERANCE = 1e-12
_BRUTE_FORCE_BATCH = 4096


@dataclass(frozen=True)
class Partition:
    """K disjoint non-empty clusters covering agents 0..N-1, ordered by smallest member."""

    clusters: Tuple[FrozenSet[int], ...]

    def __post_init__(self) -> None:
        clusters = tuple(frozenset(int(member) for member in cluster) for cluster in self.clusters)
        if not clusters:
            raise ValueError("A partition needs at least one cluster")
        if any(not cluster for cluster in clusters):
            raise ValueError("Partition clusters must be non-empty")
        total = sum(len(cluster) for cluster in clusters)
        covered = frozenset().union(*clusters)
        if len(covered) != total:
            raise ValueError("Partition clusters must be pairwise disjoint")
        if covered != frozenset(range(total)):
            raise ValueError(f"Partition must cover agents 0..{total - 1} exactly")
        object.__setattr__(self, "clusters", tuple(sorted(clusters, key=min)))

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> "Partition":
        groups: dict[int, set[int]] = {}
        for index, label in enumerate(labels):
            groups.setdefault(int(label), set()).add(index)
        return cls(tuple(frozenset(group) for group in groups.values()))

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def n(self) -> int:
        return sum(len(cluster) for cluster in self.clusters)

    def sizes(self) -> List[int]:
        return sorted((len(cluster) for cluster in self.clusters), reverse=True)

    def as_lists(self) -> List[List[int]]:
        return [sorted(cluster) for cluster in self.clusters]


@dataclass(frozen=True)
class ClusteringResult:
    partition: Partition
    w_avg: float
    i_avg: Optional[float]
    passes: int
    converged: bool
    w_min: Optional[float] = None


@dataclass(frozen=True)
class OptimumResult:
    k_star: int
    w_star: float
    partition: Partition
    scan: Tuple[Tuple[int, float], ...]
    i_star: Optional[float] = None
    w_min: Optional[float] = None


def avg_within(partition: Partition, cache: ComprehensionCache) -> float:
    """Average of W(C) over the partition's clusters; singletons count as 0."""

    values = [within_community_comprehension(cluster, cache) for cluster in partition.clusters]
    return float(np.mean(values))


def worst_within(partition: Partition, cache: ComprehensionCache) -> Optional[float]:
    """Lowest W(C) among clusters with at least two members."""

    values = [
        within_community_comprehension(cluster, cache)
        for cluster in partition.clusters
        if len(cluster) > 1
    ]
    return min(values) if values else None


def _cluster_pair(a: Iterable[int], b: Iterable[int], n: int) -> Tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]]:
    left = np.array(sorted(set(a)), dtype=np.intp)
    right = np.array(sorted(set(b)), dtype=np.intp)
    if left.size == 0 or right.size == 0:
        raise ValueError("Clusters must be non-empty")
    if np.intersect1d(left, right).size:
        raise ValueError("Clusters must be disjoint")
    for index in (left, right):
        if index[0] < 0 or index[-1] >= n:
            raise ValueError(f"Cluster members must be agent indices in [0, {n})")
    return left, right


def directed_inter_community(a: Iterable[int], b: Iterable[int], cache: ComprehensionCache) -> float:
    """Mean directed comprehension from members of ``a`` to members of ``b``."""

    if cache.c is None:
        raise ValueError("Directed comprehension was not retained in this cache")
    left, right = _cluster_pair(a, b, cache.n)
    return float(cache.c[np.ix_(left, right)].mean())


def inter_community(a: Iterable[int], b: Iterable[int], cache: ComprehensionCache) -> float:
    left, right = _cluster_pair(a, b, cache.n)
    return float(cache.f[np.ix_(left, right)].mean())


def avg_inter(partition: Partition, cache: ComprehensionCache) -> float:
    """Mean inter-community comprehension over unordered cluster pairs."""

    if partition.k < 2:
        raise ValueError("Inter-community comprehension needs at least two clusters")
    values = [
        inter_community(a, b, cache)
        for a, b in itertools.combinations(partition.clusters, 2)
    ]
    return float(np.mean(values))


def _result(partition: Partition, cache: ComprehensionCache, passes: int, converged: bool) -> ClusteringResult:
    return ClusteringResult(
        partition=partition,
        w_avg=avg_within(partition, cache),
        i_avg=avg_inter(partition, cache) if partition.k >= 2 else None,
        passes=passes,
        converged=converged,
        w_min=worst_within(partition, cache),
    )


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"Cluster count must lie in [1, {n}], got {k}")


def kmeans_language(
    cache: ComprehensionCache,
    k: int,
    rng: np.random.Generator,
    max_passes: int = 100,
    exclude_self: bool = True,
) -> ClusteringResult:
    """Move agents one at a time to the cluster they comprehend best.

    Agents are visited in a fresh random order each pass. A move that would
    empty a cluster is skipped, so exactly ``k`` clusters come back. The run
    stops after a pass without moves or after ``max_passes`` passes.
    """

    n = cache.n
    _check_k(k, n)
    f = cache.f
    labels = rng.integers(0, k, size=n)
    labels[rng.permutation(n)[:k]] = np.arange(k)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sums = f @ onehot
    sizes = np.bincount(labels, minlength=k).astype(np.float64)
    diagonal = np.diag(f)

    passes = 0
    converged = False
    while passes < max_passes:
        passes += 1
        moved = False
        for agent in rng.permutation(n):
            current = labels[agent]
            if sizes[current] == 1:
                continue
            scores = sums[agent] / sizes
            if exclude_self:
                scores[current] = (sums[agent, current] - diagonal[agent]) / (sizes[current] - 1)
            best = int(np.argmax(scores))
            if scores[best] <= scores[current] + _MOVE_TOLERANCE:
                continue
            sums[:, current] -= f[:, agent]
            sums[:, best] += f[:, agent]
            sizes[current] -= 1
            sizes[best] += 1
            labels[agent] = best
            moved = True
        if not moved:
            converged = True
            break

    if not converged:
        logger.warning("k-means with K=%s stopped after %s passes without converging", k, passes)
    return _result(Partition.from_labels(labels), cache, passes, converged)


def _best_for_k(
    cache: ComprehensionCache,
    k: int,
    restarts: int,
    streams: RandomStreams,
    max_passes: int,
    exclude_self: bool,
) -> ClusteringResult:
    best: Optional[ClusteringResult] = None
    for restart in range(max(1, restarts)):
        result = kmeans_language(cache, k, streams.generator(k, restart), max_passes, exclude_self)
        if best is None or result.w_avg > best.w_avg:
            best = result
    assert best is not None
    return best


def best_of_restarts(
    cache: ComprehensionCache,
    k: int,
    restarts: int,
    rng: np.random.Generator,
    max_passes: int = 100,
    exclude_self: bool = True,
) -> ClusteringResult:
    """Keep the highest-scoring of ``restarts`` k-means runs.

    Restart ``j`` always uses the substream keyed by ``(k, j)``, so adding
    restarts never lowers the result for the same ``rng`` state.
    """

    _check_k(k, cache.n)
    streams = RandomStreams(int(rng.integers(2**63)))
    return _best_for_k(cache, k, restarts, streams, max_passes, exclude_self)


def find_optimum(
    cache: ComprehensionCache,
    k_min: int,
    k_max: int,
    restarts: int,
    rng: np.random.Generator,
    max_passes: int = 100,
    exclude_self: bool = True,
) -> OptimumResult:
    """Scan K in [k_min, k_max] and keep the K with the best average within comprehension."""

    if not 1 <= k_min <= k_max <= cache.n:
        raise ValueError(f"Need 1 <= k_min <= k_max <= {cache.n}, got k_min={k_min}, k_max={k_max}")
    streams = RandomStreams(int(rng.integers(2**63)))
    scan: List[Tuple[int, float]] = []
    winner: Optional[ClusteringResult] = None
    for k in range(k_min, k_max + 1):
        result = _best_for_k(cache, k, restarts, streams, max_passes, exclude_self)
        logger.debug("K=%s best W(P_K)=%.6f", k, result.w_avg)
        scan.append((k, result.w_avg))
        if winner is None or result.w_avg > winner.w_avg + _TIE_TOLERANCE:
            winner = result
    assert winner is not None
    return OptimumResult(
        k_star=winner.partition.k,
        w_star=winner.w_avg,
        partition=winner.partition,
        scan=tuple(scan),
        i_star=winner.i_avg,
        w_min=winner.w_min,
    )


def _restricted_growth_strings(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    """Label vectors of every partition of n items into exactly k blocks."""

    labels = [0] * n

    def extend(position: int, used: int) -> Iterator[Tuple[int, ...]]:
        if position == n:
            if used == k:
                yield tuple(labels)
            return
        if k - used > n - position:
            return
        for label in range(min(used + 1, k)):
            labels[position] = label
            yield from extend(position + 1, max(used, label + 1))

    yield from extend(1, 1)


def _batched(items: Iterator[Tuple[int, ...]], size: int) -> Iterator[Sequence[Tuple[int, ...]]]:
    while True:
        batch = list(itertools.islice(items, size))
        if not batch:
            return
        yield batch


def brute_force_best(cache: ComprehensionCache, k: int) -> ClusteringResult:
    """Exhaustively find the partition into k clusters with the best average within comprehension."""

    n = cache.n
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"Exhaustive search supports at most {BRUTE_FORCE_LIMIT} agents, got {n}")
    _check_k(k, n)
    off_diagonal = cache.f - np.diag(np.diag(cache.f))
    best_labels: Optional[Tuple[int, ...]] = None
    best_value = -np.inf
    for batch in _batched(_restricted_growth_strings(n, k), _BRUTE_FORCE_BATCH):
        labels = np.array(batch, dtype=np.intp)
        onehot = np.zeros((len(batch), n, k))
        onehot[np.arange(len(batch))[:, None], np.arange(n)[None, :], labels] = 1.0
        block_sums = np.einsum("pik,ij,pjk->pk", onehot, off_diagonal, onehot)
        sizes = onehot.sum(axis=1)
        pairs = sizes * (sizes - 1)
        within = np.divide(block_sums, pairs, out=np.zeros_like(block_sums), where=pairs > 0)
        scores = within.mean(axis=1)
        index = int(np.argmax(scores))
        if scores[index] > best_value:
            best_value = float(scores[index])
            best_labels = batch[index]
    assert best_labels is not None
    return _result(Partition.from_labels(best_labels), cache, passes=0, converged=True)


__all__ = [
    "BRUTE_FORCE_LIMIT",
    "ClusteringResult",
    "OptimumResult",
    "Partition",
    "avg_inter",
    "avg_within",
    "best_of_restarts",
    "brute_force_best",
    "directed_inter_community",
    "find_optimum",
    "inter_community",
    "kmeans_language",
    "worst_within",
]
