"""Toolkit oracles: flows vs cut enumeration, cut trees, k-cut, seeding, FFD."""

import itertools
import math

import numpy as np
import pytest

from dcnsim.errors import DomainError
from dcnsim.graphkit import (
    WeightedGraph,
    ffd_pack,
    gomory_hu_tree,
    kmeans_pp_seed,
    max_flow_min_cut,
    min_k_cut,
)


def _random_graph(rng, n, density=0.6, max_w=10):
    g = WeightedGraph(n)
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < density:
                g.add_edge(u, v, int(rng.integers(1, max_w + 1)))
    return g


def _brute_force_min_cut(g, s, t):
    """Enumerate every s-t bipartition; n is tiny."""
    others = [v for v in range(g.n) if v not in (s, t)]
    best = math.inf
    for r in range(len(others) + 1):
        for side in itertools.combinations(others, r):
            s_side = set(side) | {s}
            w = sum(
                wt for u, v, wt in g.edges() if (u in s_side) != (v in s_side)
            )
            best = min(best, w)
    return best


def test_max_flow_simple_cases():
    g = WeightedGraph(2)
    g.add_edge(0, 1, 5)
    flow, side = max_flow_min_cut(g, 0, 1)
    assert flow == 5
    assert 0 in side and 1 not in side

    path = WeightedGraph(3)
    path.add_edge(0, 1, 1)
    path.add_edge(1, 2, 5)
    flow, _ = max_flow_min_cut(path, 0, 2)
    assert flow == 1

    with pytest.raises(DomainError):
        max_flow_min_cut(path, 1, 1)


def test_max_flow_equals_brute_force_on_random_graphs():
    rng = np.random.default_rng(23)
    for _ in range(60):
        n = int(rng.integers(3, 7))
        g = _random_graph(rng, n)
        s, t = rng.choice(n, size=2, replace=False)
        flow, side = max_flow_min_cut(g, int(s), int(t))
        assert math.isclose(flow, _brute_force_min_cut(g, int(s), int(t)), rel_tol=1e-9)
        # returned partition separates s and t and realizes the flow value
        assert int(s) in side and int(t) not in side
        crossing = sum(
            w for u, v, w in g.edges() if (u in side) != (v in side)
        )
        assert math.isclose(crossing, flow, rel_tol=1e-9)


def test_gomory_hu_triangle_and_star():
    tri = WeightedGraph(3)
    for u, v in ((0, 1), (1, 2), (0, 2)):
        tri.add_edge(u, v, 1)
    tree = gomory_hu_tree(tri)
    for u, v in ((0, 1), (1, 2), (0, 2)):
        assert tree.min_cut(u, v) == 2

    star = WeightedGraph(4)
    weights = {1: 3.0, 2: 5.0, 3: 2.0}
    for leaf, w in weights.items():
        star.add_edge(0, leaf, w)
    tree = gomory_hu_tree(star)
    for leaf, w in weights.items():
        for other in range(4):
            if other != leaf:
                assert tree.min_cut(leaf, other) == min(
                    w, weights.get(other, math.inf)
                )


def test_gomory_hu_matches_pairwise_max_flow():
    rng = np.random.default_rng(29)
    for _ in range(40):
        n = int(rng.integers(3, 8))
        g = _random_graph(rng, n)
        tree = gomory_hu_tree(g)
        for u in range(n):
            for v in range(u + 1, n):
                direct, _ = max_flow_min_cut(g, u, v)
                assert math.isclose(tree.min_cut(u, v), direct, rel_tol=1e-9)


def test_gomory_hu_is_a_genuine_cut_tree():
    # Each tree edge's bipartition must realize its label in the graph;
    # the k-cut approximation bound rests on this.
    rng = np.random.default_rng(31)
    for _ in range(40):
        n = int(rng.integers(3, 8))
        g = _random_graph(rng, n)
        tree = gomory_hu_tree(g)
        for child, parent, label in tree.edges():
            side = _tree_side(tree, child, parent)
            crossing = sum(
                w for u, v, w in g.edges() if (u in side) != (v in side)
            )
            assert math.isclose(crossing, label, rel_tol=1e-9)


def _tree_side(tree, child, parent):
    """Vertices on the child side after removing edge (child, parent)."""
    adj = {v: set() for v in range(tree.n)}
    for a, b, _ in tree.edges():
        adj[a].add(b)
        adj[b].add(a)
    adj[child].discard(parent)
    adj[parent].discard(child)
    side, frontier = {child}, [child]
    while frontier:
        u = frontier.pop()
        for v in adj[u]:
            if v not in side:
                side.add(v)
                frontier.append(v)
    return side


def _brute_force_k_cut(g, k):
    """Minimum crossing weight over all partitions into exactly k blocks."""
    best = math.inf
    labels = [0] * g.n

    def assign(v, used):
        nonlocal best
        if v == g.n:
            if used == k:
                w = sum(
                    wt for a, b, wt in g.edges() if labels[a] != labels[b]
                )
                best = min(best, w)
            return
        for c in range(min(used + 1, k)):
            labels[v] = c
            assign(v + 1, max(used, c + 1))

    assign(0, 0)
    return best


def test_min_k_cut_examples():
    g = WeightedGraph(3)
    g.add_edge(0, 1, 1)
    g.add_edge(1, 2, 5)
    comps, weight = min_k_cut(g, 1)
    assert comps == [[0, 1, 2]] and weight == 0.0

    comps, weight = min_k_cut(g, 2)
    assert comps == [[0], [1, 2]]
    assert weight == 1.0

    with pytest.raises(DomainError):
        min_k_cut(g, 0)
    with pytest.raises(DomainError):
        min_k_cut(g, 4)


def test_min_k_cut_is_partition_and_within_bound():
    rng = np.random.default_rng(37)
    for _ in range(50):
        n = int(rng.integers(3, 7))
        g = _random_graph(rng, n, density=0.7)
        for k in (2, 3):
            if k > n:
                continue
            comps, weight = min_k_cut(g, k)
            flat = sorted(v for comp in comps for v in comp)
            assert flat == list(range(n))  # disjoint cover
            assert len(comps) == k
            opt = _brute_force_k_cut(g, k)
            assert weight <= 2 * (1 - 1 / k) * opt + 1e-9
            # reported weight matches the partition it describes
            label = {v: i for i, comp in enumerate(comps) for v in comp}
            recomputed = sum(
                w for u, v, w in g.edges() if label[u] != label[v]
            )
            assert math.isclose(weight, recomputed, rel_tol=1e-12, abs_tol=1e-12)


def test_kmeans_seed_all_and_errors():
    vectors = [np.array([float(i), 0.0]) for i in range(5)]
    chosen = kmeans_pp_seed(vectors, 5, seed=3)
    assert sorted(chosen) == [0, 1, 2, 3, 4]
    with pytest.raises(DomainError):
        kmeans_pp_seed(vectors, 6, seed=3)
    with pytest.raises(DomainError):
        kmeans_pp_seed(vectors, 0, seed=3)
    assert kmeans_pp_seed(vectors, 3, seed=11) == kmeans_pp_seed(vectors, 3, seed=11)


def test_kmeans_first_center_uniform():
    vectors = [np.array([float(i)]) for i in range(4)]
    counts = np.zeros(4)
    trials = 10_000
    for seed in range(trials):
        counts[kmeans_pp_seed(vectors, 1, seed=seed)[0]] += 1
    p = 1 / 4
    sigma = math.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(counts / trials - p) <= 5 * sigma)


def test_kmeans_separated_clusters_get_both_seeds():
    left = [np.array([0.0 + 0.01 * i, 0.0]) for i in range(5)]
    right = [np.array([100.0 + 0.01 * i, 0.0]) for i in range(5)]
    vectors = left + right
    hits = 0
    trials = 1000
    for seed in range(trials):
        a, b = kmeans_pp_seed(vectors, 2, seed=seed)
        if (a < 5) != (b < 5):
            hits += 1
    assert hits >= 0.99 * trials


def test_kmeans_duplicate_vectors_still_complete():
    vectors = [np.zeros(2)] * 4
    assert sorted(kmeans_pp_seed(vectors, 4, seed=0)) == [0, 1, 2, 3]


def test_ffd_hand_trace():
    bins = ffd_pack([7, 5, 4, 3, 1], 10)
    sizes = [[7, 3], [5, 4, 1]]
    assert [[ [7, 5, 4, 3, 1][i] for i in b] for b in bins] == sizes
    assert bins == [[0, 3], [1, 2, 4]]


def test_ffd_edge_cases():
    assert ffd_pack([], 10) == []
    with pytest.raises(DomainError):
        ffd_pack([11], 10)
    with pytest.raises(DomainError):
        ffd_pack([-1], 10)
    # ties keep original index order
    assert ffd_pack([5, 5, 5], 10) == [[0, 1], [2]]


def _optimal_bins(items, cap):
    """Exhaustive DP over subsets; n <= 12."""
    n = len(items)
    feasible = [False] * (1 << n)
    for mask in range(1 << n):
        total = sum(items[i] for i in range(n) if mask >> i & 1)
        feasible[mask] = total <= cap
    best = [math.inf] * (1 << n)
    best[0] = 0
    for mask in range(1, 1 << n):
        sub = mask
        while sub:
            if feasible[sub] and best[mask ^ sub] + 1 < best[mask]:
                best[mask] = best[mask ^ sub] + 1
            sub = (sub - 1) & mask
    return best[(1 << n) - 1]


def test_ffd_against_exhaustive_optimum():
    rng = np.random.default_rng(41)
    for _ in range(30):
        n = int(rng.integers(1, 13))
        cap = 100
        items = [int(rng.integers(1, cap + 1)) for _ in range(n)]
        bins = ffd_pack(items, cap)
        # never violate capacity; output is a permutation partition
        assert sorted(i for b in bins for i in b) == list(range(n))
        for b in bins:
            assert sum(items[i] for i in b) <= cap
        opt = _optimal_bins(items, cap)
        assert len(bins) <= opt + 1
        assert len(bins) <= math.ceil(11 / 9 * opt) + 1
