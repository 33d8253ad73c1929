"""Self-contained algorithm toolkit.

Max-flow / min-cut, Gomory-Hu cut trees (Gusfield construction),
approximate minimum k-cut, k-means++ seeding and first-fit-decreasing
bin packing.  Instances here are small (tens of vertices, hundreds of
items), so clarity beats asymptotics throughout.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import DomainError


class WeightedGraph:
    """Undirected graph with non-negative edge weights; no self-loops.

    Adding an existing edge accumulates its weight.
    """

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"graph needs at least one vertex, got {n}")
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]

    def add_edge(self, u: int, v: int, weight: float) -> None:
        if u == v:
            raise DomainError(f"self-loop on vertex {u}")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise DomainError(f"edge ({u}, {v}) outside vertex range")
        if not math.isfinite(weight) or weight < 0:
            raise DomainError(f"edge weight must be finite and >= 0, got {weight}")
        if weight == 0:
            return
        self.adj[u][v] = self.adj[u].get(v, 0.0) + weight
        self.adj[v][u] = self.adj[v].get(u, 0.0) + weight

    def edges(self):
        for u in range(self.n):
            for v, w in self.adj[u].items():
                if u < v:
                    yield u, v, w

    def weight_between(self, group_a, group_b) -> float:
        """Total weight of edges with one endpoint in each group."""
        b = set(group_b)
        return sum(
            w for u in group_a for v, w in self.adj[u].items() if v in b
        )


def max_flow_min_cut(graph: WeightedGraph, s: int, t: int):
    """Edmonds-Karp max flow; returns (flow value, source-side vertex set)."""
    if s == t:
        raise DomainError(f"source and sink coincide ({s})")
    n = graph.n
    # Residual capacities; an undirected edge gives capacity both ways.
    residual = [dict(graph.adj[u]) for u in range(n)]
    flow = 0.0
    while True:
        parent = [-1] * n
        parent[s] = s
        queue = deque([s])
        while queue:
            u = queue.popleft()
            if u == t:
                break
            for v, cap in residual[u].items():
                if cap > 1e-12 and parent[v] == -1:
                    parent[v] = u
                    queue.append(v)
        if parent[t] == -1:
            break
        bottleneck = math.inf
        v = t
        while v != s:
            u = parent[v]
            bottleneck = min(bottleneck, residual[u][v])
            v = u
        v = t
        while v != s:
            u = parent[v]
            residual[u][v] -= bottleneck
            residual[v][u] = residual[v].get(u, 0.0) + bottleneck
            v = u
        flow += bottleneck
    source_side = {u for u in range(n) if parent[u] != -1}
    return flow, source_side


class CutTree:
    """Gomory-Hu tree: min edge label on the tree path = pairwise min cut."""

    def __init__(self, parent: list[int], weight: list[float]):
        self.parent = parent
        self.weight = weight
        self.n = len(parent)

    def edges(self):
        for v in range(self.n):
            if self.parent[v] >= 0:
                yield v, self.parent[v], self.weight[v]

    def _path_to_root(self, v: int) -> list[int]:
        path = [v]
        while self.parent[path[-1]] >= 0:
            path.append(self.parent[path[-1]])
        return path

    def min_cut(self, u: int, v: int) -> float:
        """Minimum cut value between u and v in the source graph."""
        if u == v:
            raise DomainError(f"min cut undefined for identical vertices ({u})")
        up, vp = self._path_to_root(u), self._path_to_root(v)
        on_up = {node: i for i, node in enumerate(up)}
        meet = next(node for node in vp if node in on_up)
        cut = math.inf
        for node in up[: on_up[meet]]:
            cut = min(cut, self.weight[node])
        for node in vp:
            if node == meet:
                break
            cut = min(cut, self.weight[node])
        return cut


def gomory_hu_tree(graph: WeightedGraph) -> CutTree:
    """Gusfield's cut-tree construction: n-1 max-flow calls, no contraction.

    The sibling re-hang plus grandparent swap keep the tree a genuine
    cut tree (each tree edge's bipartition realizes its label), which
    the k-cut approximation below relies on.
    """
    n = graph.n
    parent = [0] * n
    weight = [0.0] * n
    parent[0] = -1
    for v in range(1, n):
        pv = parent[v]
        flow, source_side = max_flow_min_cut(graph, v, pv)
        weight[v] = flow
        for u in range(n):
            if u != v and parent[u] == pv and u in source_side:
                parent[u] = v
        gp = parent[pv]
        if gp >= 0 and gp in source_side:
            parent[v] = gp
            parent[pv] = v
            weight[v] = weight[pv]
            weight[pv] = flow
    return CutTree(parent, weight)


def _connected_components(n: int, adjacency) -> list[list[int]]:
    seen = [False] * n
    components = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adjacency(u):
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        components.append(sorted(comp))
    return components


def min_k_cut(graph: WeightedGraph, k: int):
    """Approximate minimum k-cut via the k-1 lightest Gomory-Hu cuts.

    Removing the union of those cuts can fragment the graph into more
    than k pieces; fragments are then re-merged greedily by smallest
    inter-component weight (spurious fragments sit at weight 0) until
    exactly k remain.  Returns (components, total cut weight); the cut
    weight is within 2*(1 - 1/k) of optimal.
    """
    if not (1 <= k <= graph.n):
        raise DomainError(f"k must be within [1, {graph.n}], got {k}")
    if k == 1:
        return [list(range(graph.n))], 0.0
    tree = gomory_hu_tree(graph)
    tree_edges = sorted(tree.edges(), key=lambda e: (e[2], e[0], e[1]))
    removed = tree_edges[: k - 1]
    kept = tree_edges[k - 1 :]

    # Tree components after dropping the removed edges.
    tree_adj: list[list[int]] = [[] for _ in range(graph.n)]
    for a, b, _ in kept:
        tree_adj[a].append(b)
        tree_adj[b].append(a)
    tree_comp = [0] * graph.n
    for label, comp in enumerate(_connected_components(graph.n, lambda u: tree_adj[u])):
        for v in comp:
            tree_comp[v] = label

    # Drop every graph edge crossing tree components, then re-read the
    # actual graph components (tree components may induce disconnected
    # subgraphs, which is where extra fragments come from).
    def same_side_neighbors(u):
        return [v for v in graph.adj[u] if tree_comp[v] == tree_comp[u]]

    components = _connected_components(graph.n, same_side_neighbors)

    while len(components) > k:
        best = None
        for i in range(len(components)):
            for j in range(i + 1, len(components)):
                w = graph.weight_between(components[i], components[j])
                key = (w, components[i][0], components[j][0])
                if best is None or key < best[0]:
                    best = (key, i, j)
        _, i, j = best
        merged = sorted(components[i] + components[j])
        components = [c for idx, c in enumerate(components) if idx not in (i, j)]
        components.append(merged)
        components.sort(key=lambda c: c[0])

    label = {}
    for idx, comp in enumerate(components):
        for v in comp:
            label[v] = idx
    cut_weight = sum(w for u, v, w in graph.edges() if label[u] != label[v])
    return components, cut_weight


def _euclidean(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def kmeans_pp_seed(vectors, k: int, distance_fn=None, seed=None) -> list[int]:
    """k-means++ seeding: D^2-weighted sampling of k center indices.

    The first center is uniform; each next one is drawn with probability
    proportional to the squared dissimilarity to its nearest chosen
    center.  Deterministic given the seed.
    """
    n = len(vectors)
    if not (1 <= k <= n):
        raise DomainError(f"k must be within [1, {n}], got {k}")
    dist = distance_fn or _euclidean
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    best = [dist(vectors[i], vectors[chosen[0]]) for i in range(n)]
    while len(chosen) < k:
        weights = np.array(
            [0.0 if i in chosen else best[i] ** 2 for i in range(n)], dtype=float
        )
        total = weights.sum()
        if total > 0:
            pick = int(rng.choice(n, p=weights / total))
        else:
            # All remaining candidates coincide with a center; fall back
            # to a uniform draw over the unchosen ones.
            remaining = [i for i in range(n) if i not in chosen]
            pick = int(remaining[rng.integers(len(remaining))])
        chosen.append(pick)
        for i in range(n):
            d = dist(vectors[i], vectors[pick])
            if d < best[i]:
                best[i] = d
    return chosen


def ffd_pack(items, bin_capacity: float) -> list[list[int]]:
    """First-fit-decreasing bin packing; returns bins of original indices.

    Ties on equal sizes keep original index order.  An item larger than
    the bin capacity is an error.
    """
    for idx, size in enumerate(items):
        if size > bin_capacity:
            raise DomainError(
                f"item {idx} of size {size} exceeds bin capacity {bin_capacity}"
            )
        if size < 0:
            raise DomainError(f"item {idx} has negative size {size}")
    order = sorted(range(len(items)), key=lambda i: (-items[i], i))
    bins: list[list[int]] = []
    space: list[float] = []
    for idx in order:
        size = items[idx]
        for b, free in enumerate(space):
            if size <= free:
                bins[b].append(idx)
                space[b] = free - size
                break
        else:
            bins.append([idx])
            space.append(bin_capacity - size)
    return bins
