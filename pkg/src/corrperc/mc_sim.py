"""Finite multigraph realizations of a joint degree-degree distribution.

Graphs are built by stub matching: each edge draws its ordered end-degree
pair from ``e`` (restricted to degree classes that still have free stubs)
and then takes a uniformly random free stub from each class.  Self-loops and
parallel edges are kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .joint_dist import CSV_VERSION_LINE, JointDegreeDistribution, marginal_degree_dist
from .pool import ordered_map

ENSEMBLE_COLUMNS = ("pi", "s_mean", "s_stderr", "w_mean", "w_stderr", "r_mean", "replicas", "n", "seed")


class SamplingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GraphSample:
    n: int
    degrees: np.ndarray
    edges: np.ndarray  # shape (m, 2), zero-based node indices
    seed: int | tuple
    realized_e: np.ndarray
    dropped_stubs: int = 0

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])


@dataclass(frozen=True)
class ComponentStats:
    s_hat: float
    w_hat: float
    counts: dict = field(default_factory=dict)  # component size -> number of components


class DisjointSet:
    """Union by size with path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def component_sizes(self) -> np.ndarray:
        roots = [i for i, p in enumerate(self.parent) if p == i]
        return np.array([self.size[r] for r in roots], dtype=np.int64)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng(np.random.SeedSequence(list(seed)))
    return np.random.default_rng(seed)


def class_counts(e: JointDegreeDistribution, n: int) -> np.ndarray:
    """Largest-remainder rounding of ``n p_k``, with an even stub total.

    Returns counts indexed by degree ``k = 0..N`` (``k = 0`` is always zero).
    """
    p = marginal_degree_dist(e).p
    target = n * p
    counts = np.floor(target).astype(np.int64)
    short = n - int(counts.sum())
    if short > 0:
        order = np.lexsort((-np.arange(p.size), -(target - counts)))
        counts[order[:short]] += 1
    k = np.arange(p.size)
    if int(k @ counts) % 2:
        # move one node from the largest class to an adjacent degree of opposite parity
        big = int(np.argmax(counts))
        candidates = [d for d in (big + 1, big - 1, big + 3, big - 3) if 1 <= d < p.size]
        if not candidates and big == 1:
            candidates = [0]  # last resort: one isolated node
        if not candidates:
            raise SamplingError("cannot make the stub total even")
        odd_fix = max(candidates, key=lambda d: (p[d], -abs(d - big)))
        counts[big] -= 1
        counts[odd_fix] += 1
    return counts


def realized_joint(degrees: np.ndarray, edges: np.ndarray, N: int) -> np.ndarray:
    """Empirical symmetric end-degree table of an edge list (zeros if no edges)."""
    table = np.zeros((N, N))
    if edges.shape[0] == 0:
        return table
    du = degrees[edges[:, 0]] - 1
    dv = degrees[edges[:, 1]] - 1
    np.add.at(table, (du, dv), 1.0)
    np.add.at(table, (dv, du), 1.0)
    return table / table.sum()


def sample_graph(e: JointDegreeDistribution, n: int, seed=0) -> GraphSample:
    """Stub-matching realization of ``e`` on ``n`` nodes.

    Draws are batched: pairs are drawn from the current restricted law until
    the first draw after which some class can no longer supply a stub (or a
    second stub for a same-class pair); the law is then restricted and
    renormalized.  Stubs that no admissible pair can absorb are discarded and
    node degrees are recomputed from the final edge list.
    """
    if n < 10:
        raise SamplingError(f"need at least 10 nodes, got {n}")
    rng = _rng(seed)
    N = e.N
    counts = class_counts(e, n)
    deg_target = np.repeat(np.arange(N + 1), counts)
    rng.shuffle(deg_target)
    # stub pools per class, pre-shuffled so popping in order is a uniform draw
    stubs = []
    for k in range(1, N + 1):
        nodes = np.nonzero(deg_target == k)[0]
        pool = np.repeat(nodes, k)
        rng.shuffle(pool)
        stubs.append(pool)
    avail = np.array([s.size for s in stubs], dtype=np.int64)
    used = np.zeros(N, dtype=np.int64)
    weights = e.e.reshape(-1)
    pair_j = np.repeat(np.arange(N), N)
    pair_k = np.tile(np.arange(N), N)
    diag = pair_j == pair_k
    ends_u, ends_v = [], []
    while True:
        left = avail - used
        ok = (left[pair_j] >= 1) & (left[pair_k] >= 1) & (~diag | (left[pair_j] >= 2))
        w = np.where(ok, weights, 0.0)
        total = w.sum()
        if total <= 0:
            break
        batch = max(1, int(left.sum()) // 2)
        draws = rng.choice(weights.size, size=batch, p=w / total)
        a, b = pair_j[draws], pair_k[draws]
        # remaining-stub threshold at which the admissible set changes
        diag_live = w[np.arange(N) * (N + 1)] > 0
        thr = np.where(diag_live, 2, 1)
        events_cls = np.concatenate([a, b])
        events_draw = np.concatenate([np.arange(batch), np.arange(batch)])
        order = np.lexsort((events_draw, events_cls))
        cls_sorted = events_cls[order]
        draw_sorted = events_draw[order]
        starts = np.searchsorted(cls_sorted, np.arange(N))
        nth = np.arange(cls_sorted.size) - starts[cls_sorted]  # 0-based occurrence per class
        trigger = left[cls_sorted] - thr[cls_sorted]  # occurrence index that crosses
        hits = draw_sorted[nth == trigger]
        cut = int(hits.min()) + 1 if hits.size else batch
        a, b = a[:cut], b[:cut]
        keep = draw_sorted < cut
        cls_kept, nth_kept = cls_sorted[keep], nth[keep]
        draws_kept = draw_sorted[keep]
        # the two ends of a same-class draw take consecutive stubs; assign by event order
        picks = np.empty(cls_kept.size, dtype=np.int64)
        for c in np.unique(cls_kept):
            sel = cls_kept == c
            picks[sel] = stubs[c][used[c] + nth_kept[sel]]
        # recover which event is the u end and which the v end
        is_v = order[keep] >= batch
        u_nodes = np.empty(cut, dtype=np.int64)
        v_nodes = np.empty(cut, dtype=np.int64)
        u_nodes[draws_kept[~is_v]] = picks[~is_v]
        v_nodes[draws_kept[is_v]] = picks[is_v]
        ends_u.append(u_nodes)
        ends_v.append(v_nodes)
        used += np.bincount(np.concatenate([a, b]), minlength=N)
    if ends_u:
        edges = np.column_stack([np.concatenate(ends_u), np.concatenate(ends_v)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    if edges.shape[0] == 0:
        raise SamplingError("no feasible stub assignment for this distribution and node count")
    degrees = np.bincount(edges.reshape(-1), minlength=n).astype(np.int64)
    dropped = int((avail - used).sum())
    return GraphSample(n=n, degrees=degrees, edges=edges, seed=seed,
                       realized_e=realized_joint(degrees, edges, N), dropped_stubs=dropped)


def bond_percolate(g: GraphSample, pi: float, seed=0) -> GraphSample:
    """Keep each edge independently with probability ``pi``."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"retention probability must lie in [0, 1], got {pi}")
    rng = _rng(seed)
    keep = rng.random(g.n_edges) < pi
    edges = g.edges[keep]
    degrees = np.bincount(edges.reshape(-1), minlength=g.n).astype(np.int64)
    N = g.realized_e.shape[0]
    return GraphSample(n=g.n, degrees=degrees, edges=edges, seed=seed,
                       realized_e=realized_joint(degrees, edges, N), dropped_stubs=g.dropped_stubs)


def component_sizes(n: int, edges: np.ndarray) -> np.ndarray:
    """Sizes of all connected components, isolated nodes included (unordered)."""
    if edges.shape[0] == 0:
        return np.ones(n, dtype=np.int64)
    adj = coo_matrix((np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return np.bincount(labels).astype(np.int64)


def component_sizes_union_find(n: int, edges: np.ndarray) -> np.ndarray:
    """Same as :func:`component_sizes` through an explicit disjoint-set forest."""
    ds = DisjointSet(n)
    for u, v in edges.tolist():
        ds.union(u, v)
    return ds.component_sizes()


def component_stats(g: GraphSample) -> ComponentStats:
    sizes = component_sizes(g.n, g.edges)
    largest = int(np.argmax(sizes))
    rest = np.delete(sizes, largest).astype(float)
    s_hat = sizes[largest] / g.n
    w_hat = float((rest**2).sum() / rest.sum()) if rest.size else float("nan")  # size-biased
    uniq, cnt = np.unique(sizes, return_counts=True)
    return ComponentStats(s_hat=float(s_hat), w_hat=w_hat,
                          counts={int(a): int(b) for a, b in zip(uniq, cnt)})


def edge_degree_pearson(g: GraphSample) -> float:
    """Pearson coefficient of end degrees over edges, both orientations counted."""
    if g.n_edges == 0:
        return float("nan")
    du = g.degrees[g.edges[:, 0]].astype(float)
    dv = g.degrees[g.edges[:, 1]].astype(float)
    x = np.concatenate([du, dv])
    y = np.concatenate([dv, du])
    sx = x.std()
    if sx == 0:
        return float("nan")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sx))


@dataclass(frozen=True)
class EnsembleRow:
    pi: float
    s_mean: float
    s_stderr: float
    w_mean: float
    w_stderr: float
    r_mean: float
    replicas: int
    n: int
    seed: int


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    x = x[np.isfinite(x)]
    if x.size == 0:
        return float("nan"), float("nan")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def _replica(e: JointDegreeDistribution, n: int, pis: Sequence[float], seed: int, r: int) -> np.ndarray:
    """``(s_hat, w_hat, r_hat)`` per retention probability for one base graph."""
    g = sample_graph(e, n, seed=(seed, r))
    out = np.empty((len(pis), 3))
    for i, pi in enumerate(pis):
        h = bond_percolate(g, pi, seed=(seed, r, i))
        st = component_stats(h)
        out[i] = (st.s_hat, st.w_hat, edge_degree_pearson(h))
    return out


def run_ensemble(e: JointDegreeDistribution, n: int, pi_grid, replicas: int, seed: int = 0,
                 workers: int | None = None) -> list[EnsembleRow]:
    """Replica means and standard errors of ``s_hat``, ``w_hat`` and the edge Pearson coefficient.

    Replica ``r`` samples one graph from ``(seed, r)`` and percolates it at grid
    point ``i`` with ``(seed, r, i)``, so every number depends only on those
    counters and not on scheduling.  Pearson values are measured on the
    percolated graph with its recomputed degrees.
    """
    if replicas < 1:
        raise ValueError(f"need at least one replica, got {replicas}")
    pis = [float(p) for p in np.atleast_1d(pi_grid)]
    for p in pis:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"retention probability must lie in [0, 1], got {p}")
    per = ordered_map(lambda r: _replica(e, n, pis, seed, r), range(replicas), workers)
    stack = np.stack(per)  # (replicas, grid, 3)
    rows = []
    for i, pi in enumerate(pis):
        s_m, s_se = _mean_stderr(stack[:, i, 0])
        w_m, w_se = _mean_stderr(stack[:, i, 1])
        r_vals = stack[:, i, 2]
        r_m = float(np.mean(r_vals[np.isfinite(r_vals)])) if np.isfinite(r_vals).any() else float("nan")
        rows.append(EnsembleRow(pi=pi, s_mean=s_m, s_stderr=s_se, w_mean=w_m, w_stderr=w_se,
                                r_mean=r_m, replicas=replicas, n=n, seed=seed))
    return rows


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    return repr(x)


def write_ensemble_csv(rows: Sequence[EnsembleRow], fh: IO[str]) -> None:
    fh.write(CSV_VERSION_LINE + "\n")
    fh.write(",".join(ENSEMBLE_COLUMNS) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(getattr(row, c)) for c in ENSEMBLE_COLUMNS) + "\n")


def write_edge_list(g: GraphSample, fh: IO[str]) -> None:
    """One ``u,v`` line per edge, zero-based node indices."""
    for u, v in g.edges.tolist():
        fh.write(f"{u},{v}\n")
