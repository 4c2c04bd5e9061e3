"""Edge colours that encode the degrees at both ends of an edge.

Colour ``i = (j - 1) N + k`` (one-based) sits on a node of degree ``k`` whose
neighbour across that edge has degree ``j``.  Swapping the ends of an edge
maps colour ``(j, k)`` to ``(k, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import exp, factorial, lgamma
from typing import Iterator

import numpy as np

from .joint_dist import ConditionalDegreeTable, DegreeDistribution


class ColourIndexError(ValueError):
    pass


@dataclass(frozen=True)
class ColourIndexer:
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ColourIndexError(f"maximum degree must be >= 1, got {self.N}")

    @property
    def n_colours(self) -> int:
        return self.N * self.N

    def index(self, j: int, k: int) -> int:
        return index(j, k, self.N)

    def unindex(self, i: int) -> tuple[int, int]:
        return unindex(i, self.N)

    def swap(self, i: int) -> int:
        """Colour seen from the other end of the same edge."""
        j, k = self.unindex(i)
        return self.index(k, j)


def index(j: int, k: int, N: int) -> int:
    if not (1 <= j <= N and 1 <= k <= N):
        raise ColourIndexError(f"degree pair ({j}, {k}) outside 1..{N}")
    return (j - 1) * N + k


def unindex(i: int, N: int) -> tuple[int, int]:
    if not 1 <= i <= N * N:
        raise ColourIndexError(f"colour {i} outside 1..{N * N}")
    return (i - 1) // N + 1, (i - 1) % N + 1


def support(k: int, N: int) -> list[int]:
    """Colours that may sit on a node of degree ``k``: one per neighbour degree."""
    if not 1 <= k <= N:
        raise ColourIndexError(f"degree {k} outside 1..{N}")
    return [(j - 1) * N + k for j in range(1, N + 1)]


@dataclass(frozen=True, eq=False)
class ColouredConfig:
    """Colour counts ``c[i - 1]`` of the edges around one node."""

    c: np.ndarray
    indexer: ColourIndexer

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.int64)
        if c.shape != (self.indexer.n_colours,):
            raise ColourIndexError(f"expected {self.indexer.n_colours} colour counts, got {c.shape}")
        if np.any(c < 0):
            raise ColourIndexError("colour counts must be nonnegative")
        object.__setattr__(self, "c", c)

    @property
    def degree(self) -> int:
        return int(self.c.sum())

    @classmethod
    def from_counts(cls, counts: dict[tuple[int, int], int], N: int) -> "ColouredConfig":
        ix = ColourIndexer(N)
        c = np.zeros(ix.n_colours, dtype=np.int64)
        for (j, k), n in counts.items():
            c[ix.index(j, k) - 1] += n
        return cls(c, ix)


def coloured_pmf(cfg: ColouredConfig, p: DegreeDistribution, q: ConditionalDegreeTable) -> float:
    """Probability that a random node carries exactly the colour counts ``cfg``."""
    N = cfg.indexer.N
    k = cfg.degree
    if k < 1 or k > N:
        return 0.0
    counts = cfg.c.reshape(N, N)  # counts[j - 1, k' - 1]
    off_support = np.delete(counts, k - 1, axis=1)
    if np.any(off_support > 0):
        return 0.0
    col = counts[:, k - 1]
    probs = q.q[:, k - 1]
    if p.p[k] == 0.0:
        return 0.0
    used = col > 0
    if np.any(probs[used] == 0.0):
        return 0.0
    log_multinomial = lgamma(k + 1) - sum(lgamma(n + 1) for n in col[used])
    return p.p[k] * exp(log_multinomial + float(col[used] @ np.log(probs[used])))


def first_moment(j: int, k: int, p: DegreeDistribution, q: ConditionalDegreeTable) -> float:
    """Expected number of ``(j, k)``-coloured edges at a random node."""
    return k * p.p[k] * q.q[j - 1, k - 1]


def second_moment(j1: int, k1: int, j2: int, k2: int,
                  p: DegreeDistribution, q: ConditionalDegreeTable) -> float:
    if k1 != k2:
        return 0.0
    k = k1
    return k * p.p[k] * q.q[j1 - 1, k - 1] * ((k - 1) * q.q[j2 - 1, k - 1] + (j1 == j2))


def first_moment_vector(p: DegreeDistribution, q: ConditionalDegreeTable) -> np.ndarray:
    """All first moments, ordered by colour index (entry ``i - 1``)."""
    N = q.N
    k = np.arange(1, N + 1)
    return (q.q * (k * p.p[1:])[None, :]).reshape(N * N)


def second_moment_matrix(p: DegreeDistribution, q: ConditionalDegreeTable) -> np.ndarray:
    """``E[c_i1 c_i2]`` for all colour pairs, as an ``N^2 x N^2`` array."""
    N = q.N
    out = np.zeros((N, N, N, N))  # [j1, k1, j2, k2]
    for k in range(1, N + 1):
        qk = q.q[:, k - 1]
        block = k * p.p[k] * qk[:, None] * ((k - 1) * qk[None, :] + np.eye(N))
        out[:, k - 1, :, k - 1] = block
    return out.reshape(N * N, N * N)


def compositions(k: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of ``parts`` nonnegative integers summing to ``k``."""
    for bars in combinations_with_replacement(range(parts), k):
        counts = [0] * parts
        for b in bars:
            counts[b] += 1
        yield tuple(counts)


def enumerate_configs(k: int, N: int) -> Iterator[ColouredConfig]:
    """Every configuration of degree ``k`` restricted to the permissible colours."""
    ix = ColourIndexer(N)
    colours = support(k, N)
    for counts in compositions(k, N):
        c = np.zeros(ix.n_colours, dtype=np.int64)
        for colour, n in zip(colours, counts):
            c[colour - 1] = n
        yield ColouredConfig(c, ix)


def enumerated_moments(p: DegreeDistribution, q: ConditionalDegreeTable,
                       max_degree: int | None = None):
    """Brute-force mass, first and second moments by summing over configurations.

    Returns ``(mass_by_degree, first, second)``: mass per degree ``k`` (length
    ``N + 1``), the first-moment vector and the second-moment matrix.
    """
    N = q.N
    kmax = N if max_degree is None else min(N, max_degree)
    mass = np.zeros(N + 1)
    first = np.zeros(N * N)
    second = np.zeros((N * N, N * N))
    for k in range(1, kmax + 1):
        for cfg in enumerate_configs(k, N):
            w = coloured_pmf(cfg, p, q)
            if w == 0.0:
                continue
            c = cfg.c.astype(float)
            mass[k] += w
            first += w * c
            second += w * np.outer(c, c)
    return mass, first, second


def multinomial(counts) -> int:
    total = factorial(sum(counts))
    for n in counts:
        total //= factorial(n)
    return total
