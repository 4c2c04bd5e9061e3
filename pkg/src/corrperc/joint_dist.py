"""Joint degree-degree distributions and their bond-percolation evolution.

Arrays are zero-based: ``e[j - 1, k - 1]`` holds the probability that a
uniformly random edge joins a node of degree ``j`` to a node of degree ``k``.
Node degree distributions are indexed directly by degree, ``p[k]`` for
``k = 0..N``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg.blas import dtrmm
from scipy.special import comb, gammaln
from scipy.stats import binom

NORM_TOL = 1e-12
VARIANCE_EPS = 1e-14
CSV_VERSION_LINE = "# corrperc-csv v1"

FAMILIES = ("bimodal", "exponential", "powerlaw", "custom")


class DistributionError(ValueError):
    """Raised for invalid distribution tables or family parameters."""


_TINY = np.finfo(float).tiny


def _flush_subnormal(a: np.ndarray) -> np.ndarray:
    # subnormals carry almost no precision and slow BLAS down by orders of magnitude
    a[np.abs(a) < _TINY] = 0.0
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JointDegreeDistribution:
    """Symmetric table ``e`` of end-degree pairs over degrees ``1..N``."""

    e: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] < 1:
            raise DistributionError(f"joint table must be square, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise DistributionError("joint table has non-finite entries")
        if np.any(e < 0):
            raise DistributionError("joint table has negative entries")
        e = _flush_subnormal(0.5 * (e + e.T))
        total = e.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise DistributionError(f"joint table sums to {total!r}, expected 1")
        object.__setattr__(self, "e", _frozen(e))

    @property
    def N(self) -> int:
        return self.e.shape[0]

    @classmethod
    def from_weights(cls, w) -> "JointDegreeDistribution":
        """Symmetrize and normalize a nonnegative weight table."""
        w = np.asarray(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DistributionError(f"weight table must be square, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DistributionError("weights must be finite and nonnegative")
        w = 0.5 * (w + w.T)
        total = w.sum()
        if total <= 0:
            raise DistributionError("weight table has no positive entry")
        return cls(w / total)

    @classmethod
    def point_mass(cls, j: int, k: int, N: int) -> "JointDegreeDistribution":
        w = np.zeros((N, N))
        w[j - 1, k - 1] = 1.0
        return cls.from_weights(w)

    def edge_end_marginal(self) -> np.ndarray:
        """Degree of the node at the end of a random edge, indexed ``k - 1``."""
        return self.e.sum(axis=0)


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Node degree pmf ``p[k]`` for ``k = 0..N``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DistributionError("degree distribution needs entries for k = 0..N, N >= 1")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DistributionError("degree probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise DistributionError(f"degree distribution sums to {p.sum()!r}")
        object.__setattr__(self, "p", _frozen(p))

    @property
    def N(self) -> int:
        return self.p.size - 1

    def mean(self) -> float:
        return float(np.arange(self.p.size) @ self.p)


@dataclass(frozen=True, eq=False)
class ConditionalDegreeTable:
    """``q[j - 1, k - 1] = P(neighbour degree j | own degree k)``.

    Columns whose degree never occurs are all-zero and have
    ``defined[k - 1] == False``.
    """

    q: np.ndarray
    defined: np.ndarray

    @property
    def N(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class PearsonDecay:
    r1: float
    a: float
    defined: bool
    mean_k: float = float("nan")
    mean_k2: float = float("nan")
    mean_jk: float = float("nan")


def _normalized_weights(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size < 1:
        raise DistributionError("weight vector must be one-dimensional and non-empty")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise DistributionError("weights must be finite and nonnegative")
    total = f.sum()
    if total <= 0:
        raise DistributionError("weight vector has no positive entry")
    return f / total


def coupled_joint(f, t: float, exclude_doublets: bool = True) -> JointDegreeDistribution:
    """Mix independent end degrees with a diagonal (assortative) component.

    Builds ``(1 - t) f(j) f(k) + t delta_{jk} f(j)`` where ``f`` lists weights
    for degrees ``1..N``.  With ``exclude_doublets`` the ``(1, 1)`` entry is
    zeroed (isolated dimers) and the table renormalized.
    """
    if not 0.0 <= t <= 1.0:
        raise DistributionError(f"coupling t must lie in [0, 1], got {t}")
    f = _normalized_weights(f)
    e = (1.0 - t) * np.outer(f, f) + t * np.diag(f)
    if exclude_doublets:
        e[0, 0] = 0.0
    total = e.sum()
    if total <= 0:
        raise DistributionError("distribution is empty after excluding isolated doublets")
    return JointDegreeDistribution.from_weights(e)


def family_weights(family: str, N: int, **params) -> np.ndarray:
    """Unnormalized weights ``f(k)`` for ``k = 1..N``; ``f(0)`` is always excluded."""
    if N < 1:
        raise DistributionError(f"maximum degree must be >= 1, got {N}")
    k = np.arange(1, N + 1, dtype=float)
    if family == "bimodal":
        eps = float(params.get("eps", 1e-5))
        low, high = int(params.get("low", 3)), int(params.get("high", 9))
        if not 0.0 <= eps <= 1.0:
            raise DistributionError(f"bimodal eps must lie in [0, 1], got {eps}")
        if N < high:
            raise DistributionError(f"bimodal family needs N >= {high}, got {N}")
        f = np.zeros(N)
        f[low - 1] += 1.0 - eps
        f[high - 1] += eps
        return f
    if family == "exponential":
        rate = float(params.get("rate", 1.0))
        if rate <= 0:
            raise DistributionError(f"exponential rate must be positive, got {rate}")
        # shifted by one to keep f(1) = 1 and postpone underflow
        return np.exp(-rate * (k - 1.0))
    if family == "powerlaw":
        tau = float(params.get("tau", 2.5))
        if tau <= 1:
            raise DistributionError(f"power-law tail exponent must exceed 1, got {tau}")
        return k ** (-(tau + 1.0))
    if family == "custom":
        weights = params.get("weights")
        if weights is None:
            raise DistributionError("custom family requires 'weights'")
        f = np.asarray(weights, dtype=float)
        if f.shape != (N,):
            raise DistributionError(f"custom weights must have length N={N}")
        return f
    raise DistributionError(f"unknown family {family!r}; choose from {FAMILIES}")


def build_family(family: str, t: float, N: int, **params) -> JointDegreeDistribution:
    """Coupled distribution for one of the named families.

    Parameters: ``eps`` (bimodal), ``rate`` (exponential), ``tau`` (powerlaw),
    ``weights`` (custom, length ``N``).
    """
    return coupled_joint(family_weights(family, N, **params), t, exclude_doublets=True)


def _parse_rows(rows: Iterable[Sequence[str]]) -> list[tuple[int, int, float]]:
    out = []
    header_seen = False
    for line_no, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        if not header_seen and row[0].strip().lower() == "j":
            header_seen = True
            continue
        if len(row) != 3:
            raise DistributionError(f"line {line_no}: expected 'j,k,weight', got {row!r}")
        try:
            j, k, w = int(row[0]), int(row[1]), float(row[2])
        except ValueError as exc:
            raise DistributionError(f"line {line_no}: malformed row {row!r}") from exc
        out.append((j, k, w))
    return out


def joint_from_triplets(triplets, N: int) -> JointDegreeDistribution:
    """Table from unordered-pair rows: ``(j, k, w)`` sets ``e[j,k] = e[k,j]`` proportional to ``w``.

    ``(j, k)`` and ``(k, j)`` name the same pair and accumulate.
    """
    if N < 1:
        raise DistributionError(f"maximum degree must be >= 1, got {N}")
    w = np.zeros((N, N))
    for j, k, weight in triplets:
        if not (1 <= j <= N and 1 <= k <= N):
            raise DistributionError(f"degree pair ({j}, {k}) outside 1..{N}")
        if weight < 0 or not np.isfinite(weight):
            raise DistributionError(f"invalid weight {weight} for ({j}, {k})")
        a, b = sorted((j - 1, k - 1))
        w[a, b] += weight
    w = w + np.triu(w, 1).T
    if w.sum() <= 0:
        raise DistributionError("no positive weight in input")
    return JointDegreeDistribution.from_weights(w)


def load_custom(path, N: int) -> JointDegreeDistribution:
    """Read a ``j,k,weight`` CSV with one row per unordered degree pair."""
    with open(Path(path), newline="") as fh:
        triplets = _parse_rows(csv.reader(fh))
    return joint_from_triplets(triplets, N)


def dump_triplets(e: JointDegreeDistribution, fh) -> None:
    """One row per nonzero unordered pair ``j <= k`` carrying ``e[j,k]``."""
    fh.write(CSV_VERSION_LINE + "\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["j", "k", "weight"])
    for j, k in zip(*np.nonzero(np.triu(e.e))):
        writer.writerow([j + 1, k + 1, repr(float(e.e[j, k]))])


def marginal_degree_dist(e: JointDegreeDistribution) -> DegreeDistribution:
    """Node degree distribution implied by the edge-end table (no isolated nodes)."""
    k = np.arange(1, e.N + 1, dtype=float)
    weights = e.edge_end_marginal() / k
    p = np.zeros(e.N + 1)
    p[1:] = weights / weights.sum()
    return DegreeDistribution(p)


def conditional_dist(e: JointDegreeDistribution) -> ConditionalDegreeTable:
    col = e.edge_end_marginal()
    defined = col > 0
    q = np.zeros_like(e.e)
    q[:, defined] = e.e[:, defined] / col[defined]
    return ConditionalDegreeTable(_frozen(q), _frozen(defined).astype(bool))


def _check_retention(pi: float) -> float:
    pi = float(pi)
    if not 0.0 < pi <= 1.0:
        raise DistributionError(f"retention probability must lie in (0, 1], got {pi}")
    return pi


@lru_cache(maxsize=8)
def _log_binom_table(n_max: int) -> np.ndarray:
    """``log C(n, m)`` for ``0 <= m <= n <= n_max``; ``-inf`` above the diagonal."""
    lg = gammaln(np.arange(n_max + 1) + 1.0)
    n = np.arange(n_max + 1)[None, :]
    m = np.arange(n_max + 1)[:, None]
    with np.errstate(invalid="ignore"):
        out = np.where(m <= n, lg[n] - lg[m] - lg[np.maximum(n - m, 0)], -np.inf)
    out.setflags(write=False)
    return out


def binomial_kernel(n_max: int, pi: float) -> np.ndarray:
    """``K[m, n] = Binom(n, m) pi^m (1-pi)^(n-m)``, an upper-triangular matrix.

    Coefficients come from a log-gamma table so large degrees neither
    overflow nor lose relative accuracy.
    """
    idx = np.arange(n_max + 1)
    m, n = idx[:, None], idx[None, :]
    log_pi = np.log(pi) if pi > 0 else -np.inf
    log_q = np.log1p(-pi) if pi < 1 else -np.inf
    with np.errstate(invalid="ignore", over="ignore"):
        expo = (np.where(m == 0, 0.0, m * log_pi)
                + np.where(n == m, 0.0, (n - m) * log_q)
                + _log_binom_table(n_max))
        K = np.where(m <= n, np.exp(expo), 0.0)
    return _flush_subnormal(K)


def excess_thinning_matrix(N: int, pi: float) -> np.ndarray:
    """``T[j-1, j1-1] = Binom(j1-1, j-1) pi^(j-1) (1-pi)^(j1-j)``.

    Maps the degree of an edge end before percolation to its degree after,
    given that the edge itself survives.
    """
    return binomial_kernel(N - 1, pi)


def node_thinning_matrix(N: int, pi: float) -> np.ndarray:
    """``B[k, k1] = Binom(k1, k) pi^k (1-pi)^(k1-k)`` for ``k, k1 = 0..N``."""
    return binomial_kernel(N, pi)


def percolate_joint(e: JointDegreeDistribution, pi: float) -> JointDegreeDistribution:
    """End-degree table of the edges retained under bond percolation."""
    pi = _check_retention(pi)
    if pi == 1.0:
        return e
    # degrees above the largest occupied one stay empty; thin only the leading block
    occupied = np.nonzero(e.edge_end_marginal() > 0)[0]
    M = int(occupied[-1]) + 1
    T = np.asfortranarray(excess_thinning_matrix(M, pi))
    block = np.asfortranarray(e.e[:M, :M])
    # T is upper triangular: T e T^T via two triangular multiplies
    left = dtrmm(1.0, T, block, side=0, lower=0, trans_a=0)
    thinned = dtrmm(1.0, T, np.asfortranarray(left), side=1, lower=0, trans_a=1)
    out = np.zeros_like(e.e)
    out[:M, :M] = np.clip(thinned, 0.0, None)
    return JointDegreeDistribution(out / out.sum())


def percolate_joint_literal(e: JointDegreeDistribution, pi: float) -> np.ndarray:
    """Percolated table using ``Binom(k1-1, j-1)`` in the second factor.

    Kept only to document that this variant neither conserves mass nor
    symmetry; the returned array is raw and unnormalized.
    """
    pi = _check_retention(pi)
    N = e.N
    out = np.zeros((N, N))
    deg = np.arange(1, N + 1)
    for j in deg:
        for k in deg:
            j1 = deg[j - 1:, None]
            k1 = deg[None, k - 1:]
            first = binom.pmf(j - 1, j1 - 1, pi)
            second = comb(k1 - 1, j - 1) * pi ** (k - 1) * (1 - pi) ** (k1 - k)
            out[j - 1, k - 1] = np.sum(e.e[j - 1:, k - 1:] * first * second)
    return out


def thinned_node_dist(p: DegreeDistribution, pi: float) -> DegreeDistribution:
    """Binomial thinning of node degrees, including the new isolated nodes."""
    pi = _check_retention(pi)
    if pi == 1.0:
        return p
    out = node_thinning_matrix(p.N, pi) @ p.p
    return DegreeDistribution(out / out.sum())


def edge_moments(e: JointDegreeDistribution) -> tuple[float, float, float]:
    """``(E_e[k], E_e[k^2], E_e[jk])`` over the ends of a random edge."""
    k = np.arange(1, e.N + 1, dtype=float)
    marg = e.edge_end_marginal()
    return float(k @ marg), float(k**2 @ marg), float(k @ e.e @ k)


def pearson_decay(e: JointDegreeDistribution) -> PearsonDecay:
    mk, mk2, mjk = edge_moments(e)
    var = mk2 - mk * mk
    if var < VARIANCE_EPS:
        return PearsonDecay(r1=float("nan"), a=float("nan"), defined=False,
                            mean_k=mk, mean_k2=mk2, mean_jk=mjk)
    return PearsonDecay(r1=(mjk - mk * mk) / var, a=(mk - 1.0) / var, defined=True,
                        mean_k=mk, mean_k2=mk2, mean_jk=mjk)


def pearson_at(d: PearsonDecay, pi):
    """Correlation of adjacent degrees after retaining each edge with probability ``pi``.

    Accepts a scalar or an array of retention probabilities.
    """
    if not d.defined:
        raise DistributionError("Pearson decay undefined: edge-degree variance is zero")
    pi_arr = np.asarray(pi, dtype=float)
    if np.any(pi_arr <= 0) or np.any(pi_arr > 1):
        raise DistributionError("retention probability must lie in (0, 1]")
    r = d.r1 / (1.0 - d.a * (1.0 - 1.0 / pi_arr))
    return float(r) if r.ndim == 0 else r


def pearson_coefficient(e: JointDegreeDistribution) -> float:
    """Pearson correlation of the two end degrees, straight from the moments."""
    return pearson_decay(e).r1
