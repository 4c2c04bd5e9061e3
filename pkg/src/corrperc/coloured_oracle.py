"""General edge-coloured formulas at full ``N^2`` size.

Everything here is dense and deliberately unoptimized.  It exists to check
the reduced ``N``-dimensional solvers in :mod:`corrperc.analytics`, so it
shares no solver code with them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colour_map import (
    ColourIndexer,
    coloured_pmf,
    enumerate_configs,
    first_moment_vector,
    second_moment_matrix,
)
from .joint_dist import (
    ConditionalDegreeTable,
    DegreeDistribution,
    JointDegreeDistribution,
    conditional_dist,
    marginal_degree_dist,
    percolate_joint,
    thinned_node_dist,
)

MAX_ORACLE_N = 32
COND_LIMIT = 1e12


class ConvergenceError(RuntimeError):
    pass


class CriticalityError(ArithmeticError):
    """The finite-component linear system is singular: the network is critical."""


@dataclass(frozen=True, eq=False)
class ColouredSystem:
    N: int
    indexer: ColourIndexer
    P: np.ndarray
    D: np.ndarray
    p: DegreeDistribution
    q: ConditionalDegreeTable

    @classmethod
    def from_tables(cls, p: DegreeDistribution, q: ConditionalDegreeTable) -> "ColouredSystem":
        N = q.N
        if N > MAX_ORACLE_N:
            raise ValueError(f"dense oracle is capped at N={MAX_ORACLE_N}, got {N}")
        return cls(N=N, indexer=ColourIndexer(N), P=swap_permutation(N),
                   D=np.diag(first_moment_vector(p, q)), p=p, q=q)

    @classmethod
    def from_joint(cls, e: JointDegreeDistribution, pi: float = 1.0) -> "ColouredSystem":
        """System for ``e`` after bond percolation, node fractions including isolated nodes."""
        ep = percolate_joint(e, pi)
        p = thinned_node_dist(marginal_degree_dist(e), pi)
        return cls.from_tables(p, conditional_dist(ep))


def swap_permutation(N: int) -> np.ndarray:
    """``P[(j1,k1),(j2,k2)] = delta(j1,k2) delta(j2,k1)`` in zero-based colour order."""
    n = N * N
    P = np.zeros((n, n))
    for j in range(N):
        for k in range(N):
            P[j * N + k, k * N + j] = 1.0
    return P


def _host_sums(sys: ColouredSystem, x: np.ndarray) -> np.ndarray:
    """``sum_l q[l|k] x_(l,k)`` for every host degree ``k``."""
    X = x.reshape(sys.N, sys.N)  # X[l-1, k-1] = x_(l,k)
    return np.einsum("lk,lk->k", sys.q.q, X)


def F_closed(sys: ColouredSystem, x: np.ndarray) -> np.ndarray:
    """``F_(j,k)(x) = (sum_l q[l|k] x_(l,k))^(k-1)``; undefined hosts give 1."""
    N = sys.N
    k = np.arange(1, N + 1)
    g = np.where(sys.q.defined, _host_sums(sys, x) ** (k - 1), 1.0)
    return np.tile(g, N)


def F_enumerated(sys: ColouredSystem, x: np.ndarray, max_degree: int | None = None) -> np.ndarray:
    """``E[c_i x^(c - e_i)] / E[c_i]`` by summing over configurations.

    Colours with zero first moment are returned as NaN.
    """
    N = sys.N
    n = N * N
    num = np.zeros(n)
    kmax = N if max_degree is None else min(N, max_degree)
    for k in range(1, kmax + 1):
        for cfg in enumerate_configs(k, N):
            w = coloured_pmf(cfg, sys.p, sys.q)
            if w == 0.0:
                continue
            c = cfg.c
            for i in np.nonzero(c)[0]:
                exps = c.copy()
                exps[i] -= 1
                num[i] += w * c[i] * np.prod(x ** exps)
    D = np.diag(sys.D)
    out = np.full(n, np.nan)
    nz = D > 0
    out[nz] = num[nz] / D[nz]
    return out


def H_closed(sys: ColouredSystem, x: np.ndarray) -> np.ndarray:
    """Jacobian of ``F``: ``delta(k1,k2) (k1-1) q[j2|k1] y_k1^(k1-2)``."""
    N = sys.N
    k = np.arange(1, N + 1)
    y = _host_sums(sys, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(k >= 2, (k - 1) * y ** np.maximum(k - 2, 0), 0.0)
    coef = np.where(sys.q.defined, coef, 0.0)
    H = np.zeros((N, N, N, N))  # [j1, k1, j2, k2]
    for kk in range(N):
        H[:, kk, :, kk] = np.broadcast_to(coef[kk] * sys.q.q[:, kk], (N, N))
    return H.reshape(N * N, N * N)


def H_enumerated(sys: ColouredSystem, x: np.ndarray) -> np.ndarray:
    """``E[(c_i1 c_i2 - delta c_i1) x^(c - e_i1 - e_i2)] / E[c_i1]`` by enumeration."""
    N = sys.N
    n = N * N
    num = np.zeros((n, n))
    for k in range(1, N + 1):
        for cfg in enumerate_configs(k, N):
            w = coloured_pmf(cfg, sys.p, sys.q)
            if w == 0.0:
                continue
            c = cfg.c
            nzc = np.nonzero(c)[0]
            for i1 in nzc:
                for i2 in nzc:
                    factor = c[i1] * c[i2] - (c[i1] if i1 == i2 else 0)
                    if factor == 0:
                        continue
                    exps = c.copy()
                    exps[i1] -= 1
                    exps[i2] -= 1
                    num[i1, i2] += w * factor * np.prod(x ** exps)
    D = np.diag(sys.D)
    out = np.full((n, n), np.nan)
    nz = D > 0
    out[nz, :] = num[nz, :] / D[nz, None]
    return out


def solve_general_fixed_point(sys: ColouredSystem, tol: float = 1e-12,
                              max_iter: int = 1_000_000) -> np.ndarray:
    """Smallest solution of ``x = P F(x)`` by plain iteration from ``x = 0``.

    Stops once the geometric-tail bound ``d * r / (1 - r)`` on the distance to
    the limit drops below ``tol``, with ``d`` the latest update and ``r`` the
    observed contraction ratio.
    """
    x = np.zeros(sys.N * sys.N)
    prev = None
    for _ in range(max_iter):
        x_new = sys.P @ F_closed(sys, x)
        d = float(np.max(np.abs(x_new - x)))
        x = x_new
        if d == 0.0:
            return x
        if prev is not None and d < tol:
            r = min(d / prev, 1.0 - 1e-12) if prev > 0 else 0.0
            if d * r / (1.0 - r) < tol:
                return x
        prev = d
    raise ConvergenceError(f"coloured fixed point did not converge in {max_iter} iterations")


def node_generating(sys: ColouredSystem, x: np.ndarray) -> float:
    """``E[x^c] = sum_k p_k (sum_j q[j|k] x_(j,k))^k``, isolated nodes contributing ``p_0``."""
    N = sys.N
    k = np.arange(1, N + 1)
    y = _host_sums(sys, x)
    terms = np.where(sys.p.p[1:] > 0, sys.p.p[1:] * y ** k, 0.0)
    return float(sys.p.p[0] + terms.sum())


def giant_general(sys: ColouredSystem, x: np.ndarray) -> float:
    return min(1.0, max(0.0, 1.0 - node_generating(sys, x)))


def finite_component_size_general(sys: ColouredSystem, x: np.ndarray, s: float,
                                  literal: bool = False) -> float:
    """Mean size of the finite component holding a random node outside the giant.

    Solves ``(I - P H(x)) h = x`` for the expected branch sizes and returns
    ``1 + F(x)^T D h / (1 - s)``.  ``literal=True`` instead evaluates
    ``1 + x^T D (I - H P)^{-1} x / (1 - s)``; the two agree whenever the
    fixed point is ``x = 1`` and differ above threshold.
    """
    if s >= 1.0:
        raise CriticalityError("no finite components: giant component covers every node")
    n = sys.N * sys.N
    H = H_closed(sys, x)
    I = np.eye(n)
    A = I - (H @ sys.P if literal else sys.P @ H)
    # states that carry no probability would make A singular for no physical reason
    live = np.diag(sys.D) > 0
    live = live | (sys.P @ live.astype(float) > 0)
    A_live = A[np.ix_(live, live)]
    cond = np.linalg.cond(A_live) if A_live.size else 1.0
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise CriticalityError(f"finite-component system is singular (cond={cond:.3g})")
    h = np.zeros(n)
    h[live] = np.linalg.solve(A_live, x[live])
    left = x if literal else sys.P @ x
    return float(left @ sys.D @ h / (1.0 - s) + 1.0)


def criticality_matrices(sys: ColouredSystem) -> tuple[np.ndarray, np.ndarray]:
    """``M`` from the moment ratios and the closed-form product ``P M``."""
    N = sys.N
    D = np.diag(sys.D)
    M = np.zeros((N, N, N, N))  # [j1, k1, j2, k2]
    PM = np.zeros((N, N, N, N))
    for k1 in range(N):
        for j1 in range(N):
            M[j1, k1, :, k1] = sys.q.q[j1, k1] * k1  # (k1+1) - 1
    for k1 in range(N):
        for k2 in range(N):
            PM[k2, k1, :, k2] = k2 * sys.q.q[k1, k2]
    return M.reshape(N * N, N * N), PM.reshape(N * N, N * N)


def moment_ratio_matrix(sys: ColouredSystem) -> np.ndarray:
    """``E[c_i1 c_i2] / E[c_i2] - delta(i1, i2)`` from the raw moments.

    Columns of colours with zero first moment are left at zero.
    """
    second = second_moment_matrix(sys.p, sys.q)
    first = np.diag(sys.D)
    M = np.zeros_like(second)
    nz = first > 0
    M[:, nz] = second[:, nz] / first[None, nz]
    M[np.diag_indices_from(M)] -= nz
    return M


def sign_det(A: np.ndarray) -> tuple[float, float]:
    """``(sign, log|det|)`` via LU with partial pivoting."""
    sign, logabs = np.linalg.slogdet(A)
    return float(sign), float(logabs)
