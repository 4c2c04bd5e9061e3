"""Reduced percolation solvers working at size ``N``.

``y[k-1]`` is the probability that an edge leaving a degree-``k`` node does
not lead to the giant component; the node-level giant fraction is
``1 - sum_k p_k y_k^k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .joint_dist import (
    ConditionalDegreeTable,
    DegreeDistribution,
    JointDegreeDistribution,
    conditional_dist,
    marginal_degree_dist,
    pearson_at,
    pearson_decay,
    percolate_joint,
    thinned_node_dist,
)

TOL = 1e-12
MAX_ITER = 1_000_000
COND_LIMIT = 1e12
DEFAULT_SCAN_STEP = 1e-3
DEFAULT_BISECT_WIDTH = 1e-10


class ConvergenceError(RuntimeError):
    pass


class CriticalityError(ArithmeticError):
    """Raised when the finite-component system is singular (criticality)."""


@dataclass(frozen=True)
class PercolatedTables:
    pi: float
    e: JointDegreeDistribution
    p: DegreeDistribution
    q: ConditionalDegreeTable


def percolated_tables(e: JointDegreeDistribution, pi: float) -> PercolatedTables:
    ep = percolate_joint(e, pi)
    p = thinned_node_dist(marginal_degree_dist(e), pi)
    return PercolatedTables(pi=float(pi), e=ep, p=p, q=conditional_dist(ep))


@dataclass(frozen=True, eq=False)
class GiantSolution:
    y: np.ndarray
    s: float
    iterations: int
    residual: float
    pi: float = 1.0


@dataclass(frozen=True, eq=False)
class CriticalityMatrix:
    C: np.ndarray
    pi: float


@dataclass(frozen=True)
class ThresholdResult:
    pi_c: float | None
    bracket: float
    scan_resolution: float

    @property
    def found(self) -> bool:
        return self.pi_c is not None


def _branch_map(q: np.ndarray, defined: np.ndarray, y: np.ndarray, k: np.ndarray):
    """``G(y)_k = sum_j q[j|k] y_j^(j-1)`` and its Jacobian."""
    X = y ** (k - 1)
    dX = np.where(k >= 2, (k - 1) * y ** np.maximum(k - 2, 0), 0.0)
    G = np.where(defined, q.T @ X, 1.0)
    J = np.where(defined[:, None], q.T * dX[None, :], 0.0)
    return G, J


def solve_giant(p: DegreeDistribution, q: ConditionalDegreeTable, tol: float = TOL,
                max_iter: int = MAX_ITER, method: str = "newton") -> GiantSolution:
    """Smallest fixed point of ``y = G(y)`` from ``y = 0``.

    ``method="picard"`` iterates ``y <- G(y)``.  ``method="newton"`` takes
    Newton steps for ``y - G(y) = 0`` from the same start; for this convex,
    monotone map the Newton iterates stay between the Picard iterates and the
    smallest fixed point, so both approach the same root from below.  A
    Newton step that leaves ``[G(y), 1]`` is replaced by the Picard step.
    """
    N = q.N
    k = np.arange(1, N + 1)
    qq, defined = q.q, q.defined
    y = np.zeros(N)
    I = np.eye(N)
    prev = None
    for it in range(1, max_iter + 1):
        G, J = _branch_map(qq, defined, y, k)
        y_new = G
        if method == "newton":
            try:
                cand = y + np.linalg.solve(I - J, G - y)
            except np.linalg.LinAlgError:
                cand = None
            if cand is not None and np.all(np.isfinite(cand)) \
                    and np.all(cand >= G - 1e-15) and np.all(cand <= 1 + 1e-12):
                y_new = cand
        elif method != "picard":
            raise ValueError(f"unknown method {method!r}")
        y_new = np.clip(y_new, y, 1.0)
        d = float(np.max(y_new - y))
        y = y_new
        residual = float(np.max(np.abs(_branch_map(qq, defined, y, k)[0] - y)))
        if d == 0.0 and residual < tol:
            break
        if method == "newton" and d < tol and residual < tol:
            break
        if method == "picard" and prev is not None and d < tol:
            r = min(d / prev, 1.0 - 1e-12) if prev > 0 else 0.0
            if d * r / (1.0 - r) < tol:
                break
        prev = d
    else:
        raise ConvergenceError(f"giant-component iteration did not converge in {max_iter} steps")
    s = giant_fraction(p, y)
    return GiantSolution(y=y, s=s, iterations=it, residual=residual)


def giant_fraction(p: DegreeDistribution, y: np.ndarray) -> float:
    k = np.arange(1, y.size + 1)
    outside = p.p[0] + float(np.sum(np.where(p.p[1:] > 0, p.p[1:] * y**k, 0.0)))
    return min(1.0, max(0.0, 1.0 - outside))


def giant_component(e: JointDegreeDistribution, pi: float = 1.0, tol: float = TOL,
                    max_iter: int = MAX_ITER, method: str = "newton") -> GiantSolution:
    """Fraction of all nodes in the giant component after bond percolation."""
    tab = percolated_tables(e, pi)
    sol = solve_giant(tab.p, tab.q, tol=tol, max_iter=max_iter, method=method)
    return GiantSolution(y=sol.y, s=sol.s, iterations=sol.iterations,
                         residual=sol.residual, pi=float(pi))


def giant_uncorrelated(p: DegreeDistribution, tol: float = 1e-14, max_iter: int = MAX_ITER) -> float:
    """Classical single-type computation for independent end degrees.

    Solves ``u = G1(u)`` with the excess-degree generating function and
    returns ``1 - G0(u)``.
    """
    k = np.arange(p.p.size)
    mean = float(k @ p.p)
    if mean == 0:
        return 0.0
    excess = (k[1:] * p.p[1:]) / mean  # law of k-1 for a random edge end, index k-1
    u = 0.0
    for _ in range(max_iter):
        u_new = float(excess @ u ** np.arange(excess.size))
        if abs(u_new - u) < tol:
            u = u_new
            break
        u = u_new
    return 1.0 - float(p.p @ u**k)


def giant_edge_retention(e: JointDegreeDistribution, pi: float = 1.0, tol: float = 1e-14,
                         max_iter: int = MAX_ITER) -> float:
    """Giant fraction of the percolated graph from the unpercolated tables.

    Iterates ``u_k = 1 - pi + pi sum_j q[j|k] u_j^(j-1)`` from ``u = 0`` and
    returns ``1 - sum_k p_k u_k^k``.  This keeps each node's original degree,
    so it does not assume the thinned graph is maximally random given its
    own end-degree table.  Used to cross-check the sampler.
    """
    q = conditional_dist(e)
    p = marginal_degree_dist(e).p
    k = np.arange(1, e.N + 1)
    u = np.zeros(e.N)
    for _ in range(max_iter):
        u_new = np.where(q.defined, 1.0 - pi + pi * (q.q.T @ u ** (k - 1)), 1.0)
        if np.max(np.abs(u_new - u)) < tol:
            u = u_new
            break
        u = u_new
    else:
        raise ConvergenceError("edge-retention iteration did not converge")
    return float(min(1.0, max(0.0, 1.0 - p[0] - np.sum(p[1:] * u**k))))


def finite_component_size(e: JointDegreeDistribution, pi: float = 1.0,
                          giant: GiantSolution | None = None) -> float:
    """Mean size of the finite component containing a random node outside the giant.

    With ``X_j = y_j^(j-1)`` and ``a_j = (j-1) y_j^(j-2)``, the expected branch
    size ``R_j`` reached through a degree-``j`` neighbour solves
    ``R_j = X_j + a_j sum_m q[m|j] R_m``.  Writing ``rho = q^T R`` gives the
    ``N``-dimensional system ``(I - q^T diag(a)) rho = q^T X`` and
    ``w = 1 + sum_k k p_k X_k rho_k / (1 - s)``.

    Raises :class:`CriticalityError` when the system is singular or the giant
    component contains every node.
    """
    tab = percolated_tables(e, pi)
    if giant is None:
        giant = solve_giant(tab.p, tab.q)
    return reduced_w(tab.p, tab.q, giant)


def reduced_w(p: DegreeDistribution, q: ConditionalDegreeTable, giant: GiantSolution) -> float:
    s = giant.s
    if s >= 1.0:
        raise CriticalityError("every node is in the giant component; w is undefined")
    N = q.N
    k = np.arange(1, N + 1)
    y = giant.y
    X = y ** (k - 1)
    a = np.where(k >= 2, (k - 1) * y ** np.maximum(k - 2, 0), 0.0)
    live = q.defined
    qt = q.q.T[np.ix_(live, live)]
    A = np.eye(int(live.sum())) - qt * a[live][None, :]
    cond = np.linalg.cond(A) if A.size else 1.0
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise CriticalityError(f"finite-component system is singular (cond={cond:.3g})")
    rho = np.linalg.solve(A, qt @ X[live])
    weight = k[live] * p.p[1:][live] * X[live]
    return float(weight @ rho / (1.0 - s) + 1.0)


def build_C(e: JointDegreeDistribution, pi: float = 1.0) -> CriticalityMatrix:
    """``C[j-1, k-1] = (k-1) q[j|k]`` for the percolated distribution."""
    q = conditional_dist(percolate_joint(e, pi))
    return CriticalityMatrix(C=criticality_from_conditional(q), pi=float(pi))


def criticality_from_conditional(q: ConditionalDegreeTable) -> np.ndarray:
    k = np.arange(1, q.N + 1)
    return q.q * (k - 1)[None, :]


def sign_log_det(A: np.ndarray) -> tuple[float, float]:
    sign, logabs = np.linalg.slogdet(A)
    return float(sign), float(logabs)


def sign_indicator(C) -> float:
    """``(-1)^(N-1) det(C - I)``: negative below threshold, positive above.

    An all-zero column of ``C`` (degree 1, or a degree that never occurs)
    contributes a factor ``-1``; those degrees are split off before
    factorizing.  The magnitude is
    ``+-exp(log|det|)`` clipped against overflow; only the sign is meaningful.
    """
    C = C.C if isinstance(C, CriticalityMatrix) else np.asarray(C)
    N = C.shape[0]
    live = np.any(C != 0, axis=0)
    n_live = int(live.sum())
    sign, logabs = sign_log_det(C[np.ix_(live, live)] - np.eye(n_live)) if n_live else (1.0, 0.0)
    if sign == 0:
        return 0.0
    sign *= (-1.0) ** (N - n_live)
    return (-1.0) ** (N - 1) * sign * float(np.exp(min(logabs, 700.0)))


def at_criticality(C, rtol: float = 1e-10) -> bool:
    """``det(C - I)`` vanishes relative to its Hadamard bound."""
    C = C.C if isinstance(C, CriticalityMatrix) else np.asarray(C)
    live = np.any(C != 0, axis=0)
    if not live.any():
        return False
    A = C[np.ix_(live, live)] - np.eye(int(live.sum()))
    sign, logabs = sign_log_det(A)
    if sign == 0:
        return True
    bound = float(np.sum(np.log(np.linalg.norm(A, axis=0))))
    return logabs - bound < np.log(rtol)


def _supercritical(e: JointDegreeDistribution, pi: float) -> bool:
    return sign_indicator(build_C(e, pi)) > 0


def find_threshold(e: JointDegreeDistribution, step: float = DEFAULT_SCAN_STEP,
                   width: float = DEFAULT_BISECT_WIDTH) -> ThresholdResult:
    """Smallest retention probability at which the sign indicator turns positive.

    Scans ``step, 2 step, ..., 1`` for the first supercritical grid point and
    bisects the preceding cell (``pi -> 0`` is always subcritical).
    """
    if not 0 < step <= 1:
        raise ValueError(f"scan step must lie in (0, 1], got {step}")
    n_steps = int(np.ceil(1.0 / step - 1e-9))
    grid = np.minimum(np.arange(1, n_steps + 1) * step, 1.0)
    lo = 0.0
    hi = None
    for pi in grid:
        if _supercritical(e, float(pi)):
            hi = float(pi)
            break
        lo = float(pi)
    if hi is None:
        return ThresholdResult(pi_c=None, bracket=float("nan"), scan_resolution=step)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _supercritical(e, mid):
            hi = mid
        else:
            lo = mid
    return ThresholdResult(pi_c=0.5 * (lo + hi), bracket=hi - lo, scan_resolution=step)


def spectral_threshold_uncorrelated(e: JointDegreeDistribution) -> float:
    """``1 / rho(C)`` at ``pi = 1``, exact when end degrees are independent.

    For a product-form table ``C`` has rank one and its spectral radius is
    ``sum_k (k-1) f_k`` with ``f`` the edge-end marginal.
    """
    f = e.edge_end_marginal()
    k = np.arange(1, e.N + 1)
    radius = float((k - 1) @ f)
    return 1.0 / radius if radius > 0 else float("inf")


@dataclass(frozen=True)
class CurvePoint:
    pi: float
    s: float
    w: float  # inf at criticality, nan when undefined or failed
    r: float
    p0: float
    supercritical: bool
    error: str | None = None


def analyze_point(e: JointDegreeDistribution, pi: float) -> CurvePoint:
    pi = float(pi)
    tab = percolated_tables(e, pi)
    decay = pearson_decay(e)
    r = float(pearson_at(decay, pi)) if decay.defined else float("nan")
    p0 = float(tab.p.p[0])
    C = criticality_from_conditional(tab.q)
    sup = sign_indicator(C) > 0
    try:
        giant = solve_giant(tab.p, tab.q)
    except ConvergenceError as exc:
        return CurvePoint(pi, float("nan"), float("nan"), r, p0, sup, str(exc))
    if giant.s >= 1.0:
        return CurvePoint(pi, giant.s, float("nan"), r, p0, sup, "no finite components")
    if at_criticality(C):
        return CurvePoint(pi, giant.s, float("inf"), r, p0, sup)
    try:
        w = reduced_w(tab.p, tab.q, giant)
    except CriticalityError:
        w = float("inf")
    return CurvePoint(pi, giant.s, w, r, p0, sup)


def analyze_curve(e: JointDegreeDistribution, pis) -> list[CurvePoint]:
    return [analyze_point(e, pi) for pi in np.atleast_1d(pis)]


def pi_grid(start: float, stop: float, step: float) -> np.ndarray:
    """``start, start + step, ...`` up to ``stop`` inclusive, rounded to the step's precision."""
    if not (0 < start <= stop <= 1) or step <= 0:
        raise ValueError(f"need 0 < start <= stop <= 1 and step > 0, got {start}, {stop}, {step}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    digits = max(0, int(np.ceil(-np.log10(step))) + 3)
    return np.round(start + step * np.arange(n), digits)


@dataclass(frozen=True)
class WPeak:
    index: int
    pi: float
    w: float
    refined_pi: float
    refined_w: float
    divergent: bool


def local_maxima(w) -> list[int]:
    """Interior grid indices where ``w`` has a local maximum (plateaus count once, NaN breaks)."""
    w = np.asarray(w, dtype=float)
    out = []
    i = 1
    n = w.size
    while i < n - 1:
        if np.isnan(w[i]) or np.isnan(w[i - 1]) or not w[i] > w[i - 1]:
            i += 1
            continue
        j = i
        while j + 1 < n and w[j + 1] == w[i]:
            j += 1
        if j + 1 < n and not np.isnan(w[j + 1]) and w[j + 1] < w[i]:
            out.append(i)
        i = j + 1
    return out


def classify_peaks(e: JointDegreeDistribution, pis, w, blowup: float = 10.0) -> list[WPeak]:
    """Refine each grid maximum of ``w`` within its neighbouring cells.

    A peak is divergent when the refined maximum hits the singular system or
    exceeds ``blowup`` times the grid value; a bounded peak refines to a
    value close to the grid one.
    """
    pis = np.asarray(pis, dtype=float)
    w = np.asarray(w, dtype=float)
    peaks = []
    for i in local_maxima(w):
        if np.isinf(w[i]):
            peaks.append(WPeak(i, float(pis[i]), float(w[i]), float(pis[i]), float(w[i]), True))
            continue
        hit = []

        def neg_w(pi):
            try:
                return -finite_component_size(e, pi)
            except CriticalityError:
                hit.append(pi)
                return -np.inf

        res = minimize_scalar(neg_w, bounds=(pis[i - 1], pis[i + 1]), method="bounded",
                              options={"xatol": 1e-12, "maxiter": 500})
        best_w = float(-res.fun)
        divergent = bool(hit or not np.isfinite(best_w) or best_w > blowup * w[i])
        peaks.append(WPeak(i, float(pis[i]), float(w[i]), float(res.x), best_w, divergent))
    return peaks
