"""Self-checks run by ``corrperc validate``.

Each check compares a production path with an independent route (brute-force
enumeration, the dense coloured system, a closed form, or simulation) and
returns a :class:`Check`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analytics as an
from . import coloured_oracle as co
from .colour_map import enumerated_moments, first_moment_vector, second_moment_matrix
from .joint_dist import (
    JointDegreeDistribution,
    build_family,
    conditional_dist,
    marginal_degree_dist,
    pearson_at,
    pearson_decay,
    percolate_joint,
    thinned_node_dist,
)
from .mc_sim import run_ensemble, sample_graph

SUITES = ("moments", "oracle", "mc")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def random_joint(rng: np.random.Generator, N: int, density: float = 0.7) -> JointDegreeDistribution:
    """Random symmetric table on degrees ``1..N`` with some empty pairs."""
    w = rng.random((N, N)) * (rng.random((N, N)) < density)
    w = w + w.T
    if w.sum() == 0:
        w[N - 1, N - 1] = 1.0
    return JointDegreeDistribution.from_weights(w)


def _rel_close(a: float, b: float, rtol: float, atol: float = 1e-12) -> bool:
    return abs(a - b) <= max(atol, rtol * max(abs(a), abs(b)))


def moment_checks(seed: int = 1, trials: int = 5, max_N: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for N in range(1, max_N + 1):
        worst = 0.0
        for _ in range(trials):
            e = random_joint(rng, N)
            p, q = marginal_degree_dist(e), conditional_dist(e)
            mass, first, second = enumerated_moments(p, q)
            worst = max(worst,
                        float(np.max(np.abs(mass[1:] - p.p[1:]))),
                        float(np.max(np.abs(first - first_moment_vector(p, q)))),
                        float(np.max(np.abs(second - second_moment_matrix(p, q)))))
        out.append(Check(f"moments N={N}", worst < 1e-12, f"max abs error {worst:.3g}"))
    return out


def oracle_checks(seed: int = 2, trials: int = 12, max_N: int = 8) -> list[Check]:
    rng = np.random.default_rng(seed)
    s_err = w_err = det_err = 0.0
    s_ok = w_ok = det_ok = rank_ok = True
    for _ in range(trials):
        N = int(rng.integers(2, max_N + 1))
        e = random_joint(rng, N)
        pi = float(rng.uniform(0.05, 1.0))
        sys_ = co.ColouredSystem.from_joint(e, pi)
        x = co.solve_general_fixed_point(sys_)
        s_dense = co.giant_general(sys_, x)
        g = an.giant_component(e, pi)
        s_ok &= _rel_close(g.s, s_dense, 1e-10)
        s_err = max(s_err, abs(g.s - s_dense))
        try:
            w_dense = co.finite_component_size_general(sys_, x, s_dense)
            w_red = an.finite_component_size(e, pi, g)
            w_ok &= _rel_close(w_red, w_dense, 1e-10)
            w_err = max(w_err, abs(w_red - w_dense) / abs(w_dense))
        except (co.CriticalityError, an.CriticalityError):
            pass
        _, PM = co.criticality_matrices(sys_)
        n = PM.shape[0]
        d_big = np.linalg.det(PM - np.eye(n))
        d_small = np.linalg.det(an.build_C(e, pi).C - np.eye(N))
        det_ok &= _rel_close(d_big, d_small, 1e-8)
        det_err = max(det_err, abs(d_big - d_small) / max(abs(d_small), 1e-300))
        rank_ok &= int(np.linalg.matrix_rank(PM)) <= N
    return [
        Check("giant: reduced vs dense", bool(s_ok), f"max abs diff {s_err:.3g}"),
        Check("finite size: reduced vs dense", bool(w_ok), f"max rel diff {w_err:.3g}"),
        Check("determinant: N^2 vs N", bool(det_ok), f"max rel diff {det_err:.3g}"),
        Check("rank of criticality matrix <= N", bool(rank_ok)),
    ]


def mc_checks(seed: int = 42, n: int = 100_000, replicas: int = 8) -> list[Check]:
    out = []
    cubic = JointDegreeDistribution.point_mass(3, 3, 3)
    row = run_ensemble(cubic, n, [0.6], replicas, seed=seed)[0]
    out.append(Check("3-regular giant at pi=0.6", abs(row.s_mean - 19 / 27) < 0.01,
                     f"s_mean={row.s_mean:.4f} vs {19 / 27:.4f}"))
    row = run_ensemble(cubic, n, [0.4], replicas, seed=seed)[0]
    out.append(Check("3-regular subcritical at pi=0.4", row.s_mean < 0.01, f"s_mean={row.s_mean:.4f}"))
    w = an.finite_component_size(cubic, 0.4)
    out.append(Check("3-regular finite size at pi=0.4", abs(row.w_mean - w) / w < 0.05,
                     f"w_mean={row.w_mean:.4f} vs {w:.4f}"))
    e = build_family("bimodal", 0.8, 9, eps=0.5)
    pis = [0.4, 0.6, 0.8, 1.0]
    rows = run_ensemble(e, n, pis, replicas, seed=seed)
    r_an = pearson_at(pearson_decay(e), np.array(pis))
    worst = float(np.max(np.abs(np.array([r.r_mean for r in rows]) - r_an)))
    out.append(Check("Pearson decay vs simulation", worst < 0.05, f"max abs diff {worst:.4f}"))
    g = sample_graph(e, n, seed=seed)
    tv = 0.5 * float(np.abs(g.realized_e - e.e).sum())
    out.append(Check("sampler end-degree table", tv < 1e-2, f"TV distance {tv:.4g}"))
    return out


def thinning_checks(e: JointDegreeDistribution, pis) -> float:
    """Largest gap between the percolated table's marginal and binomially thinned node degrees."""
    worst = 0.0
    p = marginal_degree_dist(e)
    for pi in pis:
        pe = marginal_degree_dist(percolate_joint(e, pi)).p[1:]
        pt = thinned_node_dist(p, pi).p[1:]
        worst = max(worst, float(np.max(np.abs(pe - pt / pt.sum()))))
    return worst


def run_suite(name: str) -> list[Check]:
    if name == "moments":
        return moment_checks()
    if name == "oracle":
        return oracle_checks()
    if name == "mc":
        return mc_checks()
    if name == "all":
        return moment_checks() + oracle_checks() + mc_checks()
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
