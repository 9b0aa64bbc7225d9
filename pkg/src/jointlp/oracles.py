"""Exact small-instance references: min-sum recursions, brute-force joint ML,
and the explicit joint LP."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .channels import BranchMetrics, TrellisSequence, branch_metrics, build_trellis, dicode_spec
from .codes import TannerGraph, even_subsets, single_parity_check
from .simplex import Infeasible, simplex

__all__ = [
    "LpSolution",
    "viterbi_d2",
    "min_path_cost",
    "joint_ml_bruteforce",
    "build_joint_lp",
    "lp_solve_small",
    "project_q",
    "lcp_violation",
    "projection_feasible",
    "Fig2Result",
    "fig2_search",
    "bcjr_probability",
    "oracle_checks",
]


def viterbi_d2(trellis: TrellisSequence, gamma_caps, p: int):
    """Min-sum forward values up to ``p-1``, backward values from ``p``, and
    the anchored trellis term. +inf entries in ``gamma_caps`` are excluded
    edges.

    Returns ``(n_fwd, n_bwd, term)`` with ``n_fwd[i]`` for i=0..p-1 and
    ``n_bwd[i - p]`` for i=p..N.
    """
    G = np.asarray(gamma_caps, dtype=float)
    N, S = trellis.length, trellis.num_states
    if not 1 <= p <= N:
        raise ValueError("anchor must lie in 1..N")
    src, dst = trellis.src, trellis.dst
    # store -n_fwd (path cost to state) and n_bwd (cost to go)
    neg_fwd = np.zeros((p, S))
    for i in range(1, p):
        for k in range(S):
            into = dst == k
            neg_fwd[i, k] = np.min(neg_fwd[i - 1, src[into]] + G[i - 1, into])
    bwd = np.zeros((N - p + 1, S))
    for i in range(N - 1, p - 1, -1):
        for k in range(S):
            out = src == k
            bwd[i - p, k] = np.min(bwd[i - p + 1, dst[out]] + G[i, out])
    term = float(np.min(G[p - 1] + neg_fwd[p - 1, src] + bwd[0, dst]))
    return -neg_fwd, bwd, term


def min_path_cost(trellis: TrellisSequence, costs) -> float:
    """Cheapest full path by exhaustive enumeration of edge sequences."""
    C = np.asarray(costs, dtype=float)
    spec = trellis.spec
    best = np.inf

    def walk(i, state, acc):
        nonlocal best
        # no branch-and-bound: costs may be negative (e.g. caps after subtracting messages)
        if i == trellis.length:
            best = min(best, acc)
            return
        for e, (s, t, _, _) in enumerate(spec.edges):
            if (state is None or s == state) and np.isfinite(C[i, e]):
                walk(i + 1, t, acc + C[i, e])

    walk(0, None, 0.0)
    return float(best)


def _codewords(graph: TannerGraph, budget: int):
    G = graph.generator.astype(np.int64)
    k = G.shape[0]
    if k > budget:
        raise ValueError(f"code dimension {k} exceeds the enumeration budget {budget}")
    info = ((np.arange(2 ** k)[:, None] >> np.arange(k)[::-1]) & 1)
    words = (info @ G) % 2
    order = np.lexsort(words.T[::-1])
    return words[order].astype(np.uint8)


def joint_ml_bruteforce(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                        budget: int = 20, return_path: bool = False):
    """Minimum-cost codeword path over all codewords.

    Each codeword is scored by a Viterbi pass restricted to edges whose input
    bit matches it. Ties go to the lexicographically smallest codeword.
    """
    words = _codewords(graph, budget)
    costs = b.as_float()
    spec = trellis.spec
    N, S = trellis.length, trellis.num_states
    src, dst, bit = spec.src, spec.dst, spec.bit
    D = np.zeros((len(words), S))
    back = np.zeros((N, len(words), S), dtype=np.intp)
    for i in range(N):
        cand = D[:, src] + costs[i][None, :]
        cand = np.where(bit[None, :] == words[:, i:i + 1], cand, np.inf)
        newD = np.full((len(words), S), np.inf)
        for k in range(S):
            into = np.flatnonzero(dst == k)
            sub = cand[:, into]
            arg = np.argmin(sub, axis=1)
            newD[:, k] = sub[np.arange(len(words)), arg]
            back[i, :, k] = into[arg]
        D = newD
    totals = D.min(axis=1)
    w = int(np.argmin(totals))
    cost = float(totals[w])
    if not return_path:
        return words[w].copy(), cost
    path = np.empty(N, dtype=np.intp)
    k = int(np.argmin(D[w]))
    for i in range(N - 1, -1, -1):
        e = back[i, w, k]
        path[i] = e
        k = src[e]
    return words[w].copy(), cost, path


@dataclass
class LpSolution:
    g: np.ndarray
    w: list
    objective: float
    integral: bool
    f: np.ndarray
    basis_info: dict = field(default_factory=dict)


@dataclass
class JointLp:
    c: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    g_index: np.ndarray  # (N, O) column index or -1 for excluded edges
    w_slices: list
    families: list


def build_joint_lp(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                   degree_cap: int = 12, anchor: int = 1) -> JointLp:
    """Equality-form joint LP over edge indicators ``g`` and check patterns ``w``."""
    N, O, S = trellis.length, trellis.num_edges, trellis.num_states
    spec = trellis.spec
    g_index = np.full((N, O), -1, dtype=np.intp)
    live = ~b.excluded
    g_index[live] = np.arange(live.sum())
    ncol = int(live.sum())
    families = [even_subsets(graph, j, degree_cap) for j in range(graph.m)]
    w_slices = []
    for fam in families:
        w_slices.append(slice(ncol, ncol + len(fam)))
        ncol += len(fam)
    rows = []
    rhs = []

    def new_row():
        r = np.zeros(ncol)
        rows.append(r)
        return r

    for sl in w_slices:
        r = new_row()
        r[sl] = 1.0
        rhs.append(1.0)
    r = new_row()
    for e in range(O):
        if g_index[anchor - 1, e] >= 0:
            r[g_index[anchor - 1, e]] = 1.0
    rhs.append(1.0)
    for fam, sl in zip(families, w_slices):
        for t, i in enumerate(fam.neighbors):
            r = new_row()
            r[sl] = fam.masks[:, t]
            for e in np.flatnonzero(spec.bit == 1):
                if g_index[i, e] >= 0:
                    r[g_index[i, e]] -= 1.0
            rhs.append(0.0)
    for i in range(N - 1):
        for k in range(S):
            r = new_row()
            for e in range(O):
                if spec.dst[e] == k and g_index[i, e] >= 0:
                    r[g_index[i, e]] += 1.0
                if spec.src[e] == k and g_index[i + 1, e] >= 0:
                    r[g_index[i + 1, e]] -= 1.0
            rhs.append(0.0)
    c = np.zeros(ncol)
    c[g_index[live]] = b.values[live]
    return JointLp(c, np.array(rows), np.array(rhs), g_index, w_slices, families)


def lp_solve_small(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                   degree_cap: int = 12, anchor: int = 1, max_vars: int = 5000,
                   tol: float = 1e-9) -> LpSolution:
    lp = build_joint_lp(graph, trellis, b, degree_cap, anchor)
    if lp.A.shape[1] > max_vars:
        raise ValueError(f"{lp.A.shape[1]} variables exceed the budget {max_vars}")
    res = simplex(lp.c, lp.A, lp.rhs, tol=tol)
    x = res.x
    g = np.zeros((trellis.length, trellis.num_edges))
    live = lp.g_index >= 0
    g[live] = x[lp.g_index[live]]
    w = [x[sl].copy() for sl in lp.w_slices]
    integral = bool(np.all(np.minimum(np.abs(g), np.abs(g - 1.0)) <= 1e-6))
    return LpSolution(g, w, res.objective, integral, project_q(trellis, g, tol=1e-7),
                      {"iterations": res.iterations, "basis": res.basis,
                       "families": lp.families, "shape": lp.A.shape})


def project_q(trellis: TrellisSequence, g, tol: float = 1e-9) -> np.ndarray:
    """Input-bit marginals ``f_i = sum of g[i, e] over edges with x(e) = 1``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (trellis.length, trellis.num_edges):
        raise ValueError(f"g has shape {g.shape}")
    if np.abs(g.sum(axis=1) - 1.0).max() > tol or g.min() < -tol:
        raise ValueError("every section of g must be a probability vector")
    return g[:, trellis.bit == 1].sum(axis=1)


def lcp_violation(graph: TannerGraph, f, degree_cap: int = 10) -> float:
    """Largest violation of the odd-subset inequalities of the local polytopes."""
    f = np.asarray(f, dtype=float)
    worst = max(0.0, -f.min(initial=0.0), f.max(initial=0.0) - 1.0)
    for row in graph.check_neighbors:
        d = len(row)
        if d > degree_cap:
            raise ValueError(f"check degree {d} above cap {degree_cap}")
        vals = f[list(row)]
        for size in range(1, d + 1, 2):
            for S in combinations(range(d), size):
                inside = np.zeros(d, dtype=bool)
                inside[list(S)] = True
                lhs = vals[inside].sum() - vals[~inside].sum()
                worst = max(worst, lhs - (size - 1))
    return float(worst)


def projection_feasible(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                        f_target, degree_cap: int = 12) -> bool:
    """Whether some feasible point of the joint LP projects onto ``f_target``."""
    lp = build_joint_lp(graph, trellis, b, degree_cap)
    rows = [lp.A]
    rhs = [lp.rhs]
    spec = trellis.spec
    for i, fi in enumerate(f_target):
        r = np.zeros(lp.A.shape[1])
        for e in np.flatnonzero(spec.bit == 1):
            if lp.g_index[i, e] >= 0:
                r[lp.g_index[i, e]] = 1.0
        rows.append(r[None, :])
        rhs.append([fi])
    try:
        simplex(np.zeros(lp.A.shape[1]), np.vstack(rows), np.concatenate(rhs))
    except Infeasible:
        return False
    return True


@dataclass
class Fig2Result:
    found: bool
    target: tuple
    target_feasible: bool
    y: Optional[np.ndarray]
    sigma: Optional[float]
    lp: Optional[LpSolution]
    fractional: list
    searched: int

    @property
    def note(self) -> str:
        if self.found:
            return "target attained"
        if not self.target_feasible:
            return ("no point of the relaxed polytope projects onto the target: "
                    "the parity check forces the remaining coordinates")
        return "target feasible but not met as an LP optimum in the searched set"

    def to_dict(self) -> dict:
        seen = {}
        for y, sigma, f in self.fractional:
            seen.setdefault(tuple(float(v) for v in np.round(f, 6)), {"y": [float(v) for v in y],
                                                    "sigma": float(sigma)})
        return {
            "found": self.found,
            "target": list(self.target),
            "target_feasible": self.target_feasible,
            "note": self.note,
            "y": None if self.y is None else [float(v) for v in self.y],
            "sigma": self.sigma,
            "lp_objective": None if self.lp is None else self.lp.objective,
            "lp_projection": None if self.lp is None else [float(v) for v in self.lp.f],
            "searched": self.searched,
            "fractional_projections": [{"f": list(k), **v} for k, v in seen.items()],
        }


def fig2_search(target=(1.0, 0.5, 0.0), sigmas=(0.3, 0.5, 0.8, 1.0), steps: int = 41,
                tol: float = 1e-6, seed: int = 0, random_draws: int = 200) -> Fig2Result:
    """Look for a received word on SPC(3,2) over the dicode channel (zero
    start state) whose joint LP optimum projects onto ``target``.

    The search walks the segment between the noiseless outputs of codeword
    (1,1,0) and of input (1,0,0), then draws random perturbations around it.
    Fractional optima met on the way are collected.
    """
    spec = dicode_spec(False, start_state=0)
    graph = single_parity_check(3)
    trellis = build_trellis(spec, 3)
    target = tuple(float(v) for v in target)
    feasible = projection_feasible(graph, trellis, branch_metrics(trellis, np.zeros(3), 1.0), target)

    def clean(bits):
        state, out = 0, []
        for x in bits:
            e = spec.next_edge(state, x)
            out.append(spec.edges[e][3])
            state = spec.edges[e][1]
        return np.array(out)

    a, c = clean((1, 1, 0)), clean((1, 0, 0))
    rng = np.random.default_rng(seed)
    candidates = [a + t * (c - a) for t in np.linspace(0.0, 1.0, steps)]
    candidates += [a + rng.uniform(0, 1) * (c - a) + rng.normal(0, 0.7, 3) for _ in range(random_draws)]
    fractional = []
    searched = 0
    for sigma in sigmas:
        for y in candidates:
            searched += 1
            sol = lp_solve_small(graph, trellis, branch_metrics(trellis, y, sigma))
            if not sol.integral:
                fractional.append((y.copy(), sigma, sol.f.copy()))
            if np.abs(sol.f - np.asarray(target)).max() <= tol:
                return Fig2Result(True, target, feasible, y, sigma, sol, fractional, searched)
    return Fig2Result(False, target, feasible, None, None, None, fractional, searched)


def bcjr_probability(trellis: TrellisSequence, likelihood):
    """Textbook forward-backward in the probability domain.

    ``likelihood[i, e]`` is the (unnormalized) weight of edge e at time i.
    Boundary vectors are uniform and every stage is normalized. Returns
    ``(alpha, beta, llr)`` with ``llr[i] = ln P(x_i=0) / P(x_i=1)``.
    """
    L = np.asarray(likelihood, dtype=float)
    N, S = trellis.length, trellis.num_states
    src, dst, bit = trellis.src, trellis.dst, trellis.bit
    alpha = np.zeros((N + 1, S))
    beta = np.zeros((N + 1, S))
    alpha[0] = 1.0 / S
    beta[N] = 1.0 / S
    for i in range(N):
        nxt = np.zeros(S)
        for e in range(len(src)):
            nxt[dst[e]] += alpha[i, src[e]] * L[i, e]
        alpha[i + 1] = nxt / nxt.sum()
    for i in range(N, 0, -1):
        prv = np.zeros(S)
        for e in range(len(src)):
            prv[src[e]] += beta[i, dst[e]] * L[i - 1, e]
        beta[i - 1] = prv / prv.sum()
    llr = np.empty(N)
    for i in range(N):
        p0 = p1 = 0.0
        for e in range(len(src)):
            w = alpha[i, src[e]] * L[i, e] * beta[i + 1, dst[e]]
            if bit[e]:
                p1 += w
            else:
                p0 += w
        llr[i] = np.log(p0 / p1)
    return alpha, beta, llr


def oracle_checks(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                  sweeps: int = 2000, k: float = 1000.0, degree_cap: int = 12) -> list:
    """Cross-check the decoder machinery against the exact oracles on one
    instance. Returns rows ``{"check", "ok", "detail"}``."""
    from .decoder import (DecoderConfig, compute_gamma_caps, decode_cyclic, dual_objective,
                          extract_primal, gamma_from_lemma2, outer_update, primal_residuals,
                          softmin_recursions, trellis_term)

    rows = []

    def add(name, ok, detail):
        rows.append({"check": name, "ok": bool(ok), "detail": detail})

    N, O = trellis.length, trellis.num_edges
    rng = np.random.default_rng(0)
    m_rand = rng.normal(0, 0.5, graph.num_edges)
    caps = compute_gamma_caps(b, graph, m_rand, trellis)

    terms = [viterbi_d2(trellis, caps, p)[2] for p in range(1, N + 1)]
    add("min-sum term anchor invariance", max(terms) - min(terms) <= 1e-9 * (1 + abs(terms[0])),
        f"spread {max(terms) - min(terms):.2e}")
    if N <= 8:
        exact = min_path_cost(trellis, caps)
        add("min-sum term = path enumeration", abs(exact - terms[0]) <= 1e-9 * (1 + abs(exact)),
            f"|diff| {abs(exact - terms[0]):.2e}")
    for k2 in (10.0, 100.0, 1000.0):
        soft = trellis_term(trellis, caps, N, k2)
        gap = terms[0] - soft
        add(f"soft-min trellis term sandwich K2={k2:g}",
            -1e-9 <= gap <= N * np.log(O) / k2 + 1e-9, f"gap {gap:.3e}")

    outer = outer_update(trellis, caps, 1.0)
    worst = 0.0
    for p in range(1, N + 1):
        nf, nb = softmin_recursions(trellis, caps, p, 1.0)
        worst = max(worst, abs(gamma_from_lemma2(trellis, caps, nf, nb, p, 1.0) - outer.gamma[p - 1]))
    add("trellis-to-bit message: recursion form = BCJR form", worst <= 1e-9, f"max |diff| {worst:.2e}")

    duals = [dual_objective(graph, trellis, caps, m_rand, 10.0, 10.0, p) for p in range(1, N + 1)]
    add("dual objective anchor invariance", max(duals) - min(duals) <= 1e-9 * (1 + abs(duals[0])),
        f"spread {max(duals) - min(duals):.2e}")

    lp = lp_solve_small(graph, trellis, b, degree_cap)
    res = primal_residuals(graph, trellis, lp.g, lp.w, lp.basis_info["families"])
    worst = max(v for v in res.values() if v is not None)
    add("LP optimum satisfies all constraints", worst <= 1e-8, f"max residual {worst:.2e}")
    if graph.dimension <= 20:
        cw, cost = joint_ml_bruteforce(graph, trellis, b)
        add("LP objective <= joint ML cost", lp.objective <= cost + 1e-8,
            f"P* {lp.objective:.6f}, ML {cost:.6f}")
        if lp.integral:
            same = np.array_equal((lp.f > 0.5).astype(np.uint8), cw)
            add("integral LP optimum is the ML codeword", same and abs(lp.objective - cost) <= 1e-8,
                f"codeword {''.join(map(str, cw))}")

    cfg = DecoderConfig(k1=k, k2=k, outer_limit=sweeps, schedule="cyclic", stop_on_codeword=False)
    rep = decode_cyclic(graph, trellis, b, cfg)
    tr = np.asarray(rep.dual_trace)
    steps = np.diff(tr) / (1.0 + np.abs(tr[1:]))
    clamped = set(rep.clamp_steps)
    steps = [d for t, d in enumerate(steps, start=2) if t not in clamped and t - 1 not in clamped]
    add("cyclic schedule dual ascent", min(steps, default=0.0) >= -1e-9,
        f"worst relative step {min(steps, default=0.0):.2e}")
    add("weak duality (dual <= P*)", tr.max() <= lp.objective + 1e-8,
        f"dual {tr[-1]:.6f}, P* {lp.objective:.6f}")
    ext = extract_primal(graph, trellis, b, rep.state.m, k, k, degree_cap)
    gap = abs(ext.primal_cost - lp.objective) / N
    add("extracted primal cost within 1e-2 per bit of P*", gap <= 1e-2, f"{gap:.2e}")
    add("extracted primal flow residual", ext.residuals["flow"] <= 1e-10,
        f"{ext.residuals['flow']:.2e}")
    if ext.residuals["coupling"] is not None:
        add("extracted primal coupling residual", ext.residuals["coupling"] <= 1e-3,
            f"{ext.residuals['coupling']:.2e}")
    return rows
