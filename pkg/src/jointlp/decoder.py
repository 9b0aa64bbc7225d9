"""Iterative joint LP decoding of an LDPC code over a finite-state channel.

Messages live on the edges of the Tanner graph, in the order of
``TannerGraph.edges``. ``m`` are bit-to-check messages and ``big_m`` are
check-to-bit messages, both in branch-metric units. All trellis quantities
are handled in the log domain so that large soft-min constants do not
underflow.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

_lae = np.logaddexp.reduce


def logsumexp(a, axis=None, keepdims=False):
    # ufunc reduction is exact enough and far cheaper than scipy's version on tiny arrays
    a = np.asarray(a, dtype=float)
    if axis is None:
        return _lae(a.ravel()) if a.size else -np.inf
    return _lae(a, axis=axis, keepdims=keepdims)

from .channels import BranchMetrics, TrellisSequence
from .codes import DegreeCapExceeded, TannerGraph, even_subsets, syndrome_ok

__all__ = [
    "DecoderConfig",
    "MessageState",
    "DecodeReport",
    "PrimalExtraction",
    "softmin",
    "compute_gamma_caps",
    "outer_update",
    "check_update",
    "check_update_tanh",
    "inner_update",
    "softmin_recursions",
    "gamma_from_lemma2",
    "dual_objective",
    "check_term",
    "trellis_term",
    "decode",
    "decode_flooding",
    "decode_cyclic",
    "extract_primal",
    "gap_report",
    "primal_residuals",
    "hard_decision",
]

SCHEDULES = ("flooding", "cyclic")
INNER_ORDERS = ("check_first", "bit_first")


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder hyperparameters.

    ``inner_rounds`` only applies to the flooding schedule; the cyclic
    schedule solves each bit's block exactly. ``message_clamp`` bounds
    ``|m|`` and ``|M|`` in branch-metric units. ``tol > 0`` enables a
    convergence exit for the cyclic schedule (a full sweep raising the dual
    by at most ``tol * (1 + |dual|)``). ``diagnostics`` attaches a primal
    extraction and duality-gap summary to every report. ``damping`` is the
    weight of the new bit-to-check messages after each flooding iteration;
    1 gives the undamped algorithm.
    """

    k1: float = 1000.0
    k2: float = 100.0
    inner_rounds: int = 5
    outer_limit: int = 200
    schedule: str = "flooding"
    inner_order: str = "check_first"
    anchor: Optional[int] = None
    message_clamp: float = 1e4
    tanh_eps: float = 1e-12
    stop_on_codeword: bool = True
    tol: float = 0.0
    diagnostics: bool = False
    damping: float = 1.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("k1 and k2 must be positive")
        if self.inner_rounds < 1 or self.outer_limit < 1:
            raise ValueError("iteration limits must be at least 1")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if self.inner_order not in INNER_ORDERS:
            raise ValueError(f"inner_order must be one of {INNER_ORDERS}")
        if not (np.isfinite(self.message_clamp) and self.message_clamp > 0):
            raise ValueError("message_clamp must be finite and positive")
        if not (0 < self.tanh_eps < 1):
            raise ValueError("tanh_eps must lie in (0, 1)")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MessageState:
    m: np.ndarray
    big_m: np.ndarray
    gamma: np.ndarray
    log_lambda: np.ndarray
    log_alpha: np.ndarray
    log_beta: np.ndarray
    gamma_caps: np.ndarray

    @property
    def lambda_(self) -> np.ndarray:
        return np.exp(self.log_lambda)

    @property
    def alpha(self) -> np.ndarray:
        return np.exp(self.log_alpha)

    @property
    def beta(self) -> np.ndarray:
        return np.exp(self.log_beta)

    def message_dict(self, graph: TannerGraph) -> dict:
        return {e: float(v) for e, v in zip(graph.edges, self.m)}


@dataclass
class DecodeReport:
    hard_bits: np.ndarray
    pseudo_marginals: np.ndarray
    dual_trace: list
    status: str
    iterations_used: int
    gamma: np.ndarray
    clamp_events: int = 0
    clamp_steps: list = field(default_factory=list)
    gap_report: Optional[dict] = None
    state: Optional[MessageState] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "hard_bits": "".join(str(int(b)) for b in self.hard_bits),
            "pseudo_marginals": [float(v) for v in self.pseudo_marginals],
            "dual_trace": [float(v) for v in self.dual_trace],
            "status": self.status,
            "iterations_used": int(self.iterations_used),
            "gamma": [float(v) for v in self.gamma],
            "clamp_events": int(self.clamp_events),
            "gap_report": self.gap_report,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ---------------------------------------------------------------- soft-min

def softmin(values, k: float) -> float:
    """``-(1/k) ln sum exp(-k x)``; +inf entries are ignored."""
    if not k > 0:
        raise ValueError("k must be positive")
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("softmin of an empty sequence")
    v = v[~np.isposinf(v)]
    if v.size == 0:
        warnings.warn("softmin over excluded entries only", RuntimeWarning, stacklevel=2)
        return float("inf")
    return float(-logsumexp(-k * v) / k)


# ---------------------------------------------------------------- trellis side

def _trellis_index(trellis: TrellisSequence):
    """Padded (state, edge) index tables; padding points at edge ``O``."""
    spec = trellis.spec
    cache = spec.__dict__.setdefault("_index_cache", None)
    if cache is not None:
        return cache
    S, O = spec.num_states, spec.num_edges
    ins = [np.flatnonzero(spec.dst == k) for k in range(S)]
    outs = [np.flatnonzero(spec.src == k) for k in range(S)]
    in_idx = np.full((S, max(len(v) for v in ins)), O, dtype=np.intp)
    out_idx = np.full((S, max(len(v) for v in outs)), O, dtype=np.intp)
    for k in range(S):
        in_idx[k, : len(ins[k])] = ins[k]
        out_idx[k, : len(outs[k])] = outs[k]
    bit = spec.bit.astype(bool)
    cache = (in_idx, out_idx, np.flatnonzero(~bit), np.flatnonzero(bit))
    spec.__dict__["_index_cache"] = cache
    return cache


def _pad(v):
    return np.append(v, -np.inf)


def _forward_step(a_prev, log_lam_i, trellis, in_idx):
    t = a_prev[trellis.src] + log_lam_i
    return logsumexp(_pad(t)[in_idx], axis=1)


def _backward_step(b_next, log_lam_i, trellis, out_idx):
    t = b_next[trellis.dst] + log_lam_i
    return logsumexp(_pad(t)[out_idx], axis=1)


def _normalize(v):
    z = logsumexp(v)
    return v - z, z


def compute_gamma_caps(b: BranchMetrics, graph: TannerGraph, m, trellis: TrellisSequence):
    """``Gamma[i, e] = b[i, e] - [x(e)=1] sum_j m[i, j]``; +inf where excluded."""
    s = np.bincount(graph.edge_var, weights=np.asarray(m, dtype=float), minlength=graph.n)
    caps = b.values - np.outer(s, trellis.bit.astype(float))
    return np.where(b.excluded, np.inf, caps)


@dataclass
class OuterResult:
    log_lambda: np.ndarray
    log_alpha: np.ndarray
    log_beta: np.ndarray
    gamma: np.ndarray
    clamped: np.ndarray


def outer_update(trellis: TrellisSequence, gamma_caps, k2: float, clamp: float = np.inf):
    """Bit-to-trellis, forward/backward and trellis-to-bit messages.

    ``alpha[0]`` and ``beta[N]`` are uniform; every row is normalized.
    ``gamma`` is the log-ratio of bit-0 to bit-1 edge mass per section,
    clamped to ``+-clamp``.
    """
    N, S = trellis.length, trellis.num_states
    in_idx, out_idx, zero_e, one_e = _trellis_index(trellis)
    log_lam = -k2 * np.asarray(gamma_caps, dtype=float)
    la = np.empty((N + 1, S))
    lb = np.empty((N + 1, S))
    la[0] = -np.log(S)
    lb[N] = -np.log(S)
    for i in range(1, N + 1):
        la[i], _ = _normalize(_forward_step(la[i - 1], log_lam[i - 1], trellis, in_idx))
    for i in range(N, 0, -1):
        lb[i - 1], _ = _normalize(_backward_step(lb[i], log_lam[i - 1], trellis, out_idx))
    joint = la[:-1][:, trellis.src] + log_lam + lb[1:][:, trellis.dst]
    with np.errstate(invalid="ignore"):
        gamma = logsumexp(joint[:, zero_e], axis=1) - logsumexp(joint[:, one_e], axis=1)
    clamped = ~(np.abs(gamma) <= clamp)
    gamma = np.clip(np.nan_to_num(gamma, nan=0.0, posinf=clamp, neginf=-clamp), -clamp, clamp)
    return OuterResult(log_lam, la, lb, gamma, clamped)


def softmin_recursions(trellis: TrellisSequence, gamma_caps, p: int, k2: float):
    """Soft-min forward values ``n_fwd[i]`` for i=0..p-1 and backward values
    ``n_bwd[i - p]`` for i=p..N, starting from zero at both ends."""
    N = trellis.length
    if not 1 <= p <= N:
        raise ValueError("anchor must lie in 1..N")
    in_idx, out_idx, _, _ = _trellis_index(trellis)
    log_lam = -k2 * np.asarray(gamma_caps, dtype=float)
    S = trellis.num_states
    A = np.zeros((p, S))
    for i in range(1, p):
        A[i] = _forward_step(A[i - 1], log_lam[i - 1], trellis, in_idx)
    B = np.zeros((N - p + 1, S))
    for i in range(N - 1, p - 1, -1):
        B[i - p] = _backward_step(B[i - p + 1], log_lam[i], trellis, out_idx)
    # A = k2 * n_fwd, B = -k2 * n_bwd
    return A / k2, -B / k2


def _anchored_log_terms(trellis, gamma_caps, n_fwd_prev, n_bwd_p, p, k2):
    spec = trellis.spec
    return -k2 * (np.asarray(gamma_caps[p - 1], dtype=float)
                  - n_fwd_prev[spec.src] + n_bwd_p[spec.dst])


def gamma_from_lemma2(trellis: TrellisSequence, gamma_caps, n_fwd, n_bwd, p: int, k2: float) -> float:
    """Trellis-to-bit log-ratio at ``p`` from soft-min forward/backward values."""
    _, _, zero_e, one_e = _trellis_index(trellis)
    t = _anchored_log_terms(trellis, gamma_caps, n_fwd[p - 1], n_bwd[0], p, k2)
    return float(logsumexp(t[zero_e]) - logsumexp(t[one_e]))


def trellis_term(trellis: TrellisSequence, gamma_caps, p: int, k2: float) -> float:
    n_fwd, n_bwd = softmin_recursions(trellis, gamma_caps, p, k2)
    t = _anchored_log_terms(trellis, gamma_caps, n_fwd[p - 1], n_bwd[0], p, k2)
    return float(-logsumexp(t) / k2)


# ---------------------------------------------------------------- check side

def _parity_dp(x):
    """Log-domain parity sums over rows of ``x`` (entries +inf are neutral).

    Element t of a row contributes weight 1 when excluded and ``exp(-x_t)``
    when included. Returns (log even-sum of full rows, extrinsic log even
    sums, extrinsic log odd sums).
    """
    R, d = x.shape
    li = -x
    pe = np.empty((R, d + 1))
    po = np.empty((R, d + 1))
    se = np.empty((R, d + 1))
    so = np.empty((R, d + 1))
    pe[:, 0], po[:, 0] = 0.0, -np.inf
    se[:, d], so[:, d] = 0.0, -np.inf
    for t in range(d):
        pe[:, t + 1] = np.logaddexp(pe[:, t], po[:, t] + li[:, t])
        po[:, t + 1] = np.logaddexp(po[:, t], pe[:, t] + li[:, t])
    for t in range(d - 1, -1, -1):
        se[:, t] = np.logaddexp(se[:, t + 1], so[:, t + 1] + li[:, t])
        so[:, t] = np.logaddexp(so[:, t + 1], se[:, t + 1] + li[:, t])
    ext_even = np.logaddexp(pe[:, :d] + se[:, 1:], po[:, :d] + so[:, 1:])
    ext_odd = np.logaddexp(pe[:, :d] + so[:, 1:], po[:, :d] + se[:, 1:])
    return pe[:, d], ext_even, ext_odd


def _scaled_rows(graph: TannerGraph, m, k1, rows=None):
    idx = graph.padded_checks if rows is None else graph.padded_checks[rows]
    return np.append(k1 * np.asarray(m, dtype=float), np.inf)[idx], idx


def check_update(graph: TannerGraph, m, k1: float, clamp: float = np.inf):
    """Check-to-bit messages ``M = (1/k1) ln((1 - l)/(1 + l))`` for every edge.

    ``l`` is the product of ``tanh(k1 m / 2)`` over the other neighbors;
    the ratio is evaluated as odd/even extrinsic parity sums in the log
    domain, which is exact and never saturates.
    """
    x, idx = _scaled_rows(graph, m, k1)
    _, ev, od = _parity_dp(x)
    out = np.empty(graph.num_edges)
    valid = idx < graph.num_edges
    out[idx[valid]] = ((od - ev) / k1)[valid]
    return np.clip(out, -clamp, clamp)


def check_update_tanh(graph: TannerGraph, m, k1: float, eps: float = 1e-12):
    """The same update through the literal tanh product, with ``|l| <= 1 - eps``."""
    m = np.asarray(m, dtype=float)
    out = np.empty(graph.num_edges)
    th = np.tanh(k1 * m / 2.0)
    for sl in graph.check_slices:
        t = th[sl]
        for a in range(sl.stop - sl.start):
            l = np.prod(np.delete(t, a))
            l = np.clip(l, -1.0 + eps, 1.0 - eps)
            out[sl.start + a] = np.log((1.0 - l) / (1.0 + l)) / k1
    return out


def check_term(graph: TannerGraph, m, k1: float) -> float:
    """``-(1/k1) sum_j ln sum_{B even} exp(-k1 sum_{i in B} m_ij)``."""
    x, _ = _scaled_rows(graph, m, k1)
    full, _, _ = _parity_dp(x)
    return float(-full.sum() / k1)


def inner_update(graph: TannerGraph, gamma, m, k1: float, rounds: int,
                 big_m=None, order: str = "check_first", clamp: float = np.inf):
    """``rounds`` Jacobi sweeps of the check and bit updates with ``gamma`` fixed.

    Returns ``(m, big_m)``.
    """
    m = np.asarray(m, dtype=float).copy()
    big_m = np.zeros(graph.num_edges) if big_m is None else np.asarray(big_m, dtype=float).copy()
    g = np.asarray(gamma, dtype=float)[graph.edge_var] / k1
    for _ in range(rounds):
        if order == "check_first":
            big_m = check_update(graph, m, k1, clamp)
            m = np.clip(big_m + g, -clamp, clamp)
        else:
            m = np.clip(big_m + g, -clamp, clamp)
            big_m = check_update(graph, m, k1, clamp)
    return m, big_m


def dual_objective(graph: TannerGraph, trellis: TrellisSequence, gamma_caps, m,
                   k1: float, k2: float, p: Optional[int] = None) -> float:
    """Smoothed dual objective at anchor ``p`` (default N)."""
    p = trellis.length if p is None else p
    return check_term(graph, m, k1) + trellis_term(trellis, gamma_caps, p, k2)


def hard_decision(gamma) -> np.ndarray:
    """Bit 1 exactly where ``gamma < 0``."""
    return (np.asarray(gamma) < 0).astype(np.uint8)


# ---------------------------------------------------------------- primal side

@dataclass
class PrimalExtraction:
    g: np.ndarray
    w: Optional[list]
    residuals: dict
    primal_cost: float
    regularized_cost: Optional[float]
    f: np.ndarray


def _edge_marginals(trellis, log_lambda):
    N = trellis.length
    in_idx, out_idx, _, _ = _trellis_index(trellis)
    S = trellis.num_states
    la = np.empty((N + 1, S))
    lb = np.empty((N + 1, S))
    la[0] = -np.log(S)
    lb[N] = -np.log(S)
    for i in range(1, N + 1):
        la[i], _ = _normalize(_forward_step(la[i - 1], log_lambda[i - 1], trellis, in_idx))
    for i in range(N, 0, -1):
        lb[i - 1], _ = _normalize(_backward_step(lb[i], log_lambda[i - 1], trellis, out_idx))
    joint = la[:-1][:, trellis.src] + log_lambda + lb[1:][:, trellis.dst]
    joint -= logsumexp(joint, axis=1, keepdims=True)
    return np.exp(joint)


def primal_residuals(graph: TannerGraph, trellis: TrellisSequence, g, w=None, families=None) -> dict:
    """Maximum violation of each constraint family of the joint LP."""
    g = np.asarray(g, dtype=float)
    spec = trellis.spec
    S = spec.num_states
    inflow = np.zeros((trellis.length, S))
    outflow = np.zeros((trellis.length, S))
    for k in range(S):
        inflow[:, k] = g[:, spec.dst == k].sum(axis=1)
        outflow[:, k] = g[:, spec.src == k].sum(axis=1)
    res = {
        "flow": float(np.abs(inflow[:-1] - outflow[1:]).max()) if trellis.length > 1 else 0.0,
        "g_normalization": float(np.abs(g.sum(axis=1) - 1.0).max()),
        "g_nonnegativity": float(max(0.0, -g.min())),
        "coupling": None,
        "w_normalization": None,
        "w_nonnegativity": None,
    }
    if w is not None:
        f = g[:, spec.bit == 1].sum(axis=1)
        coupling = 0.0
        for fam, wj in zip(families, w):
            incl = wj @ fam.masks
            coupling = max(coupling, float(np.abs(incl - f[list(fam.neighbors)]).max()))
        res["coupling"] = coupling
        res["w_normalization"] = max(float(abs(wj.sum() - 1.0)) for wj in w) if w else 0.0
        res["w_nonnegativity"] = max(float(max(0.0, -wj.min())) for wj in w) if w else 0.0
    return res


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def extract_primal(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics, m,
                   k1: float, k2: float, degree_cap: int = 12, p: Optional[int] = None):
    """Primal point built from the current messages.

    ``g`` holds the forward-backward edge marginals under ``exp(-k2 Gamma)``
    and ``w[j]`` the even-subset distribution ``exp(-k1 sum_B m_ij)``.
    """
    gamma_caps = compute_gamma_caps(b, graph, m, trellis)
    g = _edge_marginals(trellis, -k2 * gamma_caps)
    try:
        families = [even_subsets(graph, j, degree_cap) for j in range(graph.m)]
    except DegreeCapExceeded:
        families = None
    w = None
    if families is not None:
        w = []
        for fam, sl in zip(families, graph.check_slices):
            logits = -k1 * (fam.masks @ np.asarray(m, dtype=float)[sl])
            w.append(np.exp(logits - logsumexp(logits)))
    res = primal_residuals(graph, trellis, g, w, families)
    cost = float((np.where(b.excluded, 0.0, b.values) * g).sum())
    reg = None
    if w is not None:
        p = trellis.length if p is None else p
        reg = cost - sum(_entropy(wj) for wj in w) / k1 - _entropy(g[p - 1]) / k2
    f = g[:, trellis.bit == 1].sum(axis=1)
    return PrimalExtraction(g, w, res, cost, reg, f)


# ---------------------------------------------------------------- schedules

def _finish(graph, trellis, b, m, big_m, gamma, trace, status, iters, cfg, clamp_steps,
            hard=None):
    caps = compute_gamma_caps(b, graph, m, trellis)
    outer = outer_update(trellis, caps, cfg.k2, cfg.message_clamp * cfg.k1)
    g = _edge_marginals(trellis, outer.log_lambda)
    f = np.clip(g[:, trellis.bit == 1].sum(axis=1), 0.0, 1.0)
    state = MessageState(m, big_m, gamma, outer.log_lambda, outer.log_alpha,
                         outer.log_beta, caps)
    bits = hard_decision(gamma) if hard is None else hard
    report = DecodeReport(bits, f, trace, status, iters, np.asarray(gamma, dtype=float),
                          len(clamp_steps), clamp_steps, None, state)
    if cfg.diagnostics:
        report.gap_report = gap_report(graph, trellis, b, m, cfg.k1, cfg.k2)
    return report


def gap_report(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics, m,
               k1: float, k2: float, degree_cap: int = 12) -> dict:
    """Primal cost of the extracted point, its regularized value, the dual
    value and the largest constraint residual."""
    ext = extract_primal(graph, trellis, b, m, k1, k2, degree_cap)
    caps = compute_gamma_caps(b, graph, m, trellis)
    dual = dual_objective(graph, trellis, caps, m, k1, k2)
    worst = max(v for v in ext.residuals.values() if v is not None)
    return {
        "primal_cost": ext.primal_cost,
        "regularized_cost": ext.regularized_cost,
        "dual_value": dual,
        "max_residual": worst,
        "residuals": ext.residuals,
    }


def decode_flooding(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                    config: DecoderConfig, engine: str = "compiled") -> DecodeReport:
    """Outer trellis pass followed by ``inner_rounds`` check/bit rounds, repeated.

    ``engine="numpy"`` runs the vectorized reference implementation built
    from the public update functions; the default compiled engine performs
    the same arithmetic in a single loop.
    """
    _check_dims(graph, trellis, b)
    if engine == "numpy":
        return _decode_flooding_numpy(graph, trellis, b, config)
    if engine != "compiled":
        raise ValueError(f"unknown engine {engine!r}")
    from ._kernels import flooding_iterations

    cfg = config
    spec = trellis.spec
    m = np.zeros(graph.num_edges)
    big_m = np.zeros(graph.num_edges)
    gamma = np.zeros(graph.n)
    bvals = np.where(b.excluded, np.inf, b.values)
    done, found, trace, clamps = flooding_iterations(
        bvals, spec.src, spec.dst, spec.bit.astype(np.float64), spec.num_states,
        graph.padded_checks, graph.edge_var, m, big_m, gamma, float(cfg.k1), float(cfg.k2),
        float(cfg.message_clamp), int(cfg.inner_rounds), int(cfg.outer_limit),
        cfg.inner_order == "check_first", bool(cfg.stop_on_codeword), float(cfg.damping))
    status = "codeword_found" if found or syndrome_ok(graph, hard_decision(gamma)) \
        else "iteration_limit"
    clamp_steps = [int(k) + 1 for k in np.flatnonzero(clamps)]
    return _finish(graph, trellis, b, m, big_m, gamma, list(map(float, trace)), status,
                   int(done), cfg, clamp_steps)


def _decode_flooding_numpy(graph, trellis, b, config):
    cfg = config
    p = trellis.length if cfg.anchor is None else cfg.anchor
    m = np.zeros(graph.num_edges)
    big_m = np.zeros(graph.num_edges)
    gclamp = cfg.message_clamp * cfg.k1
    trace, clamp_steps = [], []
    status = "iteration_limit"
    gamma = np.zeros(graph.n)
    it = 0
    for it in range(1, cfg.outer_limit + 1):
        caps = compute_gamma_caps(b, graph, m, trellis)
        outer = outer_update(trellis, caps, cfg.k2, gclamp)
        gamma = outer.gamma
        m_new, big_m = inner_update(graph, gamma, m, cfg.k1, cfg.inner_rounds, big_m,
                                    cfg.inner_order, cfg.message_clamp)
        m = m_new if cfg.damping == 1.0 else cfg.damping * m_new + (1.0 - cfg.damping) * m
        if outer.clamped.any() or np.abs(m).max(initial=0) >= cfg.message_clamp:
            clamp_steps.append(it)
        caps = compute_gamma_caps(b, graph, m, trellis)
        trace.append(dual_objective(graph, trellis, caps, m, cfg.k1, cfg.k2, p))
        if cfg.stop_on_codeword and syndrome_ok(graph, hard_decision(gamma)):
            status = "codeword_found"
            break
    else:
        if syndrome_ok(graph, hard_decision(gamma)):
            status = "codeword_found"
    return _finish(graph, trellis, b, m, big_m, gamma, trace, status, it, cfg, clamp_steps)


def decode_cyclic(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
                  config: DecoderConfig, block_trace: bool = True) -> DecodeReport:
    """Gauss-Seidel schedule: one exact block update of ``{m_pj}`` per bit.

    For bit p, the forward values through section p-1 reflect the bits
    already updated in this sweep and the backward values from p onward
    are refreshed once per sweep (those sections are untouched until their
    turn). The block then solves the stationarity condition
    ``m_pj = M_pj + gamma_p / k1`` exactly, with ``gamma_p`` evaluated at the
    new messages; the condition is linear in ``sum_j m_pj``.

    ``dual_trace`` gets the dual objective after every block when
    ``block_trace`` is set, otherwise once per sweep.
    """
    from ._kernels import cyclic_sweeps

    _check_dims(graph, trellis, b)
    cfg = config
    spec = trellis.spec
    var_ptr = np.zeros(graph.n + 1, dtype=np.intp)
    var_ptr[1:] = np.cumsum([len(v) for v in graph.var_edge_index])
    var_edges = (np.concatenate(graph.var_edge_index) if graph.num_edges
                 else np.zeros(0, dtype=np.intp))
    m = np.zeros(graph.num_edges)
    big_m = np.zeros(graph.num_edges)
    gamma = np.zeros(graph.n)
    bvals = np.where(b.excluded, np.inf, b.values)
    done, found, trace, clamps = cyclic_sweeps(
        bvals, spec.src, spec.dst, spec.bit.astype(np.float64), spec.num_states,
        graph.padded_checks, graph.edge_check, graph.edge_var, var_ptr,
        var_edges.astype(np.intp), m, big_m, gamma, float(cfg.k1), float(cfg.k2),
        float(cfg.message_clamp), int(cfg.outer_limit), bool(cfg.stop_on_codeword),
        float(cfg.tol), bool(block_trace))
    status = "codeword_found" if found or syndrome_ok(graph, hard_decision(gamma)) \
        else "iteration_limit"
    clamp_steps = [int(k) + 1 for k in np.flatnonzero(clamps)]
    return _finish(graph, trellis, b, m, big_m, gamma, list(map(float, trace)), status,
                   int(done), cfg, clamp_steps)


def decode(graph: TannerGraph, trellis: TrellisSequence, b: BranchMetrics,
           config: DecoderConfig, block_trace: bool = True) -> DecodeReport:
    """Run the schedule named in ``config``; ``block_trace`` only affects the
    cyclic schedule."""
    if config.schedule == "cyclic":
        return decode_cyclic(graph, trellis, b, config, block_trace)
    return decode_flooding(graph, trellis, b, config)


def _check_dims(graph, trellis, b):
    if graph.n != trellis.length:
        raise ValueError(f"code length {graph.n} != trellis length {trellis.length}")
    if b.values.shape != (trellis.length, trellis.num_edges):
        raise ValueError(f"branch metrics have shape {b.values.shape}, "
                         f"expected {(trellis.length, trellis.num_edges)}")
