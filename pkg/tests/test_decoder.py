import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from jointlp import (DecoderConfig, TannerGraph, branch_metrics, build_trellis, channel_simulate,
                     decode, decode_cyclic, decode_flooding, dicode_spec, dual_objective,
                     extract_primal, fixed_weight_codeword, generate_regular_code, pr2_spec,
                     single_parity_check, small_random_code, softmin)
from jointlp.decoder import (check_term, check_update, check_update_tanh, compute_gamma_caps,
                             gamma_from_lemma2, hard_decision, inner_update, outer_update,
                             softmin_recursions, trellis_term)
from jointlp.oracles import joint_ml_bruteforce, min_path_cost


def _caps(b):
    return np.where(b.excluded, np.inf, b.values)


def _instance(seed, n=8, spec=None, sigma=0.8):
    rng = np.random.default_rng(seed)
    graph = small_random_code(n, rng)
    spec = spec or dicode_spec(precoded=True)
    cw = fixed_weight_codeword(graph, n // 2, rng, tolerance=n)
    tr = build_trellis(spec, n)
    y, _ = channel_simulate(spec, cw, sigma, rng)
    return graph, tr, branch_metrics(tr, y, sigma), cw


# ---------------------------------------------------------------- soft-min

def test_softmin_examples():
    assert softmin([3.5], 7.0) == 3.5
    assert softmin([0.0, 0.0], 1.0) == pytest.approx(-np.log(2), abs=1e-12)
    assert softmin([1.0, np.inf], 10.0) == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.floats(0.01, 1e4))
def test_softmin_sandwich(v, k):
    s = softmin(v, k)
    assert min(v) - np.log(len(v)) / k - 1e-9 <= s <= min(v) + 1e-9


def test_softmin_converges_to_min():
    v = np.array([2.0, 2.5, 7.0])
    gaps = [min(v) - softmin(v, k) for k in (1, 10, 100, 1000)]
    assert all(a >= b >= 0 for a, b in zip(gaps, gaps[1:]))
    assert gaps[0] > gaps[1] > 0 and gaps[-1] < 1e-12


# ---------------------------------------------------------------- trellis side

def test_gamma_caps():
    graph, tr, b, _ = _instance(0)
    np.testing.assert_array_equal(compute_gamma_caps(b, graph, np.zeros(graph.num_edges), tr),
                                  _caps(b))
    m = np.random.default_rng(1).normal(size=graph.num_edges)
    caps = compute_gamma_caps(b, graph, m, tr)
    sums = np.bincount(graph.edge_var, weights=m, minlength=graph.n)
    ones = tr.bit.astype(bool)
    np.testing.assert_allclose(caps[:, ones], (_caps(b) - sums[:, None])[:, ones])
    np.testing.assert_array_equal(caps[:, ~ones], _caps(b)[:, ~ones])


def test_outer_symmetric_gives_zero_gamma():
    tr = build_trellis(dicode_spec(start_state=None), 5)
    out = outer_update(tr, np.ones((5, 4)), 3.0)
    np.testing.assert_allclose(out.gamma, 0.0, atol=1e-12)


def test_outer_gamma_by_enumeration():
    """N=2 dicode: gamma_1 from explicit summation over all 16 edge pairs."""
    spec = dicode_spec(start_state=None)
    tr = build_trellis(spec, 2)
    caps = np.random.default_rng(4).normal(size=(2, 4))
    k2 = 1.7
    num = den = 0.0
    for e1, e2 in itertools.product(range(4), repeat=2):
        if spec.edges[e1][1] != spec.edges[e2][0]:
            continue
        w = np.exp(-k2 * (caps[0, e1] + caps[1, e2]))
        if spec.edges[e1][2]:
            den += w
        else:
            num += w
    assert outer_update(tr, caps, k2).gamma[0] == pytest.approx(np.log(num / den), abs=1e-12)


def test_anchored_gamma_single_section():
    spec = dicode_spec()
    tr = build_trellis(spec, 1)
    caps = np.full((1, 4), np.inf)
    caps[0, 0], caps[0, 1] = 0.4, 1.1          # state-0 edges: bit 0 then bit 1
    f, bw = softmin_recursions(tr, caps, 1, 5.0)
    assert gamma_from_lemma2(tr, caps, f, bw, 1, 5.0) == pytest.approx(5.0 * (1.1 - 0.4))


def test_anchored_gamma_balanced_is_zero():
    tr = build_trellis(dicode_spec(start_state=None), 4)
    caps = np.full((4, 4), 0.3)
    for p in range(1, 5):
        f, bw = softmin_recursions(tr, caps, p, 2.0)
        assert gamma_from_lemma2(tr, caps, f, bw, p, 2.0) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("k2", [1.0, 10.0, 100.0])
def test_anchored_gamma_agrees_with_forward_backward(k2):
    for seed in range(10):
        rng = np.random.default_rng(seed)
        spec = [dicode_spec(), dicode_spec(precoded=True), pr2_spec()][seed % 3]
        n = int(rng.integers(2, 10))
        tr = build_trellis(spec, n)
        b = branch_metrics(tr, rng.normal(0, 2, n), 0.9)
        caps = _caps(b) - rng.normal(0, 0.5, (n, 1)) * tr.bit
        gam = outer_update(tr, caps, k2).gamma
        for p in range(1, n + 1):
            f, bw = softmin_recursions(tr, caps, p, k2)
            g = gamma_from_lemma2(tr, caps, f, bw, p, k2)
            assert g == pytest.approx(gam[p - 1], rel=1e-10, abs=1e-10)


def test_constant_caps_forward_values():
    tr = build_trellis(dicode_spec(start_state=None), 4)
    f, _ = softmin_recursions(tr, np.full((4, 4), 0.5), 4, 1e6)
    # negated cost-to-reach after i steps is -i * c
    np.testing.assert_allclose(f[:, 0], -0.5 * np.arange(4), atol=1e-5)


def test_trellis_term_anchor_free():
    graph, tr, b, _ = _instance(3, n=7, spec=pr2_spec())
    caps = compute_gamma_caps(b, graph, np.random.default_rng(2).normal(size=graph.num_edges), tr)
    vals = [trellis_term(tr, caps, p, 10.0) for p in range(1, 8)]
    assert max(vals) - min(vals) <= 1e-9 * (1 + abs(vals[0]))
    assert min_path_cost(tr, caps) - vals[0] <= 7 * np.log(8) / 10.0


# ---------------------------------------------------------------- check side

def test_check_update_zero_neighbor():
    g = single_parity_check(3)
    M = check_update(g, np.array([0.0, 0.7, -0.4]), 10.0)
    assert M[1] == 0.0 and M[2] == 0.0


def test_degree_two_check_relays_negation():
    g = TannerGraph(2, ((0, 1),))
    for k1 in (1.0, 10.0, 1000.0):
        M = check_update(g, np.array([0.3, -0.8]), k1)
        np.testing.assert_allclose(M, [0.8, -0.3], atol=1e-12)


def test_check_update_matches_tanh_form():
    rng = np.random.default_rng(0)
    g = generate_regular_code(24, 3, 4, rng)
    m = rng.normal(0, 1, g.num_edges)
    for k1 in (0.5, 1.0, 4.0):
        np.testing.assert_allclose(check_update(g, m, k1), check_update_tanh(g, m, k1),
                                   atol=1e-10)


def test_check_update_no_saturation_at_large_k1():
    g = single_parity_check(4)
    M = check_update(g, np.array([0.5, 0.6, -0.7, 0.2]), 1000.0)
    # soft-min of the extrinsic magnitudes with the parity sign
    np.testing.assert_allclose(M, [0.2, 0.2, -0.2, 0.5], atol=1e-3)
    assert np.isfinite(M).all()


def test_check_term_zero_messages():
    for d in (2, 3, 6):
        g = single_parity_check(d)
        assert check_term(g, np.zeros(d), 1000.0) == pytest.approx(-np.log(2 ** (d - 1)) / 1000)


@pytest.mark.parametrize("d", [2, 3, 5, 8, 10])
def test_check_term_matches_enumeration(d):
    g = single_parity_check(d)
    m = np.random.default_rng(d).normal(0, 1, d)
    k1 = 3.0
    sums = [sum(m[list(B)]) for r in range(0, d + 1, 2) for B in itertools.combinations(range(d), r)]
    expect = -np.log(np.sum(np.exp(-k1 * np.array(sums)))) / k1
    assert check_term(g, m, k1) == pytest.approx(expect, abs=1e-10)


def test_inner_update_balances_checks():
    """One bit with two checks and its neighbours held fixed: after the update
    every check's local distribution puts the bit in the even subset with
    probability 1 / (1 + e^gamma), the trellis-side probability of a one."""
    g = TannerGraph(5, ((0, 1, 2), (0, 3, 4)))
    rng = np.random.default_rng(6)
    k1 = 4.0
    m_old = rng.normal(0, 0.5, g.num_edges)
    gamma = np.full(5, -0.8)
    m_new, _ = inner_update(g, gamma, m_old, k1, 1)
    m = m_old.copy()
    mine = g.var_edge_index[0]
    m[mine] = m_new[mine]
    for sl in g.check_slices:
        vals, hits = [], []
        local = m[sl]
        pos = list(g.edge_var[sl]).index(0)
        for r in range(0, len(local) + 1, 2):
            for B in itertools.combinations(range(len(local)), r):
                vals.append(np.exp(-k1 * local[list(B)].sum()))
                hits.append(pos in B)
        vals = np.array(vals)
        prob = vals[np.array(hits)].sum() / vals.sum()
        assert prob == pytest.approx(1 / (1 + np.exp(gamma[0])), abs=1e-12)


def test_cyclic_block_is_coordinate_maximizer():
    """After a converged cyclic run, no perturbation of one bit's messages
    improves the dual (found by numeric maximization)."""
    graph, tr, b, _ = _instance(5, n=6)
    k1, k2 = 5.0, 3.0
    rep = decode_cyclic(graph, tr, b, DecoderConfig(k1=k1, k2=k2, schedule="cyclic",
                                                    outer_limit=300, stop_on_codeword=False))
    m0 = rep.state.m.copy()

    def value(m):
        return dual_objective(graph, tr, compute_gamma_caps(b, graph, m, tr), m, k1, k2)

    base = value(m0)
    for p in range(graph.n):
        idx = graph.var_edge_index[p]

        def neg(x, idx=idx):
            m = m0.copy()
            m[idx] = x
            return -value(m)

        res = minimize(neg, m0[idx], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13})
        assert -res.fun <= base + 1e-8


# ---------------------------------------------------------------- dual

def test_dual_anchor_invariance():
    graph, tr, b, _ = _instance(8, n=9)
    m = np.random.default_rng(0).normal(0, 0.3, graph.num_edges)
    caps = compute_gamma_caps(b, graph, m, tr)
    vals = [dual_objective(graph, tr, caps, m, 100.0, 30.0, p) for p in range(1, 10)]
    assert max(vals) - min(vals) <= 1e-9


def test_hard_decision():
    np.testing.assert_array_equal(hard_decision([1.0, -1.0, 0.5]), [0, 1, 0])
    assert hard_decision([0.0])[0] == 0
    g = np.array([0.3, -0.2, 1.5, -4.0])
    for i in range(4):
        flipped = g.copy()
        flipped[i] = -flipped[i]
        diff = hard_decision(g) != hard_decision(flipped)
        assert diff.sum() == 1 and diff[i]


# ---------------------------------------------------------------- decoders

def test_flooding_recovers_noiseless_codeword():
    rng = np.random.default_rng(2)
    graph = generate_regular_code(30, 3, 5, rng)
    cw = fixed_weight_codeword(graph, 15, rng, tolerance=3)
    spec = dicode_spec(precoded=True)
    tr = build_trellis(spec, 30)
    y, _ = channel_simulate(spec, cw, 0.0, rng)
    rep = decode_flooding(graph, tr, branch_metrics(tr, y, 0.1), DecoderConfig(k2=10))
    assert rep.status == "codeword_found"
    np.testing.assert_array_equal(rep.hard_bits, cw)


def test_zero_output_decodes_to_zero():
    graph = single_parity_check(4)
    tr = build_trellis(dicode_spec(), 4)
    rep = decode(graph, tr, branch_metrics(tr, np.zeros(4), 0.05), DecoderConfig())
    assert not rep.hard_bits.any()


def test_small_instance_matches_ml():
    graph, tr, b, cw = _instance(13, n=8, sigma=0.3)
    rep = decode(graph, tr, b, DecoderConfig(k1=1000, k2=100, schedule="cyclic"))
    ml, _ = joint_ml_bruteforce(graph, tr, b)
    np.testing.assert_array_equal(rep.hard_bits, ml)


@pytest.mark.parametrize("damping", [1.0, 0.5])
def test_flooding_engines_agree(damping):
    graph, tr, b, _ = _instance(21, n=12)
    cfg = DecoderConfig(k1=50, k2=5, outer_limit=20, stop_on_codeword=False, damping=damping)
    a = decode_flooding(graph, tr, b, cfg)
    c = decode_flooding(graph, tr, b, cfg, engine="numpy")
    np.testing.assert_allclose(a.dual_trace, c.dual_trace, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.state.m, c.state.m, atol=1e-12)
    assert a.iterations_used == c.iterations_used and a.clamp_steps == c.clamp_steps


def test_te_configuration_is_k_equal_one():
    """The K1=K2=1 run is the turbo-equalization update: BCJR on the channel
    and exact BP at the checks."""
    graph, tr, b, _ = _instance(4, n=10)
    rep = decode_flooding(graph, tr, b, DecoderConfig(k1=1, k2=1, inner_rounds=1, outer_limit=1,
                                                       stop_on_codeword=False))
    out = outer_update(tr, _caps(b), 1.0)
    m, _ = inner_update(graph, out.gamma, np.zeros(graph.num_edges), 1.0, 1)
    np.testing.assert_allclose(rep.state.m, m, atol=1e-12)


def test_cyclic_single_bit_reaches_optimum():
    graph = TannerGraph(1, ())
    tr = build_trellis(dicode_spec(), 1)
    b = branch_metrics(tr, [0.7], 0.6)
    rep = decode_cyclic(graph, tr, b, DecoderConfig(k1=10, k2=10, schedule="cyclic",
                                                    outer_limit=1, stop_on_codeword=False))
    assert rep.dual_trace[-1] == pytest.approx(softmin(_caps(b)[0][np.isfinite(_caps(b)[0])], 10))


def test_cyclic_ascent_all_k():
    graph, tr, b, _ = _instance(17, n=10)
    for k1, k2 in itertools.product((1.0, 10.0, 1000.0), repeat=2):
        rep = decode_cyclic(graph, tr, b, DecoderConfig(k1=k1, k2=k2, schedule="cyclic",
                                                        outer_limit=30, stop_on_codeword=False))
        t = np.array(rep.dual_trace)
        assert (np.diff(t) >= -1e-9 * np.maximum(1, np.abs(t[:-1]))).all()


def test_extract_primal_flow_always_exact():
    graph, tr, b, _ = _instance(9, n=10)
    m = np.random.default_rng(3).normal(0, 2, graph.num_edges)
    ext = extract_primal(graph, tr, b, m, 10.0, 10.0)
    assert ext.residuals["flow"] <= 1e-10
    assert ext.residuals["g_normalization"] <= 1e-10


def test_extract_primal_uniform():
    graph = TannerGraph(3, ())
    tr = build_trellis(dicode_spec(start_state=None), 3)
    b = branch_metrics(tr, np.zeros(3), 1.0)
    b.values[:] = 0.0
    ext = extract_primal(graph, tr, b, np.zeros(0), 10.0, 10.0)
    np.testing.assert_allclose(ext.g, 0.25, atol=1e-12)


def test_spc3_converged_gap(spc3_dic):
    graph, tr, b = spc3_dic
    cfg = DecoderConfig(k1=1000, k2=1000, schedule="cyclic", outer_limit=500,
                        stop_on_codeword=False, diagnostics=True)
    rep = decode_cyclic(graph, tr, b, cfg)
    gap = rep.gap_report
    assert gap["residuals"]["coupling"] <= 1e-3
    assert (gap["primal_cost"] - gap["dual_value"]) / 3 <= 1e-3
    # all-zero path, sum(y^2) / (2 sigma^2) = 2.04 / 0.5
    assert gap["primal_cost"] == pytest.approx(4.08, abs=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        DecoderConfig(k1=0)
    with pytest.raises(ValueError):
        DecoderConfig(schedule="random")
    with pytest.raises(ValueError):
        DecoderConfig(damping=0.0)


def test_dimension_mismatch():
    tr = build_trellis(dicode_spec(), 4)
    b = branch_metrics(tr, np.zeros(4), 1.0)
    with pytest.raises(ValueError):
        decode(single_parity_check(3), tr, b, DecoderConfig())


def test_report_json_round_trip():
    import json
    graph, tr, b, _ = _instance(1, n=6)
    rep = decode(graph, tr, b, DecoderConfig(outer_limit=5))
    data = json.loads(rep.to_json())
    assert data["status"] in ("codeword_found", "iteration_limit")
    assert len(data["hard_bits"]) == 6
