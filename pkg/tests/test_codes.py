import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointlp import (TannerGraph, fixed_weight_codeword, generate_regular_code, load_alist,
                     save_alist, single_parity_check, small_random_code, syndrome_ok)
from jointlp.codes import (AlistDuplicateError, AlistError, CodeConstructionError,
                           DegreeCapExceeded, even_subsets, gf2_nullspace, gf2_rank)


def _assert_regular(g, dv, dc):
    H = g.to_dense()
    assert (H.sum(axis=0) == dv).all()
    assert (H.sum(axis=1) == dc).all()
    overlap = H @ H.T
    np.fill_diagonal(overlap, 0)
    assert overlap.max() < 2
    assert not g.has_four_cycle()


def test_regular_455():
    g = generate_regular_code(455, 3, 5, np.random.default_rng(7))
    assert g.m == 273
    _assert_regular(g, 3, 5)


@pytest.mark.slow
def test_regular_4923_high_rate():
    g = generate_regular_code(4923, 3, 27, np.random.default_rng(0))
    assert g.m == 547
    _assert_regular(g, 3, 27)
    assert g.rate == pytest.approx(1 - 547 / 4923, abs=1e-3)
    assert abs(g.rate - 8 / 9) < 1e-3


@pytest.mark.parametrize("n, dv, dc", [(24, 3, 4), (48, 3, 6), (105, 3, 5)])
def test_regular_property_over_seeds(n, dv, dc):
    for seed in range(50):
        _assert_regular(generate_regular_code(n, dv, dc, np.random.default_rng(seed)), dv, dc)


def test_regular_rejects_bad_shape():
    with pytest.raises(ValueError):
        generate_regular_code(10, 3, 4, np.random.default_rng(0))


def test_impossible_girth_is_reported():
    # 72 distinct check pairs are needed but only C(12, 2) = 66 exist
    with pytest.raises(CodeConstructionError):
        generate_regular_code(24, 3, 6, np.random.default_rng(0), max_attempts=5)
    g = generate_regular_code(24, 3, 6, np.random.default_rng(0), avoid_four_cycles=False)
    H = g.to_dense()
    assert (H.sum(axis=0) == 3).all() and (H.sum(axis=1) == 6).all()


def test_small_random_code():
    g = small_random_code(9, np.random.default_rng(3))
    H = g.to_dense()
    assert H.shape == (4, 9)
    assert (H.sum(axis=0) == 2).all() and (H.sum(axis=1) >= 2).all()


def test_syndrome():
    spc = single_parity_check(3)
    assert syndrome_ok(spc, [0, 0, 0])
    assert syndrome_ok(spc, [1, 1, 0])
    assert not syndrome_ok(spc, [1, 0, 0])
    with pytest.raises(ValueError):
        syndrome_ok(spc, [1, 1])


def test_rank_and_rate():
    H = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [1, 0, 1, 0]])  # third row is dependent
    g = TannerGraph.from_dense(H)
    assert gf2_rank(H) == 2 and g.dimension == 2 and g.rate == 0.5
    basis = gf2_nullspace(H)
    assert basis.shape == (2, 4)
    assert not (H @ basis.T % 2).any()


def test_fixed_weight_spc():
    spc = single_parity_check(3)
    cw = fixed_weight_codeword(spc, 2, np.random.default_rng(0), tolerance=0)
    assert tuple(cw) in {(1, 1, 0), (1, 0, 1), (0, 1, 1)}
    assert not fixed_weight_codeword(spc, 0, np.random.default_rng(0), tolerance=0).any()


def test_fixed_weight_455():
    rng = np.random.default_rng(11)
    g = generate_regular_code(455, 3, 5, rng)
    cw = fixed_weight_codeword(g, 226, rng, tolerance=5)
    assert 221 <= cw.sum() <= 231
    assert syndrome_ok(g, cw)


@pytest.mark.parametrize("degree, size", [(1, 1), (2, 2), (3, 4), (5, 16)])
def test_even_subsets(degree, size):
    g = TannerGraph(degree, (tuple(range(degree)),))
    fam = even_subsets(g, 0)
    assert len(fam) == size
    assert all(len(s) % 2 == 0 for s in fam.subsets())
    assert len(set(fam.subsets())) == size


def test_even_subsets_degree3_exact():
    fam = even_subsets(single_parity_check(3), 0)
    assert sorted(fam.subsets()) == [(), (0, 1), (0, 2), (1, 2)]


def test_even_subsets_cap():
    with pytest.raises(DegreeCapExceeded):
        even_subsets(single_parity_check(14), 0, degree_cap=12)


def test_alist_spc(tmp_path):
    path = tmp_path / "spc3.alist"
    save_alist(single_parity_check(3), path)
    g = load_alist(path)
    assert (g.m, g.n) == (1, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 40), st.integers(0, 10_000))
def test_alist_round_trip(tmp_path_factory, n, seed):
    g = small_random_code(n, np.random.default_rng(seed), col_weight=min(2, n // 2))
    path = tmp_path_factory.mktemp("alist") / "g.alist"
    save_alist(g, path)
    h = load_alist(path)
    assert h.n == g.n and h.check_neighbors == g.check_neighbors


def test_alist_rejects_repeated_index(tmp_path):
    path = tmp_path / "dup.alist"
    path.write_text("3 1\n1 3\n1 1 1\n3\n1\n1\n1\n1 1 3\n")
    with pytest.raises(AlistDuplicateError):
        load_alist(path)


def test_alist_rejects_garbage(tmp_path):
    path = tmp_path / "bad.alist"
    path.write_text("three one\n")
    with pytest.raises(AlistError):
        load_alist(path)
