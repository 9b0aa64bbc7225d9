import csv
import json

import numpy as np
import pytest

from jointlp import DecoderConfig, save_alist, single_parity_check
from jointlp import harness
from jointlp.harness import (CSV_COLUMNS, TrialPlan, WerStats, content_hash, flagship_plan,
                             paired_difference, resolve_plan, run_point, sweep, wilson_interval)


def _plan(**kw):
    base = dict(code={"n": 30, "dv": 3, "dc": 5, "seed": 3}, channel="pdic",
                codeword={"kind": "fixed_weight", "target": 15, "tol": 3, "seed": 3},
                snr_points_db=(4.0,), trials_per_point=12,
                decoders={"jlp": DecoderConfig(k2=10, outer_limit=30),
                          "te": DecoderConfig(k1=1, k2=1, outer_limit=30)},
                master_seed=11)
    base.update(kw)
    return TrialPlan(**base)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12) and 0.03 < hi < 0.04
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and lo == pytest.approx(1 - hi)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_high_snr_no_errors():
    plan = _plan(snr_points_db=(60.0,), trials_per_point=100,
                 decoders={"jlp": DecoderConfig(k2=10, outer_limit=30)})
    (row,) = run_point(plan, 60.0)
    assert row.trials == 100 and row.wer == 0.0 and row.word_errors == 0


def test_same_seed_identical_stats():
    a = run_point(_plan(), 4.0)
    b = run_point(_plan(), 4.0)
    assert [r.csv_row() for r in a] == [r.csv_row() for r in b]
    assert [r.error_trials for r in a] == [r.error_trials for r in b]


def test_paired_noise_realizations(monkeypatch):
    """Every decoder variant sees the same received word for a trial index."""
    plan = _plan()
    inst = resolve_plan(plan)
    seen = []
    real = harness.decode

    def spy(graph, trellis, b, cfg, block_trace=True):
        seen.append(b.values.copy())
        return real(graph, trellis, b, cfg, block_trace=block_trace)

    monkeypatch.setattr(harness, "decode", spy)
    harness._run_trial(inst, plan.decoders, plan.master_seed, 0, 5, 0.7)
    assert len(seen) == 2 and np.array_equal(seen[0], seen[1])


def test_stop_at_errors():
    plan = _plan(trials_per_point=200, max_errors=3, snr_points_db=(0.0,))
    rows = run_point(plan, 0.0)
    for r in rows:
        assert r.word_errors == 3
        assert r.trials == r.error_trials[-1] + 1


def test_stop_at_errors_independent_of_workers():
    plan = _plan(trials_per_point=60, max_errors=5, snr_points_db=(1.0,))
    one = [r.csv_row() for r in run_point(plan, 1.0, workers=1)]
    three = [r.csv_row() for r in run_point(plan, 1.0, workers=3)]
    assert one == three


def test_harness_error_isolated(monkeypatch):
    real = harness.decode

    def flaky(graph, trellis, b, cfg, block_trace=True):
        if cfg.k1 == 1:
            raise FloatingPointError("boom")
        return real(graph, trellis, b, cfg, block_trace=block_trace)

    monkeypatch.setattr(harness, "decode", flaky)
    rows = {r.decoder_id: r for r in run_point(_plan(), 4.0)}
    assert rows["te"].harness_errors == 12 and rows["te"].trials == 0
    assert rows["jlp"].harness_errors == 0 and rows["jlp"].trials == 12


def test_paired_difference():
    a = WerStats("a", 1.0, 1.0, 10, 3, 3, 0, 0, 0.3, 0, 1, 1, 0, 0, (1, 4, 7))
    b = WerStats("b", 1.0, 1.0, 10, 2, 2, 0, 0, 0.2, 0, 1, 1, 0, 0, (4, 8))
    d = paired_difference(a, b)
    assert d["mean_difference"] == pytest.approx(0.1)
    assert d["a_only"] == 2 and d["b_only"] == 1
    assert d["ci_lo"] < 0.1 < d["ci_hi"]


def test_sweep_csv_and_manifest(tmp_path):
    plan = _plan(snr_points_db=(2.0, 5.0))
    out = tmp_path / "res.csv"
    rows = sweep(plan, out, manifest_path=tmp_path / "res.csv.manifest.json")
    with out.open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = list(reader)
    assert tuple(header) == tuple(CSV_COLUMNS)
    assert len(body) == 4 == len(rows)
    # rows interleave decoder ids per SNR point
    assert [r[header.index("decoder_id")] for r in body] == ["jlp", "te", "jlp", "te"]
    man = json.loads(out.with_name("res.csv.manifest.json").read_text())
    assert man["status"] == "ok"
    assert man["plan"]["master_seed"] == 11


def test_sweep_empty_snr(tmp_path):
    out = tmp_path / "e.csv"
    assert sweep(_plan(snr_points_db=()), out) == []
    assert out.read_text().strip() == ",".join(CSV_COLUMNS)


def test_plan_json_round_trip():
    plan = _plan()
    again = TrialPlan.from_json(plan.to_json())
    assert again == plan
    assert list(again.decoders) == ["jlp", "te"]


def test_plan_from_alist_and_file_codeword(tmp_path):
    save_alist(single_parity_check(3), tmp_path / "spc.alist")
    (tmp_path / "cw.txt").write_text("110")
    plan = TrialPlan(code={"alist": str(tmp_path / "spc.alist")}, channel="dic",
                     codeword={"kind": "file", "path": str(tmp_path / "cw.txt")},
                     snr_points_db=(60.0,), trials_per_point=5,
                     decoders={"jlp": DecoderConfig()})
    inst = resolve_plan(plan)
    np.testing.assert_array_equal(inst.codeword, [1, 1, 0])
    (row,) = run_point(plan, 60.0)
    assert row.word_errors == 0


def test_plan_rejects_non_codeword(tmp_path):
    save_alist(single_parity_check(3), tmp_path / "spc.alist")
    (tmp_path / "cw.txt").write_text("100")
    plan = TrialPlan(code={"alist": str(tmp_path / "spc.alist")},
                     codeword={"kind": "file", "path": str(tmp_path / "cw.txt")})
    with pytest.raises(ValueError):
        resolve_plan(plan)


def test_flagship_plan_encodes_long_code_setup():
    plan = flagship_plan()
    assert plan.code == {"n": 4923, "dv": 3, "dc": 27, "seed": 0}
    assert plan.channel == "pr2"
    jlp, te = plan.decoders["jlp"], plan.decoders["te"]
    assert (jlp.k1, jlp.k2) == (1000, 10) and (te.k1, te.k2) == (1, 1)
    budget = jlp.outer_limit * (jlp.inner_rounds + 1)
    assert 950 <= budget <= 1050
    assert plan.codeword["target"] == 2462


def test_content_hash_is_git_blob():
    # `git hash-object` of an empty file
    assert content_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
