"""Monte Carlo word-error-rate estimation over SNR sweeps.

Every trial draws its noise from a generator seeded by
``SeedSequence([master_seed, snr_index, trial_index])``, so results do not
depend on the number of workers or on completion order, and all decoder
variants in a plan see the same received words.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.stats import norm

from . import __version__
from .channels import build_trellis, branch_metrics, channel_by_name, channel_simulate, sigma_from_snr_db
from .codes import (TannerGraph, fixed_weight_codeword, format_alist, generate_regular_code,
                    load_alist, syndrome_ok)
from .decoder import DecoderConfig, decode

__all__ = [
    "TrialPlan",
    "WerStats",
    "CSV_COLUMNS",
    "wilson_interval",
    "paired_difference",
    "resolve_plan",
    "run_point",
    "sweep",
    "flagship_plan",
    "content_hash",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("snr_db", "sigma", "trials", "word_errors", "detected_errors",
               "undetected_errors", "wer", "ci_lo", "ci_hi", "mean_iters", "decoder_id", "seed")


@dataclass
class TrialPlan:
    """Everything needed to replay a simulation.

    ``code`` is either ``{"alist": path}`` or generator parameters
    ``{"n", "dv", "dc", "seed"}``. ``codeword`` is ``{"kind": "all_zero"}``,
    ``{"kind": "fixed_weight", "target", "tol", "seed"}`` or
    ``{"kind": "file", "path"}`` (a JSON list or 0/1 string). With
    ``max_errors`` set, each point stops once every decoder has seen that
    many word errors; ``trials_per_point`` is then a cap.
    """

    code: dict
    channel: str = "dic"
    codeword: dict = field(default_factory=lambda: {"kind": "all_zero"})
    snr_points_db: tuple = ()
    trials_per_point: int = 100
    max_errors: Optional[int] = None
    decoders: dict = field(default_factory=lambda: {"jlp": DecoderConfig()})
    master_seed: int = 0

    def __post_init__(self):
        self.snr_points_db = tuple(float(s) for s in self.snr_points_db)
        if not all(np.isfinite(self.snr_points_db)):
            raise ValueError("SNR points must be finite")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be at least 1")
        if self.max_errors is not None and self.max_errors < 1:
            raise ValueError("max_errors must be positive")
        if not self.decoders:
            raise ValueError("plan needs at least one decoder")
        self.decoders = {str(k): (v if isinstance(v, DecoderConfig) else DecoderConfig(**v))
                         for k, v in self.decoders.items()}
        if "alist" not in self.code and not {"n", "dv", "dc"} <= set(self.code):
            raise ValueError("code needs an 'alist' path or 'n', 'dv', 'dc'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_points_db"] = list(self.snr_points_db)
        d["decoders"] = {k: v.to_dict() for k, v in self.decoders.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrialPlan":
        doc = dict(doc)
        doc["snr_points_db"] = tuple(doc.get("snr_points_db", ()))
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "TrialPlan":
        return cls.from_dict(json.loads(text))


def flagship_plan(snr_points_db=(), trials_per_point: int = 100, master_seed: int = 0,
                  code_seed: int = 0) -> TrialPlan:
    """The long high-rate experiment: (3,27) code of length 4923 on PR2 with
    about 1000 total iterations, K1=1000 and K2=10, against the TE baseline."""
    budget = dict(inner_rounds=5, outer_limit=167)
    return TrialPlan(
        code={"n": 4923, "dv": 3, "dc": 27, "seed": code_seed},
        channel="pr2",
        codeword={"kind": "fixed_weight", "target": 2462, "tol": 5, "seed": code_seed},
        snr_points_db=tuple(snr_points_db),
        trials_per_point=trials_per_point,
        decoders={"jlp": DecoderConfig(k1=1000, k2=10, **budget),
                  "te": DecoderConfig(k1=1, k2=1, **budget)},
        master_seed=master_seed,
    )


@dataclass
class WerStats:
    decoder_id: str
    snr_db: float
    sigma: float
    trials: int
    word_errors: int
    detected_errors: int
    undetected_errors: int
    harness_errors: int
    wer: float
    ci_lo: float
    ci_hi: float
    mean_iters: float
    mean_runtime: float
    seed: int
    error_trials: tuple = ()

    def csv_row(self) -> list:
        vals = {
            "snr_db": self.snr_db, "sigma": self.sigma, "trials": self.trials,
            "word_errors": self.word_errors, "detected_errors": self.detected_errors,
            "undetected_errors": self.undetected_errors, "wer": self.wer,
            "ci_lo": self.ci_lo, "ci_hi": self.ci_hi, "mean_iters": self.mean_iters,
            "decoder_id": self.decoder_id, "seed": self.seed,
        }
        return [repr(v) if isinstance(v, float) else str(v) for v in (vals[c] for c in CSV_COLUMNS)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error_trials"] = list(self.error_trials)
        return d


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple:
    if n <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return float(max(0.0, center - half)), float(min(1.0, center + half))


def paired_difference(a: WerStats, b: WerStats, confidence: float = 0.95) -> dict:
    """Mean of per-trial error indicators ``a - b`` over their common trials,
    with a normal-approximation interval."""
    n = min(a.trials, b.trials)
    ea = np.zeros(n)
    eb = np.zeros(n)
    ea[[t for t in a.error_trials if t < n]] = 1
    eb[[t for t in b.error_trials if t < n]] = 1
    d = ea - eb
    mean = float(d.mean()) if n else 0.0
    sd = float(d.std(ddof=1)) if n > 1 else 0.0
    half = float(norm.ppf(0.5 + confidence / 2) * sd / np.sqrt(n)) if n else 0.0
    return {"trials": n, "mean_difference": mean, "ci_lo": mean - half, "ci_hi": mean + half,
            "a_only": int(((ea == 1) & (eb == 0)).sum()), "b_only": int(((ea == 0) & (eb == 1)).sum())}


# ---------------------------------------------------------------- instances

@dataclass
class _Instance:
    graph: TannerGraph
    spec: object
    trellis: object
    codeword: np.ndarray


def _load_bits(path) -> np.ndarray:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=np.uint8)
    return np.array([int(ch) for ch in text if ch in "01"], dtype=np.uint8)


def resolve_plan(plan: TrialPlan) -> _Instance:
    if "alist" in plan.code:
        graph = load_alist(plan.code["alist"])
    else:
        rng = np.random.default_rng(plan.code.get("seed", 0))
        graph = generate_regular_code(int(plan.code["n"]), int(plan.code["dv"]),
                                      int(plan.code["dc"]), rng)
    spec = channel_by_name(plan.channel)
    kind = plan.codeword.get("kind", "all_zero")
    if kind == "all_zero":
        cw = np.zeros(graph.n, dtype=np.uint8)
    elif kind == "fixed_weight":
        rng = np.random.default_rng(plan.codeword.get("seed", 0))
        cw = fixed_weight_codeword(graph, int(plan.codeword["target"]), rng,
                                   int(plan.codeword.get("tol", 5)))
    elif kind == "file":
        cw = _load_bits(plan.codeword["path"])
    else:
        raise ValueError(f"unknown codeword policy {kind!r}")
    cw = np.asarray(cw, dtype=np.uint8)
    if cw.shape != (graph.n,) or not syndrome_ok(graph, cw):
        raise ValueError("transmitted word is not a codeword of the plan's code")
    return _Instance(graph, spec, build_trellis(spec, graph.n), cw)


def content_hash(data: bytes) -> str:
    """Git blob hash of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _input_hash(plan: TrialPlan, inst: _Instance) -> str:
    blob = (plan.to_json() + "\n" + format_alist(inst.graph) + "\n"
            + "".join(map(str, inst.codeword.tolist()))).encode()
    return content_hash(blob)


# ---------------------------------------------------------------- trials

def _run_trial(inst: _Instance, decoders: dict, master_seed: int, snr_idx: int, trial: int,
               sigma: float) -> list:
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, snr_idx, trial]))
    y, _ = channel_simulate(inst.spec, inst.codeword, sigma, rng)
    b = branch_metrics(inst.trellis, y, sigma)
    out = []
    for did, cfg in decoders.items():
        t0 = time.perf_counter()
        try:
            rep = decode(inst.graph, inst.trellis, b, cfg, block_trace=False)
        except Exception as exc:  # isolate a failing decode, keep the run going
            log.error("trial %d decoder %s failed: %s", trial, did, exc)
            out.append((did, None, False, 0, time.perf_counter() - t0))
            continue
        err = bool(np.any(rep.hard_bits != inst.codeword))
        detected = err and not syndrome_ok(inst.graph, rep.hard_bits)
        out.append((did, err, detected, rep.iterations_used, time.perf_counter() - t0))
    return out


_WORKER: dict = {}


def _worker_init(plan_json: str):
    plan = TrialPlan.from_json(plan_json)
    _WORKER["plan"] = plan
    _WORKER["inst"] = resolve_plan(plan)


def _worker_chunk(snr_idx: int, sigma: float, trials: list) -> list:
    plan, inst = _WORKER["plan"], _WORKER["inst"]
    return [(t, _run_trial(inst, plan.decoders, plan.master_seed, snr_idx, t, sigma))
            for t in trials]


def _pool(plan: TrialPlan, workers: int):
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    return ProcessPoolExecutor(max_workers=workers, mp_context=ctx,
                               initializer=_worker_init, initargs=(plan.to_json(),))


def _aggregate(plan, did, snr_db, sigma, results) -> WerStats:
    rows = [(t, r) for t, per in results for (d, *r) in per if d == did]
    rows.sort(key=lambda x: x[0])
    if plan.max_errors is not None:
        seen = 0
        for cut, (_, (err, _, _, _)) in enumerate(rows):
            seen += bool(err)
            if seen >= plan.max_errors:
                rows = rows[: cut + 1]
                break
    ok = [(t, r) for t, r in rows if r[0] is not None]
    harness_errors = len(rows) - len(ok)
    n = len(ok)
    errs = tuple(t for t, r in ok if r[0])
    det = sum(1 for _, r in ok if r[0] and r[1])
    k = len(errs)
    lo, hi = wilson_interval(k, n)
    return WerStats(
        decoder_id=did, snr_db=float(snr_db), sigma=float(sigma), trials=n, word_errors=k,
        detected_errors=det, undetected_errors=k - det, harness_errors=harness_errors,
        wer=k / n if n else 0.0, ci_lo=lo, ci_hi=hi,
        mean_iters=float(sum(r[2] for _, r in ok) / n) if n else 0.0,
        mean_runtime=float(sum(r[3] for _, r in ok) / n) if n else 0.0,
        seed=plan.master_seed, error_trials=errs)


def _enough(plan, results) -> bool:
    if plan.max_errors is None:
        return False
    counts = {d: 0 for d in plan.decoders}
    for _, per in results:
        for d, err, *_ in per:
            counts[d] += bool(err)
    return all(c >= plan.max_errors for c in counts.values())


def run_point(plan: TrialPlan, snr_db: float, snr_idx: int = 0, workers: int = 1,
              instance: Optional[_Instance] = None, sigma: Optional[float] = None,
              executor=None) -> list:
    """Simulate one SNR point for every decoder in the plan.

    Returns one ``WerStats`` per decoder, in plan order.
    """
    inst = resolve_plan(plan) if instance is None else instance
    if sigma is None:
        sigma = sigma_from_snr_db(inst.spec, snr_db)
    total = plan.trials_per_point
    chunk = 25 if plan.max_errors is not None else max(1, -(-total // max(1, 4 * workers)))
    results = []
    start = 0
    while start < total:
        stop = min(total, start + chunk * max(1, workers))
        idx = list(range(start, stop))
        if executor is None:
            results += [(t, _run_trial(inst, plan.decoders, plan.master_seed, snr_idx, t, sigma))
                        for t in idx]
        else:
            parts = [idx[i:i + chunk] for i in range(0, len(idx), chunk)]
            for part in executor.map(_worker_chunk, [snr_idx] * len(parts),
                                     [sigma] * len(parts), parts):
                results += part
        start = stop
        if _enough(plan, results):
            break
    return [_aggregate(plan, did, snr_db, sigma, results) for did in plan.decoders]


def sweep(plan: TrialPlan, csv_path=None, manifest_path=None, workers: int = 1) -> list:
    """Run every SNR point; CSV rows are flushed as each point completes."""
    t0 = time.time()
    inst = resolve_plan(plan)
    manifest = {
        "tool": "jointlp", "version": __version__, "command": "sweep",
        "plan": plan.to_dict(), "input_hash": _input_hash(plan, inst),
        "code": {"n": inst.graph.n, "m": inst.graph.m, "rank": inst.graph.rank,
                 "rate": inst.graph.rate},
        "codeword_weight": int(inst.codeword.sum()),
        "workers": workers, "csv": str(csv_path) if csv_path else None,
        "started": t0, "status": "running",
    }
    stats = []
    fh = open(csv_path, "w", newline="") if csv_path else None
    executor = _pool(plan, workers) if workers > 1 else None
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        if writer:
            writer.writerow(CSV_COLUMNS)
            fh.flush()
        for k, snr in enumerate(plan.snr_points_db):
            rows = run_point(plan, snr, k, workers, inst, executor=executor)
            stats += rows
            if writer:
                for r in rows:
                    writer.writerow(r.csv_row())
                fh.flush()
            log.info("snr %.3f dB: %s", snr,
                     ", ".join(f"{r.decoder_id} {r.word_errors}/{r.trials}" for r in rows))
        manifest["status"] = "ok"
    except BaseException as exc:
        manifest["status"] = "interrupted" if isinstance(exc, KeyboardInterrupt) else "error"
        manifest["error"] = repr(exc)
        raise
    finally:
        if executor is not None:
            executor.shutdown()
        if fh:
            fh.close()
        manifest["wall_seconds"] = time.time() - t0
        manifest["results"] = [s.to_dict() for s in stats]
        if manifest_path:
            Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return stats
