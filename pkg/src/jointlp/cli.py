"""Command-line entry point: ``jointlp <subcommand> ...``.

Results go to stdout (or ``--out``), logs to stderr. Every run writes a JSON
manifest, to ``--manifest`` when given and otherwise as the last line on
stderr. Exit status: 0 success, 1 usage error, 2 runtime failure (including
failed oracle checks).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (branch_metrics, build_trellis, channel_by_name, channel_simulate,
                       sigma_from_snr_db)
from .codes import generate_regular_code, load_alist, save_alist, small_random_code
from .decoder import DecoderConfig, decode

log = logging.getLogger("jointlp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_noise(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--sigma", type=float, help="noise standard deviation")
    g.add_argument("--snr-db", type=float, help="SNR = channel output power / sigma^2, in dB")


_DECODER_FLAGS = {"k1": "k1", "k2": "k2", "inner": "inner_rounds", "outer": "outer_limit",
                  "schedule": "schedule", "inner_order": "inner_order", "damping": "damping"}


def _add_decoder(p):
    """Decoder flags default to None so that a plan file's settings survive
    unless a flag is given explicitly."""
    p.add_argument("--k1", type=float, help="code soft-min constant (default 1000)")
    p.add_argument("--k2", type=float, help="trellis soft-min constant (default 100)")
    p.add_argument("--inner", type=int, help="inner rounds per outer iteration (default 5)")
    p.add_argument("--outer", type=int, help="outer iteration / sweep limit (default 200)")
    p.add_argument("--schedule", choices=("flooding", "cyclic"))
    p.add_argument("--inner-order", choices=("check_first", "bit_first"))
    p.add_argument("--damping", type=float,
                   help="weight of new messages per flooding iteration (default 1: undamped)")
    p.add_argument("--diagnostics", action="store_true", help="attach a duality-gap report")


def _decoder_overrides(args) -> dict:
    return {field: getattr(args, flag) for flag, field in _DECODER_FLAGS.items()
            if getattr(args, flag) is not None}


def _config(args) -> DecoderConfig:
    return DecoderConfig(diagnostics=args.diagnostics, **_decoder_overrides(args))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="jointlp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"jointlp {__version__}")
    ap.add_argument("--manifest", type=Path, help="write the run manifest here")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-code", help="random regular LDPC code without 4-cycles")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dv", type=int, required=True)
    p.add_argument("--dc", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("decode", help="decode one received word")
    p.add_argument("--channel", choices=("dic", "pdic", "pr2"), required=True)
    p.add_argument("--code", type=Path, required=True, help="alist file")
    p.add_argument("--y-file", type=Path, required=True,
                   help='JSON list of samples or {"y": [...]}')
    _add_noise(p)
    _add_decoder(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("oracle-check", help="cross-check the decoder against exact oracles")
    p.add_argument("--channel", choices=("dic", "pdic", "pr2"), default="dic")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--code", type=Path, help="alist file (default: random sparse code)")
    p.add_argument("--y-file", type=Path)
    _add_noise(p, required=False)
    p.add_argument("--sweeps", type=int, default=2000, help="cyclic sweeps at K1=K2=1000")

    for name, text in (("simulate", "word error rate at one SNR"),
                       ("sweep", "word error rate over an SNR sweep")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--plan", type=Path, help="JSON plan file; flags below override it")
        p.add_argument("--channel", choices=("dic", "pdic", "pr2"))
        p.add_argument("--code", type=Path, help="alist file")
        p.add_argument("--gen", type=int, nargs=4, metavar=("N", "DV", "DC", "SEED"),
                       help="generate the code instead of loading it")
        p.add_argument("--codeword", choices=("all_zero", "fixed_weight"))
        p.add_argument("--weight", type=int, help="target weight for fixed_weight")
        p.add_argument("--trials", type=int)
        p.add_argument("--max-errors", type=int)
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--te-baseline", action="store_true",
                       help="also run the K1=K2=1 configuration on the same noise")
        if name == "simulate":
            _add_noise(p, required=False)
        else:
            p.add_argument("--snr-db", type=float, nargs="*", help="SNR points in dB")
            p.add_argument("--out", type=Path, help="CSV output (default stdout)")
        _add_decoder(p)

    p = sub.add_parser("fig2-search", help="search for the SPC(3) pseudo-codeword (1, .5, 0)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=41)
    p.add_argument("--random-draws", type=int, default=200)
    return ap


# ---------------------------------------------------------------- helpers

def _sha(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_y(path: Path) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = doc["y"]
    return np.asarray(doc, dtype=float)


def _sigma(args, spec) -> tuple:
    if args.sigma is not None:
        if not args.sigma > 0:
            raise UsageError("--sigma must be positive")
        return float(args.sigma), None
    if args.snr_db is None:
        return None, None
    return sigma_from_snr_db(spec, args.snr_db), float(args.snr_db)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- commands

def cmd_gen_code(args, man):
    rng = np.random.default_rng(args.seed)
    graph = generate_regular_code(args.n, args.dv, args.dc, rng)
    save_alist(graph, args.out)
    info = {"n": graph.n, "m": graph.m, "rank": graph.rank, "rate": graph.rate,
            "out": str(args.out), "sha256": _sha(args.out)}
    man["outputs"] = info
    print(json.dumps(info))


def cmd_decode(args, man):
    spec = channel_by_name(args.channel)
    graph = load_alist(args.code)
    y = _read_y(args.y_file)
    sigma, snr = _sigma(args, spec)
    man["inputs"] = {"code": _sha(args.code), "y": _sha(args.y_file)}
    man["sigma"], man["snr_db"] = sigma, snr
    if y.shape != (graph.n,):
        raise ValueError(f"y has {y.size} samples but the code has length {graph.n}")
    trellis = build_trellis(spec, graph.n)
    rep = decode(graph, trellis, branch_metrics(trellis, y, sigma), _config(args))
    man["status_detail"] = rep.status
    _emit(rep.to_json(indent=2), args.out)


def _oracle_instance(args):
    rng = np.random.default_rng(args.seed)
    spec = channel_by_name(args.channel)
    graph = load_alist(args.code) if args.code else small_random_code(args.n, rng)
    trellis = build_trellis(spec, graph.n)
    sigma, snr = _sigma(args, spec)
    if sigma is None:
        sigma, snr = sigma_from_snr_db(spec, 3.0), 3.0
    if args.y_file:
        y = _read_y(args.y_file)
    else:
        from .codes import gf2_nullspace
        G = gf2_nullspace(graph.to_dense(), graph.n)
        info = rng.integers(0, 2, G.shape[0])
        cw = (info @ G % 2).astype(np.uint8) if G.size else np.zeros(graph.n, np.uint8)
        y, _ = channel_simulate(spec, cw, sigma, rng)
    return graph, trellis, branch_metrics(trellis, y, sigma), sigma, snr, y


def cmd_oracle_check(args, man):
    from .oracles import oracle_checks
    graph, trellis, b, sigma, snr, y = _oracle_instance(args)
    man["sigma"], man["snr_db"] = sigma, snr
    man["y"] = [float(v) for v in y]
    rows = oracle_checks(graph, trellis, b, sweeps=args.sweeps)
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        print(f"{r['check']:<{width}}  {'PASS' if r['ok'] else 'FAIL'}  {r['detail']}")
    man["checks"] = rows
    if not all(r["ok"] for r in rows):
        raise RuntimeError("oracle cross-check failed")


def _plan_from_args(args, snr_points):
    from .harness import TrialPlan
    doc = json.loads(args.plan.read_text()) if args.plan else {}
    if args.code:
        doc["code"] = {"alist": str(args.code)}
    if args.gen:
        n, dv, dc, seed = args.gen
        doc["code"] = {"n": n, "dv": dv, "dc": dc, "seed": seed}
    if "code" not in doc:
        raise UsageError("need --plan, --code or --gen")
    if args.channel:
        doc["channel"] = args.channel
    if args.codeword == "fixed_weight":
        if args.weight is None:
            raise UsageError("--codeword fixed_weight needs --weight")
        doc["codeword"] = {"kind": "fixed_weight", "target": args.weight, "tol": 5,
                           "seed": args.seed or 0}
    elif args.codeword == "all_zero":
        doc["codeword"] = {"kind": "all_zero"}
    if args.trials is not None:
        doc["trials_per_point"] = args.trials
    if args.max_errors is not None:
        doc["max_errors"] = args.max_errors
    if args.seed is not None:
        doc["master_seed"] = args.seed
    if snr_points is not None:
        doc["snr_points_db"] = snr_points
    if "decoders" not in doc:
        doc["decoders"] = {"jlp": _config(args).to_dict()}
    elif _decoder_overrides(args):
        doc["decoders"] = {k: {**v, **_decoder_overrides(args)}
                           for k, v in doc["decoders"].items()}
    if args.te_baseline:
        te = dict(next(iter(doc["decoders"].values())))
        te.update(k1=1.0, k2=1.0)
        doc["decoders"]["te"] = te
    return TrialPlan.from_dict(doc)


def cmd_simulate(args, man):
    from .harness import resolve_plan, run_point
    plan = _plan_from_args(args, None)
    inst = resolve_plan(plan)
    sigma, snr = _sigma(args, inst.spec)
    if sigma is None:
        if len(plan.snr_points_db) != 1:
            raise UsageError("simulate needs --sigma, --snr-db or a plan with one SNR point")
        snr = plan.snr_points_db[0]
        sigma = sigma_from_snr_db(inst.spec, snr)
    man["plan"] = plan.to_dict()
    man["sigma"], man["snr_db"] = sigma, snr
    executor = None
    if args.workers > 1:
        from .harness import _pool
        executor = _pool(plan, args.workers)
    try:
        rows = run_point(plan, snr if snr is not None else float("nan"), 0, args.workers, inst,
                         sigma=sigma, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    out = [r.to_dict() for r in rows]
    if len(rows) == 2:
        from .harness import paired_difference
        out.append({"paired_difference": paired_difference(rows[0], rows[1])})
    man["results"] = out
    print(json.dumps(out, indent=2))


def cmd_sweep(args, man):
    from .harness import CSV_COLUMNS, sweep
    plan = _plan_from_args(args, args.snr_db)
    man["plan"] = plan.to_dict()
    csv_path = args.out
    run_manifest = Path(str(csv_path) + ".manifest.json") if csv_path else None
    stats = sweep(plan, csv_path, run_manifest, args.workers)
    man["sweep_manifest"] = str(run_manifest) if run_manifest else None
    if csv_path is None:
        import csv
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in stats:
            w.writerow(s.csv_row())


def cmd_fig2_search(args, man):
    from .oracles import fig2_search
    res = fig2_search(seed=args.seed, steps=args.steps, random_draws=args.random_draws)
    doc = res.to_dict()
    man["result"] = doc
    print(json.dumps(doc, indent=2))
    if not res.found:
        log.warning("target projection not attained: %s", res.note)


COMMANDS = {
    "gen-code": cmd_gen_code,
    "decode": cmd_decode,
    "oracle-check": cmd_oracle_check,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "fig2-search": cmd_fig2_search,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    man = {"tool": "jointlp", "version": __version__, "argv": argv, "started": time.time()}
    parser = build_parser()
    code = 0
    args = None
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        man["command"] = args.command
        man["config"] = {k: (str(v) if isinstance(v, Path) else v)
                         for k, v in vars(args).items()}
        COMMANDS[args.command](args, man)
    except UsageError as exc:
        print(f"jointlp: error: {exc}", file=sys.stderr)
        code = 1
    except SystemExit as exc:  # --help / --version
        code = exc.code if isinstance(exc.code, int) else 0
        if code == 0:
            return 0
        code = 1
    except Exception as exc:
        print(f"jointlp: {type(exc).__name__}: {exc}", file=sys.stderr)
        man["error"] = f"{type(exc).__name__}: {exc}"
        code = 2
    man["exit_status"] = code
    man["wall_seconds"] = time.time() - man["started"]
    text = json.dumps(man, default=_json_default, sort_keys=True)
    target = getattr(args, "manifest", None) if args is not None else None
    if target:
        Path(target).write_text(text)
    else:
        print(text, file=sys.stderr)
    return code


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


if __name__ == "__main__":
    sys.exit(main())
