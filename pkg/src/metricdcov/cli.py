"""Command-line front end.

Subcommands: ``compute``, ``test``, ``experiment``, ``mixing`` and
``validate-space``.  All read a YAML/JSON config (``--config``) and write
JSON (CSV for ``mixing``) to ``--out`` or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import PairedSample, dcov
from .experiments import ExperimentError, run_experiment
from .inference import run_test
from .io import ParseError, dump_json, load_config, load_sample, write_column
from .metric import validate
from .processes import markov_beta_mixing, spec_from_config
from .seeding import check_seed, seed_sequence


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON config file")
    common.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, default=None, help="output path (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for replications")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="metricdcov", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", parents=[common], help="distance covariance of a sample")
    p.add_argument("--input", type=Path, help="CSV file (overrides config 'input')")

    p = sub.add_parser("test", parents=[common], help="test of independence")
    p.add_argument("--input", type=Path)
    p.add_argument("--method", choices=["spectral", "block-bootstrap", "permutation"])
    p.add_argument("--reps", type=int)
    p.add_argument("--null-csv", type=Path, help="write the null draws as a one-column CSV")

    p = sub.add_parser("experiment", parents=[common], help="simulation experiment")
    p.add_argument("kind", nargs="?", choices=["convergence", "nulldist", "varscaling"])
    p.add_argument("--raw", action="store_true", help="include raw draws in the report")

    p = sub.add_parser("mixing", parents=[common], help="exact beta-mixing profile of a chain")
    p.add_argument("--lags", type=int, nargs="+", help="lags (default: config 'lags' or 1..10)")

    p = sub.add_parser("validate-space", parents=[common],
                       help="spot-check metric axioms on input points")
    p.add_argument("--input", type=Path)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--triples", type=int, default=1000)
    return parser


def _config(args) -> dict:
    if args.config is None:
        return {}
    cfg = load_config(args.config)
    cfg.setdefault("_base", str(args.config.resolve().parent))
    return cfg


def _seed(args, cfg) -> int:
    return check_seed(args.seed if args.seed is not None else cfg.get("seed", 0))


def _resolve(cfg, path) -> Path:
    path = Path(path)
    if not path.is_absolute() and "_base" in cfg:
        path = Path(cfg["_base"]) / path
    return path


def _sample(args, cfg, seed) -> PairedSample:
    source = getattr(args, "input", None) or cfg.get("input")
    if source is not None:
        if "spaces" not in cfg:
            raise ValueError("config needs a 'spaces' block to read CSV input")
        return load_sample(_resolve(cfg, source) if args.input is None else source, cfg["spaces"])
    if "process" in cfg:
        n = int(cfg.get("n", cfg.get("experiment", {}).get("n", 0)))
        if n < 1:
            raise ValueError("config with a process block needs n >= 1")
        return spec_from_config(cfg["process"]).simulate(n, seed_sequence(seed))
    raise ValueError("no input: pass --input or give 'input' or 'process' in the config")


def _echo(cfg) -> dict:
    return {k: v for k, v in cfg.items() if k != "_base"}


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_compute(args, cfg) -> None:
    seed = _seed(args, cfg)
    est = dcov(_sample(args, cfg, seed))
    _emit(dump_json(est.to_dict()), args.out)


def cmd_test(args, cfg) -> None:
    seed = _seed(args, cfg)
    sample = _sample(args, cfg, seed)
    block = dict(cfg.get("test", {}))
    method = args.method or block.pop("method", "spectral")
    block.pop("method", None)
    reps = args.reps if args.reps is not None else int(block.pop("reps", 999))
    block.pop("reps", None)
    method = method.replace("-", "_")
    if method != "spectral":
        block.pop("bandwidth", None)
        block.pop("truncation", None)
    if method != "block_bootstrap":
        block.pop("block_length", None)
    if method in ("block_bootstrap", "permutation"):
        block["threads"] = args.threads
    result = run_test(sample, method, reps, seed, **block)
    report = result.to_dict()
    report["version"] = __version__
    report["input_config"] = _echo(cfg)
    _emit(dump_json(report), args.out)
    if args.null_csv is not None:
        write_column(result.null_draws, "null_draw", args.null_csv)


def cmd_experiment(args, cfg) -> None:
    cfg = _echo(cfg)
    if args.kind:
        cfg.setdefault("experiment", {})
        cfg["experiment"] = {**cfg["experiment"], "kind": args.kind}
    seed = _seed(args, cfg)
    report = run_experiment(cfg, seed=seed, threads=args.threads, raw=args.raw)
    _emit(dump_json(report), args.out)


def cmd_mixing(args, cfg) -> None:
    chain = cfg.get("chain") or cfg.get("process") or {}
    if "P" not in chain:
        raise ValueError("mixing needs a 'chain' block with a transition matrix P")
    lags = args.lags or cfg.get("lags") or list(range(1, 11))
    if isinstance(lags, int):
        lags = list(range(1, lags + 1))
    profile = markov_beta_mixing(np.asarray(chain["P"], dtype=float), chain.get("pi"), lags)
    # 2 alpha <= beta holds by construction: alpha_upper is beta / 2
    assert np.all(2 * profile.alpha_upper <= profile.beta_values)
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lag", "beta", "alpha_upper"])
    for lag, beta, alpha in profile.rows():
        writer.writerow([lag, repr(beta), repr(alpha)])
    _emit(buf.getvalue(), args.out)


def cmd_validate_space(args, cfg) -> None:
    seed = _seed(args, cfg)
    sample = _sample(args, cfg, seed)
    report = {}
    for axis, space, points in (("x", sample.space_x, sample.xs), ("y", sample.space_y, sample.ys)):
        rep = validate(space, points, args.pairs, args.triples, seed_sequence(seed, ord(axis)))
        report[axis] = {**space.to_config(), **rep.__dict__, "ok": rep.ok,
                        "negative_type_known": space.negative_type}
    _emit(dump_json(report), args.out)


COMMANDS = {
    "compute": cmd_compute,
    "test": cmd_test,
    "experiment": cmd_experiment,
    "mixing": cmd_mixing,
    "validate-space": cmd_validate_space,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except (ParseError, ExperimentError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"metricdcov {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
