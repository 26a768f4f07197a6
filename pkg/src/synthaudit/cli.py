"""Command line entry point.

Exit codes: 0 clean, 1 completed with item errors, 2 fatal or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from . import generators as gen
from .config import load_config
from .data import SplitPurpose, SplitSpec, load_csv, load_schema, save_csv, split
from .errors import AuditError
from .report import emit, run_audit

log = logging.getLogger("synthaudit")

SECTIONS = {
    "audit": None,
    "indicators": ("indicators",),
    "attacks": ("attacks",),
    "anonymity": ("anonymity",),
}


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="synthaudit", description="Privacy audit of synthetic tabular data.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in SECTIONS:
        p = sub.add_parser(name, help="full audit" if name == "audit" else f"profiles plus the {name} section only")
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--no-figures", action="store_true")

    g = sub.add_parser("generate", help="fit a toy generator and write a synthetic CSV")
    g.add_argument("--kind", required=True, choices=sorted(gen.KIND_NAMES))
    g.add_argument("--train", required=True, type=Path)
    g.add_argument("--n", required=True, type=int)
    g.add_argument("--seed", required=True, type=int)
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--schema", type=Path)
    g.add_argument("--param", action="append", type=_param, default=[], help="generator parameter key=value, e.g. sigma=0.1")

    s = sub.add_parser("split", help="split a CSV into two parts")
    s.add_argument("--data", required=True, type=Path)
    s.add_argument("--fraction", required=True, type=float, help="share of rows in the first output")
    s.add_argument("--seed", required=True, type=int)
    s.add_argument("--purpose", choices=[p.value for p in SplitPurpose], default="holdout")
    s.add_argument("--out-first", required=True, type=Path)
    s.add_argument("--out-second", required=True, type=Path)
    s.add_argument("--schema", type=Path)
    return ap


def _audit(args) -> int:
    cfg = load_config(args.config)
    keep = SECTIONS[args.command]
    if keep is not None:
        for section in ("indicators", "anonymity", "attacks"):
            if section not in keep:
                if section == "indicators":
                    cfg.indicators = {}
                else:
                    setattr(cfg, section, None)
    result = run_audit(cfg, threads=max(1, args.threads))
    emit(result, args.out, figures=not args.no_figures)
    for err in result.report["errors"]:
        log.error("%s: %s", err["item"], err["error"])
    return result.exit_code


def _generate(args) -> int:
    schema = load_schema(args.schema) if args.schema else None
    train = load_csv(args.train, schema, "train")
    g = gen.fit(gen.kind_named(args.kind, **dict(args.param)), train, args.seed)
    if isinstance(g.kind, gen.SeedBasedNoise) and args.n == len(train):
        out = gen.seed_generate(g, train, args.seed)
    else:
        out = gen.sample(g, args.n, args.seed)
    save_csv(out, args.out)
    return 0


def _split(args) -> int:
    schema = load_schema(args.schema) if args.schema else None
    d = load_csv(args.data, schema)
    try:
        spec = SplitSpec(args.fraction, args.seed, SplitPurpose(args.purpose))
    except ValueError as exc:
        raise AuditError(str(exc)) from exc
    a, b = split(d, spec)
    save_csv(a, args.out_first)
    save_csv(b, args.out_second)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in SECTIONS:
            return _audit(args)
        if args.command == "generate":
            return _generate(args)
        return _split(args)
    except AuditError as exc:
        print(f"synthaudit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
