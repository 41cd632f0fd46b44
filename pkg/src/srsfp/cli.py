"""Command-line entry point: ``srsfp {generate,prepare,train,evaluate,predict}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import SrsfpError
from .run import RunConfig, cmd_evaluate, cmd_generate, cmd_predict, cmd_prepare, cmd_train


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srsfp", description="SRS fingerprint positioning toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("generate", "simulate SRS logs and GNSS tracks for every configured session"),
        ("prepare", "build train/validation/test datasets"),
        ("train", "train the position regressor"),
        ("evaluate", "write validation and test error reports"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="run config (YAML)")
        s.add_argument("--seed", type=int, default=None, help="override the run seed")
        s.add_argument("--out", default=None, help="override the output directory")
    s = sub.add_parser("predict", help="predict positions for one SRS log")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--log", required=True, help="SRS log file")
    s.add_argument("--gnss", default=None, help="optional GNSS CSV; adds truth and error columns")
    s.add_argument("--out", default=None, help="output CSV (default stdout)")
    return p


def _run(args) -> str:
    if args.command == "predict":
        if args.out is None:
            cmd_predict(args.checkpoint, args.log, args.gnss, sys.stdout)
            return ""
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            preds = cmd_predict(args.checkpoint, args.log, args.gnss, fh)
        return f"wrote {len(preds)} predictions to {args.out}"
    cfg = RunConfig.load(args.config, seed=args.seed, out=args.out)
    if args.command == "generate":
        files = cmd_generate(cfg)
        return f"wrote {len(files)} files under {cfg.out / 'sessions'}"
    if args.command == "prepare":
        out = cmd_prepare(cfg)
        return ", ".join(f"{k}: {len(v)} rows" for k, v in out.items())
    if args.command == "train":
        _, history = cmd_train(cfg)
        best = min((h.val_medl for h in history), default=float("nan"))
        return f"trained {len(history)} epochs, best validation MEDL {best:.3f} m"
    reports = cmd_evaluate(cfg)
    return "; ".join(
        f"{k}: mean error {r.mean_euclidean_error_m:.3f} m (n={r.n_samples})" for k, r in reports.items()
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        msg = _run(args)
    except SrsfpError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    if msg:
        print(msg, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
