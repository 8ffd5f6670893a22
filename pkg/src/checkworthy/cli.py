"""Command-line entry point: ``checkworthy {train,evaluate,predict,report,ocr-cache}``.

Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .corpus import CorpusError

log = logging.getLogger("checkworthy")


def _config(args) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig.from_file(
        args.config, seed=args.seed, output_dir=args.output_dir, lenient=True if args.lenient else None
    )


def _models(args, cfg):
    if args.models:
        return [Path(m) for m in args.models]
    return [cfg.out / "models" / m for m in cfg.fusion.get("members", ["text", "ocr"])]


def cmd_train(args):
    cfg = _config(args)
    out_dir, model = pipeline.train(cfg, args.branch, args.out)
    meta = model.metadata
    print(f"saved {args.branch} model to {out_dir}")
    print(f"best epoch {meta['best_epoch']}: dev F1 {meta['best_dev_metric']:.4f}, dev loss {meta['dev_loss']:.4f}")


def cmd_evaluate(args):
    cfg = _config(args)
    table, out_dir = pipeline.evaluate_models(cfg, _models(args, cfg), args.split, args.out)
    print(table.render(), end="")
    print(f"report written to {out_dir}")


def cmd_predict(args):
    cfg = _config(args)
    out = pipeline.predict(cfg, _models(args, cfg), args.input, args.out, args.run_id)
    print(f"submission written to {out}")


def cmd_report(args):
    table = pipeline.merge_reports(args.reports)
    if args.out:
        table.write(args.out, stem="combined")
    print(table.render(), end="")


def cmd_ocr_cache(args):
    cfg = _config(args)
    n, path = pipeline.build_ocr_cache(cfg, args.split)
    print(f"{n} OCR result(s) cached in {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="checkworthy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="pipeline YAML file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--output-dir", help="override the configured output directory")
        p.add_argument("--lenient", action="store_true", help="skip malformed input lines instead of failing")

    p = sub.add_parser("train", help="train one branch")
    common(p)
    p.add_argument("--branch", required=True, choices=pipeline.BRANCHES)
    p.add_argument("--out", help="model directory (default <output_dir>/models/<branch>)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score models and their fusion on a labeled split")
    common(p)
    p.add_argument("--split", required=True)
    p.add_argument("--models", nargs="+", help="model directories (default: configured fusion members)")
    p.add_argument("--out", help="report directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="write a submission file for an input split")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--models", nargs="+")
    p.add_argument("--run-id")
    p.add_argument("--out", help="submission path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="merge report.json files into one table")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ocr-cache", help="run OCR over a split and cache the results")
    common(p)
    p.add_argument("--split", required=True)
    p.set_defaults(func=cmd_ocr_cache)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (pipeline.ConfigError, CorpusError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
