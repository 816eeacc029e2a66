"""Command-line entry point: generate, refine, backtest, plot, gradcheck.

Exit codes: 0 success, 2 configuration or usage error, 3 I/O error,
4 refinement failure threshold exceeded, 5 training divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from datetime import date
from pathlib import Path

from .backtest import emit_forecast_svg, emit_report, load_report, run_backtest
from .config import load_run_config
from .data import write_embeddings_jsonl, write_series_csv
from .data.embeddings import write_descriptions_jsonl
from .errors import ConfigurationError, DataError, FormatError
from .forecasters import MODEL_IDS
from .refinery import (
    HashEmbeddingBackend,
    HttpChatBackend,
    HttpEmbeddingBackend,
    MockChatBackend,
    read_jsonl,
    run_pipeline,
)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_PIPELINE, EXIT_DIVERGED = 0, 2, 3, 4, 5

log = logging.getLogger("airts")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_dir(args, cfg) -> Path:
    return Path(args.out or cfg.output)


# ----------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.synthetic is None:
        raise ConfigurationError("generate needs a dataset.synthetic section")
    from .data import synth_generate
    data = synth_generate(cfg.synthetic)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "series.csv", out / "keydriver_emb.jsonl", out / "outlook_emb.jsonl",
             out / "descriptions.jsonl"]
    write_series_csv(data.frame, files[0])
    write_embeddings_jsonl(data.key_driver, files[1])
    write_embeddings_jsonl(data.outlook, files[2])
    write_descriptions_jsonl(data.descriptions, files[3])
    for f in files:
        print(f)
    return EXIT_OK


# ------------------------------------------------------------------- refine

def cmd_refine(args) -> int:
    cfg = load_run_config(args.config)
    r = cfg.refinery
    if args.mock:
        chat, embedder = MockChatBackend(), HashEmbeddingBackend(dim=r.embedding_dim)
    else:
        chat, embedder = HttpChatBackend(r.chat), HttpEmbeddingBackend(r.embedding)
    if not Path(args.corpus).exists():
        raise OSError(f"corpus {args.corpus} does not exist")
    out = _out_dir(args, cfg)
    result = run_pipeline(args.corpus, out, r.domain, chat, embedder)
    for f in result.files:
        print(f)
    for s in result.stages:
        print(f"{s.name}: {s.items} items, {len(s.errors)} failed")
    bad = result.failed_stage
    if bad is not None:
        raise CliError(EXIT_PIPELINE, f"stage {bad.name}: {bad.failure_rate:.0%} of items failed")
    return EXIT_OK


# ----------------------------------------------------------------- backtest

def _parse_models(text: str | None) -> list[str] | None:
    if not text:
        return None
    models = [m.strip() for m in text.split(",") if m.strip()]
    unknown = [m for m in models if m not in MODEL_IDS]
    if unknown:
        raise ConfigurationError(f"unknown model ids {unknown}; valid ids: {', '.join(MODEL_IDS)}")
    return models


def cmd_backtest(args) -> int:
    cfg = load_run_config(args.config)
    models = _parse_models(args.models)
    bcfg = cfg.backtest_config(models)
    unknown = [m for m in bcfg.models if m not in MODEL_IDS]
    if unknown:
        raise ConfigurationError(f"unknown model ids {unknown}; valid ids: {', '.join(MODEL_IDS)}")
    ds = cfg.load_dataset()
    t0 = time.monotonic()
    report = run_backtest(ds, bcfg, cfg.training, data_tag=cfg.data_tag())
    files = emit_report(report, _out_dir(args, cfg))
    for f in files:
        print(f)
    for model, row in report.aggregate.items():
        rel = report.relative.get(model, {}).get("mean")
        extra = f" ({rel:+.1f}% vs {report.baseline})" if rel is not None and model != report.baseline else ""
        print(f"{model}: mean MSE {row['mean']:.5f}{extra}")
    log.info("backtest finished in %.1f s", time.monotonic() - t0)
    if report.failed:
        cells = ", ".join(f"{f['model']}@{f['point']}/seed{f['seed']}" for f in report.failed)
        raise CliError(EXIT_DIVERGED, f"training diverged: {cells}")
    return EXIT_OK


# --------------------------------------------------------------------- plot

def _insight_text(path, day: str, target: str) -> str:
    for rec in read_jsonl(path):
        if rec.get("date") == day and rec.get("target") == target:
            return rec.get("outlook", "")
    return ""


def cmd_plot(args) -> int:
    report = load_report(args.report)
    try:
        date.fromisoformat(args.origin)
    except ValueError:
        raise ConfigurationError(f"--origin {args.origin!r} is not a YYYY-MM-DD date") from None
    recs = [r for r in report.forecasts if r["origin"] == args.origin]
    if args.target:
        recs = [r for r in recs if r["target"] == args.target]
    if not recs:
        known = sorted({r["origin"] for r in report.forecasts})
        span = f"{known[0]} .. {known[-1]}" if known else "none"
        raise ConfigurationError(f"origin {args.origin} (target {args.target or 'any'}) is not in the report; "
                                 f"available origins: {span}")
    models = _parse_models(args.models)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for rec in recs:
        fc = rec["forecasts"]
        if models:
            missing = [m for m in models if m not in fc]
            if missing:
                raise ConfigurationError(f"models {missing} have no forecasts in the report")
            fc = {m: fc[m] for m in models}
        note = _insight_text(args.insights, args.origin, rec["target"]) if args.insights else ""
        path = out / f"forecast_{rec['target']}_{args.origin}.svg"
        emit_forecast_svg(path, rec["lookback"], rec["truth"], fc, origin=args.origin, annotation=note,
                          title=f"{rec['target']} from {args.origin} ({rec['point']})")
        print(path)
    return EXIT_OK


# ---------------------------------------------------------------- gradcheck

def cmd_gradcheck(args) -> int:
    from .diagnostics import TOLERANCE, run_gradcheck_suite
    results = run_gradcheck_suite(args.seed)
    for r in results:
        print(f"{r.name:<28} max_rel_err={r.error:.3e} {'ok' if r.passed else 'FAIL'}")
    worst = max(r.error for r in results)
    print(f"worst {worst:.3e} (tolerance {TOLERANCE:g})")
    return EXIT_OK if all(r.passed for r in results) else 1


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="airts", description="Text-routed multivariate forecasting workflow.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", help="write the synthetic benchmark (CSV + embedding JSONL)")
    g.add_argument("--config", help="run configuration JSON (default: built-in synthetic defaults)")
    g.add_argument("--out", help="output directory (default: the config's output)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("refine", help="run the news refinement pipeline")
    r.add_argument("--config", help="run configuration JSON (refinery section)")
    r.add_argument("--corpus", required=True, help="news JSONL file or directory of JSONL files")
    r.add_argument("--mock", action="store_true", help="use the deterministic mock chat and hash embedding backends")
    r.add_argument("--out", help="output directory (default: the config's output)")
    r.set_defaults(func=cmd_refine)

    b = sub.add_parser("backtest", help="run the biweekly rolling-retrain experiment")
    b.add_argument("--config", help="run configuration JSON")
    b.add_argument("--models", help="comma-separated model ids, e.g. vanilla-tsmixer,air-tsmixer")
    b.add_argument("--out", help="output directory (default: the config's output)")
    b.set_defaults(func=cmd_backtest)

    pl = sub.add_parser("plot", help="draw forecasts at one origin from a report as SVG")
    pl.add_argument("--report", required=True, help="report.json written by backtest")
    pl.add_argument("--origin", required=True, help="forecast origin date YYYY-MM-DD")
    pl.add_argument("--out", required=True, help="output directory for the SVG files")
    pl.add_argument("--target", help="plot only this target")
    pl.add_argument("--models", help="comma-separated subset of models to draw")
    pl.add_argument("--insights", help="insights.jsonl whose outlook text annotates the plot")
    pl.set_defaults(func=cmd_plot)

    gc = sub.add_parser("gradcheck", help="finite-difference gradient checks on layers and tiny models")
    gc.add_argument("--seed", type=int, default=0, help="seed for the random check instances")
    gc.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
