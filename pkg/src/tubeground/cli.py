"""Command-line entry point.

Exit codes: 0 success, 2 missing input file or bad usage, 3 malformed data
(schema violations, bad values), 4 configuration errors including version
mismatches, 1 anything unexpected.  ``TUBEGROUND_LOG`` selects the log level
(debug/info/warning/error; default warning).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import io, pipeline
from .config import (
    PipelineConfig,
    default_config_toml,
    load_config,
    load_weights,
)
from .errors import ConfigError, SchemaError, TubegroundError
from .fixtures import make_fixture, spec_from_dict
from .losses import LossWeights, baseline_variant_loss

log = logging.getLogger("tubeground.cli")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_MISSING_FILE = 2
EXIT_BAD_DATA = 3
EXIT_BAD_CONFIG = 4


def _setup_logging() -> None:
    level_name = os.environ.get("TUBEGROUND_LOG", "warning").lower()
    levels = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warning": logging.WARNING,
        "error": logging.ERROR,
    }
    logging.basicConfig(
        level=levels.get(level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_pipeline_config(args) -> PipelineConfig:
    if args.config is None:
        return PipelineConfig()
    return load_config(args.config)


def _out(args, name: str, explicit: Optional[str]) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(args.out_dir) / name


def _require_files(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise FileNotFoundError(f"input file not found: {p}")


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_parse_attrs(args) -> None:
    _require_files(args.input)
    pipeline.stage_parse_attrs(Path(args.input), _out(args, "attrs.jsonl", args.output), jobs=args.jobs)


def cmd_split_scenes(args) -> None:
    _require_files(args.input)
    cfg = _load_pipeline_config(args).scene_split
    threshold = cfg.threshold if args.threshold is None else args.threshold
    min_clip_len = cfg.min_clip_len if args.min_clip_len is None else args.min_clip_len
    pipeline.stage_split_scenes(
        Path(args.input),
        _out(args, "clips.json", args.output),
        threshold=threshold,
        min_clip_len=min_clip_len,
    )


def cmd_track(args) -> None:
    _require_files(args.clips, args.dets)
    pipeline.stage_track(
        Path(args.clips),
        Path(args.dets),
        _out(args, "tubes.json", args.output),
        _load_pipeline_config(args),
        jobs=args.jobs,
    )


def cmd_postprocess(args) -> None:
    _require_files(args.tubes, args.attrs)
    pipeline.stage_postprocess(
        Path(args.tubes),
        None if args.attrs is None else Path(args.attrs),
        _out(args, "tubes_clean.json", args.output),
        _load_pipeline_config(args),
        jobs=args.jobs,
    )


def cmd_label(args) -> None:
    _require_files(args.tubes, args.gt, args.attrs)
    pipeline.stage_label(
        Path(args.tubes),
        Path(args.gt),
        _out(args, "labels.json", args.output),
        attrs_path=None if args.attrs is None else Path(args.attrs),
    )


def _parse_variant(raw: str) -> tuple[bool, bool]:
    tokens = {t.strip() for t in raw.split(",") if t.strip()} - {"none"}
    unknown = tokens - {"fo", "ge"}
    if unknown:
        raise ConfigError(
            f"--variant accepts 'fo', 'ge' (comma-separated) or 'none', "
            f"got {sorted(unknown)}"
        )
    return "fo" in tokens, "ge" in tokens


def cmd_loss(args) -> None:
    _require_files(args.scores, args.labels, args.weights)
    use_focal, use_gender = _parse_variant(args.variant)
    if args.weights is not None:
        weights = load_weights(args.weights)
    else:
        weights = _load_pipeline_config(args).loss

    score_rows = io.read_scores(args.scores)
    label_rows = io.read_labels(args.labels)
    by_key = {}
    for i, row in enumerate(score_rows):
        w = f"{args.scores} scores[{i}]"
        by_key[(row["query_id"], row["tube_id"])] = io.score_pack_from_row(row, w)

    scores, labels = [], []
    for i, row in enumerate(label_rows):
        w = f"{args.labels} labels[{i}]"
        pack = io.label_pack_from_row(row, w)
        if pack is None:
            continue  # ignored pair: not supervised
        key = (row["query_id"], row["tube_id"])
        if key not in by_key:
            raise SchemaError(f"{w}: no matching entry in {args.scores} for {key}")
        scores.append(by_key[key])
        labels.append(pack)

    breakdown = baseline_variant_loss(
        scores, labels, weights, use_focal=use_focal, use_gender=use_gender
    )
    out_path = _out(args, "breakdown.json", args.output)
    io.write_breakdown(
        out_path,
        {
            "variant": {"focal": use_focal, "gender": use_gender},
            "pairs": len(labels),
            **breakdown.as_dict(),
        },
    )
    print(f"total loss {breakdown.total:.6f} over {len(labels)} pairs -> {out_path}")


def cmd_evaluate(args) -> None:
    _require_files(args.pred, args.gt)
    report = pipeline.stage_evaluate(
        Path(args.pred), Path(args.gt), _out(args, "report.json", args.report)
    )
    print(f"mean vIoU {report.mean_viou:.4f} over {report.evaluated} queries")


def cmd_run(args) -> None:
    report = pipeline.run_pipeline(
        Path(args.sentences),
        Path(args.hists),
        Path(args.dets),
        Path(args.gt),
        out_dir=Path(args.out_dir),
        config=_load_pipeline_config(args),
        jobs=args.jobs,
    )
    print(
        f"mean vIoU {report.mean_viou:.4f} over {report.evaluated} queries "
        f"({report.missing} missing); artifacts in {args.out_dir}"
    )


def cmd_make_fixture(args) -> None:
    _require_files(args.spec)
    spec = spec_from_dict(io.load_document(args.spec))
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    fixture = make_fixture(spec)
    out = Path(args.out_dir)
    io.write_sentences(out / "sentences.jsonl", [(q.query_id, q.sentence) for q in fixture.queries])
    io.write_histograms(out / "hists.jsonl", fixture.histograms)
    io.write_detections(out / "dets.jsonl", fixture.detections)
    io.write_gt(out / "gt.json", {q.query_id: q.gt for q in fixture.queries})
    print(
        f"fixture: {len(fixture.detections)} detections, "
        f"{len(fixture.queries)} queries -> {out}"
    )


def cmd_default_config(args) -> None:
    sys.stdout.write(default_config_toml())


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS, metavar="PATH",
                   help="pipeline config TOML (defaults used when omitted)")
    g.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS,
                   metavar="PATH", help="directory for artifacts (default: out)")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="override the fixture spec seed")
    g.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                   help="worker threads for parallel stages (default: 1)")

    parser = argparse.ArgumentParser(
        prog="tubeground",
        description="Tube-proposal grounding pipeline: parse sentence attributes, "
        "split scenes, track people, clean tubes, and evaluate vIoU.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("parse-attrs", parents=[common],
                       help="extract (gender, color, clothing) triples from sentences")
    p.add_argument("--input", required=True, help="sentences.jsonl")
    p.add_argument("--output", default=None, help="attrs.jsonl")
    p.set_defaults(func=cmd_parse_attrs)

    p = sub.add_parser("split-scenes", parents=[common],
                       help="cut a histogram sequence into scene clips")
    p.add_argument("--input", required=True, help="hists.jsonl")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--min-clip-len", dest="min_clip_len", type=int, default=None)
    p.add_argument("--output", default=None, help="clips.json")
    p.set_defaults(func=cmd_split_scenes)

    p = sub.add_parser("track", parents=[common],
                       help="link detections into tube proposals per clip")
    p.add_argument("--clips", required=True, help="clips.json")
    p.add_argument("--dets", required=True, help="dets.jsonl")
    p.add_argument("--output", default=None, help="tubes.json")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("postprocess", parents=[common],
                       help="deduplicate, reconnect and smooth tubes")
    p.add_argument("--tubes", required=True, help="tubes.json")
    p.add_argument("--attrs", default=None,
                   help="attrs.jsonl; enables per-query candidate filtering")
    p.add_argument("--output", default=None, help="tubes_clean.json")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("label", parents=[common],
                       help="match tubes against ground truth and emit supervision")
    p.add_argument("--tubes", required=True, help="tubes_clean.json")
    p.add_argument("--gt", required=True, help="gt.json")
    p.add_argument("--attrs", default=None, help="attrs.jsonl (supplies gender labels)")
    p.add_argument("--output", default=None, help="labels.json")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("loss", parents=[common],
                       help="evaluate the composite loss on provided scores")
    p.add_argument("--scores", required=True, help="scores.json")
    p.add_argument("--labels", required=True, help="labels.json")
    p.add_argument("--weights", default=None, help="weights.toml")
    p.add_argument("--variant", default="fo,ge",
                   help="'fo,ge' (default), 'fo', 'ge', or 'none' for the plain baseline")
    p.add_argument("--output", default=None, help="breakdown.json")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score predictions against ground truth (vIoU)")
    p.add_argument("--pred", required=True, help="preds.json")
    p.add_argument("--gt", required=True, help="gt.json")
    p.add_argument("--report", default=None, help="report.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", parents=[common],
                       help="run every stage end to end into --out-dir")
    p.add_argument("--sentences", required=True, help="sentences.jsonl")
    p.add_argument("--hists", required=True, help="hists.jsonl")
    p.add_argument("--dets", required=True, help="dets.jsonl")
    p.add_argument("--gt", required=True, help="gt.json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("make-fixture", parents=[common],
                       help="render a synthetic scenario into input artifacts")
    p.add_argument("--spec", required=True, help="fixture spec JSON")
    p.set_defaults(func=cmd_make_fixture)

    p = sub.add_parser("default-config", parents=[common],
                       help="print the default pipeline config TOML")
    p.set_defaults(func=cmd_default_config)

    return parser


# The global flags use SUPPRESS defaults so a value given before the
# subcommand survives the subparser pass; absent attributes get these
# fallbacks after parsing.  (parser.set_defaults would overwrite the shared
# actions' defaults and clobber pre-subcommand values.)
_GLOBAL_DEFAULTS = {"config": None, "out_dir": "out", "seed": None, "jobs": 1}


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    for name, fallback in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, fallback)
    try:
        args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except TubegroundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATA
    except Exception as exc:  # noqa: BLE001 - last resort, still a clean exit
        log.exception("unexpected failure")
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
