"""Command-line entry point: ``homophily <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .graph import AccountRecord, entity_map, unify_accounts
from .pipeline import EXIT_CODES, STAGES, ConfigError, StageError, load_config, run_pipeline

log = logging.getLogger("homophily")


def _pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="YAML pipeline config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, help="parallel workers for SOM runs and null simulations")
    p.add_argument("--out", help="override the output directory")


def _run(args, stages) -> int:
    try:
        cfg = load_config(args.config, seed=args.seed, workers=args.workers, output=args.out)
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_CODES["config"]
    try:
        manifest = run_pipeline(cfg, stages)
    except StageError as exc:
        log.error("%s", exc)
        return exc.exit_code
    done = [s for s, v in manifest["stages"].items() if v["status"] == "ok"]
    skipped = [s for s, v in manifest["stages"].items() if v["status"] == "skipped"]
    print(f"wrote {cfg.output}: {len(manifest['artifacts'])} artifacts; ran {', '.join(done) or 'nothing'}"
          + (f"; skipped {', '.join(skipped)}" if skipped else ""))
    return 0


def _unify(args) -> int:
    with open(args.records, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    try:
        records = [AccountRecord(r["record_id"], r.get("gravatar") or None, r.get("login") or None,
                                 r.get("registered") or None) for r in rows]
    except KeyError:
        log.error("records CSV needs a record_id column")
        return EXIT_CODES["ingest"]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["record_id", "entity_id"])
        w.writerows(entity_map(unify_accounts(records)))
    finally:
        if args.out:
            out.close()
    return 0


def _demo(args) -> int:
    from .demo import make_demo

    path = make_demo(args.directory, n_users=args.users, n_comments=args.comments, seed=args.seed,
                     runs=args.runs)
    print(f"demo dataset written; run: homophily report --config {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homophily", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline, or selected stages")
    _pipeline_args(p)
    p.add_argument("--stage", action="append", choices=STAGES,
                   help="run only this stage (and its prerequisites); repeatable")
    p.set_defaults(func=lambda a: _run(a, a.stage))

    p = sub.add_parser("report", help="run every stage and write the report bundle")
    _pipeline_args(p)
    p.set_defaults(func=lambda a: _run(a, None))

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        _pipeline_args(p)
        p.set_defaults(func=lambda a, s=stage: _run(a, [s]))

    p = sub.add_parser("unify", help="merge account records into entities")
    p.add_argument("records", help="CSV with record_id, gravatar, login, registered")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_unify)

    p = sub.add_parser("demo", help="write the synthetic demo dataset and config")
    p.add_argument("directory")
    p.add_argument("--users", type=int, default=2000)
    p.add_argument("--comments", type=int, default=10000)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
