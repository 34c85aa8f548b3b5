"""Command line entry point: gibbsium run | validate | list-experiments."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

from .config import DESCRIPTIONS, SCHEMA, ConfigError, ExperimentConfig, load, parse
from .experiments import RUNNERS, Table

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class NumericError(ArithmeticError):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isnan(x):
            raise NumericError("NaN in result table")
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(v)


def render(cfg: ExperimentConfig, table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# experiment={cfg.name} config_sha256={cfg.digest} seed={cfg.seed}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_dir: str, jobs: int) -> list[tuple[str, str]]:
    tables = RUNNERS[cfg.name](cfg, jobs)
    written = []
    for t in tables:
        text = render(cfg, t)
        name = cfg.stem + (f"-{t.suffix}" if t.suffix else "") + ".csv"
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append((path, t.summary))
    return written


def cmd_run(args) -> int:
    cfg = load(args.config, args.seed)
    out = args.out or cfg.out
    jobs = args.jobs or cfg.jobs
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out!r} is not writable")
    for exp in cfg.experiments:
        for path, summary in run_experiment(exp, out, jobs):
            print(f"{exp.label}: wrote {path}" + (f" ({summary})" if summary else ""))
    return EXIT_OK


def cmd_validate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    cfg, errors = parse(text)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {len(cfg.experiments)} experiment(s)")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in SCHEMA:
        print(f"{name:18s} {DESCRIPTIONS[name]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gibbsium", description="Exact finite-volume Gibbs measure experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiments of a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides run.out)")
    r.add_argument("--jobs", type=int, help="max concurrent workers (overrides run.jobs)")
    r.add_argument("--seed", type=int, help="seed for every experiment (overrides the file)")
    r.set_defaults(fn=cmd_run)
    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("config")
    v.set_defaults(fn=cmd_validate)
    ls = sub.add_parser("list-experiments", help="list available experiments")
    ls.set_defaults(fn=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
