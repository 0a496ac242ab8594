"""Batch command line: validate, run, oracle, report.

Exit codes are shared by every subcommand: 0 success, 2 validation failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import InvalidScenario
from .sim.scenario import Scenario, scenario_hash
from .sim.world import run

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3
MAX_ORACLE_VOTES = 50

REPORT_FIELDS = ("acceptance_rate", "quality_gap", "false_accept_rate", "false_reject_rate", "treasury_income")


class CliError(Exception):
    def __init__(self, status: int, lines: list[str]):
        self.status = status
        self.lines = lines
        super().__init__("\n".join(lines))


# -- acceptance-rule oracle --
# Deliberately separate from Journal.decide(); the test suite diffs the two.

def oracle_outcome(votes_for: int, votes_against: int, quorum: int) -> str:
    cast = votes_for + votes_against
    if cast == 0:
        return "EXPIRED"
    if cast < quorum:
        return "EXPIRED"
    if votes_for != 0 and not votes_for < votes_against:
        return "ACCEPTED"
    return "REJECTED"


def oracle_table(max_votes: int, quorums: range) -> list[tuple[int, int, int, str]]:
    if not 0 <= max_votes <= MAX_ORACLE_VOTES:
        raise CliError(EXIT_INVALID, [f"max-votes: must be in [0, {MAX_ORACLE_VOTES}], got {max_votes}"])
    if len(quorums) == 0 or quorums.start < 1:
        raise CliError(EXIT_INVALID, [f"quorum: expected a range of positive integers, got {quorums.start}..{quorums.stop - 1}"])
    return [(f, a, q, oracle_outcome(f, a, q))
            for q in quorums for f in range(max_votes + 1) for a in range(max_votes + 1)]


def parse_range(text: str) -> range:
    """``"3"`` or ``"1..5"`` (inclusive) as a range."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return range(int(lo), int(hi) + 1)
        return range(int(text), int(text) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or N..M, got {text!r}") from None


# -- scenario loading --

def load_scenario(path: str | Path) -> tuple[Scenario, dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, [f"{path}: cannot read ({exc.strerror or exc})"]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INVALID, [f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    try:
        return Scenario.from_dict(data), data
    except InvalidScenario as exc:
        raise CliError(EXIT_INVALID, exc.problems) from None


# -- subcommands --

def cmd_validate(args) -> int:
    load_scenario(args.scenario)
    return EXIT_OK


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists() and not out.is_dir():
        raise CliError(EXIT_IO, [f"{out}: exists and is not a directory"])
    if out.exists() and any(out.iterdir()) and not force:
        raise CliError(EXIT_IO, [f"{out}: directory is not empty (pass --force to overwrite)"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, [f"{out}: cannot create ({exc.strerror or exc})"]) from None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_one(scenario: Scenario, out: Path, manifest: dict) -> dict:
    """Run one seed, write its three files, and return its aggregate metrics row."""
    manifest = dict(manifest, seed=scenario.seed, started_at=_now())
    metrics, log = run(scenario)
    try:
        out.mkdir(parents=True, exist_ok=True)
        log.write(out / "events.jsonl")
        (out / "metrics.csv").write_text(metrics.to_csv(), encoding="utf-8")
        manifest["finished_at"] = _now()
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, [f"{out}: write failed ({exc.strerror or exc})"]) from None
    return metrics.aggregate


def _run_seed(job):
    scenario, out, manifest = job
    return run_one(scenario, out, manifest)


def cmd_run(args) -> int:
    scenario, data = load_scenario(args.scenario)
    out = Path(args.out)
    _prepare_out(out, args.force)
    manifest = {
        "scenario_path": str(args.scenario),
        "scenario_hash": scenario_hash(data),
        "engine_version": __version__,
        "rng": scenario.rng,
        "seed_override": args.seed is not None,
    }
    if args.seeds is None:
        if args.seed is not None:
            scenario = scenario.with_seed(args.seed)
        run_one(scenario, out, manifest)
        return EXIT_OK

    seeds = list(args.seeds)
    jobs = [(scenario.with_seed(s), out / f"seed-{s}", dict(manifest, seed_override=True)) for s in seeds]
    started = _now()
    with ProcessPoolExecutor() as pool:
        rows = list(pool.map(_run_seed, jobs))
    # merged only after every run has completed
    columns = ["seed"] + list(rows[0]) if rows else ["seed"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for seed, row in zip(seeds, rows):
        writer.writerow({"seed": seed, **{k: _cell(v) for k, v in row.items()}})
    try:
        (out / "metrics.csv").write_text(buf.getvalue(), encoding="utf-8")
        summary = dict(manifest, seeds=seeds, started_at=started, finished_at=_now())
        (out / "manifest.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, [f"{out}: write failed ({exc.strerror or exc})"]) from None
    return EXIT_OK


def _cell(value):
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return value


def cmd_oracle(args) -> int:
    rows = oracle_table(args.max_votes, args.quorum)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["F", "A", "quorum", "outcome"])
    writer.writerows(rows)
    return EXIT_OK


def read_aggregate(out: Path) -> dict[str, float]:
    """Mean of the aggregate rows in a run directory's metrics.csv."""
    metrics, manifest = out / "metrics.csv", out / "manifest.json"
    if not metrics.is_file() or not manifest.is_file():
        missing = [p.name for p in (metrics, manifest) if not p.is_file()]
        raise CliError(EXIT_IO, [f"{out}: incomplete run, missing {', '.join(missing)}"])
    try:
        rows = list(csv.DictReader(metrics.read_text(encoding="utf-8").splitlines()))
        finished = json.loads(manifest.read_text(encoding="utf-8")).get("finished_at")
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_IO, [f"{out}: unreadable run files ({exc})"]) from None
    if not finished:
        raise CliError(EXIT_IO, [f"{out}: incomplete run, manifest has no finished_at"])
    rows = [r for r in rows if r.get("round", "all") == "all"]
    if not rows:
        raise CliError(EXIT_IO, [f"{out}: incomplete run, metrics.csv has no aggregate row"])
    fields = [k for k in rows[0] if k in REPORT_FIELDS or k.startswith("earnings_")]
    summary = {}
    for key in fields:
        values = [float(r[key]) for r in rows if r.get(key) not in ("", None)]
        summary[key] = sum(values) / len(values) if values else float("nan")
    summary["runs"] = len(rows)
    return summary


def cmd_report(args) -> int:
    summary = read_aggregate(Path(args.out))
    if args.csv:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(list(summary))
        writer.writerow([_cell(v) for v in summary.values()])
        return EXIT_OK
    width = max(len(k) for k in summary)
    for key, value in summary.items():
        shown = f"{value:.4f}" if isinstance(value, float) and not math.isnan(value) else str(value)
        print(f"{key:<{width}}  {shown}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcr-journal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("--scenario", required=True, metavar="PATH")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a scenario and write events.jsonl, metrics.csv, manifest.json")
    p.add_argument("--scenario", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--seeds", type=parse_range, metavar="N..M",
                   help="run every seed in the inclusive range, one subdirectory each")
    p.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="print the brute-force acceptance table as CSV")
    p.add_argument("--max-votes", type=int, default=10)
    p.add_argument("--quorum", type=parse_range, default=range(1, 6), metavar="N..M")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="summarise a completed run")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--csv", action="store_true", help="emit one machine-readable row")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seeds", None) is not None and args.seed is not None:
        print("error: --seed and --seeds are mutually exclusive", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except CliError as exc:
        for line in exc.lines:
            print(line, file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
