"""Command-line front end.

    minuet run smoke --out out/
    minuet run paper_hd --strategy pctt_like --seed 7 --out out/
    minuet compare paper_ld --strategies dca_like pctt_like --seeds 1 2 3 4 5 --jobs 2 --out cmp/
    minuet validate my_scenario.yaml --dump
"""

from __future__ import annotations

import argparse
import hashlib
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import __version__
from .clustering import STRATEGIES
from .metrics import (
    SERIES_NAMES,
    MetricSummary,
    active_series,
    series,
    summarize,
    summary_row,
    write_series_csv,
    write_summary_csv,
)
from .scenario import ScenarioConfig, ScenarioError, resolve

SUMMARY_COLUMNS = ["event", "strategy", "MP_g", "S", "R_percent"] + [
    c for c in MetricSummary.columns() if c not in ("event", "MP_g", "S", "R_percent")
]
NUMERIC = ["MP_g", "S", "R_percent", "S_ratio", "received", "D_avg", "C", "G", "F",
           "monitored_share", "delivery_share"]


@dataclass(frozen=True)
class RunRequest:
    scenario: str
    strategy: Optional[str]
    seed: Optional[int]
    out: str
    eq7_literal: bool = False
    per_unique_delay: bool = False


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def execute(req: RunRequest) -> dict:
    """Run one scenario and write every artifact. Returns the run manifest."""
    cfg = resolve(req.scenario).with_overrides(req.strategy, req.seed)
    return execute_config(cfg, Path(req.out), req.eq7_literal, req.per_unique_delay)


def execute_config(cfg: ScenarioConfig, out: Path, eq7_literal: bool = False, per_unique_delay: bool = False) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.name}_{cfg.strategy}"
    log = cfg.simulation().run()
    files = []

    log_path = out / f"{stem}.simlog"
    log.write(log_path)
    files.append(log_path)

    for ev, s in series(log).items():
        for metric in SERIES_NAMES:
            p = out / f"{stem}_{ev}_{metric}.csv"
            write_series_csv(p, log.tick_s, s[metric])
            files.append(p)
    p = out / f"{stem}_all_N.csv"
    write_series_csv(p, log.tick_s, active_series(log))
    files.append(p)

    summaries = summarize(log, eq7_literal=eq7_literal, per_unique_delay=per_unique_delay)
    p = out / f"{stem}_summary.csv"
    write_summary_csv(p, [summary_row(s, strategy=cfg.strategy) for s in summaries], SUMMARY_COLUMNS)
    files.append(p)
    p = out / f"{stem}_summary.txt"
    p.write_text(format_summary(cfg, summaries))
    files.append(p)

    manifest = {
        "tool": "minuet",
        "version": __version__,
        "scenario": cfg.name,
        "scenario_hash": cfg.digest(),
        "strategy": cfg.strategy,
        "seed": cfg.seed,
        "ticks": log.n_ticks,
        "eq7_literal": eq7_literal,
        "per_unique_delay": per_unique_delay,
        "files": {f.name: _sha256(f) for f in files},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"manifest": manifest, "summaries": [summary_row(s, strategy=cfg.strategy, seed=cfg.seed) for s in summaries]}


def _pct(v: Optional[float]) -> str:
    return "n/a" if v is None else f"{100 * v:.1f}%"


def format_summary(cfg: ScenarioConfig, summaries: Sequence[MetricSummary]) -> str:
    lines = [
        f"scenario {cfg.name} ({cfg.digest()})  strategy {cfg.strategy}  seed {cfg.seed}",
        "",
        f"{'event':<8}{'kind':<8}{'monitored':>10}{'delivered':>10}{'MP_g':>8}{'S':>8}{'R':>8}"
        f"{'D_avg(s)':>10}{'C':>8}{'G':>9}{'F':>6}",
    ]
    for s in summaries:
        d = "n/a" if s.D_avg is None else f"{s.D_avg:.3f}"
        r = "n/a" if s.R_percent is None else f"{s.R_percent:.1f}%"
        c = "n/a" if s.C is None else f"{s.C:.3f}"
        g = "n/a" if s.G is None else f"{s.G:.4f}"
        lines.append(
            f"{s.event:<8}{s.kind:<8}{_pct(s.monitored_share):>10}{_pct(s.delivery_share):>10}"
            f"{s.MP_g:>8}{s.S:>8}{r:>8}{d:>10}{c:>8}{g:>9}{s.F:>6}"
        )
    return "\n".join(lines) + "\n"


# -- compare ---------------------------------------------------------------------


def _mean_std(values: list) -> tuple[Optional[float], Optional[float]]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    return statistics.fmean(vals), (statistics.pstdev(vals) if len(vals) > 1 else 0.0)


def comparison_rows(rows: list[dict], strategies: Sequence[str]) -> list[dict]:
    out = []
    events = list(dict.fromkeys(r["event"] for r in rows))
    for st in strategies:
        for ev in events:
            sel = [r for r in rows if r["strategy"] == st and r["event"] == ev]
            if not sel:
                continue
            row = {"strategy": st, "event": ev, "kind": sel[0]["kind"], "seeds": len(sel)}
            for m in NUMERIC:
                row[f"{m}_mean"], row[f"{m}_std"] = _mean_std([r[m] for r in sel])
            out.append(row)
    return out


def ordering_checks(rows: list[dict], strategies: Sequence[str]) -> list[tuple[str, bool]]:
    """Per-seed orderings: proactive beats target-gated on F, G, C and R; mobile
    events are monitored and delivered for a larger share than fixed ones."""
    checks = []
    idx = {(r["strategy"], r["seed"], r["event"]): r for r in rows}
    seeds = sorted({r["seed"] for r in rows})
    events = list(dict.fromkeys(r["event"] for r in rows))
    if "dca_like" in strategies and "pctt_like" in strategies:
        for seed in seeds:
            for ev in events:
                a, b = idx.get(("dca_like", seed, ev)), idx.get(("pctt_like", seed, ev))
                if a is None or b is None:
                    continue
                for m in ("F", "G", "C", "R_percent"):
                    ok = a[m] is not None and b[m] is not None and a[m] > b[m]
                    checks.append((f"seed {seed} {ev}: {m} dca_like > pctt_like ({a[m]} vs {b[m]})", ok))
    for st in strategies:
        for seed in seeds:
            mine = [r for r in rows if r["strategy"] == st and r["seed"] == seed]
            mob = [r for r in mine if r["kind"] == "mobile"]
            fix = [r for r in mine if r["kind"] == "fixed"]
            if len(mob) == 1 and len(fix) == 1:
                for m in ("monitored_share", "delivery_share"):
                    ok = (mob[0][m] or 0) > (fix[0][m] or 0)
                    checks.append((f"{st} seed {seed}: {m} mobile > fixed ({mob[0][m]} vs {fix[0][m]})", ok))
    return checks


def compare(scenario: str, strategies: Sequence[str], seeds: Sequence[int], out: Path, jobs: int = 1,
            eq7_literal: bool = False, per_unique_delay: bool = False) -> dict:
    cfg = resolve(scenario)
    out.mkdir(parents=True, exist_ok=True)
    reqs = [
        RunRequest(scenario, st, sd, str(out / f"{st}_s{sd}"), eq7_literal, per_unique_delay)
        for st in strategies for sd in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(execute, reqs))
    else:
        results = [execute(r) for r in reqs]
    rows = [row for res in results for row in res["summaries"]]

    per_seed_cols = ["strategy", "seed"] + [c for c in SUMMARY_COLUMNS if c != "strategy"]
    write_summary_csv(out / f"{cfg.name}_per_seed.csv", rows, per_seed_cols)
    table = comparison_rows(rows, strategies)
    cols = ["strategy", "event", "kind", "seeds"] + [f"{m}_{s}" for m in NUMERIC for s in ("mean", "std")]
    write_summary_csv(out / f"{cfg.name}_comparison.csv", table, cols)
    checks = ordering_checks(rows, strategies)
    text = "".join(f"{'PASS' if ok else 'FAIL'}  {name}\n" for name, ok in checks)
    (out / f"{cfg.name}_orderings.txt").write_text(text)
    manifest = {
        "tool": "minuet",
        "version": __version__,
        "scenario": cfg.name,
        "scenario_hash": cfg.digest(),
        "strategies": list(strategies),
        "seeds": list(seeds),
        "eq7_literal": eq7_literal,
        "per_unique_delay": per_unique_delay,
        "runs": {Path(r.out).name: res["manifest"]["files"] for r, res in zip(reqs, results)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"table": table, "checks": checks, "rows": rows}


# -- argument parsing ----------------------------------------------------------------


def _scenario_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", help="built-in name or scenario file")
    p.add_argument("--scenario", dest="scenario_opt", help="same as the positional argument")


def _scenario(args, parser) -> str:
    if args.scenario_pos and args.scenario_opt and args.scenario_pos != args.scenario_opt:
        parser.error("conflicting scenarios given")
    name = args.scenario_opt or args.scenario_pos
    if not name:
        parser.error("a scenario is required")
    return name


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minuet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"minuet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def metric_flags(p):
        p.add_argument("--eq7-literal", action="store_true",
                       help="grouped-vehicle ratio with the triangular-sum denominator")
        p.add_argument("--per-unique-delay", action="store_true",
                       help="average delay over first receipts only")

    run = sub.add_parser("run", help="run one scenario")
    _scenario_arg(run)
    run.add_argument("--strategy", choices=sorted(STRATEGIES))
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="minuet-out")
    metric_flags(run)

    cmp_ = sub.add_parser("compare", help="sweep strategies and seeds")
    _scenario_arg(cmp_)
    cmp_.add_argument("--strategies", nargs="+", choices=sorted(STRATEGIES), default=["dca_like", "pctt_like"])
    cmp_.add_argument("--seeds", nargs="+", type=int, default=[1])
    cmp_.add_argument("--out", default="minuet-compare")
    cmp_.add_argument("--jobs", type=int, default=1)
    metric_flags(cmp_)

    val = sub.add_parser("validate", help="check a scenario and print it resolved")
    _scenario_arg(val)
    val.add_argument("--dump", action="store_true", help="print the resolved scenario as YAML")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    scenario = _scenario(args, parser)
    try:
        if args.command == "validate":
            cfg = resolve(scenario)
            if args.dump:
                print(yaml.safe_dump(cfg.to_dict(), sort_keys=False), end="")
            else:
                print(f"{cfg.name}: ok ({len(cfg.events)} events, {len(cfg.base_stations)} base stations)")
            return 0
        if args.command == "run":
            res = execute(RunRequest(scenario, args.strategy, args.seed, args.out,
                                     args.eq7_literal, args.per_unique_delay))
            m = res["manifest"]
            print((Path(args.out) / f"{m['scenario']}_{m['strategy']}_summary.txt").read_text(), end="")
            print(f"wrote {len(m['files']) + 1} files to {args.out}")
            return 0
        if len(set(args.strategies)) < 2:
            parser.error("compare needs at least two strategies")
        if args.jobs < 1:
            parser.error("--jobs must be at least 1")
        res = compare(scenario, args.strategies, args.seeds, Path(args.out), args.jobs,
                      args.eq7_literal, args.per_unique_delay)
        for name, ok in res["checks"]:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        print(f"{len(args.strategies) * len(args.seeds)} runs written to {args.out}")
        return 0
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
