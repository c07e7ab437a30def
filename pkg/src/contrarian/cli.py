"""Command-line front end: ``run``, ``sweep``, ``compare`` and ``synth``.

Flags may also come from a ``key=value`` file passed with ``--config``;
command-line flags win. Exit codes: 0 success, 1 usage or data error,
2 no computable cell.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from itertools import combinations
from pathlib import Path

from .panel import PanelError, PanelFilterConfig, format_month, load_panel, parse_month, slice_period, write_panel
from .returns import run_many
from .stats import LEGS, SIG_ERR, DegenerateInference, diff_test, summarize_or_flag
from .strategy import StrategySpec
from .synth import SynthConfig, generate

log = logging.getLogger("contrarian")

EXIT_OK, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2


class UsageError(Exception):
    pass


def parse_int_list(text: str) -> list[int]:
    """Parse ``"1,6,12"`` or ranges ``"3:48:3"`` (inclusive) into sorted unique ints."""
    out = set()
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if ":" in tok:
                parts = [int(p) for p in tok.split(":")]
                if len(parts) not in (2, 3):
                    raise ValueError
                lo, hi = parts[0], parts[1]
                step = parts[2] if len(parts) == 3 else 1
                if step < 1:
                    raise ValueError
                out.update(range(lo, hi + 1, step))
            else:
                out.add(int(tok))
        except ValueError:
            raise UsageError(f"bad integer list item {tok!r}") from None
    if not out:
        raise UsageError(f"empty list {text!r}")
    return sorted(out)


def parse_legs(text: str) -> list[str]:
    legs = [x.strip() for x in text.split(",") if x.strip()]
    bad = [x for x in legs if x not in LEGS]
    if bad or not legs:
        raise UsageError(f"legs must be drawn from {','.join(LEGS)}")
    return [leg for leg in LEGS if leg in legs]


def read_config_file(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` comments; keys may use ``-`` or ``_``."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"bad boolean {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--input", action="append", help="panel CSV (repeatable)")
    p.add_argument("--start", help="first month YYYY-MM")
    p.add_argument("--end", help="last month YYYY-MM")
    p.add_argument("--j", default="1,6,12,18,24,30,36,42,48", help="estimation horizons, e.g. 1,3:48:3")
    p.add_argument("--k", help="holding horizons; omitted means K = J for each J")
    p.add_argument("--skip", type=int, default=0, help="months skipped after estimation")
    p.add_argument("--groups", default="10", help="group counts, e.g. 3,5,10")
    p.add_argument("--legs", default=",".join(LEGS))
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--drop-first-month", action=argparse.BooleanOptionalAction, default=True,
                   help="mask each stock's first observed month (default on)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contrarian", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = {}

    p = parser.commands["run"] = sub.add_parser(
        "run", help="summary.csv and cohorts.csv for each (J, K, G) cell")
    _add_common(p)
    p = parser.commands["sweep"] = sub.add_parser("sweep", help="grid_<leg>.csv over the J x K product")
    _add_common(p)
    p = parser.commands["compare"] = sub.add_parser(
        "compare", help="diff.csv between groupings or between two panels")
    _add_common(p)
    p.add_argument("--mode", choices=("grouping", "panel"), default="grouping",
                   help="grouping: G pairs on one panel; panel: first input minus second")

    p = parser.commands["synth"] = sub.add_parser("synth", help="write a synthetic panel CSV")
    p.add_argument("--config")
    p.add_argument("--stocks", type=int, default=200)
    p.add_argument("--months", type=int, default=240)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--sigma-idio", type=float, default=0.08)
    p.add_argument("--sigma-mkt", type=float, default=0.05)
    p.add_argument("--mu", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    return parser


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config_file(args.config)
        sub = parser.commands[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in values.items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r}")
            action = known[key]
            if key == "input":
                defaults[key] = [v.strip() for v in value.split(";") if v.strip()]
            elif isinstance(action, argparse.BooleanOptionalAction):
                defaults[key] = _bool(value)
            elif action.type is not None:
                try:
                    defaults[key] = action.type(value)
                except ValueError:
                    raise UsageError(f"bad value for {key}: {value!r}") from None
            else:
                defaults[key] = value
        sub.set_defaults(**defaults)
        flags = args
        args = parser.parse_args(argv)
        if flags.input:
            # append actions would otherwise extend the config list
            args.input = flags.input
    return args


def _cells(args) -> list[tuple[int, int]]:
    Js = parse_int_list(args.j)
    if args.k is None:
        return [(J, J) for J in Js]
    return [(J, K) for J in Js for K in parse_int_list(args.k)]


def _groups(args) -> list[int]:
    groups = parse_int_list(args.groups)
    if groups[0] < 2:
        raise UsageError("group counts must be >= 2")
    return groups


def _load_inputs(args, expect: int | None = None):
    paths = args.input or []
    if not paths:
        raise UsageError("--input is required")
    if expect is not None and len(paths) != expect:
        raise UsageError(f"expected exactly {expect} --input paths, got {len(paths)}")
    start = parse_month(args.start) if args.start else None
    end = parse_month(args.end) if args.end else None
    if args.skip < 0:
        raise UsageError("--skip must be >= 0")
    cfg = PanelFilterConfig(drop_first_month=args.drop_first_month)
    panels = []
    for path in paths:
        try:
            panel = load_panel(path, cfg)
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from None
        if start is not None or end is not None:
            panel = slice_period(panel, panel.start if start is None else start,
                                 panel.end if end is None else end)
        panels.append(panel)
    return panels


def _fmt(x: float, digits: int) -> str:
    if x is None or not math.isfinite(x):
        return ""
    s = f"{x:.{digits}f}"
    return "0." + "0" * digits if s == "-0." + "0" * digits else s


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    (panel,) = _load_inputs(args, expect=1)
    legs = parse_legs(args.legs)
    specs = [StrategySpec(J, K, args.skip, G) for G in _groups(args) for J, K in _cells(args)]
    runs = run_many(panel, specs, args.workers)

    summary, cohorts = [], []
    computable = False
    for spec in sorted(specs, key=lambda s: (s.G, s.J, s.K)):
        run = runs[spec]
        if run is None:
            summary.extend([spec.J, spec.K, spec.G, leg, "", "", 0, ""] for leg in legs)
            continue
        for c in run.cohorts:
            cohorts.append([format_month(c.formation), spec.J, spec.K, spec.G,
                            f"{c.loser:.17g}", f"{c.winner:.17g}", f"{c.contrarian:.17g}"])
        for leg in legs:
            s = summarize_or_flag(run, leg)
            if s is None:
                summary.append([spec.J, spec.K, spec.G, leg, "", "", len(run.cohorts), ""])
                continue
            computable = True
            summary.append([spec.J, spec.K, spec.G, leg, _fmt(s.ret, 6), _fmt(s.tstat, 2), s.n, s.sig])

    out = _outdir(args)
    _write_csv(out / "summary.csv", ["J", "K", "G", "leg", "ret", "tstat", "n", "sig"], summary)
    _write_csv(out / "cohorts.csv", ["formation", "J", "K", "G", "L_ann", "W_ann", "C_ann"], cohorts)
    if not computable:
        log.error("no cell has two or more cohorts")
        return EXIT_EMPTY
    return EXIT_OK


def cmd_sweep(args) -> int:
    (panel,) = _load_inputs(args, expect=1)
    legs = parse_legs(args.legs)
    groups = _groups(args)
    if len(groups) != 1:
        raise UsageError("sweep takes exactly one --groups value")
    Js = parse_int_list(args.j)
    Ks = parse_int_list(args.k) if args.k is not None else Js
    specs = [StrategySpec(J, K, args.skip, groups[0]) for J in Js for K in Ks]
    runs = run_many(panel, specs, args.workers)

    rows = {leg: [] for leg in legs}
    computable = False
    for spec in specs:
        run = runs[spec]
        for leg in legs:
            s = None if run is None else summarize_or_flag(run, leg)
            n = 0 if run is None else len(run.cohorts)
            if s is None:
                rows[leg].append([spec.J, spec.K, "", "", n])
            else:
                computable = True
                rows[leg].append([spec.J, spec.K, _fmt(s.ret, 6), _fmt(s.tstat, 2), s.n])
    out = _outdir(args)
    for leg in legs:
        _write_csv(out / f"grid_{leg}.csv", ["J", "K", "ret", "tstat", "n"], rows[leg])
    return EXIT_OK if computable else EXIT_EMPTY


def grouping_pairs(groups: list[int]) -> list[tuple[int, int]]:
    """(larger, smaller) pairs ordered as 5-3, 10-5, 10-3 for {3, 5, 10}."""
    return sorted(((b, a) for a, b in combinations(sorted(groups), 2)), key=lambda p: (p[0], -p[1]))


def _diff_row(label, J, K, leg, run_a, run_b):
    if run_a is None or run_b is None:
        return [label, J, K, leg, "", "", 0, ""], False
    try:
        d = diff_test(run_a, run_b, leg)
    except DegenerateInference:
        a = dict(zip(run_a.formations, run_a.leg(leg)))
        b = dict(zip(run_b.formations, run_b.leg(leg)))
        common = sorted(a.keys() & b.keys())
        delta = sum(a[t] - b[t] for t in common) / len(common)
        return [label, J, K, leg, _fmt(delta, 6), "", len(common), SIG_ERR], True
    except ValueError:
        return [label, J, K, leg, "", "", 0, ""], False
    return [label, J, K, leg, _fmt(d.delta, 6), _fmt(d.tstat, 2), d.n, d.sig], True


def cmd_compare(args) -> int:
    legs = parse_legs(args.legs)
    groups = _groups(args)
    cells = _cells(args)
    rows = []
    computable = False
    if args.mode == "grouping":
        if len(groups) < 2:
            raise UsageError("grouping comparison needs at least two --groups values")
        (panel,) = _load_inputs(args, expect=1)
        specs = [StrategySpec(J, K, args.skip, G) for G in groups for J, K in cells]
        runs = run_many(panel, specs, args.workers)
        for hi, lo in grouping_pairs(groups):
            for J, K in cells:
                for leg in legs:
                    row, ok = _diff_row(f"{hi}-{lo}", J, K, leg,
                                        runs[StrategySpec(J, K, args.skip, hi)],
                                        runs[StrategySpec(J, K, args.skip, lo)])
                    rows.append(row)
                    computable |= ok
    else:
        panel_a, panel_b = _load_inputs(args, expect=2)
        specs = [StrategySpec(J, K, args.skip, G) for G in groups for J, K in cells]
        runs_a = run_many(panel_a, specs, args.workers)
        runs_b = run_many(panel_b, specs, args.workers)
        for G in groups:
            for J, K in cells:
                spec = StrategySpec(J, K, args.skip, G)
                for leg in legs:
                    row, ok = _diff_row(f"G{G}:A-B", J, K, leg, runs_a[spec], runs_b[spec])
                    rows.append(row)
                    computable |= ok
    _write_csv(_outdir(args) / "diff.csv", ["pair", "J", "K", "leg", "delta", "tstat", "n", "sig"], rows)
    return EXIT_OK if computable else EXIT_EMPTY


def cmd_synth(args) -> int:
    try:
        config = SynthConfig(args.stocks, args.months, args.phi, args.sigma_idio,
                             args.sigma_mkt, args.mu, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = write_panel(generate(config))
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare, "synth": cmd_synth}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"contrarian: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, PanelError, ValueError) as exc:
        print(f"contrarian: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
