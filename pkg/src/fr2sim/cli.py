"""Command-line entry point: ``tables``, ``sim``, ``sweep`` and ``analyze``.

Exit codes: 0 success, 1 usage error, 2 input/parse/config error,
3 internal invariant violation. Every CSV starts with ``#`` header lines
carrying the version, seed and a hash of the resolved config; a wall-clock
timestamp is added only with ``--timestamp`` so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import os
import sys
from pathlib import Path

from . import __version__
from .config import PRESETS, ResolvedConfig, describe_keys, resolve
from .errors import ConfigError, DomainError, InvariantError, RecordParseError
from .fieldstats import (
    MODULATION_COLUMNS,
    binned_throughput,
    crossover_bins,
    modulation_utilization,
    parse_records,
    table_gain_summary,
    write_records,
)
from .nr_tables import MODULATION_NAMES, cqi_table, dump_csv_rows, format_rate
from .scenario import ScenarioKind, run, summarize_sweep, sweep

SWEEP_COLUMNS = ("distance_m", "table", "seed", "mac_mbps", "phy_mbps", "retx_rate",
                 "util_qpsk", "util_16qam", "util_64qam", "util_256qam", "util_1024qam",
                 "mean_rsrp_dbm")
SIM_COLUMNS = ("kind", "initial_distance_m", "table_mode", "seed", "duration_s") + SWEEP_COLUMNS[3:] + (
    "n_transmissions", "n_retransmissions", "n_dropped", "dl_symbol_fraction")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x, digits=6) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.{digits}f}"
    return str(x)


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _header(command: str, cfg: ResolvedConfig | None, args, extra=()) -> list[str]:
    lines = [f"fr2sim {__version__}", f"command: {command}"]
    if cfg is not None:
        lines.append(f"seed: {cfg.values['seed']}")
        lines.append(f"config_hash: {cfg.digest}")
    lines.extend(extra)
    if cfg is not None:
        lines.extend(f"config: {line}" for line in cfg.header_lines())
    if getattr(args, "timestamp", False):
        lines.append("timestamp: " + _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    return lines


class _Output:
    """Text sink for a path or stdout; files are written only on success."""

    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def close(self):
        text = self.buf.getvalue()
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(self.path).parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def _write_csv(path, comments, header, rows):
    out = _Output(path)
    for line in comments:
        out.buf.write(f"# {line}\n")
    w = csv.writer(out.buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    out.close()


def _check_metrics(m, where: str):
    if m.mac_throughput_bps > m.phy_throughput_bps * (1 + 1e-12):
        raise InvariantError(f"{where}: MAC throughput exceeds PHY throughput")
    if m.modulation_utilization and abs(sum(m.modulation_utilization.values()) - 1.0) > 1e-9:
        raise InvariantError(f"{where}: modulation shares do not sum to 1")
    if not 0.0 <= m.retx_rate <= 1.0:
        raise InvariantError(f"{where}: retransmission rate outside [0, 1]")


def _util_cells(m):
    return [_fmt(m.utilization_share(q)) for q in MODULATION_COLUMNS]


# --- subcommands -----------------------------------------------------------

def cmd_tables(args) -> int:
    if args.cqi_table is not None:
        rows = [["cqi", "qm", "modulation", "rate_x1024", "se"]]
        for e in cqi_table(args.cqi_table):
            if e.out_of_range:
                rows.append([e.cqi, "", "out_of_range", "", ""])
            else:
                rows.append([e.cqi, e.qm, MODULATION_NAMES[e.qm], format_rate(e.code_rate_x1024),
                             f"{e.spectral_efficiency:.4f}"])
    else:
        rows = list(dump_csv_rows(args.mcs_table))
    _write_csv(args.out, [f"fr2sim {__version__}", "command: tables dump"], rows[0], rows[1:])
    return 0


def _resolve_from(args, extra_overrides=None) -> ResolvedConfig:
    overrides = _overrides(args.set)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    overrides.update(extra_overrides or {})
    return resolve(args.config, overrides, preset=args.preset)


def cmd_sim(args) -> int:
    extra = {}
    if args.table is not None:
        extra["table.mode"] = args.table
    if args.kind is not None:
        extra["scenario.kind"] = args.kind
    if args.duration is not None:
        extra["scenario.duration_s"] = str(args.duration)
    if args.strict_paper_duration:
        extra["scenario.strict_paper_duration"] = "true"
    cfg = _resolve_from(args, extra)
    scen = cfg.scenario()
    metrics = run(scen, keep_records=args.export_slots is not None)
    _check_metrics(metrics, "sim")
    header = _header("sim", cfg, args)
    row = [scen.kind.value, _fmt(scen.initial_distance_m, 3), cfg.values["table.mode"], scen.seed,
           _fmt(metrics.duration_s), _fmt(metrics.mac_mbps), _fmt(metrics.phy_mbps),
           _fmt(metrics.retx_rate), *_util_cells(metrics), _fmt(metrics.mean_rsrp_dbm),
           metrics.n_transmissions, metrics.n_retransmissions, metrics.n_dropped,
           _fmt(metrics.dl_symbol_fraction)]
    _write_csv(args.out, header, SIM_COLUMNS, [row])
    if args.export_slots is not None:
        out = _Output(args.export_slots)
        write_records(metrics.slot_records, out.buf, comments=header)
        out.close()
    return 0


def _parse_tables(text: str) -> list[int]:
    try:
        tables = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--tables expects a comma list of 1, 2, 4; got {text!r}") from None
    if not tables or any(t not in (1, 2, 4) for t in tables):
        raise UsageError(f"--tables expects a comma list of 1, 2, 4; got {text!r}")
    return tables


def _distance_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or lo <= 0 or hi < lo:
        raise UsageError("need 0 < --min-d <= --max-d and --step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 6) for i in range(n)]


def cmd_sweep(args) -> int:
    tables = _parse_tables(args.tables)
    distances = _distance_grid(args.min_d, args.max_d, args.step)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    extra = {}
    if args.mobility is not None:
        extra["scenario.kind"] = args.mobility
    if args.duration is not None:
        extra["scenario.duration_s"] = str(args.duration)
    cfg = _resolve_from(args, extra)
    template = cfg.scenario()
    base = template.seed
    seeds = [base + i for i in range(args.seeds)]
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    rows = sweep(template, distances, seeds, tables, jobs=max(1, jobs))
    out_rows = []
    for r in rows:
        _check_metrics(r.metrics, f"sweep d={r.distance_m} table={r.table} seed={r.seed}")
        m = r.metrics
        out_rows.append([_fmt(r.distance_m, 3), r.table, r.seed, _fmt(m.mac_mbps), _fmt(m.phy_mbps),
                         _fmt(m.retx_rate), *_util_cells(m), _fmt(m.mean_rsrp_dbm)])
    extra_header = [
        f"sweep: tables={','.join(map(str, tables))} min_d={args.min_d} max_d={args.max_d} "
        f"step={args.step} seeds={','.join(map(str, seeds))}",
        f"mobility: {template.kind.value} speed_mps={template.speed} duration_s={template.duration}",
    ]
    header = _header("sweep", cfg, args, extra_header)
    _write_csv(args.out, header, SWEEP_COLUMNS, out_rows)
    if args.svg is not None:
        _plot_sweep(summarize_sweep(rows), args.svg)
    return 0


def _plot_sweep(points, path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("--svg needs matplotlib; install the 'plot' extra") from None
    fig, ax = plt.subplots(figsize=(6, 4))
    for table in sorted({p.table for p in points}):
        pts = sorted((p for p in points if p.table == table), key=lambda p: p.distance_m)
        ax.plot([p.distance_m for p in pts], [p.mean_mac_mbps for p in pts], label=f"MCS table {table}")
    ax.set_xlabel("distance (m)")
    ax.set_ylabel("MAC throughput (Mbps)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    # fixed metadata keeps the SVG reproducible
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_analyze(args) -> int:
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            records = parse_records(fh)
    except OSError as exc:
        raise RecordParseError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    header = [f"fr2sim {__version__}", "command: analyze", f"input_rows: {len(records)}",
              f"bin_width_db: {args.bin_width}", f"min_n: {args.min_n}", f"window_s: {args.window}"]
    tables = sorted({r.table_id for r in records})

    util_rows = []
    for t in tables:
        rows = [r for r in records if r.table_id == t]
        by_prb = modulation_utilization(rows, "prb")
        by_tb = modulation_utilization(rows, "tb")
        for qm, name in MODULATION_COLUMNS.items():
            util_rows.append([t, qm, name, _fmt(by_prb.get(qm, 0.0)), _fmt(by_tb.get(qm, 0.0))])
    _write_csv(outdir / "utilization.csv", header, ("table", "qm", "modulation", "share_prb", "share_tb"),
               util_rows)

    retx_rows = []
    for t in tables:
        rows = [r for r in records if r.table_id == t]
        n_retx = sum(1 for r in rows if not r.new_tx)
        retx_rows.append([t, len(rows), n_retx, _fmt(n_retx / len(rows))])
    _write_csv(outdir / "retx.csv", header, ("table", "transmissions", "retransmissions", "retx_rate"),
               retx_rows)

    curves = binned_throughput(records, args.bin_width, args.min_n, args.window)
    _write_csv(outdir / "binned_curves.csv", header,
               ("table", "bin_center_dbm", "mean_mbps", "ci95_halfwidth_mbps", "n"),
               [[c.table_id, _fmt(c.bin_center_dbm, 3), _fmt(c.mean_mbps), _fmt(c.ci95_halfwidth_mbps), c.n]
                for c in curves])

    gains = table_gain_summary(records, args.window)
    lines = [f"# {line}" for line in header]
    lines.append(f"records: {len(records)}")
    lines.append(f"tables: {','.join(map(str, tables)) or 'none'}")
    for row in retx_rows:
        lines.append(f"table {row[0]}: transmissions={row[1]} retransmissions={row[2]} retx_rate={row[3]}")
    g = gains.per_case.get("all")
    lines.append("table2_vs_table1_gain: " + ("n/a" if g is None else _fmt(g)))
    crossings = crossover_bins(curves, 1, 2)
    lines.append("table1_table2_crossover_bins_dbm: " + (",".join(_fmt(x, 3) for x in crossings) or "none"))
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


# --- parser ----------------------------------------------------------------

def _config_args(p):
    p.add_argument("--config", help="config file path or preset name")
    p.add_argument("--preset", choices=PRESETS, help="bundled config applied before --config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--timestamp", action="store_true", help="add a wall-clock line to the header")


def build_parser() -> argparse.ArgumentParser:
    keys = "config keys:\n" + describe_keys()
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="fr2sim", description="FR2 downlink MCS-table simulator and record analyzer.",
                     epilog=keys, formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"fr2sim {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("tables", help="dump MCS or CQI tables as CSV")
    tsub = p.add_subparsers(dest="action", parser_class=_Parser)
    d = tsub.add_parser("dump", help="print one table")
    d.add_argument("--mcs-table", type=int, choices=(1, 2, 4), default=2)
    d.add_argument("--cqi-table", type=int, choices=(2, 3, 5))
    d.add_argument("--out")
    d.set_defaults(func=cmd_tables)

    p = sub.add_parser("sim", help="run one scenario", epilog=keys, formatter_class=fmt)
    _config_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--table", choices=("1", "2", "4", "adaptive"))
    p.add_argument("--kind", choices=[k.value for k in ScenarioKind])
    p.add_argument("--duration", type=float, help="seconds")
    p.add_argument("--strict-paper-duration", action="store_true",
                   help="walking 60 s / biking 30 s regardless of route length")
    p.add_argument("--export-slots", metavar="PATH", help="write the slot-record CSV")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("sweep", help="fixed-distance runs per distance, table and seed",
                       epilog=keys, formatter_class=fmt)
    _config_args(p)
    p.add_argument("--seed", type=int, help="first seed (default: config seed)")
    p.add_argument("--tables", default="1,2,4")
    p.add_argument("--min-d", type=float, default=10.0)
    p.add_argument("--max-d", type=float, default=400.0)
    p.add_argument("--step", type=float, default=10.0)
    p.add_argument("--seeds", type=int, default=5, help="number of consecutive seeds")
    p.add_argument("--mobility", choices=("stationary", "walking", "biking"),
                   help="speed used for fading and shadowing at each pinned distance")
    p.add_argument("--duration", type=float, help="seconds per run")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--svg", metavar="PATH", help="also draw the mean curves (needs matplotlib)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="aggregate a slot-record CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--bin-width", type=float, default=2.0, help="RSRP bin width (dB)")
    p.add_argument("--min-n", type=int, default=30, help="samples needed to keep a bin")
    p.add_argument("--window", type=float, default=0.1, help="throughput window (s)")
    p.add_argument("--out", default="report", help="output directory")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("fr2sim: error: a subcommand is required")
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print("try 'fr2sim --help'", file=sys.stderr)
        return 1
    except (ConfigError, RecordParseError, DomainError, OSError) as exc:
        print(f"fr2sim: error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"fr2sim: invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
