"""Command line: ``sbmlab run | list | describe | plot``.

Exit codes: 0 when every verdict passes, 1 when a statistical verdict fails,
2 for usage, config or output-directory errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
import time
from pathlib import Path

from . import __version__
from .config import FAULT_KINDS, KINDS, ConfigError, apply_fault, parse_config
from .ensemble import STREAM_FAMILY
from .io import read_csv, write_csv, write_field, write_manifest
from .noise import GENERATOR_VERSION

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def list_experiments() -> str:
    return "\n".join(f"{k:18s} {v}" for k, v in KINDS.items())


def describe(kind: str) -> str:
    if kind not in KINDS:
        raise KeyError(f"unknown experiment kind {kind!r}; known: {', '.join(KINDS)}")
    from .config import _DATA

    required, optional = _DATA[kind]
    text = f"{kind}: {KINDS[kind]}\n  data keys: {', '.join(required)}"
    if optional:
        text += f" (optional: {', '.join(optional)})"
    return text


def _prepare_out(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write-probe"
    probe.write_text("")
    probe.unlink()


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(text)
        faults = {}
        for f in args.fault or []:
            faults.update(apply_fault(f))
        cfg = cfg.with_overrides(seed=args.seed, replicas=args.replicas, faults=faults)
        if cfg.replicas < 2 and cfg.kind != "heat-suite":
            raise ValueError("need at least 2 replicas")
    except (ConfigError, ValueError) as exc:
        print(f"config error in {args.config}:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    try:
        _prepare_out(out)
    except OSError as exc:
        print(f"output directory not writable: {exc}", file=sys.stderr)
        return EXIT_USAGE

    from .runner import execute

    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    try:
        result = execute(cfg, workers=args.workers)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    wall = time.perf_counter() - t0
    h = cfg.hash()
    files = []
    try:
        for stem, (cols, rows) in result.tables.items():
            files.append(write_csv(out / f"{stem}.csv", cols, rows, h).name)
        if result.fields:
            fdir = out / "fields"
            fdir.mkdir(exist_ok=True)
            for i, (name, t, values) in enumerate(result.fields):
                files.append(str(write_field(fdir / f"{name}_{i:04d}.bin", values, cfg.L, t).relative_to(out)))
        if args.plot and result.plottable:
            files.extend(p.name for p in plot_csv(out / f"{result.plottable}.csv", out))
        code = EXIT_OK if result.passed else EXIT_FAIL
        write_manifest(out / "manifest.json", {
            "config": cfg.to_dict(),
            "config_hash": h,
            "seeds": {"base_seed": cfg.seed, "stream_families": STREAM_FAMILY},
            "generator": GENERATOR_VERSION,
            "code_version": __version__,
            "workers": args.workers,
            "deterministic": True,
            "requested_deterministic": bool(args.deterministic),
            "started": started.isoformat(),
            "wall_time_s": wall,
            "verdicts": result.verdicts,
            "passed": result.passed,
            "exit_code": code,
            "files": files,
        })
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in result.summary:
        print(line)
    print(f"{cfg.kind}: {'PASS' if result.passed else 'FAIL'} (config {h}, {wall:.1f} s)")
    return code


def plot_csv(csv_path, out_dir) -> list:
    """One SVG per observable of a tidy checkpoint CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    meta, rows = read_csv(csv_path)
    series: dict = {}
    for r in rows:
        if r["observable"] == "verdict" or r["checkpoint"] == "":
            continue
        series.setdefault(r["observable"], {}).setdefault(r["statistic"], []).append(
            (float(r["time"]), float(r["value"]))
        )
    shown = ("value", "mean", "median", "q10", "q90", "frac_above_eps", "mean_z", "bracket_z",
             "m2_mean", "bracket_mean")
    out = []
    for obs, stats in series.items():
        fig, ax = plt.subplots(figsize=(6, 4))
        for stat, pts in stats.items():
            if stat not in shown and not stat.endswith("_mean"):
                continue
            t, v = zip(*sorted(pts))
            ax.plot(t, v, marker="o", ms=3, label=stat)
        ax.set_xlabel("t")
        ax.set_title(f"{obs}  [{meta.get('config_hash', '')}]")
        ax.legend(fontsize=8)
        path = Path(out_dir) / f"{Path(csv_path).stem}_{obs.replace(':', '_')}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        out.append(path)
    return out


def cmd_plot(args) -> int:
    try:
        out = Path(args.out or Path(args.csv).parent)
        _prepare_out(out)
        paths = plot_csv(args.csv, out)
    except (OSError, KeyError) as exc:
        print(f"cannot plot {args.csv}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sbmlab", description="SBM / PAM simulation laboratory")
    p.add_argument("--version", action="version", version=f"sbmlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("--config", required=True, metavar="PATH")
    r.add_argument("--out", required=True, metavar="DIR")
    r.add_argument("--seed", type=int, help="override [run] seed")
    r.add_argument("--replicas", type=int, help="override [run] replicas")
    r.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    r.add_argument("--deterministic", action="store_true",
                   help="fixed reduction order (always on; accepted for scripts that pass it)")
    r.add_argument("--fault", action="append", metavar="KIND=FACTOR",
                   help=f"fault injection, KIND one of {', '.join(FAULT_KINDS)}")
    r.add_argument("--plot", action="store_true", help="also write SVG plots of checkpoint statistics")
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="list experiment kinds")
    ls.set_defaults(func=lambda a: (print(list_experiments()), EXIT_OK)[1])

    d = sub.add_parser("describe", help="describe one experiment kind")
    d.add_argument("kind")
    d.set_defaults(func=_cmd_describe)

    pl = sub.add_parser("plot", help="SVG plots from a checkpoint CSV")
    pl.add_argument("--csv", required=True, metavar="PATH")
    pl.add_argument("--out", metavar="DIR")
    pl.set_defaults(func=cmd_plot)
    return p


def _cmd_describe(args) -> int:
    try:
        print(describe(args.kind))
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
