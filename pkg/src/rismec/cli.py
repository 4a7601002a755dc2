"""Command line entry point.

    rismec --print-defaults
    rismec run [MANIFEST] [--preset TAG] [--seed N] [--out DIR] [--jobs N]

Each (scheme, V) cell writes ``records/<scheme>_V<v>.csv`` and
``summaries/<scheme>_V<v>.txt`` under the output directory; the preset's
plot-ready table goes to ``aggregate_<preset>.csv``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from rismec.manifest import (
    PRESETS,
    ExperimentManifest,
    ManifestError,
    defaults,
    format_manifest,
    parse_manifest,
    parse_manifest_text,
)
from rismec.sim import RecordWriter, RunSummary, run_scenario, survivor_table

logger = logging.getLogger("rismec")

# CCDF levels from 1 down to 1e-3, ten per decade
SURVIVOR_PROBS = 10.0 ** np.linspace(0.0, -3.0, 31)
POWER_TRACE_POINTS = 500


def _cell_name(scheme: str, v: float) -> str:
    return f"{scheme}_V{v!r}"


def _run_cell(manifest: ExperimentManifest, scheme: str, v: float) -> RunSummary:
    spec = manifest.scenario(scheme, v)
    out = manifest.out
    name = _cell_name(spec.scheme.value, spec.ctrl.v)
    if manifest["experiment.record_slots"]:
        (out / "records").mkdir(parents=True, exist_ok=True)
        with open(out / "records" / f"{name}.csv", "w", newline="") as fh:
            summary = run_scenario(spec, RecordWriter(fh))
    else:
        summary = run_scenario(spec)
    (out / "summaries").mkdir(parents=True, exist_ok=True)
    (out / "summaries" / f"{name}.txt").write_text(format_summary(summary, manifest))
    return summary


def format_summary(summary: RunSummary, manifest: ExperimentManifest) -> str:
    lines = [f"summary.{k} = {v!r}" if not isinstance(v, str) else f'summary.{k} = "{v}"'
             for k, v in summary.as_dict().items()]
    return "\n".join(lines) + "\n" + format_manifest(manifest)


def read_summary(path: str | Path) -> tuple[dict, ExperimentManifest]:
    """Split a summary file into its summary fields and the echoed manifest."""
    summary, rest = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("summary."):
            key, value = (p.strip() for p in line[len("summary."):].split("=", 1))
            summary[key] = value.strip('"') if value.startswith('"') else float(value)
        else:
            rest.append(line)
    return summary, parse_manifest_text("\n".join(rest), str(path))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_aggregate(manifest: ExperimentManifest, summaries: list[RunSummary]) -> Path:
    preset = manifest.preset
    path = manifest.out / f"aggregate_{preset}.csv"
    if preset in ("survivor", "survivor-outage"):
        rows = []
        for s in summaries:
            levels = survivor_table(s.delays, SURVIVOR_PROBS)
            rows += [(s.scheme, repr(s.v), repr(float(p)), repr(float(d)))
                     for p, d in zip(SURVIVOR_PROBS, levels)]
        _write_rows(path, ("scheme", "V", "survival_prob", "delay"), rows)
    elif preset == "power-trace":
        rows = []
        for s in summaries:
            T = s.powers.size
            running = np.cumsum(s.powers) / np.arange(1, T + 1)
            ts = np.unique(np.ceil(np.linspace(1, T, min(T, POWER_TRACE_POINTS))).astype(int))
            rows += [(s.scheme, repr(s.v), int(t), repr(float(running[t - 1]))) for t in ts]
        _write_rows(path, ("scheme", "V", "t", "avg_power"), rows)
    else:
        cols = ("avg_power", "avg_delay", "outage_prob", "q99", "y_over_t", "z_over_t")
        rows = [(s.scheme, repr(s.v), *(repr(getattr(s, c)) for c in cols)) for s in summaries]
        _write_rows(path, ("scheme", "V", *cols), rows)
    return path


def run_experiment(manifest: ExperimentManifest, jobs: int = 1) -> int:
    """Run every (scheme, V) cell; returns the process exit status."""
    cells = [(s.value, v) for s in manifest.schemes for v in manifest.v_list]
    manifest.out.mkdir(parents=True, exist_ok=True)
    results: dict[tuple[str, float], RunSummary] = {}
    failures: dict[tuple[str, float], str] = {}
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {cell: pool.submit(_run_cell, manifest, *cell) for cell in cells}
            for cell, fut in futures.items():
                try:
                    results[cell] = fut.result()
                except Exception as err:  # reported below, run continues
                    failures[cell] = f"{type(err).__name__}: {err}"
    else:
        for cell in cells:
            try:
                results[cell] = _run_cell(manifest, *cell)
            except Exception as err:
                logger.debug("cell %s failed\n%s", cell, traceback.format_exc())
                failures[cell] = f"{type(err).__name__}: {err}"
    done = [results[c] for c in cells if c in results]
    if done:
        path = write_aggregate(manifest, done)
        logger.info("wrote %s", path)
    for (scheme, v), msg in failures.items():
        logger.error("cell %s failed: %s", _cell_name(scheme, v), msg)
    if failures:
        logger.error("%d of %d cells failed", len(failures), len(cells))
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rismec", description=__doc__.splitlines()[0])
    parser.add_argument("--print-defaults", action="store_true",
                        help="print every manifest key with its default and origin")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run an experiment manifest")
    run.add_argument("manifest", nargs="?", help="manifest file (defaults if omitted)")
    run.add_argument("--preset", choices=PRESETS)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--horizon", type=int, help="override experiment.horizon")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(format_manifest(defaults(), provenance=True))
        return 0
    if args.command != "run":
        parser.print_help()
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    overrides = {}
    if args.seed is not None:
        overrides["experiment.seed"] = args.seed
    if args.out is not None:
        overrides["experiment.out"] = args.out
    if args.horizon is not None:
        overrides["experiment.horizon"] = args.horizon
    try:
        if args.manifest:
            manifest = parse_manifest(args.manifest, overrides, args.preset)
        else:
            manifest = parse_manifest_text("", "<defaults>", overrides, args.preset)
    except (ManifestError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return run_experiment(manifest, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
