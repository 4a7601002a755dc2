"""Shared argument handling for the experiment scripts."""

import argparse
import logging

from rismec.cli import run_experiment
from rismec.manifest import parse_manifest_text


def run_preset(preset: str, description: str, default_out: str) -> int:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--horizon", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=default_out)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    manifest = parse_manifest_text(
        "",
        "<script>",
        {"experiment.horizon": args.horizon, "experiment.seed": args.seed,
         "experiment.out": args.out},
        preset,
    )
    return run_experiment(manifest, jobs=args.jobs)
