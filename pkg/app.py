#!/usr/bin/env python
"""
Command-line entry point
  run      experiment from a config file, tables written to the output directory
  score    one detector on one dataset, scores written to a file
  project  2-component projection of a dataset for plotting
  synth    generate a synthetic dataset file
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config import Config
from reports.table_writer import emit_tables, format_text_table
from scoring.plof import PRUNE_RULES
from scoring.points import InputError
from services.dataset_loader import load_dataset
from services.experiment_config import ExperimentConfig, read_experiment_file
from services.experiment_runner import DETECTORS, DetectorParams, run_experiment, run_minpts_sweep
from services.projection import project_2pc, write_projection
from services.synthetic_data import SyntheticSpec, write_synthetic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_PARTIAL = 2


def _parse_sweep(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"MinPts sweep must be comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Prune-based LOF outlier detection benchmark")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, help="Logging level")
    verbs = parser.add_subparsers(dest="command", required=True)

    run = verbs.add_parser("run", help="Run an experiment config")
    run.add_argument("config", help="Experiment file (KEY=value)")
    run.add_argument("--output-dir", help="Directory for tables and reports")
    run.add_argument("--minpts", type=int)
    run.add_argument("--repetitions", type=int)
    run.add_argument("--backend", choices=Config.BACKENDS)
    run.add_argument("--seed", type=int)
    run.add_argument("--rule", help="threshold:T or top_n:N")
    run.add_argument("--detectors", help="Comma-separated detector names")
    run.add_argument("--formats", help="Comma-separated: text, delimited, structured, pdf")
    run.add_argument("--prune-rule", choices=PRUNE_RULES)
    run.add_argument("--fastlof-chunks", type=int)
    run.add_argument("--devtomean-clusters", type=int)
    run.add_argument("--devtomean-threshold", type=float)
    run.add_argument("--minpts-sweep", type=_parse_sweep, help="e.g. 5,10,20")

    score = verbs.add_parser("score", help="Score one dataset with one detector")
    score.add_argument("dataset", help="Dataset spec file")
    score.add_argument("--detector", choices=sorted(DETECTORS), default="plof")
    score.add_argument("--output", required=True, help="CSV of point_id, score")
    score.add_argument("--minpts", type=int, default=Config.DEFAULT_MINPTS)
    score.add_argument("--backend", choices=Config.BACKENDS, default=Config.DEFAULT_BACKEND)
    score.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
    score.add_argument("--prune-rule", choices=PRUNE_RULES, default=PRUNE_RULES[0])
    score.add_argument("--fastlof-chunks", type=int)
    score.add_argument("--devtomean-clusters", type=int)
    score.add_argument("--devtomean-threshold", type=float, default=Config.DEFAULT_DEVTOMEAN_THRESHOLD)

    project = verbs.add_parser("project", help="Write the first two principal components")
    project.add_argument("dataset", help="Dataset spec file")
    project.add_argument("--output", required=True, help="CSV of id, pc1, pc2, outlier")

    synth = verbs.add_parser("synth", help="Generate a synthetic dataset")
    synth.add_argument("--output", required=True, help="CSV of features plus label")
    defaults = SyntheticSpec()
    synth.add_argument("--n-inliers", type=int, default=defaults.n_inliers)
    synth.add_argument("--n-outliers", type=int, default=defaults.n_outliers)
    synth.add_argument("--m", type=int, default=defaults.m)
    synth.add_argument("--cluster-count", type=int, default=defaults.cluster_count)
    synth.add_argument("--cluster-spread", type=float, default=defaults.cluster_spread)
    synth.add_argument("--outlier-box-scale", type=float, default=defaults.outlier_box_scale)
    synth.add_argument("--outlier-clearance", type=float, default=defaults.outlier_clearance)
    synth.add_argument("--seed", type=int, default=defaults.seed)
    return parser


def _emit(config: ExperimentConfig, bundle, output_dir: Path) -> int:
    for fmt in config.formats:
        emit_tables(bundle, fmt, output_dir)
    print(format_text_table(bundle, "auc"))
    if bundle.partial:
        for report in bundle.failures:
            logger.error(f"Failed cell {report.dataset} / {report.detector}: {report.error}")
        return EXIT_PARTIAL
    return EXIT_OK


def command_run(args) -> int:
    config = read_experiment_file(
        args.config,
        output_dir=args.output_dir,
        minpts=args.minpts,
        repetitions=args.repetitions,
        backend=args.backend,
        seed=args.seed,
        rule=args.rule,
        detectors=args.detectors,
        formats=args.formats,
        prune_rule=args.prune_rule,
        fastlof_chunks=args.fastlof_chunks,
        devtomean_clusters=args.devtomean_clusters,
        devtomean_threshold=args.devtomean_threshold,
    )
    output_dir = Path(config.output_dir)
    sweep = args.minpts_sweep or config.minpts_sweep
    if not sweep:
        return _emit(config, run_experiment(config), output_dir)

    status = EXIT_OK
    for minpts, bundle in run_minpts_sweep(config, sweep).items():
        swept = config.model_copy(update={"minpts": minpts})
        status = max(status, _emit(swept, bundle, output_dir / f"minpts_{minpts}"))
    return status


def command_score(args) -> int:
    dataset = load_dataset(args.dataset)
    params = DetectorParams(
        minpts=args.minpts,
        backend=args.backend,
        seed=args.seed,
        prune_rule=args.prune_rule,
        fastlof_chunks=args.fastlof_chunks,
        devtomean_clusters=args.devtomean_clusters,
        devtomean_threshold=args.devtomean_threshold,
    )
    outcome = DETECTORS[args.detector](dataset.data, params)

    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({
        "point_id": np.arange(dataset.data.n),
        "score": outcome.scores.scores,
    }).to_csv(output, index=False, float_format="%.17g")
    logger.info(f"Wrote {args.detector} scores for {dataset.name} to {output}")
    return EXIT_OK


def command_project(args) -> int:
    dataset = load_dataset(args.dataset)
    write_projection(project_2pc(dataset.data), args.output, truth=dataset.truth)
    return EXIT_OK


def command_synth(args) -> int:
    spec = SyntheticSpec(
        n_inliers=args.n_inliers,
        n_outliers=args.n_outliers,
        m=args.m,
        cluster_count=args.cluster_count,
        cluster_spread=args.cluster_spread,
        outlier_box_scale=args.outlier_box_scale,
        outlier_clearance=args.outlier_clearance,
        seed=args.seed,
    )
    write_synthetic(spec, args.output)
    return EXIT_OK


COMMANDS = {
    "run": command_run,
    "score": command_score,
    "project": command_project,
    "synth": command_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    try:
        return COMMANDS[args.command](args)
    except (InputError, ValidationError, FileNotFoundError, OSError) as e:
        logger.error(str(e))
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
