"""
Table writer
Renders a ReportBundle as one dataset x detector table per metric, in plain
text, delimited, structured (JSON) or PDF form
"""

import logging
import math
from pathlib import Path
from typing import Dict, List

from services.experiment_runner import METRICS, ReportBundle

logger = logging.getLogger(__name__)

TITLES: Dict[str, str] = {
    "elapsed_seconds": "The execution time",
    "accuracy": "The accuracy",
    "precision": "The precision",
    "auc": "The AUC",
    "recall": "The recall",
}

DISPLAY_NAMES: Dict[str, str] = {
    "plof": "PLOF",
    "lof": "LOF",
    "devtomean": "devToMean",
    "fastlof": "FastLOF",
}

UNAVAILABLE = "n/a"


def display_name(detector: str) -> str:
    return DISPLAY_NAMES.get(detector, detector)


def _format_value(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return UNAVAILABLE
    return f"{value:.3f}"


def format_text_table(bundle: ReportBundle, metric: str) -> str:
    frame = bundle.table(metric)
    labels = [str(label) for label in frame.index]
    first_width = max(len("Dataset"), *(len(label) for label in labels))

    headers = [display_name(d) for d in frame.columns]
    cells = [[_format_value(v) for v in frame[column]] for column in frame.columns]
    widths = [max(len(h), *(len(c) for c in column)) for h, column in zip(headers, cells)]

    def line(label: str, values: List[str]) -> str:
        return label.ljust(first_width) + "".join(f"  {v.rjust(w)}" for v, w in zip(values, widths))

    rule = "-" * (first_width + sum(w + 2 for w in widths))
    body = [line(label, [column[i] for column in cells]) for i, label in enumerate(labels)]

    out = [TITLES[metric], rule, line("Dataset", headers), rule]
    out.extend(body[:-1])
    out.extend([rule, body[-1], rule])
    return "\n".join(out) + "\n"


def format_all_tables(bundle: ReportBundle) -> str:
    return "\n".join(format_text_table(bundle, metric) for metric in METRICS)


class TableWriter:
    """Writes a bundle's tables into one output directory"""

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)

    def _prepare(self):
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write_text(self, bundle: ReportBundle) -> List[Path]:
        path = self.output_dir / f"{bundle.name}_tables.txt"
        path.write_text(format_all_tables(bundle))
        return [path]

    def write_delimited(self, bundle: ReportBundle) -> List[Path]:
        paths = []
        for metric in METRICS:
            frame = bundle.table(metric).rename(columns=display_name)
            path = self.output_dir / f"{bundle.name}_{metric}.csv"
            frame.to_csv(path, index_label="Dataset", float_format="%.17g", na_rep=UNAVAILABLE)
            paths.append(path)
        return paths

    def write_structured(self, bundle: ReportBundle) -> List[Path]:
        path = self.output_dir / f"{bundle.name}_report.json"
        path.write_text(bundle.to_json())
        return [path]

    def write_pdf(self, bundle: ReportBundle) -> List[Path]:
        from reports.pdf_generator import PDFGenerator

        return [PDFGenerator().generate_report(bundle, self.output_dir)]

    def write(self, bundle: ReportBundle, fmt: str) -> List[Path]:
        writers = {
            "text": self.write_text,
            "delimited": self.write_delimited,
            "structured": self.write_structured,
            "pdf": self.write_pdf,
        }
        if fmt not in writers:
            raise ValueError(f"Unknown table format '{fmt}' (expected one of {list(writers)})")
        if not bundle.reports:
            raise ValueError("Cannot emit tables for an empty bundle")
        self._prepare()
        paths = writers[fmt](bundle)
        for path in paths:
            logger.info(f"Wrote {fmt} output {path}")
        return paths


def emit_tables(bundle: ReportBundle, fmt: str, output_dir) -> List[Path]:
    return TableWriter(output_dir).write(bundle, fmt)
