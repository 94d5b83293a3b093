"""Evaluation report output: JSON, a delimited table, and figures.

The JSON file is the canonical machine-readable result; the CSV gives
the per-threshold AP table for spreadsheets; the figures show the pooled
precision-recall curve and AP as a function of IoU threshold.
"""

from __future__ import annotations

from pathlib import Path

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .detection import Detection
from .geometry import BBox
from .metrics import EvalReport, pr_curve


def write_report_json(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def write_report_csv(report: EvalReport, path: str | Path) -> None:
    """Per-threshold AP table plus the scalar summary rows."""
    lines = ["metric,threshold,value"]
    for threshold, ap in report.per_threshold_ap:
        lines.append(f"ap,{threshold:.2f},{ap:.6f}")
    lines.append(f"map50,,{report.map50:.6f}")
    lines.append(f"map50_95,,{report.map50_95:.6f}")
    lines.append(f"jaccard_mean,,{report.jaccard_mean:.6f}")
    lines.append(
        f"iteration_classification_accuracy,,"
        f"{report.iteration_classification_accuracy:.6f}"
    )
    lines.append(f"segmentation_accuracy,,{report.segmentation_accuracy:.6f}")
    lines.append(f"full_pipeline_accuracy,,{report.full_pipeline_accuracy:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")


def render_figures(
    report: EvalReport,
    out_dir: str | Path,
    dataset: list[tuple[list[Detection], list[BBox]]] | None = None,
    stem: str = "report",
) -> list[Path]:
    """Write AP-vs-threshold (and, given the dataset, the PR curve) PNGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(5, 4))
    thresholds = [t for t, _ in report.per_threshold_ap]
    aps = [ap for _, ap in report.per_threshold_ap]
    ax.plot(thresholds, aps, marker="o")
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("average precision")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("AP vs IoU threshold")
    ax.grid(True, alpha=0.3)
    ap_path = out_dir / f"{stem}_ap_vs_threshold.png"
    fig.savefig(ap_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(ap_path)

    if dataset is not None:
        recalls, precisions = pr_curve(dataset, 0.5)
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot([0.0] + recalls, [1.0] + precisions, drawstyle="steps-post")
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
        ax.set_xlim(0.0, 1.02)
        ax.set_ylim(0.0, 1.05)
        ax.set_title("pooled PR curve at IoU 0.50")
        ax.grid(True, alpha=0.3)
        pr_path = out_dir / f"{stem}_pr_curve.png"
        fig.savefig(pr_path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(pr_path)
    return written
