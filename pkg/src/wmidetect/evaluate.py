"""Pixel metrics against ground truth and the constraint ablations."""

from __future__ import annotations

import io
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coarse import FilterParams, SliceSkipped, SliceUndetectable, analyze_slice, filter_candidates, objects_mask
from .config import RunConfig
from .fine import fine_validate
from .pipeline import fine_params

log = logging.getLogger(__name__)

ABLATION_MODES = ("both", "none", "size", "distance")
MIN_SIZE_SWEEP = (0, 100, 150, 250)


class MissingTruthError(ValueError):
    pass


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def sensitivity(self) -> float | None:
        return sensitivity(self)

    @property
    def specificity(self) -> float | None:
        return specificity(self)


def confusion(pred: np.ndarray, truth: np.ndarray, brain: np.ndarray) -> ConfusionCounts:
    """Pixel confusion counts over brain pixels only."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    brain = np.asarray(brain, dtype=bool)
    if not pred.shape == truth.shape == brain.shape:
        raise ValueError(f"shape mismatch: {pred.shape}, {truth.shape}, {brain.shape}")
    p, t = pred[brain], truth[brain]
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(p.size - tp - fp - fn)
    return ConfusionCounts(tp, fp, tn, fn)


def sensitivity(c: ConfusionCounts) -> float | None:
    """100 * tp / (tp + fn), or None when the slice has no positives."""
    den = c.tp + c.fn
    return None if den == 0 else 100.0 * c.tp / den


def specificity(c: ConfusionCounts) -> float | None:
    den = c.tn + c.fp
    return None if den == 0 else 100.0 * c.tn / den


@dataclass
class SliceMetrics:
    slice_index: int
    counts: ConfusionCounts

    @property
    def sensitivity(self):
        return self.counts.sensitivity

    @property
    def specificity(self):
        return self.counts.specificity


@dataclass
class Aggregate:
    sensitivity: float | None
    specificity: float | None
    avg_tp: float
    avg_fp: float


@dataclass
class MetricsReport:
    rows: list[SliceMetrics] = field(default_factory=list)
    label: str = ""

    @property
    def aggregate(self) -> Aggregate:
        sens = [r.sensitivity for r in self.rows if r.sensitivity is not None]
        spec = [r.specificity for r in self.rows if r.specificity is not None]
        n = max(len(self.rows), 1)
        return Aggregate(
            float(np.mean(sens)) if sens else None,
            float(np.mean(spec)) if spec else None,
            sum(r.counts.tp for r in self.rows) / n,
            sum(r.counts.fp for r in self.rows) / n,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["slice_index", "tp", "fp", "tn", "fn", "sensitivity", "specificity"])
        for r in self.rows:
            c = r.counts
            writer.writerow([r.slice_index, c.tp, c.fp, c.tn, c.fn, _fmt(r.sensitivity), _fmt(r.specificity)])
        agg = self.aggregate
        writer.writerow(["aggregate", _fmt(agg.avg_tp), _fmt(agg.avg_fp), "", "",
                         _fmt(agg.sensitivity), _fmt(agg.specificity)])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def score_masks(preds: Sequence[np.ndarray], truths: Sequence[np.ndarray | None],
                brains: Sequence[np.ndarray], label: str = "") -> MetricsReport:
    report = MetricsReport(label=label)
    for i, (p, t, b) in enumerate(zip(preds, truths, brains)):
        if t is None:
            raise MissingTruthError(f"slice {i} has no ground-truth mask")
        c = confusion(p, t, b)
        if c.tp + c.fn == 0:
            log.debug("slice %d: no truth positives, sensitivity undefined", i)
        report.rows.append(SliceMetrics(i, c))
    return report


def mode_filter(mode, base: RunConfig) -> FilterParams:
    """Filter settings for an ablation mode name or a minimum-size value."""
    params = FilterParams.from_config(base)
    if isinstance(mode, str):
        if mode not in ABLATION_MODES:
            raise ValueError(f"unknown ablation mode {mode!r}")
        return FilterParams(mode in ("both", "size"), mode in ("both", "distance"),
                            params.dist_min, params.min_size, params.top_fraction)
    return FilterParams(params.size_constraint, params.distance_constraint,
                        params.dist_min, int(mode), params.top_fraction)


class StackAnalysis:
    """Per-slice coarse analysis computed once and re-filtered for each ablation."""

    def __init__(self, slices: Sequence[np.ndarray], truths: Sequence[np.ndarray | None],
                 cfg: RunConfig | None = None):
        if any(t is None for t in truths) or len(truths) != len(slices):
            raise MissingTruthError("every slice needs a ground-truth mask")
        self.cfg = cfg or RunConfig()
        self.truths = list(truths)
        self.shape = slices[0].shape
        self.analyses = []
        self.brains = []
        for i, img in enumerate(slices):
            try:
                an = analyze_slice(img, self.cfg, i)
            except (SliceSkipped, SliceUndetectable) as exc:
                log.info("slice %d not analysed: %s", i, exc)
                an = None
            self.analyses.append(an)
            self.brains.append(an.pre.foreground if an is not None else np.zeros(img.shape, dtype=bool))

    def run(self, params: FilterParams):
        coarse = [filter_candidates(an.hyper, an.ctx.dp, params) if an is not None else []
                  for an in self.analyses]
        return fine_validate(coarse, fine_params(self.cfg))

    def report(self, mode) -> MetricsReport:
        fine = self.run(mode_filter(mode, self.cfg))
        preds = [objects_mask(s.confirmed, self.shape) for s in fine.per_slice]
        label = mode if isinstance(mode, str) else (f"min_size={mode}" if mode else "min_size=off")
        return score_masks(preds, self.truths, self.brains, label)


def ablation_run(slices, truths, mode, cfg: RunConfig | None = None) -> MetricsReport:
    """Rerun detection under one constraint mode (or a minimum lesion size) and score it."""
    return StackAnalysis(slices, truths, cfg).report(mode)


def ablation_table(analysis: StackAnalysis, modes=ABLATION_MODES) -> list[MetricsReport]:
    return [analysis.report(m) for m in modes]


def min_size_sweep(analysis: StackAnalysis, sizes=MIN_SIZE_SWEEP) -> list[MetricsReport]:
    return [analysis.report(s) for s in sizes]


def summary_csv(reports: Sequence[MetricsReport], trend: bool = False) -> str:
    """One aggregate row per report; with ``trend`` adds monotonicity flags against the previous row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["setting", "sensitivity", "avg_true_positives", "specificity", "avg_false_positives"]
    if trend:
        header += ["sensitivity_non_increasing", "specificity_non_decreasing"]
    writer.writerow(header)
    prev = None
    for rep in reports:
        agg = rep.aggregate
        row = [rep.label, _fmt(agg.sensitivity), _fmt(agg.avg_tp), _fmt(agg.specificity), _fmt(agg.avg_fp)]
        if trend:
            if prev is None:
                row += ["", ""]
            else:
                row += [str(_le(agg.sensitivity, prev.sensitivity)).lower(),
                        str(_le(prev.specificity, agg.specificity)).lower()]
            prev = agg
        writer.writerow(row)
    return buf.getvalue()


def _le(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a <= b + 1e-12 or math.isclose(a, b)
