"""Per-slice hyperintensity candidates.

White-matter intensities are sampled inside a contour roughly halfway
between the detected ventricles and the brain boundary; pixels whose
modified Z-score against that sample is positive become candidates, which
are then thinned by size and skull-distance rules.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .image_core import (
    check_gray,
    connected_components_8,
    distance_transform_l1_raw,
    fill_holes,
    object_centroid,
)
from .mser import detect_dark_regions
from .preprocess import PreprocessResult, perona_malik, segregate_background
from .ventricle import ConfidenceContext, VentricleSelection, build_confidence, ga_select, score_regions

log = logging.getLogger(__name__)

MIN_WM_SAMPLES = 16
MODIFIED_Z = 0.6745


@dataclass
class WmStats:
    median: float
    mad: float
    sample_count: int


@dataclass
class CandidateObject:
    pixels: np.ndarray              # flat indices
    size: int
    centroid: tuple[float, float]   # (x, y) in [0, 1]^2
    mean_dp: float


@dataclass(frozen=True)
class FilterParams:
    size_constraint: bool = True
    distance_constraint: bool = True
    dist_min: float = 0.15
    min_size: int = 0
    top_fraction: float = 0.05

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "FilterParams":
        return cls(cfg.size_constraint, cfg.distance_constraint, cfg.dist_min,
                   cfg.min_lesion_size, cfg.top_fraction)


@dataclass
class CoarseResult:
    candidates: list[CandidateObject]
    masks: dict[str, np.ndarray] = field(default_factory=dict)
    stats: WmStats | None = None
    status: str = "ok"               # ok | skipped | undetectable
    dp: np.ndarray | None = None     # normalized boundary distance, kept for re-filtering
    shape: tuple[int, int] = (0, 0)

    def candidate_mask(self) -> np.ndarray:
        return objects_mask(self.candidates, self.shape)


def objects_mask(objects, shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    flat = mask.ravel()
    for obj in objects:
        flat[obj.pixels] = True
    return mask


def annulus_contour(dp_raw: np.ndarray, ventricles: np.ndarray) -> np.ndarray:
    """Brain pixels whose boundary distance and ventricle distance differ by at most one pixel.

    With no ventricles the contour falls back to the band within one pixel
    of half the largest boundary distance.
    """
    dp_raw = np.asarray(dp_raw)
    brain = dp_raw > 0
    if not np.any(ventricles):
        half = dp_raw.max() / 2.0
        return brain & (np.abs(dp_raw - half) <= 1)
    dv = distance_transform_l1_raw(ventricles)
    return brain & (np.abs(dp_raw - dv) <= 1)


def wm_sample_mask(contour: np.ndarray, ventricles: np.ndarray, foreground: np.ndarray) -> np.ndarray:
    if not np.any(contour):
        raise ValueError("empty sampling contour")
    return fill_holes(contour) & ~np.asarray(ventricles, dtype=bool) & np.asarray(foreground, dtype=bool)


def wm_stats(img: np.ndarray, wm_mask: np.ndarray, min_samples: int = MIN_WM_SAMPLES) -> WmStats:
    samples = np.asarray(img, dtype=np.float64)[np.asarray(wm_mask, dtype=bool)]
    if samples.size < min_samples:
        raise ValueError(f"only {samples.size} white-matter samples (< {min_samples})")
    med = float(np.median(samples))
    mad = float(np.median(np.abs(samples - med)))
    return WmStats(med, mad, int(samples.size))


def hyperintensity_mask(img: np.ndarray, stats: WmStats, foreground: np.ndarray,
                        z_threshold: float = 0.0) -> np.ndarray:
    """Brain pixels whose modified Z-score exceeds ``z_threshold``.

    With a zero MAD the score is +inf above the median, so the test
    reduces to ``g > median``.
    """
    g = np.asarray(img, dtype=np.float64)
    fg = np.asarray(foreground, dtype=bool)
    if stats.mad > 0:
        score = MODIFIED_Z * (g - stats.median) / stats.mad
        return fg & (score > z_threshold)
    return fg & (g > stats.median)


def two_means_small(sizes: np.ndarray) -> np.ndarray:
    """1-D two-cluster K-means seeded with the min and max; True marks the small cluster."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size == 0:
        return np.zeros(0, dtype=bool)
    lo, hi = sizes.min(), sizes.max()
    if lo == hi:
        return np.ones(sizes.size, dtype=bool)
    small = None
    while True:
        new_small = np.abs(sizes - lo) <= np.abs(sizes - hi)
        if small is not None and np.array_equal(new_small, small):
            return small
        small = new_small
        lo = sizes[small].mean()
        hi = sizes[~small].mean()


def filter_candidates(hyper: np.ndarray, dp: np.ndarray,
                      params: FilterParams | None = None) -> list[CandidateObject]:
    params = params or FilterParams()
    h, w = hyper.shape
    labels = connected_components_8(hyper)
    if labels.count == 0:
        return []
    sizes = labels.sizes
    flat_labels = labels.labels.ravel()
    mean_dp = np.bincount(flat_labels, weights=np.asarray(dp, dtype=np.float64).ravel(),
                          minlength=labels.count + 1)[1:] / sizes
    keep = np.ones(labels.count, dtype=bool)

    if params.size_constraint:
        n_drop = math.ceil(params.top_fraction * labels.count)
        by_size = np.argsort(-sizes, kind="stable")
        keep[by_size[:n_drop]] = False
        rest = np.flatnonzero(keep)
        keep[rest[~two_means_small(sizes[rest])]] = False
    if params.distance_constraint:
        keep &= mean_dp >= params.dist_min
    if params.min_size:
        keep &= sizes >= params.min_size

    objects = labels.object_pixels()
    return [
        CandidateObject(objects[k], int(sizes[k]), object_centroid(objects[k], w, h), float(mean_dp[k]))
        for k in np.flatnonzero(keep)
    ]


class SliceSkipped(ValueError):
    """The slice has no usable brain/background split (e.g. constant slice)."""


class SliceUndetectable(ValueError):
    """The white-matter sample could not be formed on this slice."""


@dataclass
class SliceAnalysis:
    """Everything coarse detection derives from one slice before filtering."""
    pre: PreprocessResult
    ctx: ConfidenceContext
    selection: VentricleSelection
    contour: np.ndarray
    wm_mask: np.ndarray
    stats: WmStats
    hyper: np.ndarray


def analyze_slice(img: np.ndarray, cfg: RunConfig, slice_index: int = 0) -> SliceAnalysis:
    """Denoise, segregate, find ventricles, sample WM and flag hyperintensities.

    Raises :class:`SliceSkipped` or :class:`SliceUndetectable` when the
    slice cannot be processed.
    """
    img = check_gray(img)
    work = img
    if cfg.diffusion:
        work = perona_malik(img, cfg.diffusion_iterations, cfg.diffusion_lambda,
                            cfg.diffusion_kappa, cfg.diffusion_conduction)
    try:
        pre = segregate_background(work)
        ctx = build_confidence(pre)
    except ValueError as exc:
        raise SliceSkipped(str(exc)) from exc
    regions = detect_dark_regions(pre.cleaned, cfg.mser_params())
    scored = score_regions(regions, ctx)
    selection = ga_select(scored, cfg.ga_params(slice_index), shape=img.shape)
    contour = annulus_contour(ctx.dp_raw, selection.mask)
    try:
        wm = wm_sample_mask(contour, selection.mask, pre.foreground)
        stats = wm_stats(pre.cleaned, wm)
    except ValueError as exc:
        raise SliceUndetectable(str(exc)) from exc
    hyper = hyperintensity_mask(pre.cleaned, stats, pre.foreground, cfg.z_threshold)
    return SliceAnalysis(pre, ctx, selection, contour, wm, stats, hyper)


def coarse_from_analysis(an: SliceAnalysis, params: FilterParams) -> CoarseResult:
    candidates = filter_candidates(an.hyper, an.ctx.dp, params)
    masks = {
        "foreground": an.pre.foreground,
        "ventricles": an.selection.mask,
        "contour": an.contour,
        "wm": an.wm_mask,
        "hyper": an.hyper,
    }
    return CoarseResult(candidates, masks, an.stats, "ok", an.ctx.dp, an.hyper.shape)


def coarse_detect(img: np.ndarray, cfg: RunConfig | None = None, slice_index: int = 0) -> CoarseResult:
    cfg = cfg or RunConfig()
    img = check_gray(img)
    try:
        an = analyze_slice(img, cfg, slice_index)
    except (SliceSkipped, SliceUndetectable) as exc:
        status = "skipped" if isinstance(exc, SliceSkipped) else "undetectable"
        log.info("slice %d %s: %s", slice_index, status, exc)
        return CoarseResult([], {}, None, status, None, img.shape)
    return coarse_from_analysis(an, FilterParams.from_config(cfg))
