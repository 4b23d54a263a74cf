"""Whole-volume driver: coarse detection per slice, then fine validation."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coarse import CoarseResult, coarse_detect, objects_mask
from .config import RunConfig
from .fine import FineParams, VolumeDetection, fine_validate


@dataclass
class Timings:
    coarse_total_ms: float = 0.0
    fine_total_ms: float = 0.0
    total_ms: float = 0.0
    slice_count: int = 0

    @property
    def coarse_ms_per_slice(self) -> float:
        return self.coarse_total_ms / max(self.slice_count, 1)

    @property
    def fine_ms_per_slice(self) -> float:
        return self.fine_total_ms / max(self.slice_count, 1)

    def as_dict(self) -> dict:
        return {
            "slice_count": self.slice_count,
            "coarse_ms_per_slice": round(self.coarse_ms_per_slice, 3),
            "fine_ms_per_slice": round(self.fine_ms_per_slice, 3),
            "coarse_total_ms": round(self.coarse_total_ms, 3),
            "fine_total_ms": round(self.fine_total_ms, 3),
            "total_ms": round(self.total_ms, 3),
        }


@dataclass
class VolumeResult:
    coarse: list[CoarseResult]
    fine: VolumeDetection
    timings: Timings = field(default_factory=Timings)

    def confirmed_mask(self, i: int) -> np.ndarray:
        return objects_mask(self.fine.per_slice[i].confirmed, self.coarse[i].shape)

    def candidate_mask(self, i: int) -> np.ndarray:
        return self.coarse[i].candidate_mask()


def fine_params(cfg: RunConfig) -> FineParams:
    return FineParams(cfg.dth, cfg.n_adjacent)


def run_coarse(slices: Sequence[np.ndarray], cfg: RunConfig) -> list[CoarseResult]:
    """Coarse detection on every slice, fanned out over ``cfg.threads`` workers.

    Results come back in slice order whatever the thread count.
    """
    if cfg.threads <= 1 or len(slices) <= 1:
        return [coarse_detect(img, cfg, i) for i, img in enumerate(slices)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(lambda item: coarse_detect(item[1], cfg, item[0]), enumerate(slices)))


def detect_volume(slices: Sequence[np.ndarray], cfg: RunConfig | None = None) -> VolumeResult:
    cfg = cfg or RunConfig()
    if len(slices) == 0:
        raise ValueError("empty slice stack")
    t0 = time.perf_counter()
    coarse = run_coarse(slices, cfg)
    t1 = time.perf_counter()
    fine = fine_validate([c.candidates for c in coarse], fine_params(cfg))
    t2 = time.perf_counter()
    timings = Timings((t1 - t0) * 1e3, (t2 - t1) * 1e3, (t2 - t0) * 1e3, len(slices))
    return VolumeResult(coarse, fine, timings)
