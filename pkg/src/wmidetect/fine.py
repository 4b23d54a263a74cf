"""Cross-slice validation of coarse candidates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coarse import CandidateObject

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FineParams:
    d_threshold: float = 0.1
    n_adjacent: int = 1

    def __post_init__(self):
        if self.d_threshold <= 0:
            raise ValueError("d_threshold must be > 0")
        if self.n_adjacent < 1:
            raise ValueError("n_adjacent must be >= 1")


@dataclass
class SliceDetection:
    slice_index: int
    confirmed: list[CandidateObject]
    rejected: list[CandidateObject]


@dataclass
class Recovery:
    """A lesion presumed present on a slice where coarse detection missed it."""
    slice_index: int
    centroid: tuple[float, float]


@dataclass
class VolumeDetection:
    per_slice: list[SliceDetection]
    recovered: list[Recovery] = field(default_factory=list)
    validated: bool = True   # False when there was no neighbouring slice to check against


def _centroids(cands: Sequence[CandidateObject]) -> np.ndarray:
    if not cands:
        return np.zeros((0, 2))
    return np.array([c.centroid for c in cands], dtype=np.float64)


def _near(a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """For each row of ``a``, whether any row of ``b`` lies within ``tol``."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros(len(a), dtype=bool)
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return (d <= tol).any(axis=1)


def fine_validate(coarse_per_slice: Sequence[Sequence[CandidateObject]],
                  params: FineParams | None = None,
                  slice_indices: Sequence[int] | None = None) -> VolumeDetection:
    """Keep candidates whose centroid has a partner within ``d_threshold`` on a nearby slice.

    Slices are taken in the given order; a candidate on slice ``n`` is
    confirmed if any candidate on slices ``n-k`` or ``n+k`` (``1 <= k <=
    n_adjacent``) lies within the threshold in normalized coordinates.
    """
    params = params or FineParams()
    n = len(coarse_per_slice)
    indices = list(slice_indices) if slice_indices is not None else list(range(n))
    cents = [_centroids(c) for c in coarse_per_slice]

    if n == 1:
        log.warning("single-slice volume: candidates cannot be validated across slices")
        only = list(coarse_per_slice[0])
        return VolumeDetection([SliceDetection(indices[0], only, [])], [], validated=False)

    per_slice = []
    confirmed_flags = []
    for i, cands in enumerate(coarse_per_slice):
        ok = np.zeros(len(cands), dtype=bool)
        for k in range(1, params.n_adjacent + 1):
            for j in (i - k, i + k):
                if 0 <= j < n:
                    ok |= _near(cents[i], cents[j], params.d_threshold)
        confirmed_flags.append(ok)
        per_slice.append(SliceDetection(
            indices[i],
            [c for c, keep in zip(cands, ok) if keep],
            [c for c, keep in zip(cands, ok) if not keep],
        ))

    recovered = []
    for i in range(1, n - 1):
        below = cents[i - 1][confirmed_flags[i - 1]]
        above = cents[i + 1][confirmed_flags[i + 1]]
        if len(below) == 0 or len(above) == 0:
            continue
        for a in below:
            d = np.sqrt(((above - a) ** 2).sum(axis=1))
            for b in above[d <= params.d_threshold]:
                mid = (a + b) / 2
                if not _near(mid[None, :], cents[i], params.d_threshold)[0]:
                    recovered.append(Recovery(indices[i], (float(mid[0]), float(mid[1]))))
    return VolumeDetection(per_slice, recovered, validated=True)
