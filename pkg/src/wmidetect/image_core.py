"""Raster primitives shared by every detection stage.

Images are plain numpy arrays indexed ``[row, col]``:

* gray images are ``uint8`` with shape ``(height, width)``
* unit images are ``float64`` with values in ``[0, 1]``
* masks are ``bool``

Pixel sets are 1-D arrays of flat (row-major) indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

MIN_SIDE = 8


def check_gray(img: np.ndarray) -> np.ndarray:
    """Validate a gray slice and return it as ``uint8``."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    h, w = arr.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {w}x{h}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("gray image values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def normalize_to_unit(img: np.ndarray) -> np.ndarray:
    """Min-max rescale to ``[0, 1]``; a constant image maps to all zeros."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty image")
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def complement(img: np.ndarray) -> np.ndarray:
    return (255 - np.asarray(img, dtype=np.int16)).astype(np.uint8)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two unit images, renormalized to ``[0, 1]``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return normalize_to_unit(a * b)


def distance_transform_l1_raw(mask: np.ndarray) -> np.ndarray:
    """City-block distance from every pixel to the nearest true pixel.

    The L1 metric is separable, so two 1-D min-plus sweeps per axis give
    the exact transform.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("distance transform of an all-false mask is undefined")
    h, w = mask.shape
    d = np.where(mask, 0, h + w).astype(np.int32)
    for i in range(1, h):
        np.minimum(d[i], d[i - 1] + 1, out=d[i])
    for i in range(h - 2, -1, -1):
        np.minimum(d[i], d[i + 1] + 1, out=d[i])
    for j in range(1, w):
        np.minimum(d[:, j], d[:, j - 1] + 1, out=d[:, j])
    for j in range(w - 2, -1, -1):
        np.minimum(d[:, j], d[:, j + 1] + 1, out=d[:, j])
    return d


def distance_transform_l1(mask: np.ndarray) -> np.ndarray:
    """Normalized city-block distance transform (see :func:`distance_transform_l1_raw`)."""
    return normalize_to_unit(distance_transform_l1_raw(mask))


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set every false region not 4-connected to the image border to true."""
    # scipy's default cross structure floods the background 4-connected
    return ndimage.binary_fill_holes(np.asarray(mask, dtype=bool))


@dataclass
class LabelMap:
    labels: np.ndarray
    count: int

    @property
    def sizes(self) -> np.ndarray:
        """Pixel count per object; index ``k`` holds object ``k + 1``."""
        return np.bincount(self.labels.ravel(), minlength=self.count + 1)[1:]

    def pixels(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels.ravel() == label)

    def object_pixels(self) -> list[np.ndarray]:
        """Flat pixel indices of every object, ordered by label."""
        flat = self.labels.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(flat[order], np.arange(self.count + 2))
        return [order[bounds[k]:bounds[k + 1]] for k in range(1, self.count + 1)]


def _row_runs(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.concatenate(([False], row, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return edges[0::2], edges[1::2] - 1


def connected_components_8(mask: np.ndarray) -> LabelMap:
    """Label 8-connected objects with the classic run-length procedure.

    1. run-length encode each row,
    2. give runs preliminary labels, recording equivalences with
       overlapping runs of the previous row,
    3. resolve the equivalence classes (union-find),
    4. relabel runs densely in raster order of first appearance.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    run_row: list[int] = []
    run_start: list[int] = []
    run_end: list[int] = []
    run_label: list[int] = []
    parent: list[int] = []

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    prev_lo = prev_hi = 0
    for r in range(h):
        starts, ends = _row_runs(mask[r])
        cur_lo = len(run_row)
        p = prev_lo
        for s, e in zip(starts.tolist(), ends.tolist()):
            label = -1
            # 8-connectivity: runs touch if they overlap after widening by one
            while p < prev_hi and run_end[p] < s - 1:
                p += 1
            q = p
            while q < prev_hi and run_start[q] <= e + 1:
                other = run_label[q]
                if label < 0:
                    label = other
                else:
                    a, b = find(label), find(other)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
                q += 1
            if label < 0:
                label = len(parent)
                parent.append(label)
            run_row.append(r)
            run_start.append(s)
            run_end.append(e)
            run_label.append(label)
        prev_lo, prev_hi = cur_lo, len(run_row)

    labels = np.zeros((h, w), dtype=np.int32)
    final: dict[int, int] = {}
    for r, s, e, lab in zip(run_row, run_start, run_end, run_label):
        root = find(lab)
        k = final.get(root)
        if k is None:
            k = final[root] = len(final) + 1
        labels[r, s:e + 1] = k
    return LabelMap(labels, len(final))


def object_centroid(pixels: np.ndarray, width: int, height: int) -> tuple[float, float]:
    """Mean pixel position scaled into ``[0, 1]^2`` as ``(x, y)``."""
    pixels = np.asarray(pixels)
    if pixels.size == 0:
        raise ValueError("centroid of an empty pixel set")
    rows, cols = np.divmod(pixels, width)
    x = cols.mean() / (width - 1)
    y = rows.mean() / (height - 1)
    return float(x), float(y)
