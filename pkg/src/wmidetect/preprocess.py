"""Denoising and brain/background separation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_core import check_gray, fill_holes


@dataclass
class PreprocessResult:
    cleaned: np.ndarray      # background forced to 255
    foreground: np.ndarray   # M_f
    background: np.ndarray   # M_b, complement of M_f
    threshold: int           # Otsu threshold; foreground is strictly above it


def _conduction(kind: str, kappa: float):
    if kind == "rational":
        return lambda d: 1.0 / (1.0 + (d / kappa) ** 2)
    if kind == "exp":
        return lambda d: np.exp(-((d / kappa) ** 2))
    raise ValueError(f"unknown conduction function {kind!r}")


def perona_malik(
    img: np.ndarray,
    iterations: int = 15,
    lam: float = 1 / 7,
    kappa: float = 3.0,
    conduction: str = "rational",
) -> np.ndarray:
    """Perona-Malik anisotropic diffusion with 4-neighbour differences.

    Boundaries are reflecting (no flux leaves the image), so the float
    field conserves its mean; the result is rounded back to ``uint8``.
    ``conduction="rational"`` is g(x) = 1 / (1 + (x/kappa)^2).
    """
    img = check_gray(img)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if not 0 < lam <= 0.25:
        raise ValueError(f"lambda={lam} outside the stable range (0, 1/4]")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if iterations == 0:
        return img.copy()
    g = _conduction(conduction, kappa)
    u = img.astype(np.float64)
    dv = np.empty((u.shape[0] - 1, u.shape[1]))
    dh = np.empty((u.shape[0], u.shape[1] - 1))
    for _ in range(iterations):
        np.subtract(u[1:], u[:-1], out=dv)
        np.subtract(u[:, 1:], u[:, :-1], out=dh)
        fv = g(dv) * dv
        fh = g(dh) * dh
        step = np.zeros_like(u)
        step[:-1] += fv
        step[1:] -= fv
        step[:, :-1] += fh
        step[:, 1:] -= fh
        u += lam * step
    return np.clip(np.rint(u), 0, 255).astype(np.uint8)


def otsu_threshold(img: np.ndarray) -> int:
    """Threshold in 0..254 minimising the intra-class variance.

    Class 0 is ``<= t``, class 1 is ``> t``. Minimising the weighted
    within-class variance is the same as maximising
    ``S0^2/n0 + S1^2/n1`` (sums and counts per class), which is compared
    exactly in integers; ties go to the smallest threshold.
    """
    arr = np.asarray(img)
    hist = np.bincount(arr.ravel().astype(np.int64), minlength=256)[:256]
    if np.count_nonzero(hist) < 2:
        raise ValueError("Otsu threshold is undefined for a constant image")
    counts = np.cumsum(hist).tolist()
    sums = np.cumsum(hist * np.arange(256)).tolist()
    n_total = counts[-1]
    s_total = sums[-1]
    best_t = -1
    best_num = 0
    best_den = 1
    for t in range(255):
        n0 = counts[t]
        n1 = n_total - n0
        if n0 == 0 or n1 == 0:
            continue
        s0 = sums[t]
        s1 = s_total - s0
        num = s0 * s0 * n1 + s1 * s1 * n0
        den = n0 * n1
        if best_t < 0 or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def segregate_background(img: np.ndarray) -> PreprocessResult:
    img = check_gray(img)
    th = otsu_threshold(img)
    foreground = fill_holes(img > th)
    background = ~foreground
    cleaned = img.copy()
    cleaned[background] = 255
    return PreprocessResult(cleaned, foreground, background, th)
