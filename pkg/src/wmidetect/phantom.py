"""Synthetic T1-like slice stacks with known lesion ground truth.

Each slice shows a dark noisy background, an elliptical brain at a flat
white-matter level, a bright skull broken into arcs, dark ventricles near
the centre, and hyperintense lesions that persist over a few consecutive
slices with slowly drifting centres. Optional single-slice "decoy" blobs
look like lesions but have no counterpart on the neighbouring slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DECOY_CLEARANCE = 0.2   # normalized distance kept between a decoy and anything on adjacent slices


@dataclass(frozen=True)
class LesionSpec:
    center: tuple[float, float]      # normalized (x, y) on the first slice
    radius: float                    # pixels
    start_slice: int
    span_slices: int = 3
    intensity_boost: float = 40.0
    drift: tuple[float, float] = (0.0, 0.0)   # normalized shift per slice

    def center_on(self, z: int) -> tuple[float, float]:
        k = z - self.start_slice
        return self.center[0] + k * self.drift[0], self.center[1] + k * self.drift[1]

    def slices(self) -> range:
        return range(self.start_slice, self.start_slice + self.span_slices)


@dataclass(frozen=True)
class DecoySpec:
    slice_index: int
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class PhantomConfig:
    width: int = 96
    height: int = 112
    slice_count: int = 12
    rng_seed: int = 0
    noise_sigma: float = 0.8
    background_level: float = 20.0
    background_noise_sigma: float = 6.0
    wm_level: float = 110.0
    ventricle_level: float = 40.0
    skull_level: float = 200.0
    skull: bool = True
    skull_arcs: int = 9
    ventricle_shape: str = "simple"          # simple | lobed
    lesion_specs: tuple[LesionSpec, ...] | None = None
    lesion_count: int = 3
    lesion_span: int = 3
    lesion_radius: tuple[float, float] = (2.0, 3.2)
    lesion_boost: float = 40.0
    decoy_count: int = 5                     # single-slice noise blobs per stack


@dataclass
class PhantomStack:
    config: PhantomConfig
    slices: list[np.ndarray]
    brain: list[np.ndarray]
    ventricle: list[np.ndarray]
    lesion: list[np.ndarray]
    decoy: list[np.ndarray]
    skull: list[np.ndarray]
    lesion_labels: list[np.ndarray]      # 0 = none, k = lesion k (1-based)
    decoy_labels: list[np.ndarray]
    lesions: list[LesionSpec] = field(default_factory=list)
    decoys: list[DecoySpec] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.slices)

    def wm_truth(self, z: int) -> np.ndarray:
        return self.brain[z] & ~self.ventricle[z] & ~self.lesion[z] & ~self.decoy[z]


class _Geometry:
    """Per-slice ellipse geometry; pixel coordinates are (x = col, y = row)."""

    def __init__(self, cfg: PhantomConfig, z: int):
        self.w, self.h = cfg.width, cfg.height
        zc = (cfg.slice_count - 1) / 2
        frac = (z - zc) / zc if zc > 0 else 0.0
        self.scale = 1.0 - 0.12 * frac * frac
        self.cx, self.cy = (self.w - 1) / 2, (self.h - 1) / 2
        self.ax = 0.40 * self.w * self.scale
        self.ay = 0.42 * self.h * self.scale
        yy, xx = np.mgrid[0:self.h, 0:self.w].astype(np.float64)
        self.x, self.y = xx, yy
        ux, uy = (xx - self.cx) / self.ax, (yy - self.cy) / self.ay
        self.rho = np.hypot(ux, uy)
        self.theta = np.arctan2(uy, ux)

    def to_pixels(self, center: tuple[float, float]) -> tuple[float, float]:
        return center[0] * (self.w - 1), center[1] * (self.h - 1)

    def rho_at(self, px: float, py: float) -> float:
        return math.hypot((px - self.cx) / self.ax, (py - self.cy) / self.ay)

    def disk(self, center: tuple[float, float], radius: float) -> np.ndarray:
        px, py = self.to_pixels(center)
        return (self.x - px) ** 2 + (self.y - py) ** 2 <= radius * radius

    def ventricles(self, shape: str) -> np.ndarray:
        s = self.scale
        mask = np.zeros((self.h, self.w), dtype=bool)
        for side in (-1, 1):
            vx = self.cx + side * 0.09 * self.w * s
            vy = self.cy - 0.02 * self.h
            if shape == "simple":
                lobes = [(0.0, 0.0, 3.5, 10.0)]
            elif shape == "lobed":
                lobes = [(0.0, -2.0, 3.0, 7.0), (side * 3.0, 6.0, 2.5, 4.5), (side * -2.0, -9.0, 2.5, 3.5)]
            else:
                raise ValueError(f"unknown ventricle shape {shape!r}")
            for dx, dy, rx, ry in lobes:
                mask |= (((self.x - vx - dx * s) / (rx * s)) ** 2 + ((self.y - vy - dy * s) / (ry * s)) ** 2) <= 1
        return mask

    def skull(self, arcs: list[tuple[float, float]]) -> np.ndarray:
        band = (self.rho > 1) & (self.rho <= 1 + 2.5 / min(self.ax, self.ay))
        on_arc = np.zeros_like(band)
        for lo, hi in arcs:
            on_arc |= (self.theta >= lo) & (self.theta < hi)
        return band & on_arc


def _skull_arcs(rng: np.random.Generator, count: int) -> list[tuple[float, float]]:
    """Arcs of mixed length separated by short gaps, covering most of the circle."""
    if count <= 0:
        return []
    weights = rng.uniform(0.3, 1.0, count)
    short = rng.choice(count, size=max(1, count // 3), replace=False)
    weights[short] = rng.uniform(0.04, 0.08, short.size)
    gap = 0.12
    usable = 2 * math.pi - gap * count
    lengths = usable * weights / weights.sum()
    arcs = []
    start = -math.pi + rng.uniform(0, gap)
    for length in lengths:
        arcs.append((start, start + length))
        start += length + gap
    return arcs


def _lesion_ok(spec: LesionSpec, cfg: PhantomConfig, geoms: list[_Geometry],
               vents: list[np.ndarray]) -> bool:
    for z in spec.slices():
        if not 0 <= z < cfg.slice_count:
            return False
        g = geoms[z]
        px, py = g.to_pixels(spec.center_on(z))
        # keep the whole disk well inside the white matter
        if g.rho_at(px, py) + spec.radius / min(g.ax, g.ay) > 0.85:
            return False
        near = g.disk(spec.center_on(z), spec.radius + 2)
        if (near & vents[z]).any():
            return False
    return True


def _random_lesions(rng, cfg, geoms, vents) -> list[LesionSpec]:
    specs: list[LesionSpec] = []
    g0 = geoms[0]
    for _ in range(cfg.lesion_count):
        for _attempt in range(500):
            phi = rng.uniform(-math.pi, math.pi)
            r0 = rng.uniform(0.42, 0.68)
            px = g0.cx + r0 * 0.40 * cfg.width * math.cos(phi)
            py = g0.cy + r0 * 0.42 * cfg.height * math.sin(phi)
            step = rng.uniform(0, 1.0)
            ang = rng.uniform(-math.pi, math.pi)
            spec = LesionSpec(
                center=(px / (cfg.width - 1), py / (cfg.height - 1)),
                radius=float(rng.uniform(*cfg.lesion_radius)),
                start_slice=int(rng.integers(0, cfg.slice_count - cfg.lesion_span + 1)),
                span_slices=cfg.lesion_span,
                intensity_boost=cfg.lesion_boost,
                drift=(step * math.cos(ang) / (cfg.width - 1), step * math.sin(ang) / (cfg.height - 1)),
            )
            if not _lesion_ok(spec, cfg, geoms, vents):
                continue
            if any(_overlap(spec, other, geoms) for other in specs):
                continue
            specs.append(spec)
            break
        else:
            raise ValueError("could not place a lesion inside the white matter")
    return specs


def _overlap(a: LesionSpec, b: LesionSpec, geoms) -> bool:
    for z in set(a.slices()) & set(b.slices()):
        g = geoms[z]
        ax, ay = g.to_pixels(a.center_on(z))
        bx, by = g.to_pixels(b.center_on(z))
        if math.hypot(ax - bx, ay - by) <= a.radius + b.radius + 4:
            return True
    return False


def _random_decoys(rng, cfg, geoms, vents, lesions) -> list[DecoySpec]:
    decoys: list[DecoySpec] = []
    for _ in range(cfg.decoy_count):
        for _attempt in range(2000):
            z = int(rng.integers(0, cfg.slice_count))
            g = geoms[z]
            phi = rng.uniform(-math.pi, math.pi)
            r0 = rng.uniform(0.35, 0.72)
            px = g.cx + r0 * g.ax * math.cos(phi)
            py = g.cy + r0 * g.ay * math.sin(phi)
            center = (px / (cfg.width - 1), py / (cfg.height - 1))
            radius = float(rng.uniform(*cfg.lesion_radius))
            if (g.disk(center, radius + 2) & vents[z]).any():
                continue
            if not _decoy_clear(z, center, radius, g, lesions, decoys):
                continue
            decoys.append(DecoySpec(z, center, radius))
            break
        else:
            raise ValueError("could not place a decoy blob")
    return decoys


def _decoy_clear(z, center, radius, g, lesions, decoys) -> bool:
    for spec in lesions:
        for zz in (z - 1, z, z + 1):
            if zz not in spec.slices():
                continue
            other = spec.center_on(zz)
            if zz == z:
                ox, oy = g.to_pixels(other)
                px, py = g.to_pixels(center)
                if math.hypot(px - ox, py - oy) <= radius + spec.radius + 4:
                    return False
            elif math.dist(center, other) <= DECOY_CLEARANCE:
                return False
    for d in decoys:
        if abs(d.slice_index - z) == 1 and math.dist(center, d.center) <= DECOY_CLEARANCE:
            return False
        if d.slice_index == z and math.dist(center, d.center) <= DECOY_CLEARANCE / 2:
            return False
    return True


def generate(config: PhantomConfig | None = None) -> PhantomStack:
    """Render a phantom stack; identical configs give bit-identical stacks."""
    cfg = config or PhantomConfig()
    if cfg.width < 32 or cfg.height < 32 or cfg.slice_count < 1:
        raise ValueError("phantom needs at least 32x32 pixels and one slice")
    rng = np.random.default_rng(cfg.rng_seed)
    geoms = [_Geometry(cfg, z) for z in range(cfg.slice_count)]
    vents = [g.ventricles(cfg.ventricle_shape) for g in geoms]
    arcs = _skull_arcs(rng, cfg.skull_arcs) if cfg.skull else []

    if cfg.lesion_specs is not None:
        lesions = list(cfg.lesion_specs)
        for spec in lesions:
            if not _lesion_ok(spec, cfg, geoms, vents):
                raise ValueError(f"lesion {spec} does not fit inside the white matter")
    else:
        lesions = _random_lesions(rng, cfg, geoms, vents)
    for spec in lesions:
        if spec.intensity_boost < 3 * cfg.noise_sigma:
            raise ValueError("lesion boost must be at least 3x the noise sigma")
    decoys = _random_decoys(rng, cfg, geoms, vents, lesions)

    out = PhantomStack(cfg, [], [], [], [], [], [], [], [], lesions, decoys)
    shape = (cfg.height, cfg.width)
    for z, g in enumerate(geoms):
        brain = g.rho <= 1
        skull = g.skull(arcs) if arcs else np.zeros(shape, dtype=bool)
        lesion_lab = np.zeros(shape, dtype=np.int32)
        for k, spec in enumerate(lesions, 1):
            if z in spec.slices():
                lesion_lab[g.disk(spec.center_on(z), spec.radius) & brain] = k
        decoy_lab = np.zeros(shape, dtype=np.int32)
        for k, d in enumerate(decoys, 1):
            if d.slice_index == z:
                decoy_lab[g.disk(d.center, d.radius) & brain] = k

        img = cfg.background_level + rng.normal(0.0, cfg.background_noise_sigma, shape)
        tissue = np.full(shape, cfg.wm_level)
        tissue[vents[z]] = cfg.ventricle_level
        for k, spec in enumerate(lesions, 1):
            tissue[lesion_lab == k] = cfg.wm_level + spec.intensity_boost
        tissue[decoy_lab > 0] = cfg.wm_level + cfg.lesion_boost
        noisy = tissue + rng.normal(0.0, cfg.noise_sigma, shape)
        img = np.where(brain, noisy, img)
        img = np.where(skull, cfg.skull_level + rng.normal(0.0, cfg.noise_sigma, shape), img)

        out.slices.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))
        out.brain.append(brain)
        out.ventricle.append(vents[z] & brain)
        out.lesion.append(lesion_lab > 0)
        out.decoy.append(decoy_lab > 0)
        out.skull.append(skull)
        out.lesion_labels.append(lesion_lab)
        out.decoy_labels.append(decoy_lab)
    return out
