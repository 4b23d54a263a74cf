"""Slice-stack files: 8-bit PGM slices and a plain-text manifest.

Manifest format, one slice per line, optional tab-separated truth mask::

    # stack_id: subject-02
    # spacing: 1.0 1.0 1.0
    slice_000.pgm<TAB>truth_000.pgm
    slice_001.pgm<TAB>truth_001.pgm

Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


class StackError(Exception):
    exit_code = 1


class MissingFileError(StackError):
    exit_code = 3


class DimensionMismatchError(StackError):
    exit_code = 4


class UnreadableSliceError(StackError):
    exit_code = 6


class EmptyManifestError(StackError):
    exit_code = 8


@dataclass
class StackManifest:
    slices: list[Path]
    truths: list[Path | None]
    stack_id: str = ""
    spacing: tuple[float, ...] = ()
    path: Path | None = None

    @property
    def has_truth(self) -> bool:
        return bool(self.truths) and all(t is not None for t in self.truths)


@dataclass
class SliceStack:
    slices: list[np.ndarray]
    truths: list[np.ndarray | None] = field(default_factory=list)
    manifest: StackManifest | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.slices[0].shape


def parse_manifest(path: str | Path) -> StackManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MissingFileError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    man = StackManifest([], [], stack_id=path.stem, path=path)
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].partition(":")
            key = key.strip().lower()
            if key == "stack_id":
                man.stack_id = value.strip()
            elif key == "spacing":
                man.spacing = tuple(float(v) for v in value.split())
            continue
        parts = line.rstrip("\n").split("\t")
        man.slices.append(base / parts[0].strip())
        truth = parts[1].strip() if len(parts) > 1 and parts[1].strip() else None
        man.truths.append(base / truth if truth else None)
    if not man.slices:
        raise EmptyManifestError(f"manifest {path} lists no slices")
    return man


def read_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"missing file {path}")
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "1"):
                raise UnreadableSliceError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
            return np.array(im.convert("L"), dtype=np.uint8)
    except UnreadableSliceError:
        raise
    except Exception as exc:
        raise UnreadableSliceError(f"{path}: {exc}") from exc


def read_mask(path: str | Path) -> np.ndarray:
    return read_pgm(path) > 0


def write_pgm(path: str | Path, img: np.ndarray) -> None:
    arr = np.asarray(img)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path, format="PPM")


def write_overlay(path: str | Path, img: np.ndarray, mask: np.ndarray) -> None:
    """Gray slice as RGB with detected pixels painted pure red."""
    rgb = np.repeat(np.asarray(img, dtype=np.uint8)[:, :, None], 3, axis=2)
    rgb[np.asarray(mask, dtype=bool)] = (255, 0, 0)
    Image.fromarray(rgb, mode="RGB").save(path, format="PPM")


def load_stack(manifest: StackManifest, require_truth: bool = False) -> SliceStack:
    slices = [read_pgm(p) for p in manifest.slices]
    shape = slices[0].shape
    for p, s in zip(manifest.slices, slices):
        if s.shape != shape:
            raise DimensionMismatchError(f"{p} is {s.shape[1]}x{s.shape[0]}, expected {shape[1]}x{shape[0]}")
    truths: list[np.ndarray | None] = []
    for t in manifest.truths:
        if t is None:
            truths.append(None)
            continue
        m = read_mask(t)
        if m.shape != shape:
            raise DimensionMismatchError(f"truth mask {t} does not match slice size")
        truths.append(m)
    if require_truth and not manifest.has_truth:
        from .evaluate import MissingTruthError
        raise MissingTruthError("manifest has slices without ground-truth masks")
    return SliceStack(slices, truths, manifest)


def write_stack(stack, out_dir: str | Path, stack_id: str = "phantom") -> Path:
    """Write a phantom stack as PGM slices + lesion truth masks + manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"# stack_id: {stack_id}", "# spacing: 1.0 1.0 1.0"]
    for z, img in enumerate(stack.slices):
        sname, tname = f"slice_{z:04d}.pgm", f"truth_{z:04d}.pgm"
        write_pgm(out / sname, img)
        write_pgm(out / tname, stack.lesion[z])
        lines.append(f"{sname}\t{tname}")
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
