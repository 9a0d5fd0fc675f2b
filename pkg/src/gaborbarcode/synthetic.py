"""Synthetic oriented-grating textures with known classes.

Used by the test suite and by ``scripts/make_synthetic.py`` to exercise the
retrieval pipeline without a licensed image collection.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import GrayImage, save_pgm


def grating(side: int, theta: float, frequency: float, phase: float = 0.0,
            contrast: float = 0.35, noise: float = 0.0, rng: np.random.Generator | None = None) -> GrayImage:
    """Sinusoid ``0.5 + contrast * sin(2 pi f (x cos theta + y sin theta) + phase)`` plus Gaussian noise."""
    y, x = np.mgrid[0:side, 0:side]
    px = 0.5 + contrast * np.sin(2 * math.pi * frequency * (x * math.cos(theta) + y * math.sin(theta)) + phase)
    if noise:
        rng = rng if rng is not None else np.random.default_rng()
        px = px + rng.normal(0.0, noise, px.shape)
    return GrayImage(np.clip(px, 0.0, 1.0))


@dataclass(frozen=True)
class Sample:
    image_id: str
    label: int
    image: GrayImage


def grating_classes(orientations: int = 4, frequencies=(0.1, 0.25)) -> list[tuple[float, float]]:
    """(theta, frequency) per class, orientation-major."""
    return [(k * math.pi / orientations, f) for k in range(orientations) for f in frequencies]


def grating_dataset(per_class: int = 25, side: int = 32, noise: float = 0.05, seed: int = 0,
                    orientations: int = 4, frequencies=(0.1, 0.25)) -> list[Sample]:
    """Random-phase gratings, ``per_class`` images for each orientation x frequency class."""
    rng = np.random.default_rng(seed)
    out = []
    for label, (theta, f) in enumerate(grating_classes(orientations, frequencies)):
        for i in range(per_class):
            img = grating(side, theta, f, rng.uniform(0, 2 * math.pi), noise=noise, rng=rng)
            out.append(Sample(f"c{label}_{i:03d}", label, img))
    return out


def class_code(label: int) -> str:
    """A fake IRMA code per class: the class number spread over the anatomy axis."""
    return f"1121-120-{label // 10 % 10}{label % 10}0-700"


def write_dataset(samples, root: str | os.PathLike, n_train: int) -> tuple[Path, Path]:
    """Write PGMs plus ``train.csv``/``test.csv`` manifests; first ``n_train`` of each class go to train."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    seen: dict[int, int] = {}
    lines = {"train": ["image_id,path,irma_code"], "test": ["image_id,path,irma_code"]}
    for s in samples:
        rel = f"images/{s.image_id}.pgm"
        save_pgm(s.image, root / rel)
        split = "train" if seen.get(s.label, 0) < n_train else "test"
        seen[s.label] = seen.get(s.label, 0) + 1
        lines[split].append(f"{s.image_id},{rel},{class_code(s.label)}")
    for split, rows in lines.items():
        (root / f"{split}.csv").write_text("\n".join(rows) + "\n")
    return root / "train.csv", root / "test.csv"
