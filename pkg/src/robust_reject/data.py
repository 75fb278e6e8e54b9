"""Synthetic 2-D reject-option data in the L2 unit ball.

Classes are separated by the vertical axis (pre-flip label = sign of the
first coordinate). Each class gets a configurable number of points inside
the rejection band |x1| <= halfwidth and outside it, sampled uniformly
from the region intersected with the unit ball; a fraction of the
band labels is flipped per class. Generation is bit-reproducible from the
seed (numpy PCG64 streams, recorded in the metadata sidecar).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["GENERATOR_ID", "DataConfig", "LabeledDataset", "DatasetParseError",
           "generate", "save", "load"]

GENERATOR_ID = "numpy-pcg64"


@dataclass(frozen=True)
class DataConfig:
    reject_band_halfwidth: float = 0.25
    n_reject_per_class: int = 100
    n_outer_per_class: int = 200
    flip_fraction: float = 0.05
    test_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.flip_fraction <= 1.0:
            raise ValueError(f"flip_fraction must be in [0, 1], got {self.flip_fraction}")
        if self.n_reject_per_class < 0 or self.n_outer_per_class < 0:
            raise ValueError("per-class counts must be >= 0")
        if not 0.0 < self.reject_band_halfwidth < 1.0:
            raise ValueError(f"reject band halfwidth must be in (0, 1), got {self.reject_band_halfwidth}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class LabeledDataset:
    points: np.ndarray          # (N, 2) float64
    labels: np.ndarray          # (N,) int, each -1 or +1
    seed: int = 0
    is_test: bool = False
    config: DataConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if len(self.points) != len(self.labels):
            raise ValueError("points and labels must have equal length")
        if len(self.labels) and not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")

    def __len__(self) -> int:
        return len(self.labels)


class DatasetParseError(ValueError):
    """Malformed dataset file; message names the offending line."""


def _sample_region(rng: np.random.Generator, n: int, cls: int, halfwidth: float,
                   outer: bool) -> np.ndarray:
    """Uniform points in the unit ball with cls*x1 in (0, h] or (h, 1]."""
    rows = []
    got = 0
    while got < n:
        cand = rng.uniform(-1.0, 1.0, size=(max(4 * (n - got), 64), 2))
        x1 = cand[:, 0] * cls
        keep = np.linalg.norm(cand, axis=1) <= 1.0
        if outer:
            keep &= x1 > halfwidth
        else:
            keep &= (x1 > 0.0) & (x1 <= halfwidth)
        cand = cand[keep][: n - got]
        rows.append(cand)
        got += len(cand)
    return np.vstack(rows) if rows else np.empty((0, 2))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _generate_split(rng: np.random.Generator, cfg: DataConfig, n_reject: int,
                    n_outer: int) -> tuple[np.ndarray, np.ndarray]:
    pts, labs = [], []
    for cls in (+1, -1):
        pts.append(_sample_region(rng, n_reject, cls, cfg.reject_band_halfwidth, outer=False))
        labs.append(np.full(n_reject, cls, dtype=int))
        pts.append(_sample_region(rng, n_outer, cls, cfg.reject_band_halfwidth, outer=True))
        labs.append(np.full(n_outer, cls, dtype=int))
    points = np.vstack(pts)
    labels = np.concatenate(labs)
    n_flip = _round_half_up(cfg.flip_fraction * n_reject)
    for cls in (+1, -1):
        in_band = np.abs(points[:, 0]) <= cfg.reject_band_halfwidth
        idx = np.where((labels == cls) & in_band)[0]
        if n_flip > 0:
            picked = rng.choice(idx, size=n_flip, replace=False)
            labels[picked] = -labels[picked]
    return points, labels


def generate(config: DataConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """Build the train/test pair; test counts are train counts * test_scale."""
    train_ss, test_ss = np.random.SeedSequence(config.seed).spawn(2)
    train_pts, train_labs = _generate_split(
        np.random.Generator(np.random.PCG64(train_ss)), config,
        config.n_reject_per_class, config.n_outer_per_class,
    )
    test_pts, test_labs = _generate_split(
        np.random.Generator(np.random.PCG64(test_ss)), config,
        _round_half_up(config.test_scale * config.n_reject_per_class),
        _round_half_up(config.test_scale * config.n_outer_per_class),
    )
    train = LabeledDataset(train_pts, train_labs, seed=config.seed, is_test=False, config=config)
    test = LabeledDataset(test_pts, test_labs, seed=config.seed, is_test=True, config=config)
    return train, test


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def save(ds: LabeledDataset, path) -> Path:
    """Write CSV (x1,x2,label; round-trip float precision) plus .meta.json sidecar."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write("x1,x2,label\n")
        for (x1, x2), lab in zip(ds.points, ds.labels):
            fh.write(f"{float(x1)!r},{float(x2)!r},{int(lab)}\n")
    meta = {
        "seed": ds.seed,
        "is_test": ds.is_test,
        "generator": GENERATOR_ID,
        "n_points": len(ds),
        "config": None if ds.config is None else ds.config.__dict__,
    }
    _meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")
    return path


def load(path, check_ball: bool = True) -> LabeledDataset:
    """Read a dataset CSV; parse errors name the 1-based file line."""
    path = Path(path)
    pts, labs = [], []
    with path.open() as fh:
        header = fh.readline().strip()
        if header != "x1,x2,label":
            raise DatasetParseError(f"{path}:1: expected header 'x1,x2,label', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 3:
                raise DatasetParseError(f"{path}:{lineno}: expected 3 columns, got {len(cells)}")
            try:
                x1, x2 = float(cells[0]), float(cells[1])
                lab = int(cells[2])
            except ValueError as exc:
                raise DatasetParseError(f"{path}:{lineno}: {exc}") from exc
            if lab not in (-1, 1):
                raise DatasetParseError(f"{path}:{lineno}: label must be -1 or 1, got {lab}")
            if check_ball and x1 * x1 + x2 * x2 > (1.0 + 1e-9) ** 2:
                raise DatasetParseError(f"{path}:{lineno}: point outside the unit ball")
            pts.append((x1, x2))
            labs.append(lab)
    meta_file = _meta_path(path)
    seed, is_test, config = 0, False, None
    if meta_file.exists():
        meta = json.loads(meta_file.read_text())
        seed = meta.get("seed", 0)
        is_test = meta.get("is_test", False)
        if meta.get("config"):
            config = DataConfig(**meta["config"])
    return LabeledDataset(
        np.array(pts, dtype=float).reshape(-1, 2),
        np.array(labs, dtype=int),
        seed=seed,
        is_test=is_test,
        config=config,
    )
