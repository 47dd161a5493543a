"""The Scene record: one point cloud with per-point labels and a source id."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigInvalid, EmptyScene


@dataclass
class Scene:
    """N x 6 points (xyz in meters, rgb in [0,1]) with per-point label ids.

    ``labels`` holds ids into whatever label space the scene currently lives
    in: local ids straight out of the generator or a PLY file, global ids
    after mapping through a vocabulary.  -1 marks unlabeled points.
    """

    points: np.ndarray  # (N, 6) float64
    labels: np.ndarray  # (N,) int64
    source_id: str
    scene_id: str

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.ndim != 2 or self.points.shape[1] != 6:
            raise ConfigInvalid(f"points must be (N, 6), got {self.points.shape}")
        if self.points.shape[0] < 1:
            raise EmptyScene(f"scene {self.scene_id!r} has no points")
        if self.labels.shape != (self.points.shape[0],):
            raise ConfigInvalid("labels length does not match point count")
        if not np.isfinite(self.points[:, :3]).all():
            raise ConfigInvalid("non-finite coordinates")
        rgb = self.points[:, 3:]
        if rgb.min() < 0.0 or rgb.max() > 1.0:
            raise ConfigInvalid("colors must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def rgb(self) -> np.ndarray:
        return self.points[:, 3:]

    def subsample(self, cap: int, rng: np.random.Generator) -> "Scene":
        """Uniform random subsample down to at most ``cap`` points."""
        if self.n <= cap:
            return self
        keep = np.sort(rng.choice(self.n, size=cap, replace=False))
        return replace(self, points=self.points[keep], labels=self.labels[keep])

    def permuted(self, order: np.ndarray) -> "Scene":
        return replace(self, points=self.points[order], labels=self.labels[order])


def normalize_coords(xyz: np.ndarray) -> np.ndarray:
    """Center by the centroid and scale by the max absolute extent to [-1, 1].

    Makes downstream features invariant to rigid translation and global
    scale of the scene.
    """
    centered = xyz - xyz.mean(axis=0, keepdims=True)
    extent = np.abs(centered).max()
    if extent > 0:
        centered = centered / extent
    return centered
