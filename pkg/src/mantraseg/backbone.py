"""Per-point feature extraction and projection into the anchor latent space.

A deliberately small point network: a shared two-layer MLP on normalized
(xyz, rgb), concatenation of each point's features with the mean over its
k nearest neighbours, and a final affine layer.  Permutation equivariant,
translation invariant (coordinates are centered per scene), and free of
normalization layers so finite-difference gradient checks stay clean.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from . import kernels
from .errors import DimensionMismatch
from .scene import Scene, normalize_coords


def _init_linear(layer: nn.Linear, gen: torch.Generator) -> None:
    # seeded uniform fan-in scaling
    bound = 1.0 / (layer.in_features ** 0.5)
    with torch.no_grad():
        layer.weight.uniform_(-bound, bound, generator=gen)
        layer.bias.uniform_(-bound, bound, generator=gen)


class PointBackbone(nn.Module):
    """6 -> h -> d per-point MLP with k-NN mean aggregation and a 2d -> d head."""

    def __init__(self, hidden: int = 64, feat_dim: int = 64, knn_k: int = 16,
                 generator: torch.Generator | None = None):
        super().__init__()
        self.knn_k = knn_k
        self.lin1 = nn.Linear(6, hidden, dtype=torch.float64)
        self.lin2 = nn.Linear(hidden, feat_dim, dtype=torch.float64)
        self.lin3 = nn.Linear(2 * feat_dim, feat_dim, dtype=torch.float64)
        gen = generator if generator is not None else torch.Generator().manual_seed(0)
        for layer in (self.lin1, self.lin2, self.lin3):
            _init_linear(layer, gen)

    @property
    def feat_dim(self) -> int:
        return self.lin2.out_features

    def forward(self, points: torch.Tensor, xyz_raw: np.ndarray) -> torch.Tensor:
        """points: (N, 6) normalized inputs; xyz_raw drives neighbour search."""
        g = torch.relu(self.lin2(torch.relu(self.lin1(points))))
        n = points.shape[0]
        k = min(self.knn_k, n - 1)
        if k > 0:
            idx = kernels.knn_indices(np.ascontiguousarray(xyz_raw, dtype=np.float64), k)
            neighbor_mean = g[torch.from_numpy(idx)].mean(dim=1)
        else:
            neighbor_mean = g  # single point: its own features stand in
        return self.lin3(torch.cat([g, neighbor_mean], dim=1))


def scene_inputs(scene: Scene) -> tuple[torch.Tensor, np.ndarray]:
    """Normalized (N, 6) input tensor and the raw xyz used for k-NN."""
    xyz_n = normalize_coords(scene.xyz)
    feats = np.concatenate([xyz_n, scene.rgb], axis=1)
    return torch.from_numpy(feats), scene.xyz


def extract_features(scene: Scene, backbone: PointBackbone) -> torch.Tensor:
    feats, xyz = scene_inputs(scene)
    return backbone(feats, xyz)


class Projection(nn.Module):
    """Row-wise affine map from feature space to the anchor latent space."""

    def __init__(self, feat_dim: int, latent_dim: int,
                 generator: torch.Generator | None = None):
        super().__init__()
        self.lin = nn.Linear(feat_dim, latent_dim, dtype=torch.float64)
        gen = generator if generator is not None else torch.Generator().manual_seed(1)
        _init_linear(self.lin, gen)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if features.shape[-1] != self.lin.in_features:
            raise DimensionMismatch(
                f"features dim {features.shape[-1]} does not match projector input {self.lin.in_features}"
            )
        return self.lin(features)


def project(features: torch.Tensor, projection: Projection) -> torch.Tensor:
    return projection(features)
