"""Cosine-similarity classification against anchors.

Similarities are temperature-softmaxed over the classes allowed by a
per-point label mask (a point is only supervised against its own source's
label set), giving a masked cross-entropy for training and an argmax rule
for prediction.  All rows are processed with max-subtraction so small
temperatures stay numerically stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import DimensionMismatch, GroundTruthMasked, ZeroVector

_NORM_EPS = 1e-12
DEFAULT_TEMPERATURE = 0.1


@dataclass
class SimilarityMatrix:
    S: torch.Tensor  # (N, C) cosine similarities in [-1, 1]
    temperature: float = DEFAULT_TEMPERATURE


def _unit_rows(x: torch.Tensor, what: str) -> torch.Tensor:
    norms = torch.linalg.vector_norm(x, dim=1, keepdim=True)
    with torch.no_grad():
        if (norms < _NORM_EPS).any():
            bad = int((norms.squeeze(1) < _NORM_EPS).nonzero()[0, 0])
            raise ZeroVector(f"{what} row {bad} has near-zero norm")
    return x / norms


def similarity(P: torch.Tensor, T: torch.Tensor,
               temperature: float = DEFAULT_TEMPERATURE) -> SimilarityMatrix:
    """S[i, j] = cos(P_i, T_j).  Differentiable in both arguments."""
    if P.shape[1] != T.shape[1]:
        raise DimensionMismatch(f"point dim {P.shape[1]} != anchor dim {T.shape[1]}")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    S = _unit_rows(P, "point embedding") @ _unit_rows(T, "anchor").T
    return SimilarityMatrix(S=S, temperature=temperature)


def _as_mask(mask, n: int, c: int) -> torch.Tensor:
    m = torch.as_tensor(mask, dtype=torch.bool)
    if m.ndim == 1:
        if m.shape[0] != c:
            raise DimensionMismatch(f"mask length {m.shape[0]} != {c} classes")
        m = m.unsqueeze(0).expand(n, c)
    elif m.shape != (n, c):
        raise DimensionMismatch(f"mask shape {tuple(m.shape)} != ({n}, {c})")
    if not m.any(dim=1).all():
        raise ValueError("every point needs at least one allowed class")
    return m


def _masked_logits(sim: SimilarityMatrix, mask: torch.Tensor) -> torch.Tensor:
    z = sim.S / sim.temperature
    return z.masked_fill(~mask, float("-inf"))


def probabilities(sim: SimilarityMatrix, mask) -> torch.Tensor:
    """Row-stochastic (N, C) matrix; masked-out entries are exactly zero."""
    n, c = sim.S.shape
    m = _as_mask(mask, n, c)
    z = _masked_logits(sim, m)
    z = z - z.max(dim=1, keepdim=True).values
    num = torch.where(m, torch.exp(z), torch.zeros((), dtype=sim.S.dtype))
    return num / num.sum(dim=1, keepdim=True)


def ce_loss(sim: SimilarityMatrix, gt: torch.Tensor, mask) -> torch.Tensor:
    """Mean over points of -log p(gt | point) under the masked softmax."""
    n, c = sim.S.shape
    m = _as_mask(mask, n, c)
    gt = torch.as_tensor(gt, dtype=torch.int64)
    if gt.shape != (n,):
        raise DimensionMismatch(f"gt shape {tuple(gt.shape)} != ({n},)")
    if gt.min() < 0 or gt.max() >= c:
        raise GroundTruthMasked(f"gt ids must lie in [0, {c})")
    rows = torch.arange(n)
    if not m[rows, gt].all():
        bad = int((~m[rows, gt]).nonzero()[0, 0])
        raise GroundTruthMasked(f"ground truth class {int(gt[bad])} is masked out at point {bad}")
    z = _masked_logits(sim, m)
    zmax = z.max(dim=1, keepdim=True).values
    lse = zmax.squeeze(1) + torch.log(
        torch.where(m, torch.exp(z - zmax), torch.zeros((), dtype=sim.S.dtype)).sum(dim=1)
    )
    return (lse - z[rows, gt]).mean()


def predict(sim: SimilarityMatrix, mask) -> torch.Tensor:
    """Per-point argmax over allowed classes; ties go to the lowest index."""
    n, c = sim.S.shape
    m = _as_mask(mask, n, c)
    return sim.S.masked_fill(~m, float("-inf")).argmax(dim=1)
