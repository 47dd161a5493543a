"""Scene-specific prompt learning network.

Pools per-point features into a global descriptor (mean and population
variance per dimension) and maps it through a small MLP to K prompt token
vectors.  The descriptor is computed on a detached copy of the features:
scene statistics inform the prompts, but the alignment loss never reshapes
the backbone through this branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .backbone import _init_linear
from .errors import DimensionMismatch, EmptyScene

VAR_FLOOR = 1e-8  # added to the variance before use, not to the descriptor


@dataclass
class SceneDescriptor:
    mu: torch.Tensor   # (d,)
    var: torch.Tensor  # (d,) population variance

    @property
    def dim(self) -> int:
        return int(self.mu.shape[0])


def summarize(features: torch.Tensor) -> SceneDescriptor:
    """Gradient-stopped per-dimension mean and population variance."""
    if features.ndim != 2 or features.shape[0] == 0:
        raise EmptyScene("summarize needs at least one point")
    detached = features.detach()
    mu = detached.mean(dim=0)
    var = detached.var(dim=0, unbiased=False)
    return SceneDescriptor(mu=mu, var=var)


class PromptNet(nn.Module):
    """Two-layer MLP: [mu ++ var] (2d) -> hidden -> K x d_tok prompt tokens."""

    def __init__(self, feat_dim: int, prompt_len: int, d_tok: int,
                 hidden: int = 128, generator: torch.Generator | None = None):
        super().__init__()
        self.prompt_len = prompt_len
        self.d_tok = d_tok
        self.lin1 = nn.Linear(2 * feat_dim, hidden, dtype=torch.float64)
        self.lin2 = nn.Linear(hidden, prompt_len * d_tok, dtype=torch.float64)
        gen = generator if generator is not None else torch.Generator().manual_seed(2)
        _init_linear(self.lin1, gen)
        _init_linear(self.lin2, gen)

    def forward(self, desc: SceneDescriptor) -> torch.Tensor:
        inp = torch.cat([desc.mu, desc.var + VAR_FLOOR])
        if inp.shape[0] != self.lin1.in_features:
            raise DimensionMismatch(
                f"descriptor dim {inp.shape[0]} does not match prompt net input {self.lin1.in_features}"
            )
        out = self.lin2(torch.relu(self.lin1(inp)))
        return out.reshape(self.prompt_len, self.d_tok)


def generate_prompt(desc: SceneDescriptor, net: PromptNet) -> torch.Tensor:
    return net(desc)
