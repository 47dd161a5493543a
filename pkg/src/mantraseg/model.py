"""Model composition: backbone -> projection -> (prompts) -> anchors -> similarity."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .alignment import SimilarityMatrix, similarity
from .anchors import AnchorMatrix
from .backbone import PointBackbone, Projection, scene_inputs
from .errors import ConfigInvalid, DimensionMismatch
from .labels import UnifiedVocabulary
from .pln import PromptNet, summarize
from .scene import Scene
from .text import TextEncoder, make_encoder


@dataclass
class ModelConfig:
    hidden: int = 64
    feat_dim: int = 64
    latent_dim: int = 128
    d_tok: int = 32
    knn_k: int = 16
    prompt_len: int = 8          # 0 disables the prompt network
    prompt_hidden: int = 128
    temperature: float = 0.1
    encoder: str = "seeded"      # "seeded" | "fixture"
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigInvalid("temperature must be positive")
        if self.prompt_len < 0:
            raise ConfigInvalid("prompt_len must be >= 0")
        for name in ("hidden", "feat_dim", "latent_dim", "d_tok", "knn_k"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be >= 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class ModelState:
    """Trainable modules plus the frozen encoder and the training vocabulary."""

    def __init__(self, backbone: PointBackbone, projection: Projection,
                 pln: PromptNet | None, encoder: TextEncoder,
                 vocab: UnifiedVocabulary, config: ModelConfig, epoch: int = 0):
        self.backbone = backbone
        self.projection = projection
        self.pln = pln
        self.encoder = encoder
        self.vocab = vocab
        self.config = config
        self.epoch = epoch

    # ----- forward pieces -------------------------------------------------

    def features(self, scene: Scene) -> torch.Tensor:
        feats, xyz = scene_inputs(scene)
        return self.backbone(feats, xyz)

    def scene_prompt(self, features: torch.Tensor) -> torch.Tensor | None:
        if self.pln is None:
            return None
        return self.pln(summarize(features))

    def anchors_for(self, labels, prompt: torch.Tensor | None = None) -> AnchorMatrix:
        return self.encoder.encode(labels, prompt)

    def scene_similarity(self, scene: Scene, labels) -> SimilarityMatrix:
        """Full open-vocabulary forward pass for one scene."""
        feats = self.features(scene)
        embeddings = self.projection(feats)
        prompt = self.scene_prompt(feats)
        anchors = self.anchors_for(labels, prompt)
        return similarity(embeddings, anchors.T, self.config.temperature)

    def scene_similarity_fixed(self, scene: Scene, anchors: AnchorMatrix) -> SimilarityMatrix:
        """Fixed-anchor mode: imported anchors, prompt conditioning disabled."""
        if anchors.dim != self.config.latent_dim:
            raise DimensionMismatch(
                f"anchor dim {anchors.dim} does not match model latent dim {self.config.latent_dim}"
            )
        embeddings = self.projection(self.features(scene))
        return similarity(embeddings, anchors.T, self.config.temperature)

    # ----- parameter access -----------------------------------------------

    def trainable_modules(self) -> dict[str, torch.nn.Module]:
        mods = {"backbone": self.backbone, "projection": self.projection}
        if self.pln is not None:
            mods["pln"] = self.pln
        return mods

    def trainable_parameters(self) -> list[torch.nn.Parameter]:
        return [p for m in self.trainable_modules().values() for p in m.parameters()]

    def named_tensors(self) -> dict[str, torch.Tensor]:
        tensors: dict[str, torch.Tensor] = {}
        for prefix, module in self.trainable_modules().items():
            for name, p in module.state_dict().items():
                tensors[f"{prefix}.{name}"] = p
        tensors.update(self.encoder.state_tensors())
        return tensors


def build_model(vocab: UnifiedVocabulary, config: ModelConfig | None = None) -> ModelState:
    config = config or ModelConfig()
    gen = torch.Generator().manual_seed(config.seed)
    backbone = PointBackbone(config.hidden, config.feat_dim, config.knn_k, generator=gen)
    projection = Projection(config.feat_dim, config.latent_dim, generator=gen)
    pln = None
    if config.prompt_len > 0:
        pln = PromptNet(config.feat_dim, config.prompt_len, config.d_tok,
                        hidden=config.prompt_hidden, generator=gen)
    encoder = make_encoder(config.encoder, seed=config.seed,
                           d_tok=config.d_tok, latent_dim=config.latent_dim)
    return ModelState(backbone, projection, pln, encoder, vocab, config)
