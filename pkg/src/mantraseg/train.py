"""Multi-dataset training loop and evaluation.

Batches rotate round-robin over the sources (a fixed number of scenes from
one source per optimizer step); every point is supervised only against its
own source's label subset of the unified vocabulary.  Anchors are
recomputed per scene because prompts are scene-conditioned.  The optimizer
is Adam with decoupled weight decay under a step schedule that multiplies
the learning rate by the decay factor at each milestone epoch.
"""

from __future__ import annotations

import copy
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
import torch

from .alignment import ce_loss, predict
from .errors import ConfigInvalid, EmptyScene, LocalIdOutOfRange, UnknownSource
from .labels import UnifiedVocabulary, normalize_label
from .metrics import ConfusionMatrix
from .model import ModelConfig, ModelState, build_model
from .scene import Scene


@dataclass
class TrainConfig:
    lr: float = 0.001
    milestones: tuple[int, ...] = (70, 90)
    decay: float = 0.1
    epochs: int = 100
    per_source_batch: int = 3
    points_cap: int = 4096
    weight_decay: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    seed: int = 0
    val_every: int = 1

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigInvalid("lr must be positive")
        if self.epochs < 0:
            raise ConfigInvalid("epochs must be >= 0")
        if list(self.milestones) != sorted(self.milestones) or any(
            m >= self.epochs for m in self.milestones if self.epochs > 0
        ):
            raise ConfigInvalid("milestones must be ascending and below epochs")
        if self.per_source_batch < 1:
            raise ConfigInvalid("per_source_batch must be >= 1")
        if self.points_cap < 1:
            raise ConfigInvalid("points_cap must be >= 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class FitResult:
    state: ModelState
    loss_history: list[float] = field(default_factory=list)
    lr_trace: list[float] = field(default_factory=list)
    val_history: list[tuple[int, float]] = field(default_factory=list)
    best_epoch: int = -1
    best_val_miou: float = float("nan")


def lr_at(config: TrainConfig, epoch: int) -> float:
    """Learning rate for an epoch: lr * decay^(milestones passed)."""
    return config.lr * config.decay ** bisect_right(list(config.milestones), epoch)


def globalize_labels(scene: Scene, vocab: UnifiedVocabulary) -> Scene:
    """Map a scene's source-local label ids into the unified vocabulary."""
    if scene.source_id not in vocab.per_source:
        raise UnknownSource(f"scene {scene.scene_id!r} comes from unregistered source {scene.source_id!r}")
    mapping = np.asarray(vocab.per_source[scene.source_id], dtype=np.int64)
    if (scene.labels >= len(mapping)).any():
        raise LocalIdOutOfRange(
            f"scene {scene.scene_id!r} has label ids outside its source's label set"
        )
    labels = np.where(scene.labels >= 0, mapping[np.clip(scene.labels, 0, len(mapping) - 1)], -1)
    return Scene(scene.points, labels, scene.source_id, scene.scene_id)


def make_optimizer(state: ModelState, config: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        state.trainable_parameters(), lr=config.lr,
        betas=config.betas, weight_decay=config.weight_decay,
    )


def scene_loss(state: ModelState, scene: Scene) -> torch.Tensor:
    """Masked cross-entropy of one scene against the unified vocabulary.

    The scene must carry global label ids; its loss is restricted to its own
    source's label subset, so other sources' anchors never contribute.
    """
    labeled = scene.labels >= 0
    if not labeled.any():
        raise EmptyScene(f"scene {scene.scene_id!r} has no labeled points")
    sim = state.scene_similarity(scene, state.vocab.entries)
    mask = torch.tensor(state.vocab.source_mask(scene.source_id), dtype=torch.bool)
    gt = torch.from_numpy(scene.labels[labeled])
    sim.S = sim.S[torch.from_numpy(labeled.nonzero()[0])]
    return ce_loss(sim, gt, mask)


def train_step(batch: list[Scene], state: ModelState, optimizer: torch.optim.Optimizer) -> float:
    """One optimizer update on a batch of scenes with global label ids."""
    optimizer.zero_grad()
    loss = torch.stack([scene_loss(state, scene) for scene in batch]).mean()
    loss.backward()
    optimizer.step()
    return float(loss.detach())


def fit(
    scenes_by_source: dict[str, list[Scene]],
    vocab: UnifiedVocabulary,
    train_config: TrainConfig | None = None,
    model_config: ModelConfig | None = None,
    state: ModelState | None = None,
    val_scenes: list[Scene] | None = None,
    val_labels: tuple[str, ...] | None = None,
) -> FitResult:
    """Train a model over several sources; scenes carry local label ids.

    When a validation set is given the returned state is the epoch snapshot
    with the best validation mIoU; otherwise it is the final state.
    """
    train_config = train_config or TrainConfig()
    torch.set_num_threads(1)  # keeps runs reproducible
    if state is None:
        state = build_model(vocab, model_config)
    optimizer = make_optimizer(state, train_config)
    rng = np.random.default_rng(train_config.seed)

    global_scenes = {
        src: [globalize_labels(s, vocab) for s in scenes]
        for src, scenes in scenes_by_source.items()
    }
    if any(len(v) == 0 for v in global_scenes.values()) or not global_scenes:
        raise ConfigInvalid("every source needs at least one training scene")

    result = FitResult(state=state)
    best_snapshot = None
    b = train_config.per_source_batch
    for epoch in range(train_config.epochs):
        lr = lr_at(train_config, epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        result.lr_trace.append(lr)

        orders = {
            src: rng.permutation(len(scenes))
            for src, scenes in global_scenes.items()
        }
        steps = max(1, min(len(s) for s in global_scenes.values()) // b)
        for step in range(steps):
            for src, scenes in global_scenes.items():
                take = orders[src][step * b : (step + 1) * b]
                if len(take) == 0:  # short source: reuse its scenes
                    take = orders[src][:b]
                batch = [scenes[i].subsample(train_config.points_cap, rng) for i in take]
                result.loss_history.append(train_step(batch, state, optimizer))

        state.epoch = epoch + 1
        if val_scenes and (epoch + 1) % train_config.val_every == 0:
            labels = val_labels or vocab.entries
            miou = evaluate(state, val_scenes, labels).miou()
            result.val_history.append((epoch, miou))
            if best_snapshot is None or miou > result.best_val_miou:
                result.best_val_miou = miou
                result.best_epoch = epoch
                best_snapshot = _snapshot(state)

    if best_snapshot is not None:
        _restore(state, best_snapshot)
    return result


def _snapshot(state: ModelState) -> dict:
    return {
        name: copy.deepcopy(module.state_dict())
        for name, module in state.trainable_modules().items()
    }


def _restore(state: ModelState, snapshot: dict) -> None:
    for name, module in state.trainable_modules().items():
        module.load_state_dict(snapshot[name])


OUTSIDE_LABEL = "[outside]"


def evaluate(state: ModelState, scenes: list[Scene], eval_labels) -> ConfusionMatrix:
    """Segment scenes against an arbitrary label list and score them.

    Scene labels are local ids of their source; ground truth maps into the
    evaluation list by name.  Labeled points whose name is not in the list
    land in a phantom row (never predicted), so they count as errors in
    overall accuracy but contribute no extra class when absent.  Prompts
    are scene-conditioned at inference exactly as during training.
    """
    eval_labels = tuple(normalize_label(n) for n in eval_labels)
    position = {name: i for i, name in enumerate(eval_labels)}
    outside = len(eval_labels)
    cm = ConfusionMatrix(eval_labels + (OUTSIDE_LABEL,))
    with torch.no_grad():
        for scene in scenes:
            source_names = _source_names(state.vocab, scene.source_id)
            gt = np.array(
                [position.get(source_names[l], outside) if l >= 0 else -1 for l in scene.labels],
                dtype=np.int64,
            )
            sim = state.scene_similarity(scene, eval_labels)
            pred = predict(sim, torch.ones(len(eval_labels), dtype=torch.bool))
            cm.accumulate(gt, pred.numpy())
    return cm


def _source_names(vocab: UnifiedVocabulary, source_id: str) -> list[str]:
    if source_id not in vocab.per_source:
        raise UnknownSource(f"unknown source {source_id!r}")
    return [vocab.entries[g] for g in vocab.per_source[source_id]]
