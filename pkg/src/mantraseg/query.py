"""Open-vocabulary querying shared by the CLI and the HTTP service."""

from __future__ import annotations

import colorsys
import hashlib
import time
from dataclasses import dataclass

import numpy as np
import torch

from .alignment import predict
from .anchors import AnchorMatrix
from .labels import normalize_label
from .model import ModelState
from .scene import Scene


def color_for_label(name: str) -> tuple[float, float, float]:
    """Stable color per label name: hash drives the hue."""
    digest = hashlib.blake2s(normalize_label(name).encode("utf-8")).digest()
    hue = int.from_bytes(digest[:4], "little") / 2**32
    return colorsys.hsv_to_rgb(hue, 0.65, 0.95)


@dataclass
class QueryResult:
    labels: tuple[str, ...]
    assignments: np.ndarray  # (N,) indices into labels
    colors: dict[str, tuple[float, float, float]]
    timing_ms: float


def run_query(state: ModelState, scene: Scene, labels) -> QueryResult:
    """Assign every point to the most similar of the given label anchors."""
    names = tuple(normalize_label(n) for n in labels)
    start = time.perf_counter()
    with torch.no_grad():
        sim = state.scene_similarity(scene, names)
        assignments = predict(sim, torch.ones(len(names), dtype=torch.bool)).numpy()
    elapsed = (time.perf_counter() - start) * 1000.0
    return QueryResult(
        labels=names,
        assignments=assignments,
        colors={n: color_for_label(n) for n in names},
        timing_ms=elapsed,
    )


def run_query_fixed(state: ModelState, scene: Scene, anchors: AnchorMatrix) -> QueryResult:
    """Fixed-anchor mode: imported anchors, no prompt conditioning."""
    start = time.perf_counter()
    with torch.no_grad():
        sim = state.scene_similarity_fixed(scene, anchors)
        assignments = predict(sim, torch.ones(len(anchors), dtype=torch.bool)).numpy()
    elapsed = (time.perf_counter() - start) * 1000.0
    return QueryResult(
        labels=anchors.labels,
        assignments=assignments,
        colors={n: color_for_label(n) for n in anchors.labels},
        timing_ms=elapsed,
    )


def colored_scene(scene: Scene, result: QueryResult) -> Scene:
    """Scene recolored by predicted label, point count and order preserved."""
    palette = np.array([result.colors[n] for n in result.labels])
    points = scene.points.copy()
    points[:, 3:] = palette[result.assignments]
    return Scene(points, result.assignments.astype(np.int64), scene.source_id, scene.scene_id)
