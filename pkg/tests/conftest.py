import numpy as np
import pytest
import torch

from mantraseg.labels import build_union, register_source
from mantraseg.model import ModelConfig, build_model
from mantraseg.scene import Scene

torch.set_num_threads(1)


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[{'PASS' if report.passed else 'FAIL'}] {name}")


def random_scene(n=32, n_labels=3, seed=0, source_id="src", scene_id="scene-0"):
    rng = np.random.default_rng(seed)
    xyz = rng.uniform(-2.0, 2.0, size=(n, 3))
    rgb = rng.uniform(0.0, 1.0, size=(n, 3))
    labels = rng.integers(0, n_labels, size=n)
    return Scene(np.concatenate([xyz, rgb], axis=1), labels, source_id, scene_id)


@pytest.fixture
def tiny_vocab():
    return build_union(
        [
            register_source("alpha", ["wall", "floor"]),
            register_source("beta", ["floor", "chair"]),
        ]
    )


def tiny_model(vocab, **overrides):
    defaults = dict(
        hidden=12, feat_dim=10, latent_dim=14, d_tok=6, knn_k=4,
        prompt_len=3, prompt_hidden=9, encoder="seeded", seed=0,
    )
    defaults.update(overrides)
    return build_model(vocab, ModelConfig(**defaults))
