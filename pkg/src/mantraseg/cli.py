"""Command line entry point.

Subcommands: gen-data, train, eval, query, export-anchors, serve.
Exit codes: 0 success, 1 usage error, 2 runtime error; diagnostics go to
stderr as single lines.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .anchors import load_precomputed_anchors, write_anchors
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigInvalid, MantraError
from .labels import build_union, register_source
from .manifest import ManifestEntry, SceneManifest, load_manifest, save_manifest
from .model import ModelConfig
from .ply import read_ply, write_ply
from .query import colored_scene, run_query, run_query_fixed
from .synth import SourceConfig, generate_source, preset_config
from .train import TrainConfig, evaluate, fit


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _split_labels(text: str) -> list[str]:
    labels = [part for part in (p.strip() for p in text.split(",")) if part]
    if not labels:
        raise ConfigInvalid("label list is empty")
    return labels


def _build_parser() -> _Parser:
    parser = _Parser(prog="mantraseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate synthetic scenes + manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a model from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out")

    p = sub.add_parser("query", help="segment one scene with an arbitrary vocabulary")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--anchors", help="precomputed anchor file (fixed-anchor mode)")

    p = sub.add_parser("export-anchors", help="write label anchors to a file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--binary", action="store_true")

    p = sub.add_parser("serve", help="serve scenes and queries over HTTP")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--ui", help="directory of built frontend assets to serve at /")
    return parser


# ---------------------------------------------------------------------------


def _cmd_gen_data(args) -> int:
    spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out = Path(args.out)
    scene_dir = out / "scenes"
    scene_dir.mkdir(parents=True, exist_ok=True)

    entries: list[ManifestEntry] = []
    label_sets = []
    for raw in spec.get("sources", []):
        raw = dict(raw)
        splits = raw.pop("splits", None)
        if "preset" in raw:
            config = preset_config(raw.pop("preset"), **raw)
        else:
            raw["label_set"] = tuple(raw.pop("label_set"))
            config = SourceConfig(**raw)
        label_sets.append(register_source(config.source_id, config.label_set))
        scenes = generate_source(config)
        assignments = _split_rooms(len(scenes), splits)
        for scene, split in zip(scenes, assignments):
            path = scene_dir / f"{scene.scene_id}.ply"
            write_ply(scene, path)
            entries.append(ManifestEntry(scene.scene_id, config.source_id, path, split))
    if not entries:
        raise ConfigInvalid("config lists no sources")
    manifest = SceneManifest(entries=tuple(entries), sources=tuple(label_sets))
    save_manifest(manifest, out / "manifest.json")
    print(f"wrote {len(entries)} scenes to {out}")
    return 0


def _split_rooms(n: int, splits: dict | None) -> list[str]:
    if splits is None:
        return ["train"] * n
    counts = {s: int(splits.get(s, 0)) for s in ("train", "val", "test")}
    if sum(counts.values()) != n:
        raise ConfigInvalid(f"splits {counts} do not sum to {n} rooms")
    return ["train"] * counts["train"] + ["val"] * counts["val"] + ["test"] * counts["test"]


def _cmd_train(args) -> int:
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    raw_train = dict(cfg.get("train", {}))
    for key in ("milestones", "betas"):
        if key in raw_train:
            raw_train[key] = tuple(raw_train[key])
    train_config = TrainConfig(**raw_train)
    model_config = ModelConfig(**cfg.get("model", {}))

    manifest = load_manifest(args.manifest)
    vocab = build_union(manifest.sources)
    by_source: dict[str, list] = {}
    for entry in manifest.for_split("train"):
        by_source.setdefault(entry.source_id, []).append(manifest.load_scene(entry))
    val_scenes = manifest.load_split("val") or None

    result = fit(by_source, vocab, train_config, model_config, val_scenes=val_scenes)
    for epoch, miou in result.val_history:
        print(f"epoch {epoch}: val mIoU {miou:.4f}", file=sys.stderr)
    save_checkpoint(result.state, args.out, train_config=train_config)
    print(f"saved checkpoint to {args.out} (epoch {result.state.epoch})")
    return 0


def _cmd_eval(args) -> int:
    state = load_checkpoint(args.ckpt)
    manifest = load_manifest(args.manifest)
    scenes = manifest.load_split(args.split)
    if not scenes:
        raise ConfigInvalid(f"manifest has no scenes in split {args.split!r}")
    cm = evaluate(state, scenes, _split_labels(args.labels))
    report = cm.report_json()
    if args.out:
        Path(args.out).write_text(report + "\n", encoding="utf-8")
    print(report)
    return 0


def _cmd_query(args) -> int:
    state = load_checkpoint(args.ckpt)
    scene = read_ply(args.scene)
    if args.anchors:
        result = run_query_fixed(state, scene, load_precomputed_anchors(args.anchors))
    else:
        result = run_query(state, scene, _split_labels(args.labels))
    write_ply(colored_scene(scene, result), args.out)
    hist = np.bincount(result.assignments, minlength=len(result.labels))
    summary = ", ".join(f"{n}={int(c)}" for n, c in zip(result.labels, hist))
    print(f"wrote {args.out} ({scene.n} points; {summary}; {result.timing_ms:.1f} ms)")
    return 0


def _cmd_export_anchors(args) -> int:
    state = load_checkpoint(args.ckpt)
    matrix = state.anchors_for(_split_labels(args.labels))
    write_anchors(matrix, args.out, binary=args.binary)
    print(f"wrote {len(matrix)} anchors ({matrix.dim} dims) to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceContext, create_app

    context = ServiceContext.load(args.ckpt, args.manifest)
    app = create_app(context, ui_dir=args.ui)
    host = os.environ.get("MANTRA_BIND", "127.0.0.1")
    uvicorn.run(app, host=host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "query": _cmd_query,
    "export-anchors": _cmd_export_anchors,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except MantraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
