"""Scene manifests: which PLY files belong to which source and split."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateScene, EmptyManifest, IoError, ParseError
from .labels import LabelSet, register_source
from .ply import read_ply
from .scene import Scene

_SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    scene_id: str
    source_id: str
    path: Path
    split: str


@dataclass(frozen=True)
class SceneManifest:
    entries: tuple[ManifestEntry, ...]
    sources: tuple[LabelSet, ...]

    def for_split(self, split: str | None = None) -> tuple[ManifestEntry, ...]:
        if split is None:
            return self.entries
        return tuple(e for e in self.entries if e.split == split)

    def entry(self, scene_id: str) -> ManifestEntry | None:
        for e in self.entries:
            if e.scene_id == scene_id:
                return e
        return None

    def load_scene(self, entry: ManifestEntry) -> Scene:
        scene = read_ply(entry.path)
        return Scene(scene.points, scene.labels, entry.source_id, entry.scene_id)

    def load_split(self, split: str | None = None) -> list[Scene]:
        return [self.load_scene(e) for e in self.for_split(split)]


def save_manifest(manifest: SceneManifest, path: str | Path) -> None:
    root = Path(path).resolve().parent

    def _stored_path(p: Path) -> str:
        resolved = p.resolve()
        try:
            return str(resolved.relative_to(root))
        except ValueError:  # outside the manifest tree: keep absolute
            return str(resolved)

    payload = {
        "sources": [{"id": s.source_id, "labels": list(s.labels)} for s in manifest.sources],
        "scenes": [
            {
                "scene_id": e.scene_id,
                "source_id": e.source_id,
                "path": _stored_path(e.path),
                "split": e.split,
            }
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_manifest(path: str | Path) -> SceneManifest:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc

    try:
        raw_sources = payload["sources"]
        raw_scenes = payload["scenes"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{path}: missing sources/scenes sections") from exc
    if not raw_scenes:
        raise EmptyManifest(f"{path}: no scenes listed")

    sources = tuple(register_source(s["id"], s["labels"]) for s in raw_sources)
    known_sources = {s.source_id for s in sources}

    entries = []
    seen: set[str] = set()
    for raw in raw_scenes:
        try:
            scene_id, source_id = raw["scene_id"], raw["source_id"]
            rel, split = raw["path"], raw["split"]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: malformed scene entry {raw!r}") from exc
        if scene_id in seen:
            raise DuplicateScene(f"{path}: scene_id {scene_id!r} listed twice")
        seen.add(scene_id)
        if split not in _SPLITS:
            raise ParseError(f"{path}: bad split {split!r} for scene {scene_id!r}")
        if source_id not in known_sources:
            raise ParseError(f"{path}: scene {scene_id!r} references unknown source {source_id!r}")
        file_path = Path(rel)
        if not file_path.is_absolute():
            file_path = path.parent / file_path
        if not file_path.exists():
            raise IoError(f"{path}: scene file {file_path} does not exist")
        entries.append(ManifestEntry(scene_id, source_id, file_path, split))
    return SceneManifest(entries=tuple(entries), sources=sources)
