"""ASCII PLY reader/writer for labeled scenes.

Vertices carry x y z (float), red green blue (uchar), label (int, -1 for
unlabeled) and source (int index into source ids listed in header
comments).  Coordinates are written with six decimals, so a round trip
reproduces them to 1e-6; labels round-trip exactly.  Colors quantize to
8 bits.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import IoError, MissingProperty, ParseError
from .scene import Scene

_REQUIRED = ("x", "y", "z", "red", "green", "blue", "label", "source")


def write_ply(scene: Scene, path: str | Path) -> None:
    rgb8 = np.clip(np.round(scene.rgb * 255.0), 0, 255).astype(np.int64)
    lines = [
        "ply",
        "format ascii 1.0",
        f"comment scene_id {scene.scene_id}",
        f"comment source {scene.source_id}",
        f"element vertex {scene.n}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "property int label",
        "property int source",
        "end_header",
    ]
    xyz = scene.xyz
    labels = scene.labels
    for i in range(scene.n):
        lines.append(
            f"{xyz[i, 0]:.6f} {xyz[i, 1]:.6f} {xyz[i, 2]:.6f} "
            f"{rgb8[i, 0]} {rgb8[i, 1]} {rgb8[i, 2]} {labels[i]} 0"
        )
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_ply(path: str | Path) -> Scene:
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not ASCII PLY: {exc}") from exc

    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(f"{path}: missing 'ply' magic")

    n_vertices = None
    properties: list[str] = []
    scene_id, source_id = Path(path).stem, "unknown"
    body_start = None
    for idx, line in enumerate(lines[1:], start=1):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            if tok[1] != "ascii":
                raise ParseError(f"{path}: only ascii PLY is supported")
        elif tok[0] == "comment" and len(tok) >= 3:
            if tok[1] == "scene_id":
                scene_id = " ".join(tok[2:])
            elif tok[1] == "source":
                source_id = " ".join(tok[2:])
        elif tok[0] == "element":
            if tok[1] == "vertex":
                n_vertices = int(tok[2])
            else:
                raise ParseError(f"{path}: unsupported element {tok[1]!r}")
        elif tok[0] == "property":
            properties.append(tok[-1])
        elif tok[0] == "end_header":
            body_start = idx + 1
            break
    if body_start is None or n_vertices is None:
        raise ParseError(f"{path}: truncated header")
    for name in _REQUIRED:
        if name not in properties:
            raise MissingProperty(f"{path}: vertex property {name!r} missing")
    col = {name: properties.index(name) for name in _REQUIRED}

    body = [ln for ln in lines[body_start:] if ln.strip()]
    if len(body) != n_vertices:
        raise ParseError(f"{path}: expected {n_vertices} vertices, found {len(body)}")
    try:
        data = np.array([ln.split() for ln in body], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: malformed vertex row: {exc}") from exc
    if data.shape[1] != len(properties):
        raise ParseError(f"{path}: vertex rows do not match property count")

    points = np.empty((n_vertices, 6), dtype=np.float64)
    points[:, 0] = data[:, col["x"]]
    points[:, 1] = data[:, col["y"]]
    points[:, 2] = data[:, col["z"]]
    points[:, 3] = data[:, col["red"]] / 255.0
    points[:, 4] = data[:, col["green"]] / 255.0
    points[:, 5] = data[:, col["blue"]] / 255.0
    labels = data[:, col["label"]].astype(np.int64)
    return Scene(points=points, labels=labels, source_id=source_id, scene_id=scene_id)
