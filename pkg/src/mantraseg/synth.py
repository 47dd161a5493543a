"""Synthetic desk-scale indoor scenes with controllable covariate shift.

Each room is a floor plane, four wall segments, and a few parametric
furniture archetypes (boxes and cylinders composed into chair / table /
sofa / bookcase shapes) sampled to surface points.  Sources differ in what
they call each archetype (their label set) and in shift knobs: Gaussian
coordinate jitter, angular-sector dropout (missing points, as if occluded
from the scan position), sampling density, and color jitter.  Generation is
fully deterministic given the config seed, and the geometry stream never
depends on label names, so two sources with matching knobs but different
vocabularies produce identical point clouds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigInvalid
from .labels import normalize_label
from .scene import Scene

CANONICAL_ARCHETYPES = ("floor", "wall", "chair", "table", "sofa", "bookcase")

_BASE_COLORS = {
    "floor": (0.55, 0.52, 0.48),
    "wall": (0.86, 0.85, 0.80),
    "chair": (0.48, 0.30, 0.18),
    "table": (0.62, 0.44, 0.26),
    "sofa": (0.25, 0.34, 0.58),
    "bookcase": (0.30, 0.20, 0.12),
}
# scans return denser points on nearby furniture than on bare walls
_DENSITY_BOOST = {"floor": 1.0, "wall": 1.0, "chair": 4.0, "table": 4.0, "sofa": 4.0, "bookcase": 4.0}

_WALL_HEIGHT = 2.6


@dataclass
class SourceConfig:
    source_id: str
    label_set: tuple[str, ...]
    rooms: int
    points_per_room: int
    noise_sigma: float = 0.0
    dropout_rate: float = 0.0
    density_scale: float = 1.0
    color_jitter: float = 0.0
    seed: int = 0
    archetype_names: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.archetype_names:
            self.archetype_names = {a: a for a in CANONICAL_ARCHETYPES}
        self.label_set = tuple(normalize_label(n) for n in self.label_set)
        self.archetype_names = {
            a: normalize_label(n) for a, n in self.archetype_names.items()
        }
        if self.rooms < 1:
            raise ConfigInvalid("rooms must be >= 1")
        if self.points_per_room < 64:
            raise ConfigInvalid("points_per_room must be >= 64")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigInvalid("dropout_rate must lie in [0, 1)")
        if not 0.0 <= self.color_jitter < 1.0:
            raise ConfigInvalid("color_jitter must lie in [0, 1)")
        if self.noise_sigma < 0.0:
            raise ConfigInvalid("noise_sigma must be >= 0")
        if self.density_scale <= 0.0:
            raise ConfigInvalid("density_scale must be > 0")
        if set(self.archetype_names) != set(CANONICAL_ARCHETYPES):
            raise ConfigInvalid("archetype_names must map every canonical archetype")
        mapped = set(self.archetype_names.values())
        if not mapped <= set(self.label_set):
            raise ConfigInvalid(f"archetype names {mapped - set(self.label_set)} missing from label_set")
        if not set(self.label_set) <= mapped:
            raise ConfigInvalid(f"labels {set(self.label_set) - mapped} are never generated")


# ---------------------------------------------------------------------------
# surface primitives: each sampler returns (n, 3) points


def _sample_rect(rng, n, origin, u_vec, v_vec):
    u = rng.uniform(size=(n, 1))
    v = rng.uniform(size=(n, 1))
    return np.asarray(origin) + u * np.asarray(u_vec) + v * np.asarray(v_vec)


def _rect_area(u_vec, v_vec):
    return float(np.linalg.norm(np.cross(u_vec, v_vec)))


def _sample_box(rng, n, center, size):
    sx, sy, sz = size
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    face = rng.choice(6, size=n, p=areas / areas.sum())
    a = rng.uniform(-0.5, 0.5, size=n)
    b = rng.uniform(-0.5, 0.5, size=n)
    pts = np.empty((n, 3))
    sign = np.where(face % 2 == 0, 0.5, -0.5)
    axis = face // 2
    for ax in range(3):
        sel = axis == ax
        dims = [d for d in range(3) if d != ax]
        pts[sel, ax] = sign[sel] * size[ax]
        pts[sel, dims[0]] = a[sel] * size[dims[0]]
        pts[sel, dims[1]] = b[sel] * size[dims[1]]
    return pts + np.asarray(center)


def _box_area(size):
    sx, sy, sz = size
    return 2.0 * (sx * sy + sy * sz + sz * sx)


def _sample_cylinder(rng, n, center, radius, height):
    side = 2.0 * math.pi * radius * height
    caps = math.pi * radius**2
    total = side + 2 * caps
    kind = rng.choice(3, size=n, p=[side / total, caps / total, caps / total])
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    r = radius * np.sqrt(rng.uniform(size=n))
    z = rng.uniform(-0.5, 0.5, size=n) * height
    pts = np.empty((n, 3))
    on_side = kind == 0
    pts[on_side, 0] = radius * np.cos(theta[on_side])
    pts[on_side, 1] = radius * np.sin(theta[on_side])
    pts[on_side, 2] = z[on_side]
    for k, zs in ((1, 0.5), (2, -0.5)):
        sel = kind == k
        pts[sel, 0] = r[sel] * np.cos(theta[sel])
        pts[sel, 1] = r[sel] * np.sin(theta[sel])
        pts[sel, 2] = zs * height
    return pts + np.asarray(center)


def _cylinder_area(radius, height):
    return 2.0 * math.pi * radius * height + 2.0 * math.pi * radius**2


# ---------------------------------------------------------------------------
# archetype instances: lists of (sampler, area) closures


def _chair(at, scale):
    sx, sy = 0.45 * scale, 0.45 * scale
    seat_h = 0.44 * scale
    parts = [
        ("box", (at[0], at[1], seat_h), (sx, sy, 0.07 * scale)),
        ("box", (at[0], at[1] - sy / 2, seat_h + 0.28 * scale), (sx, 0.06 * scale, 0.55 * scale)),
    ]
    return parts


def _table(at, scale):
    sx, sy, top_h = 1.4 * scale, 0.8 * scale, 0.72 * scale
    parts = [("box", (at[0], at[1], top_h), (sx, sy, 0.05 * scale))]
    for dx in (-1, 1):
        for dy in (-1, 1):
            parts.append(
                ("cyl", (at[0] + dx * (sx / 2 - 0.06), at[1] + dy * (sy / 2 - 0.06), top_h / 2), (0.04 * scale, top_h))
            )
    return parts


def _sofa(at, scale):
    sx, sy = 1.8 * scale, 0.85 * scale
    parts = [
        ("box", (at[0], at[1], 0.24 * scale), (sx, sy, 0.48 * scale)),
        ("box", (at[0], at[1] - sy / 2 + 0.1, 0.65 * scale), (sx, 0.2 * scale, 0.5 * scale)),
        ("box", (at[0] - sx / 2 + 0.11, at[1], 0.55 * scale), (0.22 * scale, sy, 0.25 * scale)),
        ("box", (at[0] + sx / 2 - 0.11, at[1], 0.55 * scale), (0.22 * scale, sy, 0.25 * scale)),
    ]
    return parts


def _bookcase(at, scale):
    return [("box", (at[0], at[1], 0.95 * scale), (0.9 * scale, 0.30 * scale, 1.9 * scale))]


_FURNITURE_BUILDERS = {"chair": _chair, "table": _table, "sofa": _sofa, "bookcase": _bookcase}


def _room_surfaces(rng):
    """Lay out one room; returns list of (archetype, kind, params, area)."""
    w = rng.uniform(4.5, 6.5)
    l = rng.uniform(4.5, 6.5)
    surfaces = [
        ("floor", "rect", ((0, 0, 0), (w, 0, 0), (0, l, 0)), w * l),
        ("wall", "rect", ((0, 0, 0), (w, 0, 0), (0, 0, _WALL_HEIGHT)), w * _WALL_HEIGHT),
        ("wall", "rect", ((0, l, 0), (w, 0, 0), (0, 0, _WALL_HEIGHT)), w * _WALL_HEIGHT),
        ("wall", "rect", ((0, 0, 0), (0, l, 0), (0, 0, _WALL_HEIGHT)), l * _WALL_HEIGHT),
        ("wall", "rect", ((w, 0, 0), (0, l, 0), (0, 0, _WALL_HEIGHT)), l * _WALL_HEIGHT),
    ]
    counts = {
        "chair": 1 + int(rng.integers(0, 3)),
        "table": 1,
        "sofa": 1 + int(rng.integers(0, 2)),
        "bookcase": 1,
    }
    for archetype, count in counts.items():
        for _ in range(count):
            at = (rng.uniform(1.2, w - 1.2), rng.uniform(1.2, l - 1.2))
            scale = rng.uniform(0.9, 1.1)
            for kind, center, dims in _FURNITURE_BUILDERS[archetype](at, scale):
                if kind == "box":
                    area = _box_area(dims)
                else:
                    area = _cylinder_area(*dims)
                surfaces.append((archetype, kind, (center, dims), area))
    return surfaces, (w, l)


def _generate_room(config: SourceConfig, room: int) -> Scene:
    rng = np.random.default_rng([config.seed, room])
    surfaces, (w, l) = _room_surfaces(rng)

    total = max(64, int(round(config.points_per_room * config.density_scale)))
    weights = np.array([area * _DENSITY_BOOST[arch] for arch, _, _, area in surfaces])
    counts = rng.multinomial(total, weights / weights.sum())

    name_to_local = {name: i for i, name in enumerate(config.label_set)}
    chunks, label_chunks, color_chunks = [], [], []
    for (archetype, kind, params, _area), n in zip(surfaces, counts):
        if n == 0:
            continue
        if kind == "rect":
            origin, u_vec, v_vec = params
            pts = _sample_rect(rng, n, origin, u_vec, v_vec)
        elif kind == "box":
            pts = _sample_box(rng, n, *params)
        else:
            center, (radius, height) = params
            pts = _sample_cylinder(rng, n, center, radius, height)
        chunks.append(pts)
        local = name_to_local[config.archetype_names[archetype]]
        label_chunks.append(np.full(n, local, dtype=np.int64))
        base = np.array(_BASE_COLORS[archetype])
        brightness = rng.uniform(0.88, 1.12)
        color_chunks.append(np.tile(base * brightness, (n, 1)))

    xyz = np.concatenate(chunks)
    labels = np.concatenate(label_chunks)
    rgb = np.concatenate(color_chunks)

    # occlusion: drop everything inside a random angular wedge seen from the
    # room center; wedge width is dropout_rate of the full circle
    if config.dropout_rate > 0.0:
        theta0 = rng.uniform(0.0, 2.0 * math.pi)
        width = config.dropout_rate * 2.0 * math.pi
        angles = np.mod(np.arctan2(xyz[:, 1] - l / 2, xyz[:, 0] - w / 2) - theta0, 2.0 * math.pi)
        keep = angles >= width
        if keep.any():
            xyz, labels, rgb = xyz[keep], labels[keep], rgb[keep]

    if config.noise_sigma > 0.0:
        xyz = xyz + rng.normal(0.0, config.noise_sigma, size=xyz.shape)

    if config.color_jitter > 0.0:
        rgb = rgb + rng.uniform(-config.color_jitter, config.color_jitter, size=rgb.shape)
    rgb = np.clip(rgb, 0.0, 1.0)

    return Scene(
        points=np.concatenate([xyz, rgb], axis=1),
        labels=labels,
        source_id=config.source_id,
        scene_id=f"{config.source_id}-{room:03d}",
    )


def generate_source(config: SourceConfig) -> list[Scene]:
    """All rooms of one source.  Bit-identical for identical configs."""
    return [_generate_room(config, room) for room in range(config.rooms)]


# ---------------------------------------------------------------------------
# presets mirroring a clean simulated source and two noisy scanned ones

_FINE_LABELS = ("wall", "floor", "chair", "table", "sofa", "bookcase")
_SYNONYM_NAMES = {
    "wall": "wall", "floor": "floor",
    "chair": "seat", "table": "desk", "sofa": "couch", "bookcase": "bookshelf",
}
_COARSE_NAMES = {
    "wall": "wall", "floor": "floor",
    "chair": "furniture", "table": "furniture",
    "sofa": "furniture", "bookcase": "furniture",
}

PRESETS = {
    "synth-clean": dict(
        label_set=_FINE_LABELS, noise_sigma=0.0, dropout_rate=0.0, color_jitter=0.0
    ),
    "synth-noisy-a": dict(
        label_set=tuple(_SYNONYM_NAMES[a] for a in _FINE_LABELS),
        archetype_names=_SYNONYM_NAMES,
        noise_sigma=0.01, dropout_rate=0.10, color_jitter=0.05,
    ),
    "synth-noisy-b": dict(
        label_set=("wall", "floor", "furniture"),
        archetype_names=_COARSE_NAMES,
        noise_sigma=0.005, dropout_rate=0.05, color_jitter=0.03,
    ),
}


def preset_config(name: str, rooms: int = 6, points_per_room: int = 1024, seed: int = 0,
                  **overrides) -> SourceConfig:
    if name not in PRESETS:
        raise ConfigInvalid(f"unknown preset {name!r} (have {sorted(PRESETS)})")
    kwargs = dict(PRESETS[name])
    kwargs.update(overrides)
    return SourceConfig(
        source_id=kwargs.pop("source_id", name.replace("-", "_")),
        rooms=rooms, points_per_room=points_per_room, seed=seed, **kwargs,
    )
