"""Frozen deterministic text encoder: label names (plus optional prompt
tokens) -> latent anchors.

The encoder is a stand-in for a large pretrained language model: token
embedding lookup, mean pooling over (prompt tokens ++ word tokens), then a
frozen affine map into the latent space.  It is never trained, but it is
differentiable with respect to the prompt tokens, which is what lets the
prompt network learn through it.

Two embedding tables ship with the package: a seeded random one (default)
and a hand-constructed fixture whose geometry places synonyms close and
unrelated words far, so zero-shot behaviour is testable without a real
language model.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import torch

from .anchors import AnchorMatrix
from .errors import DimensionMismatch
from .labels import normalize_label

DEFAULT_D_TOK = 32
DEFAULT_LATENT_DIM = 128
HASH_BUCKETS = 1024

# words with a dedicated embedding row; everything else hashes into buckets
DEFAULT_WORDS = (
    "wall", "floor", "ceiling", "ground",
    "chair", "seat", "stool",
    "table", "desk",
    "sofa", "couch",
    "bookcase", "bookshelf", "bookstack", "shelf",
    "board", "whiteboard", "white",
    "door", "window", "column", "beam",
    "clutter", "others", "other", "stuff",
    "lamp", "light", "furniture",
)

# fixture synonym groups: one latent direction per group
_FIXTURE_GROUPS = {
    "wall": ("wall",),
    "floor": ("floor", "ground"),
    "ceiling": ("ceiling",),
    "chair": ("chair", "seat", "stool"),
    "table": ("table", "desk"),
    "sofa": ("sofa", "couch"),
    "bookcase": ("bookcase", "bookshelf", "bookstack", "shelf"),
    "board": ("board", "whiteboard"),
    "door": ("door",),
    "window": ("window",),
    "clutter": ("clutter", "others", "other", "stuff"),
    "white": ("white",),
    "column": ("column", "beam"),
    "lamp": ("lamp", "light"),
}
_FIXTURE_DEVIATION = 0.18  # intra-group cosine = 1/(1+0.18^2) ~ 0.969


def stable_bucket(word: str, buckets: int = HASH_BUCKETS) -> int:
    """Deterministic hash bucket for out-of-table words (stable across runs)."""
    digest = hashlib.blake2s(word.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % buckets


@dataclass
class EmbeddingTable:
    """Token embedding rows for known words plus hash-bucket rows for the rest."""

    words: dict[str, int]
    rows: torch.Tensor     # (V, d_tok)
    buckets: torch.Tensor  # (B, d_tok)

    def __post_init__(self):
        if self.rows.shape[0] != len(self.words):
            raise DimensionMismatch("embedding rows do not match word list")
        if self.rows.shape[1] != self.buckets.shape[1]:
            raise DimensionMismatch("bucket dim differs from row dim")

    @property
    def d_tok(self) -> int:
        return int(self.rows.shape[1])

    @property
    def vocab_size(self) -> int:
        return int(self.rows.shape[0])

    def all_rows(self) -> torch.Tensor:
        return torch.cat([self.rows, self.buckets], dim=0)


@dataclass
class CompositionParams:
    """Frozen affine map from pooled token space to the latent space."""

    weight: torch.Tensor  # (d_tok, D)
    bias: torch.Tensor    # (D,)
    frozen: bool = True

    @property
    def latent_dim(self) -> int:
        return int(self.weight.shape[1])


def tokenize(name: str, table: EmbeddingTable) -> tuple[int, ...]:
    """Whitespace-split words to token ids; OOV words go to stable hash buckets.

    Bucket ids are offset by the table's vocab size, so every id indexes
    ``table.all_rows()`` directly.
    """
    name = normalize_label(name)
    ids = []
    for word in name.split(" "):
        if word in table.words:
            ids.append(table.words[word])
        else:
            ids.append(table.vocab_size + stable_bucket(word, table.buckets.shape[0]))
    return tuple(ids)


def _compose_anchors(
    names: tuple[str, ...],
    ids_per_label,
    prompt: torch.Tensor | None,
    table: EmbeddingTable,
    comp: CompositionParams,
) -> AnchorMatrix:
    if prompt is not None:
        if prompt.ndim != 2 or (prompt.shape[0] > 0 and prompt.shape[1] != table.d_tok):
            raise DimensionMismatch(
                f"prompt tokens {tuple(prompt.shape)} do not match token dim {table.d_tok}"
            )
        if prompt.shape[0] == 0:
            prompt = None
    all_rows = table.all_rows()
    anchors = []
    for ids in ids_per_label:
        vecs = all_rows[list(ids)]
        if prompt is not None:
            vecs = torch.cat([prompt, vecs], dim=0)
        anchors.append(vecs.mean(dim=0) @ comp.weight + comp.bias)
    return AnchorMatrix(names, torch.stack(anchors))


def encode_labels(
    labels,
    prompt: torch.Tensor | None,
    table: EmbeddingTable,
    comp: CompositionParams,
) -> AnchorMatrix:
    """Embed label names, optionally conditioned on scene prompt tokens.

    Each label's token vectors are the prompt rows (if any) followed by its
    word embedding rows; the anchor is mean-pool then the frozen affine map.
    Gradients flow to ``prompt`` only; the table and the map are constants.
    """
    names = tuple(normalize_label(name) for name in labels)
    ids = [tokenize(name, table) for name in names]
    return _compose_anchors(names, ids, prompt, table, comp)


class TextEncoder:
    """Bundles a table and composition params; caches label tokenization."""

    def __init__(self, table: EmbeddingTable, comp: CompositionParams, kind: str):
        self.table = table
        self.comp = comp
        self.kind = kind  # "seeded" | "fixture" | custom
        self._token_cache: dict[str, tuple[int, ...]] = {}

    @property
    def d_tok(self) -> int:
        return self.table.d_tok

    @property
    def latent_dim(self) -> int:
        return self.comp.latent_dim

    def token_ids(self, name: str) -> tuple[int, ...]:
        name = normalize_label(name)
        if name not in self._token_cache:
            self._token_cache[name] = tokenize(name, self.table)
        return self._token_cache[name]

    def encode(self, labels, prompt: torch.Tensor | None = None) -> AnchorMatrix:
        # anchors are recomputed per scene (prompts are scene-conditioned),
        # but tokenization is cached
        names = tuple(normalize_label(name) for name in labels)
        ids = [self.token_ids(name) for name in names]
        return _compose_anchors(names, ids, prompt, self.table, self.comp)

    def state_tensors(self) -> dict[str, torch.Tensor]:
        return {
            "encoder.rows": self.table.rows,
            "encoder.buckets": self.table.buckets,
            "encoder.weight": self.comp.weight,
            "encoder.bias": self.comp.bias,
        }


def seeded_encoder(
    seed: int = 0,
    d_tok: int = DEFAULT_D_TOK,
    latent_dim: int = DEFAULT_LATENT_DIM,
    words=DEFAULT_WORDS,
    buckets: int = HASH_BUCKETS,
) -> TextEncoder:
    """Random (but fully seeded) encoder; the default outside tests."""
    gen = torch.Generator().manual_seed(seed)
    scale = d_tok ** -0.5
    rows = torch.randn(len(words), d_tok, generator=gen, dtype=torch.float64) * scale
    bucket_rows = torch.randn(buckets, d_tok, generator=gen, dtype=torch.float64) * scale
    weight = torch.randn(d_tok, latent_dim, generator=gen, dtype=torch.float64) * scale
    bias = torch.randn(latent_dim, generator=gen, dtype=torch.float64) * 0.01
    table = EmbeddingTable({w: i for i, w in enumerate(words)}, rows, bucket_rows)
    return TextEncoder(table, CompositionParams(weight, bias), kind="seeded")


def fixture_encoder(
    d_tok: int = DEFAULT_D_TOK,
    latent_dim: int = DEFAULT_LATENT_DIM,
    buckets: int = HASH_BUCKETS,
) -> TextEncoder:
    """Hand-constructed table with controlled synonym geometry.

    Every synonym group shares a basis direction; members deviate by a small
    orthogonal component so they are close but not identical.  "furniture"
    sits on the normalized sum of the chair/table/sofa/bookcase directions,
    giving the coarse-over-fine hierarchy a measurable pull.  The promised
    geometry (synonyms >= 0.95 cosine, unrelated <= 0.2) is asserted at
    construction time.
    """
    if d_tok < 2 * len(_FIXTURE_GROUPS) + 2:
        raise DimensionMismatch(f"fixture table needs d_tok >= {2 * len(_FIXTURE_GROUPS) + 2}")
    words: dict[str, int] = {}
    vec_rows: list[torch.Tensor] = []
    half = d_tok // 2
    for g, (group, members) in enumerate(_FIXTURE_GROUPS.items()):
        for m, word in enumerate(members):
            vec = torch.zeros(d_tok, dtype=torch.float64)
            vec[g] = 1.0
            if m > 0:  # first member sits exactly on the group direction
                vec[half + (g + m) % half] = _FIXTURE_DEVIATION
            vec = vec / torch.linalg.vector_norm(vec)
            words[word] = len(vec_rows)
            vec_rows.append(vec)
    group_index = {name: i for i, name in enumerate(_FIXTURE_GROUPS)}
    furniture = torch.zeros(d_tok, dtype=torch.float64)
    for part in ("chair", "table", "sofa", "bookcase"):
        furniture[group_index[part]] = 1.0
    words["furniture"] = len(vec_rows)
    vec_rows.append(furniture / torch.linalg.vector_norm(furniture))

    gen = torch.Generator().manual_seed(7)
    bucket_rows = torch.randn(buckets, d_tok, generator=gen, dtype=torch.float64)
    bucket_rows = bucket_rows / torch.linalg.vector_norm(bucket_rows, dim=1, keepdim=True)

    weight = torch.zeros(d_tok, latent_dim, dtype=torch.float64)
    for i in range(min(d_tok, latent_dim)):
        weight[i, i] = 1.0
    bias = torch.zeros(latent_dim, dtype=torch.float64)

    table = EmbeddingTable(words, torch.stack(vec_rows), bucket_rows)
    enc = TextEncoder(table, CompositionParams(weight, bias), kind="fixture")
    _check_fixture_geometry(enc)
    return enc


def _check_fixture_geometry(enc: TextEncoder) -> None:
    def cos(a: str, b: str) -> float:
        t = enc.encode([a, b]).T
        t = t / torch.linalg.vector_norm(t, dim=1, keepdim=True)
        return float(t[0] @ t[1])

    assert cos("sofa", "couch") >= 0.95, "fixture synonym geometry violated"
    assert cos("sofa", "floor") <= 0.2, "fixture contrast geometry violated"


def make_encoder(kind: str, seed: int = 0, d_tok: int = DEFAULT_D_TOK,
                 latent_dim: int = DEFAULT_LATENT_DIM) -> TextEncoder:
    if kind == "fixture":
        return fixture_encoder(d_tok=d_tok, latent_dim=latent_dim)
    if kind == "seeded":
        return seeded_encoder(seed=seed, d_tok=d_tok, latent_dim=latent_dim)
    raise ValueError(f"unknown encoder kind {kind!r}")
