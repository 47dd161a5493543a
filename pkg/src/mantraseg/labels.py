"""Label sets of individual datasets and their union into one vocabulary.

Each data source annotates points with its own ordered list of label names.
Joint training needs a single global index, so the lists are merged by exact
name identity (after normalization) while remembering which source contributed
which name and how each source's local ids map into the union.  Synonyms are
deliberately NOT merged here: semantic proximity is the text encoder's job,
string identity is ours.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateLabel,
    DuplicateSource,
    EmptyLabelSet,
    InvalidLabel,
    LocalIdOutOfRange,
    ParseError,
    UnknownSource,
)

_WS = re.compile(r"\s+")


def normalize_label(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace to single spaces.

    Idempotent.  Raises InvalidLabel for names that are empty after
    normalization or contain non-whitespace control characters.
    """
    if not isinstance(text, str):
        raise InvalidLabel(f"label name must be a string, got {type(text).__name__}")
    name = _WS.sub(" ", text.strip()).lower()
    if not name:
        raise InvalidLabel(f"label name {text!r} is empty after normalization")
    if any(ord(ch) < 32 or ord(ch) == 127 for ch in name):
        raise InvalidLabel(f"label name {text!r} contains control characters")
    return name


@dataclass(frozen=True)
class LabelSet:
    """Ordered, normalized label names of one data source."""

    source_id: str
    labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.labels)

    def local_id(self, name: str) -> int:
        return self.labels.index(normalize_label(name))


def register_source(name: str, labels: Sequence[str]) -> LabelSet:
    """Validate and normalize one source's label list.

    Order is preserved; two inputs that normalize to the same name are a
    DuplicateLabel error, an empty list is an EmptyLabelSet error.
    """
    if not labels:
        raise EmptyLabelSet(f"source {name!r} has no labels")
    normalized = []
    seen: set[str] = set()
    for raw in labels:
        label = normalize_label(raw)
        if label in seen:
            raise DuplicateLabel(f"source {name!r}: {raw!r} collides with an earlier label")
        seen.add(label)
        normalized.append(label)
    return LabelSet(source_id=name, labels=tuple(normalized))


@dataclass(frozen=True)
class UnifiedVocabulary:
    """Union of several label sets with provenance and local->global maps.

    ``entries`` is the global index (position == global id), ordered by first
    appearance across the input sets.  ``per_source[source_id][local_id]``
    yields the global id.
    """

    entries: tuple[str, ...]
    provenance: Mapping[str, frozenset[str]]
    per_source: Mapping[str, tuple[int, ...]]
    sources: tuple[LabelSet, ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    def global_id(self, name: str) -> int:
        try:
            return self.entries.index(normalize_label(name))
        except ValueError:
            raise InvalidLabel(f"label {name!r} not in vocabulary") from None

    def source_mask(self, source_id: str) -> tuple[bool, ...]:
        """Boolean vector over entries marking the source's own labels."""
        if source_id not in self.per_source:
            raise UnknownSource(f"unknown source {source_id!r}")
        allowed = set(self.per_source[source_id])
        return tuple(i in allowed for i in range(len(self.entries)))

    def to_json(self) -> str:
        payload = {
            "sources": [
                {"id": s.source_id, "labels": list(s.labels)} for s in self.sources
            ]
        }
        return json.dumps(payload, indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def build_union(sets: Iterable[LabelSet]) -> UnifiedVocabulary:
    """Merge label sets into one vocabulary, first-appearance order.

    Identical names from different sources share one global id.  Duplicate
    source ids are rejected.  Deterministic: the same input order always
    produces the same vocabulary.
    """
    sets = tuple(sets)
    entries: list[str] = []
    index: dict[str, int] = {}
    provenance: dict[str, set[str]] = {}
    per_source: dict[str, tuple[int, ...]] = {}
    for label_set in sets:
        if label_set.source_id in per_source:
            raise DuplicateSource(f"source {label_set.source_id!r} registered twice")
        mapping = []
        for name in label_set.labels:
            if name not in index:
                index[name] = len(entries)
                entries.append(name)
            provenance.setdefault(name, set()).add(label_set.source_id)
            mapping.append(index[name])
        per_source[label_set.source_id] = tuple(mapping)
    return UnifiedVocabulary(
        entries=tuple(entries),
        provenance={k: frozenset(v) for k, v in provenance.items()},
        per_source=per_source,
        sources=sets,
    )


def local_to_global(vocab: UnifiedVocabulary, source_id: str, local_id: int) -> int:
    """Translate a source-local label id to its global id."""
    if source_id not in vocab.per_source:
        raise UnknownSource(f"unknown source {source_id!r}")
    mapping = vocab.per_source[source_id]
    if not 0 <= local_id < len(mapping):
        raise LocalIdOutOfRange(
            f"local id {local_id} out of range for source {source_id!r} (n={len(mapping)})"
        )
    return mapping[local_id]


def vocabulary_from_json(text: str) -> UnifiedVocabulary:
    """Rebuild a vocabulary from its serialized source lists."""
    try:
        payload = json.loads(text)
        raw_sources = payload["sources"]
        sets = [register_source(s["id"], s["labels"]) for s in raw_sources]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed vocabulary JSON: {exc}") from exc
    return build_union(sets)


def load_vocabulary(path: str | Path) -> UnifiedVocabulary:
    return vocabulary_from_json(Path(path).read_text(encoding="utf-8"))
