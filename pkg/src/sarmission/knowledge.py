"""Curated tactical knowledge with tag-path retrieval.

Entries are organized by hierarchical tag paths (e.g. ``clue-location/trail``)
and retrieved per pipeline stage by tag overlap first, keyword overlap second.
Scoring is fully deterministic; an embedding-based scorer could be slotted in
behind the same interface later.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import SarError

_WORD = re.compile(r"[a-z0-9]+")
_STOPWORDS = frozenset(
    "a an and are as at be by for from has if in into is it of on or the to with".split()
)


def tokenize(text: str) -> list[str]:
    return [w for w in _WORD.findall(text.lower()) if w not in _STOPWORDS]


@dataclass(frozen=True)
class KnowledgeEntry:
    id: str
    text: str
    tags: tuple[str, ...]
    applicable_stages: tuple[int, ...] = (3, 4, 5)
    source: str = "authored"

    def __post_init__(self) -> None:
        if not self.tags:
            raise SarError(f"knowledge entry {self.id!r} has no tags")


def _tag_score(query_tag: str, entry_tag: str) -> int:
    """Shared leading path segments, doubled for an exact path match."""
    q = query_tag.split("/")
    e = entry_tag.split("/")
    common = 0
    for a, b in zip(q, e):
        if a != b:
            break
        common += 1
    if common == 0:
        return 0
    return common * 2 if q == e else common


class KnowledgeBase:
    def __init__(self, entries: list[KnowledgeEntry]):
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise SarError("duplicate knowledge entry ids")
        self.entries = list(entries)

    @classmethod
    def load(cls, source: str | Path | list) -> "KnowledgeBase":
        if isinstance(source, Path):
            source = source.read_text()
        if isinstance(source, str):
            source = json.loads(source)
        entries = [
            KnowledgeEntry(
                id=e["id"],
                text=e["text"],
                tags=tuple(e["tags"]),
                applicable_stages=tuple(e.get("applicable_stages", (3, 4, 5))),
                source=e.get("source", "authored"),
            )
            for e in source
        ]
        return cls(entries)

    @classmethod
    def default(cls) -> "KnowledgeBase":
        return cls.load(Path(__file__).parent / "data" / "knowledge_base.json")

    def retrieve(
        self,
        query_tags: list[str],
        description: str = "",
        k: int = 3,
        stage: int | None = None,
    ) -> list[KnowledgeEntry]:
        """Top-k entries by (tag-path overlap, keyword overlap, id).

        Entries with zero tag overlap are never returned, even on strong
        keyword overlap: tags carry the stage semantics.
        """
        desc_tokens = set(tokenize(description))
        scored: list[tuple[int, int, str, KnowledgeEntry]] = []
        for entry in self.entries:
            if stage is not None and stage not in entry.applicable_stages:
                continue
            tag_score = sum(
                max((_tag_score(q, t) for t in entry.tags), default=0) for q in query_tags
            )
            if tag_score == 0:
                continue
            kw_score = len(desc_tokens.intersection(tokenize(entry.text)))
            scored.append((tag_score, kw_score, entry.id, entry))
        scored.sort(key=lambda row: (-row[0], -row[1], row[2]))
        return [entry for _, _, _, entry in scored[:k]]
