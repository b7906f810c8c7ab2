"""Key-conditioned query construction and budget-based page chunking."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .inventory import KeyInventory

VALUE_TEMPLATE = "Extract the value of the key {key}."
VALUE_TEMPLATE_ALIASES = (
    "Extract the value of the key {key}, and the key in the text could be "
    "the variants of the canonical key, such as, {aliases}."
)
KEY_TEMPLATE = "Find the surface form of the key {key} as it appears in the text."
KEY_TEMPLATE_ALIASES = (
    "Find the surface form of the key {key} as it appears in the text; it "
    "could be one of the variants of the canonical key, such as, {aliases}."
)


@dataclass(frozen=True)
class ExtractionQuery:
    canonical_key: str
    kind: str  # "value" | "key"
    aliases_included: tuple[str, ...]
    rendered_text: str


def _ordered_aliases(inv: KeyInventory, canonical: str, max_aliases: int) -> tuple[str, ...]:
    entry = inv.entry_for(canonical)
    ranked = sorted(entry.aliases, key=lambda a: (-entry.alias_counts.get(a, 0), a))
    return tuple(ranked[: max(0, max_aliases)])


def build_value_query(inv: KeyInventory, canonical: str, max_aliases: int = 5) -> ExtractionQuery:
    """Value-extraction query; includes up to ``max_aliases`` most frequent aliases."""
    aliases = _ordered_aliases(inv, canonical, max_aliases)
    if aliases:
        rendered = VALUE_TEMPLATE_ALIASES.format(key=canonical, aliases=", ".join(aliases))
    else:
        rendered = VALUE_TEMPLATE.format(key=canonical)
    return ExtractionQuery(canonical, "value", aliases, rendered)


def build_key_query(inv: KeyInventory, canonical: str, max_aliases: int = 5) -> ExtractionQuery:
    """Query for the on-page surface form (header) naming the canonical key."""
    aliases = _ordered_aliases(inv, canonical, max_aliases)
    if aliases:
        rendered = KEY_TEMPLATE_ALIASES.format(key=canonical, aliases=", ".join(aliases))
    else:
        rendered = KEY_TEMPLATE.format(key=canonical)
    return ExtractionQuery(canonical, "key", aliases, rendered)


@dataclass(frozen=True)
class Chunk:
    """A budget-limited window of a page; ``origin`` is its global char offset."""

    origin: int
    text: str


def chunk_page(text: str, budget: int, overlap: int = 0) -> list[Chunk]:
    """Fixed-stride chunking: chunk k starts at k*(budget-overlap).

    Consecutive chunks overlap by exactly ``overlap`` characters (the final
    chunk may be shorter); every character is covered at least once.
    """
    if budget <= 0:
        raise ConfigError(f"chunk budget must be positive, got {budget}")
    if not (0 <= overlap < budget):
        raise ConfigError(f"overlap must satisfy 0 <= overlap < budget, got {overlap}")
    chunks: list[Chunk] = []
    pos = 0
    while True:
        chunks.append(Chunk(origin=pos, text=text[pos : pos + budget]))
        if pos + budget >= len(text):
            break
        pos += budget - overlap
    return chunks
