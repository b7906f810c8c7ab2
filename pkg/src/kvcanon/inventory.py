"""Versioned canonical-key inventory: alias map, lookup, restriction views, coverage.

Inventories are immutable snapshots; every mutating operation returns a new
inventory with ``version + 1`` (or the same object when it is a no-op).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Page
from .errors import ConflictError, ValidationError
from .normalize import normalize_key

COVERAGE_MODES = ("occurrence", "type", "surface")


@dataclass(frozen=True)
class CanonicalKeyEntry:
    """One canonical key with its alias set and training-split frequency.

    ``frequency`` counts occurrences of any surface form of this entry;
    ``alias_counts`` optionally breaks the alias share down per surface form
    (used to order aliases in query templates).
    """

    canonical: str
    aliases: frozenset[str] = frozenset()
    frequency: int = 0
    short_field: bool = False
    alias_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.canonical in self.aliases:
            raise ConflictError(f"canonical {self.canonical!r} listed among its own aliases")

    def surface_forms(self) -> set[str]:
        return {self.canonical, *self.aliases}


@dataclass(frozen=True)
class KeyInventory:
    version: int = 0
    entries: tuple[CanonicalKeyEntry, ...] = ()
    restriction: Mapping[str, object] | None = None

    def __post_init__(self) -> None:
        canonicals = {e.canonical for e in self.entries}
        if len(canonicals) != len(self.entries):
            raise ConflictError("duplicate canonical keys in inventory")
        lookup: dict[str, str] = {}
        for entry in self.entries:
            lookup[entry.canonical] = entry.canonical
        for entry in self.entries:
            for alias in entry.aliases:
                if alias in canonicals:
                    raise ConflictError(f"alias {alias!r} equals an existing canonical key")
                owner = lookup.get(alias)
                if owner is not None:
                    raise ConflictError(
                        f"surface form {alias!r} owned by both {owner!r} and {entry.canonical!r}"
                    )
                lookup[alias] = entry.canonical
        object.__setattr__(self, "_lookup", lookup)
        object.__setattr__(self, "_by_canonical", {e.canonical: e for e in self.entries})

    # -- queries ------------------------------------------------------------

    def canonicalize(self, key: str) -> str | None:
        """Resolve a normalized surface form to its canonical key (None if unknown)."""
        return self._lookup.get(key)  # type: ignore[attr-defined]

    def entry_for(self, canonical: str) -> CanonicalKeyEntry:
        try:
            return self._by_canonical[canonical]  # type: ignore[attr-defined]
        except KeyError:
            raise ValidationError(f"unknown canonical key {canonical!r}") from None

    def canonicals(self) -> set[str]:
        return set(self._by_canonical)  # type: ignore[attr-defined]

    def known_forms(self) -> set[str]:
        return set(self._lookup)  # type: ignore[attr-defined]

    def __contains__(self, canonical: str) -> bool:
        return canonical in self._by_canonical  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.entries)


def canonicalize(key: str, inv: KeyInventory) -> str | None:
    return inv.canonicalize(key)


def register_canonical(inv: KeyInventory, entry: CanonicalKeyEntry) -> KeyInventory:
    """Add a canonical key; no-op if an identical-or-wider entry already exists."""
    existing = None
    if entry.canonical in inv:
        existing = inv.entry_for(entry.canonical)
        if entry.aliases <= existing.aliases:
            return inv
        raise ConflictError(
            f"canonical {entry.canonical!r} already registered; add aliases individually"
        )
    for form in entry.surface_forms():
        owner = inv.canonicalize(form)
        if owner is not None:
            raise ConflictError(f"surface form {form!r} already owned by {owner!r}")
    return KeyInventory(version=inv.version + 1, entries=inv.entries + (entry,))


def register_alias(
    inv: KeyInventory, canonical: str, alias: str, count: int = 0
) -> KeyInventory:
    """Attach ``alias`` to ``canonical``; idempotent when already attached."""
    entry = inv.entry_for(canonical)
    if alias in entry.aliases:
        return inv
    owner = inv.canonicalize(alias)
    if owner is not None:
        raise ConflictError(f"alias {alias!r} already owned by {owner!r}")
    new_counts = dict(entry.alias_counts)
    if count:
        new_counts[alias] = new_counts.get(alias, 0) + count
    new_entry = CanonicalKeyEntry(
        canonical=entry.canonical,
        aliases=entry.aliases | {alias},
        frequency=entry.frequency,
        short_field=entry.short_field,
        alias_counts=new_counts,
    )
    entries = tuple(new_entry if e.canonical == canonical else e for e in inv.entries)
    return KeyInventory(version=inv.version + 1, entries=entries)


def detect_novel_keys(observed: Iterable[str], inv: KeyInventory) -> set[str]:
    """Observed normalized surface forms not present in any alias set or canonical."""
    return set(observed) - inv.known_forms()


def ranked_entries(inv: KeyInventory) -> list[CanonicalKeyEntry]:
    return sorted(inv.entries, key=lambda e: (-e.frequency, e.canonical))


def top_fraction_keys(inv: KeyInventory, fraction: float) -> KeyInventory:
    """Restriction view keeping the top ``fraction`` percent of entries by frequency.

    Ties break lexicographically on the canonical string. 67% of 3 entries
    keeps 2; 100% is the identity view. The version is preserved and the view
    is marked with a ``restriction`` record.
    """
    if not (0 < fraction <= 100):
        raise ValidationError(f"fraction must be in (0, 100], got {fraction}")
    keep = int(math.floor(fraction / 100.0 * len(inv.entries) + 1e-9))
    selected = tuple(ranked_entries(inv)[:keep])
    return KeyInventory(
        version=inv.version, entries=selected, restriction={"fraction": fraction}
    )


def coverage(inv_view: KeyInventory, eval_pages: Sequence[Page], mode: str = "occurrence") -> float:
    """Fraction of gold pairs (or key types) the inventory view accounts for.

    occurrence: gold pairs whose canonical key is in the view / all gold pairs
    carrying a canonical key. type: view canonicals ∩ observed canonicals over
    observed canonicals. surface: gold pairs whose surface key resolves via the
    view's alias map / all gold pairs (sensitive to alias additions).
    """
    if mode not in COVERAGE_MODES:
        raise ValidationError(f"unknown coverage mode {mode!r}")
    view_canonicals = inv_view.canonicals()
    if mode == "type":
        observed = {
            a.canonical_key
            for p in eval_pages
            for a in p.annotations
            if a.canonical_key is not None
        }
        if not observed:
            raise ValidationError("coverage undefined: no gold canonical keys in eval pages")
        return len(view_canonicals & observed) / len(observed)
    covered = 0
    total = 0
    for page in eval_pages:
        for ann in page.annotations:
            if mode == "occurrence":
                if ann.canonical_key is None:
                    continue
                total += 1
                covered += ann.canonical_key in view_canonicals
            else:  # surface
                total += 1
                resolved = inv_view.canonicalize(normalize_key(ann.surface_key))
                covered += resolved is not None and resolved in view_canonicals
    if total == 0:
        raise ValidationError("coverage undefined: no gold pairs in eval pages")
    return covered / total


def refresh_frequencies(inv: KeyInventory, pages: Sequence[Page]) -> KeyInventory:
    """Recount entry frequencies (and per-alias counts) from gold annotations."""
    form_counts: dict[str, int] = {}
    for page in pages:
        for ann in page.annotations:
            form_counts[ann.surface_key] = form_counts.get(ann.surface_key, 0) + 1
    entries = []
    for entry in inv.entries:
        alias_counts = {a: form_counts.get(a, 0) for a in entry.aliases if form_counts.get(a, 0)}
        freq = form_counts.get(entry.canonical, 0) + sum(alias_counts.values())
        entries.append(
            CanonicalKeyEntry(
                canonical=entry.canonical,
                aliases=entry.aliases,
                frequency=freq,
                short_field=entry.short_field,
                alias_counts=alias_counts,
            )
        )
    return KeyInventory(version=inv.version + 1, entries=tuple(entries))


# -- serialization ---------------------------------------------------------


def inventory_to_obj(inv: KeyInventory) -> dict:
    obj: dict = {
        "version": inv.version,
        "entries": [
            {
                "canonical": e.canonical,
                "aliases": sorted(e.aliases),
                "frequency": e.frequency,
                "short_field": e.short_field,
                **({"alias_counts": dict(sorted(e.alias_counts.items()))} if e.alias_counts else {}),
            }
            for e in inv.entries
        ],
    }
    if inv.restriction is not None:
        obj["restriction"] = dict(inv.restriction)
    return obj


def inventory_from_obj(obj: dict) -> KeyInventory:
    entries = tuple(
        CanonicalKeyEntry(
            canonical=e["canonical"],
            aliases=frozenset(e.get("aliases", [])),
            frequency=int(e.get("frequency", 0)),
            short_field=bool(e.get("short_field", False)),
            alias_counts=dict(e.get("alias_counts", {})),
        )
        for e in obj.get("entries", [])
    )
    return KeyInventory(
        version=int(obj.get("version", 0)),
        entries=entries,
        restriction=obj.get("restriction"),
    )


def save_inventory(inv: KeyInventory, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(inventory_to_obj(inv), ensure_ascii=False, indent=2), encoding="utf-8"
    )


def load_inventory(path: str | Path) -> KeyInventory:
    return inventory_from_obj(json.loads(Path(path).read_text(encoding="utf-8")))
