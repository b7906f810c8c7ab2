"""Deterministic fixture builders shared by unit and acceptance tests."""

from __future__ import annotations

import random

from kvcanon.corpus import KVAnnotation, Page

BASE_ALPHABET = "胸腹头颈肩腰背膝踝肘腕髋骨肌腱膜窦腔室瓣管袢节段叶峡尖底缘壁襞嵴粗隆棘沟裂孔凹"
PERTURB_POOL = "录单表图谱志稿册页篇"


def planted_alias_fixture(
    n_groups: int = 60,
    n_singletons: int = 10,
    seed: int = 2024,
    min_base: int = 12,
    max_base: int = 16,
) -> tuple[list[set[str]], list[tuple[str, int]]]:
    """Groups of surface keys built from normalization-stable one-character
    perturbations (suffix/prefix/insertion/doubling) of random bases.

    Bases are long enough that within-group average cosine clears the default
    clustering threshold with margin while cross-group similarity stays tiny.
    Returns (planted groups incl. singletons, flat [(key, freq)] list).
    """
    rng = random.Random(f"fixture:{seed}")
    used: set[str] = set()

    def fresh_base() -> str:
        while True:
            base = "".join(
                rng.choice(BASE_ALPHABET) for _ in range(rng.randint(min_base, max_base))
            )
            if base not in used:
                return base

    groups: list[set[str]] = []
    for _ in range(n_groups):
        base = fresh_base()
        members = {base}
        for _ in range(rng.randint(1, 2)):
            for _attempt in range(20):
                kind = rng.choice(("suffix", "prefix", "insert", "double"))
                extra = rng.choice(PERTURB_POOL)
                if kind == "suffix":
                    candidate = base + extra
                elif kind == "prefix":
                    candidate = extra + base
                elif kind == "insert":
                    pos = rng.randint(1, len(base) - 1)
                    candidate = base[:pos] + extra + base[pos:]
                else:
                    pos = rng.randint(0, len(base) - 1)
                    candidate = base[: pos + 1] + base[pos] + base[pos + 1 :]
                if candidate not in used and candidate not in members:
                    members.add(candidate)
                    break
        used.update(members)
        groups.append(members)
    for _ in range(n_singletons):
        base = fresh_base()
        used.add(base)
        groups.append({base})
    flat = [(key, rng.randint(1, 50)) for group in groups for key in sorted(group)]
    return groups, flat


def page_with_pairs(
    page_id: str,
    pairs: list[tuple[str, str, str | None]],
    report_id: str | None = None,
    delim: str = "：",
) -> Page:
    """Build a one-pair-per-line page from (surface_key, value, canonical) triples."""
    lines = []
    annotations = []
    offset = 0
    for surface, value, canonical in pairs:
        key_span = (offset, offset + len(surface))
        value_start = key_span[1] + len(delim)
        value_span = (value_start, value_start + len(value))
        lines.append(surface + delim + value)
        annotations.append(
            KVAnnotation(
                key_span=key_span,
                value_span=value_span,
                surface_key=surface,
                canonical_key=canonical,
            )
        )
        offset = value_span[1] + 1
    return Page(
        report_id=report_id or page_id.split("-")[0],
        page_id=page_id,
        text="\n".join(lines),
        annotations=tuple(annotations),
    )
