"""Synthetic page generator: long-tailed key usage, planted alias clusters, and
exact gold annotations, for experiments where no annotated corpus is available.

Key strings ("k0001" + optional one-character alias suffix) and value strings
draw from disjoint alphabets, and no key string is a substring of another
entry's forms, so span-level behaviour on clean pages is exactly predictable.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .corpus import KVAnnotation, Page
from .errors import ConfigError
from .inventory import CanonicalKeyEntry, KeyInventory

PII_KEY = "姓名"
PII_GIVEN_POOL = "伟芳娜敏静丽强磊军洋勇艳杰涛明超"
PII_SURNAME_POOL = "王李张刘陈杨赵黄周吴"

ALIAS_SUFFIX_POOL = "甲乙丙丁戊庚辛壬癸子丑寅卯辰午申酉戌亥仁义礼智信温良恭俭让"

VALUE_ALPHABET = (
    "阴阳高血压糖尿病史无未见异常正常轻度中重双侧左右肺肝肾脾胃肠心脑部区域组织细胞增生物示提"
    "0123456789"
)


@dataclass(frozen=True)
class GeneratorConfig:
    n_keys: int = 300
    zipf_exponent: float = 1.05
    mean_cluster_size: float = 1.8
    max_aliases_per_key: int = 6
    n_pages: int = 2000
    keys_per_page: tuple[int, int] = (3, 8)
    value_length: tuple[int, int] = (4, 14)
    short_value_length: tuple[int, int] = (2, 6)
    short_key_fraction: float = 0.2
    pages_per_report: tuple[int, int] = (1, 3)
    delimiters: tuple[str, ...] = ("：", ":", "： ", "＝")
    include_pii: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_keys < 1:
            raise ConfigError("n_keys must be >= 1")
        if self.n_pages < 0:
            raise ConfigError("n_pages must be >= 0")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be positive")
        if self.mean_cluster_size < 1.0:
            raise ConfigError("mean_cluster_size must be >= 1")
        for name in ("keys_per_page", "value_length", "short_value_length", "pages_per_report"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ConfigError(f"{name} range ({lo}, {hi}) invalid")
        if not self.delimiters:
            raise ConfigError("at least one delimiter required")
        if self.max_aliases_per_key > len(ALIAS_SUFFIX_POOL):
            raise ConfigError("max_aliases_per_key exceeds suffix pool")


@dataclass(frozen=True)
class SyntheticCorpus:
    pages: tuple[Page, ...]
    inventory: KeyInventory
    pii_selectors: dict[str, list[tuple[int, int]]] = field(default_factory=dict)


def zipf_weights(n: int, exponent: float) -> list[float]:
    """Normalized rank weights proportional to rank^-exponent."""
    raw = [r ** -exponent for r in range(1, n + 1)]
    total = sum(raw)
    return [w / total for w in raw]


def _sample_cluster_size(rng: random.Random, mean: float, cap: int) -> int:
    if mean <= 1.0:
        return 1
    p = 1.0 / mean
    size = 1 + int(math.floor(math.log(rng.random()) / math.log(1.0 - p)))
    return max(1, min(size, cap))


def _sample_distinct(rng: random.Random, weights: list[float], count: int) -> list[int]:
    chosen: list[int] = []
    population = range(len(weights))
    while len(chosen) < count:
        idx = rng.choices(population, weights=weights, k=1)[0]
        if idx not in chosen:
            chosen.append(idx)
    return chosen


def generate_synthetic_corpus(config: GeneratorConfig) -> SyntheticCorpus:
    """Generate pages of "surface_key<delim>value" lines plus the planted inventory.

    Canonical keys are named k0001..; the surface form of each slot is drawn
    uniformly from the key's alias set (canonical included); canonical ranks
    follow a Zipf law. Gold annotations carry exact character spans and the
    planted canonical key. Deterministic for a fixed seed.
    """
    rng = random.Random(f"gen:{config.seed}")

    canonicals = [f"k{i:04d}" for i in range(1, config.n_keys + 1)]
    forms_by_key: dict[str, list[str]] = {}
    short_flags: dict[str, bool] = {}
    for canonical in canonicals:
        size = _sample_cluster_size(rng, config.mean_cluster_size, 1 + config.max_aliases_per_key)
        suffixes = rng.sample(ALIAS_SUFFIX_POOL, size - 1)
        forms_by_key[canonical] = [canonical] + [canonical + s for s in suffixes]
        short_flags[canonical] = rng.random() < config.short_key_fraction

    weights = zipf_weights(config.n_keys, config.zipf_exponent)
    form_counts: dict[str, dict[str, int]] = {c: {} for c in canonicals}

    pages: list[Page] = []
    pii_selectors: dict[str, list[tuple[int, int]]] = {}
    report_no = 0
    pages_left_in_report = 0
    report_id = ""
    page_in_report = 0
    for _ in range(config.n_pages):
        if pages_left_in_report == 0:
            report_no += 1
            report_id = f"r{report_no:05d}"
            pages_left_in_report = rng.randint(*config.pages_per_report)
            page_in_report = 0
        pages_left_in_report -= 1
        page_in_report += 1
        page_id = f"{report_id}-p{page_in_report}"

        lines: list[str] = []
        annotations: list[KVAnnotation] = []
        offset = 0
        selectors: list[tuple[int, int]] = []

        def _emit(surface: str, delim: str, value: str, canonical: str | None) -> None:
            nonlocal offset
            key_span = (offset, offset + len(surface))
            value_start = offset + len(surface) + len(delim)
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
            offset = value_span[1] + 1  # the joining newline

        if config.include_pii:
            name = rng.choice(PII_SURNAME_POOL) + "".join(
                rng.choice(PII_GIVEN_POOL) for _ in range(rng.randint(1, 2))
            )
            _emit(PII_KEY, "：", name, PII_KEY)
            selectors.append(annotations[-1].value_span)

        n_slots = rng.randint(config.keys_per_page[0], min(config.keys_per_page[1], config.n_keys))
        for idx in _sample_distinct(rng, weights, n_slots):
            canonical = canonicals[idx]
            surface = rng.choice(forms_by_key[canonical])
            delim = rng.choice(config.delimiters)
            length_range = (
                config.short_value_length if short_flags[canonical] else config.value_length
            )
            value = "".join(
                rng.choice(VALUE_ALPHABET) for _ in range(rng.randint(*length_range))
            )
            _emit(surface, delim, value, canonical)
            counts = form_counts[canonical]
            counts[surface] = counts.get(surface, 0) + 1

        page = Page(report_id, page_id, "\n".join(lines), tuple(annotations))
        pages.append(page)
        if selectors:
            pii_selectors[page_id] = selectors

    entries = []
    for canonical in canonicals:
        counts = form_counts[canonical]
        aliases = frozenset(f for f in forms_by_key[canonical] if f != canonical)
        alias_counts = {a: counts.get(a, 0) for a in aliases if counts.get(a, 0)}
        entries.append(
            CanonicalKeyEntry(
                canonical=canonical,
                aliases=aliases,
                frequency=sum(counts.values()),
                short_field=short_flags[canonical],
                alias_counts=alias_counts,
            )
        )
    inventory = KeyInventory(version=1, entries=tuple(entries))
    return SyntheticCorpus(tuple(pages), inventory, pii_selectors)
