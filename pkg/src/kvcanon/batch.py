"""One iteration of the expansion loop: extract with the current inventory,
mine novel surface keys, enqueue cluster proposals, apply decisions (auto mode),
persist the new inventory version, and fire the backend-refresh hook.
"""

from __future__ import annotations

import subprocess
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Sequence

from .clustering import DEFAULT_TAU, ClusterProposal, ReviewDecision, propose_clusters
from .corpus import Page
from .embedding import EmbeddingProvider, HashedBigramProvider
from .errors import ValidationError
from .extract import ExtractorConfig, LogitBackend, PagePrediction, extract_page
from .inventory import KeyInventory, coverage, detect_novel_keys
from .normalize import normalize_key
from .store import InventoryStore


@dataclass(frozen=True)
class BatchConfig:
    mode: str = "auto"  # "auto" applies accept decisions headlessly; "interactive" only enqueues
    tau: float = DEFAULT_TAU
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    refresh_command: tuple[str, ...] = ()
    snippet_context: int = 20
    max_snippets: int = 3

    def __post_init__(self) -> None:
        if self.mode not in ("auto", "interactive"):
            raise ValidationError(f"unknown batch mode {self.mode!r}")


@dataclass(frozen=True)
class BatchIterationRecord:
    batch_id: str
    pages_processed: int
    extracted_pairs: int
    novel_keys: tuple[str, ...]
    proposals_created: int
    inventory_version_before: int
    inventory_version_after: int
    coverage_before: float | None
    coverage_after: float | None

    def to_obj(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "pages_processed": self.pages_processed,
            "extracted_pairs": self.extracted_pairs,
            "novel_keys": list(self.novel_keys),
            "proposals_created": self.proposals_created,
            "inventory_version_before": self.inventory_version_before,
            "inventory_version_after": self.inventory_version_after,
            "coverage_before": self.coverage_before,
            "coverage_after": self.coverage_after,
        }


def _surface_coverage(inv: KeyInventory, pages: Sequence[Page]) -> float | None:
    """Alias-aware coverage of the batch's gold pairs (None when unannotated)."""
    try:
        return coverage(inv, pages, mode="surface")
    except ValidationError:
        return None


def _attach_snippets(
    proposal: ClusterProposal, pages: Sequence[Page], context: int, limit: int
) -> ClusterProposal:
    snippets: dict[str, tuple[str, ...]] = {}
    for key, _count in proposal.members:
        found: list[str] = []
        for page in pages:
            start = 0
            while len(found) < limit:
                idx = page.text.find(key, start)
                if idx < 0:
                    break
                lo = max(0, idx - context)
                hi = min(len(page.text), idx + len(key) + context)
                found.append(page.text[lo:hi].replace("\n", " "))
                start = idx + 1
            if len(found) >= limit:
                break
        if found:
            snippets[key] = tuple(found)
    if not snippets:
        return proposal
    return replace(proposal, snippets=snippets)


def run_batch_iteration(
    batch: Sequence[Page],
    store: InventoryStore,
    backend: LogitBackend,
    config: BatchConfig | None = None,
    provider: EmbeddingProvider | None = None,
    batch_id: str | None = None,
    eval_pages: Sequence[Page] | None = None,
) -> tuple[BatchIterationRecord, list[PagePrediction]]:
    """Process one report batch through extraction, mining, and review.

    Extraction queries every canonical key of the current inventory; observed
    surface keys are normalized and diffed against the known forms; novel keys
    become pending cluster proposals (alias attachments where close to an
    existing canonical). In auto mode every proposal is accepted immediately;
    each auto decision still lands in the decision log for audit. The refresh
    hook runs once when the inventory version advanced.

    Coverage before/after is alias-aware ("surface" mode) over ``eval_pages``
    (default: the batch itself); a fixed eval set makes coverage monotone
    across iterations, since the inventory only ever grows.
    """
    config = config or BatchConfig()
    provider = provider or HashedBigramProvider()
    if batch_id is None:
        batch_id = f"b{len(store.batches()) + 1:04d}"
    coverage_pages = batch if eval_pages is None else eval_pages

    inv_before = store.current()
    coverage_before = _surface_coverage(inv_before, coverage_pages)

    predictions: list[PagePrediction] = []
    observed: Counter[str] = Counter()
    for page in batch:
        pairs = extract_page(page.text, inv_before, backend, config.extractor)
        predictions.extend(PagePrediction(page.page_id, pair) for pair in pairs)
        for pair in pairs:
            normalized = normalize_key(pair.surface_key)
            if normalized:
                observed[normalized] += 1

    novel = detect_novel_keys(observed.keys(), inv_before)
    proposals = propose_clusters(
        {k: observed[k] for k in novel}, inv_before, provider, config.tau
    )
    proposals = [
        _attach_snippets(p, batch, config.snippet_context, config.max_snippets)
        for p in proposals
    ]
    store.append_proposals(proposals)

    inv_after = inv_before
    if config.mode == "auto":
        for proposal in proposals:
            inv_after = store.apply_decision(
                ReviewDecision(proposal_id=proposal.proposal_id, action="accept")
            )

    coverage_after = _surface_coverage(inv_after, coverage_pages)
    record = BatchIterationRecord(
        batch_id=batch_id,
        pages_processed=len(batch),
        extracted_pairs=len(predictions),
        novel_keys=tuple(sorted(novel)),
        proposals_created=len(proposals),
        inventory_version_before=inv_before.version,
        inventory_version_after=inv_after.version,
        coverage_before=coverage_before,
        coverage_after=coverage_after,
    )
    store.record_batch(record.to_obj())

    if inv_after.version != inv_before.version and config.refresh_command:
        subprocess.run(
            [*config.refresh_command, str(store.snapshot_path(inv_after.version))],
            check=False,
        )
    return record, predictions
