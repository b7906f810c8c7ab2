"""Alias clustering: average-linkage grouping of surface keys, review proposals,
decision application, and cluster statistics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .embedding import EmbeddingProvider, EmbeddingVector, centroid, cosine
from .errors import StateError, ValidationError
from .inventory import (
    CanonicalKeyEntry,
    KeyInventory,
    register_alias,
    register_canonical,
)

DEFAULT_TAU = 0.82

PROPOSAL_STATUSES = ("pending", "accepted", "rejected", "edited")
DECISION_ACTIONS = ("accept", "reject", "rename", "split", "merge")


@dataclass(frozen=True)
class ClusterProposal:
    """A candidate alias cluster awaiting human review.

    ``members`` pairs each surface key with its corpus frequency;
    ``suggested_canonical`` is always one of the members. ``kind`` is "attach"
    when the cluster extends an existing canonical key (which is then itself a
    member) and "new" otherwise. ``snippets`` optionally carries page excerpts
    around member occurrences for reviewers.
    """

    proposal_id: str
    members: tuple[tuple[str, int], ...]
    suggested_canonical: str
    pairwise_similarities: tuple[tuple[float, ...], ...]
    status: str = "pending"
    kind: str = "new"
    snippets: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        keys = [k for k, _ in self.members]
        if not keys:
            raise ValidationError("proposal must have at least one member")
        if self.suggested_canonical not in keys:
            raise ValidationError("suggested canonical must be one of the members")
        n = len(keys)
        sims = self.pairwise_similarities
        if len(sims) != n or any(len(row) != n for row in sims):
            raise ValidationError("similarity matrix shape must match member count")

    def member_keys(self) -> list[str]:
        return [k for k, _ in self.members]


@dataclass(frozen=True)
class ReviewDecision:
    proposal_id: str
    action: str
    payload: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.action not in DECISION_ACTIONS:
            raise ValidationError(f"unknown review action {self.action!r}")


def _proposal_id(member_keys: Sequence[str], kind: str) -> str:
    digest = hashlib.sha1(("\x00".join(member_keys) + "\x01" + kind).encode("utf-8"))
    return "p" + digest.hexdigest()[:12]


def _representative(members: Sequence[tuple[str, int]]) -> str:
    """Most frequent member; ties broken by brevity, then lexicographic order."""
    return min(members, key=lambda kf: (-kf[1], len(kf[0]), kf[0]))[0]


def _make_proposal(
    members: Sequence[tuple[str, int]],
    provider: EmbeddingProvider,
    kind: str = "new",
    suggested: str | None = None,
) -> ClusterProposal:
    ordered = tuple(sorted(members, key=lambda kf: (-kf[1], kf[0])))
    vecs = [provider.embed(k) for k, _ in ordered]
    n = len(ordered)
    sims = tuple(
        tuple(1.0 if i == j else round(cosine(vecs[i], vecs[j]), 6) for j in range(n))
        for i in range(n)
    )
    keys = [k for k, _ in ordered]
    return ClusterProposal(
        proposal_id=_proposal_id(keys, kind),
        members=ordered,
        suggested_canonical=suggested if suggested is not None else _representative(ordered),
        pairwise_similarities=sims,
        kind=kind,
    )


def cluster_keys(
    keys: Sequence[tuple[str, int]],
    provider: EmbeddingProvider,
    tau: float = DEFAULT_TAU,
) -> list[ClusterProposal]:
    """Average-linkage agglomerative clustering on cosine similarity.

    Keys must be normalized and deduplicated. Merging stops when no pair of
    clusters has average pairwise similarity >= tau. Processing order (by
    descending frequency, then lexicographic) and first-maximum tie-breaking
    make the output byte-deterministic for a fixed (input, provider, tau).
    """
    seen = [k for k, _ in keys]
    if len(set(seen)) != len(seen):
        raise ValidationError("cluster_keys requires deduplicated keys")
    if not keys:
        return []
    ordered = sorted(keys, key=lambda kf: (-kf[1], kf[0]))
    n = len(ordered)
    vectors = np.stack([provider.embed(k).values for k, _ in ordered])
    sim = vectors @ vectors.T
    # only i<j cells participate; dead rows/cols are masked to -inf as clusters merge
    mask = np.triu(np.ones((n, n), dtype=bool), k=1)
    work = np.where(mask, sim, -np.inf)
    members: list[list[int] | None] = [[i] for i in range(n)]
    sizes = np.ones(n)
    while True:
        flat = int(np.argmax(work))
        i, j = divmod(flat, n)
        if not np.isfinite(work[i, j]) or work[i, j] < tau:
            break
        mi = members[i]
        mj = members[j]
        assert mi is not None and mj is not None
        mi.extend(mj)
        members[j] = None
        # average-linkage update of row/col i against every live cluster k
        for k in range(n):
            if k == i or members[k] is None:
                continue
            merged = (sizes[i] * sim[i, k] + sizes[j] * sim[j, k]) / (sizes[i] + sizes[j])
            sim[i, k] = sim[k, i] = merged
            lo, hi = (i, k) if i < k else (k, i)
            work[lo, hi] = merged
        sizes[i] += sizes[j]
        work[j, :] = -np.inf
        work[:, j] = -np.inf
    proposals = [
        _make_proposal([ordered[idx] for idx in group], provider)
        for group in members
        if group is not None
    ]
    return sorted(proposals, key=lambda p: (-sum(c for _, c in p.members), p.suggested_canonical))


def entry_centroid(entry: CanonicalKeyEntry, provider: EmbeddingProvider) -> EmbeddingVector:
    return centroid([provider.embed(f) for f in sorted(entry.surface_forms())])


def propose_clusters(
    novel: Mapping[str, int] | set[str],
    inv: KeyInventory,
    provider: EmbeddingProvider,
    tau: float = DEFAULT_TAU,
) -> list[ClusterProposal]:
    """Turn novel surface keys into pending review proposals.

    Each novel key is first tested for attachment to an existing canonical
    (cosine against the entry centroid >= tau); attachments to one canonical
    are grouped into a single proposal that includes the canonical itself.
    The remaining keys are clustered among themselves into new-canonical
    proposals.
    """
    counts = {k: 1 for k in novel} if isinstance(novel, (set, frozenset)) else dict(novel)
    if not counts:
        return []
    centroids = [(e, entry_centroid(e, provider)) for e in inv.entries]
    attachments: dict[str, list[tuple[str, int]]] = {}
    remainder: list[tuple[str, int]] = []
    for key in sorted(counts, key=lambda k: (-counts[k], k)):
        vec = provider.embed(key)
        best: tuple[float, str] | None = None
        for entry, cvec in centroids:
            score = cosine(vec, cvec)
            if score >= tau and (best is None or score > best[0]):
                best = (score, entry.canonical)
        if best is not None:
            attachments.setdefault(best[1], []).append((key, counts[key]))
        else:
            remainder.append((key, counts[key]))
    proposals: list[ClusterProposal] = []
    for canonical in sorted(attachments):
        entry = inv.entry_for(canonical)
        members = attachments[canonical] + [(canonical, entry.frequency)]
        proposals.append(_make_proposal(members, provider, kind="attach", suggested=canonical))
    proposals.extend(cluster_keys(remainder, provider, tau))
    return sorted(proposals, key=lambda p: (-sum(c for _, c in p.members), p.suggested_canonical))


def _register_cluster(
    inv: KeyInventory,
    members: Sequence[tuple[str, int]],
    canonical: str,
) -> KeyInventory:
    alias_members = [(k, c) for k, c in members if k != canonical]
    if canonical not in inv:
        entry = CanonicalKeyEntry(
            canonical=canonical,
            aliases=frozenset(k for k, _ in alias_members),
            frequency=sum(c for _, c in members),
            alias_counts={k: c for k, c in alias_members if c},
        )
        return register_canonical(inv, entry)
    for key, count in alias_members:
        inv = register_alias(inv, canonical, key, count=count)
    return inv


def apply_review_decision(
    inv: KeyInventory, proposal: ClusterProposal, decision: ReviewDecision
) -> tuple[KeyInventory, ClusterProposal]:
    """Apply a reviewer decision, returning the (possibly) advanced inventory
    and the proposal with its final status.

    accept registers the suggested canonical plus remaining members as
    aliases; rename does the same under an overridden canonical string; merge
    folds all members into an existing canonical; split applies the payload
    partition part by part; reject changes nothing but the status.
    """
    if decision.proposal_id != proposal.proposal_id:
        raise ValidationError("decision does not reference this proposal")
    if proposal.status != "pending":
        raise StateError(f"proposal {proposal.proposal_id} is {proposal.status}, not pending")
    counts = dict(proposal.members)
    if decision.action == "reject":
        return inv, replace(proposal, status="rejected")
    if decision.action == "accept":
        new_inv = _register_cluster(inv, proposal.members, proposal.suggested_canonical)
        return new_inv, replace(proposal, status="accepted")
    if decision.action == "rename":
        name = decision.payload.get("new_canonical")
        if not isinstance(name, str) or not name:
            raise ValidationError("rename decision requires a non-empty 'new_canonical'")
        new_inv = _register_cluster(inv, proposal.members, name)
        return new_inv, replace(proposal, status="edited")
    if decision.action == "merge":
        target = decision.payload.get("target_canonical")
        if not isinstance(target, str) or target not in inv:
            raise ValidationError("merge decision requires an existing 'target_canonical'")
        new_inv = _register_cluster(inv, proposal.members, target)
        return new_inv, replace(proposal, status="accepted")
    # split
    partition = decision.payload.get("partition")
    if not isinstance(partition, (list, tuple)) or not partition:
        raise ValidationError("split decision requires a non-empty 'partition'")
    if any(not part for part in partition):
        raise ValidationError("split partition parts must be non-empty")
    flat = [k for part in partition for k in part]
    if sorted(flat) != sorted(counts):
        raise ValidationError("split partition must cover the proposal members exactly")
    new_inv = inv
    for part in partition:
        part_members = [(k, counts[k]) for k in part]
        new_inv = _register_cluster(new_inv, part_members, _representative(part_members))
    return new_inv, replace(proposal, status="edited")


@dataclass(frozen=True)
class ClusteringStats:
    n_surface_forms: int
    n_canonical: int
    compression: float
    mean_cluster_size: float
    size_histogram: Mapping[int, int]
    ccdf: tuple[tuple[int, float], ...]
    top_sizes: tuple[int, ...]


def cluster_stats(inv: KeyInventory, top_k: int = 20) -> ClusteringStats:
    """Cluster-size statistics of the alias map.

    Cluster size counts the canonical plus its aliases; compression is
    1 - canonicals/surface forms; CCDF(s) is the fraction of clusters of size
    >= s.
    """
    sizes = sorted((1 + len(e.aliases) for e in inv.entries), reverse=True)
    if not sizes:
        return ClusteringStats(0, 0, 0.0, 0.0, {}, (), ())
    n_surface = sum(sizes)
    n_clusters = len(sizes)
    histogram: dict[int, int] = {}
    for s in sizes:
        histogram[s] = histogram.get(s, 0) + 1
    ccdf = tuple(
        (s, sum(c for size, c in histogram.items() if size >= s) / n_clusters)
        for s in range(1, max(sizes) + 1)
    )
    return ClusteringStats(
        n_surface_forms=n_surface,
        n_canonical=n_clusters,
        compression=1.0 - n_clusters / n_surface,
        mean_cluster_size=n_surface / n_clusters,
        size_histogram=dict(sorted(histogram.items())),
        ccdf=ccdf,
        top_sizes=tuple(sizes[:top_k]),
    )


# -- serialization ---------------------------------------------------------


def proposal_to_obj(p: ClusterProposal) -> dict:
    return {
        "proposal_id": p.proposal_id,
        "members": [[k, c] for k, c in p.members],
        "suggested_canonical": p.suggested_canonical,
        "pairwise_similarities": [list(row) for row in p.pairwise_similarities],
        "status": p.status,
        "kind": p.kind,
        **({"snippets": {k: list(v) for k, v in p.snippets.items()}} if p.snippets else {}),
    }


def proposal_from_obj(obj: dict) -> ClusterProposal:
    return ClusterProposal(
        proposal_id=obj["proposal_id"],
        members=tuple((str(k), int(c)) for k, c in obj["members"]),
        suggested_canonical=obj["suggested_canonical"],
        pairwise_similarities=tuple(tuple(float(x) for x in row) for row in obj["pairwise_similarities"]),
        status=obj.get("status", "pending"),
        kind=obj.get("kind", "new"),
        snippets={k: tuple(v) for k, v in obj.get("snippets", {}).items()},
    )


def decision_to_obj(d: ReviewDecision) -> dict:
    return {"proposal_id": d.proposal_id, "action": d.action, "payload": dict(d.payload)}


def decision_from_obj(obj: dict) -> ReviewDecision:
    return ReviewDecision(
        proposal_id=obj["proposal_id"],
        action=obj["action"],
        payload=obj.get("payload", {}),
    )
