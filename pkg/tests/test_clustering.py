from __future__ import annotations

import json

import pytest

from fixtures import planted_alias_fixture
from kvcanon.clustering import (
    ReviewDecision,
    apply_review_decision,
    cluster_keys,
    cluster_stats,
    propose_clusters,
    proposal_from_obj,
    proposal_to_obj,
)
from kvcanon.embedding import HashedBigramProvider
from kvcanon.errors import StateError, ValidationError
from kvcanon.inventory import CanonicalKeyEntry, KeyInventory
from oracles import brute_average_linkage


@pytest.fixture(scope="module")
def provider():
    return HashedBigramProvider()


def test_unreachable_tau_gives_singletons(provider):
    keys = [("既往史", 5), ("手术记录", 3), ("主诉", 1)]
    proposals = cluster_keys(keys, provider, tau=1.0 + 1e-9)
    assert len(proposals) == 3
    assert all(len(p.members) == 1 for p in proposals)


def test_duplicate_keys_rejected(provider):
    with pytest.raises(ValidationError):
        cluster_keys([("a b", 1), ("a b", 2)], provider, 0.8)


def test_cluster_output_is_partition(provider):
    _groups, flat = planted_alias_fixture(n_groups=12, n_singletons=4, seed=5)
    proposals = cluster_keys(flat, provider, 0.82)
    seen = [k for p in proposals for k, _ in p.members]
    assert sorted(seen) == sorted(k for k, _ in flat)


def test_planted_groups_recovered_and_match_oracle(provider):
    groups, flat = planted_alias_fixture(n_groups=20, n_singletons=10, seed=8)
    proposals = cluster_keys(flat, provider, 0.82)
    predicted = {frozenset(k for k, _ in p.members) for p in proposals}
    assert {frozenset(g) for g in groups} == predicted
    vectors = {k: provider.embed(k).values for k, _ in flat}
    oracle = {frozenset(c) for c in brute_average_linkage(flat, vectors, 0.82)}
    assert oracle == predicted


def test_cluster_determinism_byte_identical(provider):
    _groups, flat = planted_alias_fixture(n_groups=15, n_singletons=5, seed=13)
    a = [proposal_to_obj(p) for p in cluster_keys(flat, HashedBigramProvider(), 0.82)]
    b = [proposal_to_obj(p) for p in cluster_keys(flat, HashedBigramProvider(), 0.82)]
    assert json.dumps(a, ensure_ascii=False) == json.dumps(b, ensure_ascii=False)


def test_representative_rule(provider):
    proposals = cluster_keys([("检查所见记录", 3), ("检查所见记", 9), ("检查所见录", 9)], provider, 0.0)
    assert len(proposals) == 1
    # most frequent wins; tie broken by brevity then lexicographic order
    assert proposals[0].suggested_canonical == "检查所见录"
    assert proposals[0].members[0][1] == 9


def test_proposal_invariants(provider):
    _groups, flat = planted_alias_fixture(n_groups=6, n_singletons=2, seed=3)
    for proposal in cluster_keys(flat, provider, 0.82):
        keys = proposal.member_keys()
        assert proposal.suggested_canonical in keys
        n = len(keys)
        sims = proposal.pairwise_similarities
        for i in range(n):
            assert sims[i][i] == 1.0
            for j in range(n):
                assert sims[i][j] == sims[j][i]


# -- propose_clusters -----------------------------------------------------------


@pytest.fixture()
def small_inventory():
    return KeyInventory(
        version=1,
        entries=(
            CanonicalKeyEntry("腹部检查所见概要", frozenset({"腹部检查所见概要表"}), 40),
            CanonicalKeyEntry("头颈部血管评估", frozenset(), 25),
        ),
    )


def test_attachment_proposal_close_to_canonical(provider, small_inventory):
    novel = {"腹部检查所见概要单": 7}
    proposals = propose_clusters(novel, small_inventory, provider, 0.82)
    assert len(proposals) == 1
    proposal = proposals[0]
    assert proposal.kind == "attach"
    assert proposal.suggested_canonical == "腹部检查所见概要"
    assert {"腹部检查所见概要单", "腹部检查所见概要"} == set(proposal.member_keys())


def test_empty_novel_set(provider, small_inventory):
    assert propose_clusters(set(), small_inventory, provider) == []


def test_two_close_novel_keys_far_from_canonicals(provider, small_inventory):
    novel = {"膝关节腔积液测量值": 4, "膝关节腔积液测量值表": 2}
    proposals = propose_clusters(novel, small_inventory, provider, 0.82)
    assert len(proposals) == 1
    assert proposals[0].kind == "new"
    assert len(proposals[0].members) == 2


# -- decisions -------------------------------------------------------------------


def _pending(provider, members, suggested=None):
    keys = [(m, c) for m, c in members]
    proposals = cluster_keys(keys, provider, 0.0)
    assert len(proposals) == 1
    proposal = proposals[0]
    if suggested:
        from dataclasses import replace

        proposal = replace(proposal, suggested_canonical=suggested)
    return proposal


def test_accept_registers_cluster(provider, small_inventory):
    proposal = _pending(provider, [("骨密度测定结论", 9), ("骨密度测定结论表", 2), ("骨密度测定结论单", 1)])
    inv, updated = apply_review_decision(
        small_inventory, proposal, ReviewDecision(proposal.proposal_id, "accept")
    )
    assert inv.version == small_inventory.version + 1
    assert updated.status == "accepted"
    assert inv.canonicalize("骨密度测定结论表") == "骨密度测定结论"
    assert inv.canonicalize("骨密度测定结论单") == "骨密度测定结论"


def test_reject_leaves_inventory(provider, small_inventory):
    proposal = _pending(provider, [("肌电图报告要点", 1)])
    inv, updated = apply_review_decision(
        small_inventory, proposal, ReviewDecision(proposal.proposal_id, "reject")
    )
    assert inv is small_inventory
    assert updated.status == "rejected"


def test_rename_overrides_canonical(provider, small_inventory):
    proposal = _pending(provider, [("专科查体", 5), ("专科情况", 2)])
    inv, _ = apply_review_decision(
        small_inventory,
        proposal,
        ReviewDecision(proposal.proposal_id, "rename", {"new_canonical": "专科检查"}),
    )
    assert inv.canonicalize("专科查体") == "专科检查"
    assert inv.canonicalize("专科情况") == "专科检查"


def test_merge_into_existing(provider, small_inventory):
    proposal = _pending(provider, [("头颈部血管评估表", 4), ("头颈部血管评估单", 1)])
    inv, _ = apply_review_decision(
        small_inventory,
        proposal,
        ReviewDecision(proposal.proposal_id, "merge", {"target_canonical": "头颈部血管评估"}),
    )
    assert inv.canonicalize("头颈部血管评估表") == "头颈部血管评估"
    assert inv.canonicalize("头颈部血管评估单") == "头颈部血管评估"


def test_split_partitions_members(provider, small_inventory):
    proposal = _pending(
        provider, [("心功能分级评估", 8), ("心功能分级评估表", 3), ("肾功能分级评估", 6), ("肾功能分级评估表", 2)]
    )
    decision = ReviewDecision(
        proposal.proposal_id,
        "split",
        {"partition": [["心功能分级评估", "心功能分级评估表"], ["肾功能分级评估", "肾功能分级评估表"]]},
    )
    inv, updated = apply_review_decision(small_inventory, proposal, decision)
    assert updated.status == "edited"
    assert inv.canonicalize("心功能分级评估表") == "心功能分级评估"
    assert inv.canonicalize("肾功能分级评估表") == "肾功能分级评估"


def test_decision_on_non_pending_is_state_error(provider, small_inventory):
    proposal = _pending(provider, [("眼底检查摘要", 1)])
    inv, updated = apply_review_decision(
        small_inventory, proposal, ReviewDecision(proposal.proposal_id, "accept")
    )
    with pytest.raises(StateError):
        apply_review_decision(inv, updated, ReviewDecision(proposal.proposal_id, "reject"))


def test_split_must_cover_members(provider, small_inventory):
    proposal = _pending(provider, [("血气分析要点", 2), ("血气分析要点表", 1)])
    with pytest.raises(ValidationError):
        apply_review_decision(
            small_inventory,
            proposal,
            ReviewDecision(proposal.proposal_id, "split", {"partition": [["血气分析要点"]]}),
        )


def test_accepted_members_canonicalize_together_property(provider, small_inventory):
    _groups, flat = planted_alias_fixture(n_groups=8, n_singletons=2, seed=21)
    inv = small_inventory
    for proposal in cluster_keys(flat, provider, 0.82):
        inv, updated = apply_review_decision(
            inv, proposal, ReviewDecision(proposal.proposal_id, "accept")
        )
        targets = {inv.canonicalize(k) for k in proposal.member_keys()}
        assert targets == {proposal.suggested_canonical}


# -- stats ----------------------------------------------------------------------


def test_cluster_stats_small():
    inv = KeyInventory(
        version=1,
        entries=(
            CanonicalKeyEntry("a1", frozenset(), 1),
            CanonicalKeyEntry("b2", frozenset(), 1),
            CanonicalKeyEntry("c3", frozenset({"c4"}), 1),
        ),
    )
    stats = cluster_stats(inv)
    assert stats.mean_cluster_size == pytest.approx(4 / 3)
    assert stats.compression == pytest.approx(0.25)
    assert stats.size_histogram == {1: 2, 2: 1}
    assert stats.top_sizes == (2, 1, 1)


def test_cluster_stats_all_singletons():
    inv = KeyInventory(
        version=1,
        entries=tuple(CanonicalKeyEntry(f"k{i}", frozenset(), 1) for i in range(5)),
    )
    stats = cluster_stats(inv)
    assert stats.compression == 0.0
    assert dict(stats.ccdf)[1] == 1.0
    assert dict(stats.ccdf).get(2, 0.0) == 0.0


def test_cluster_stats_empty():
    stats = cluster_stats(KeyInventory())
    assert stats.n_surface_forms == 0
    assert stats.ccdf == ()


def test_cluster_stats_ccdf_non_increasing(small_world):
    stats = cluster_stats(small_world["inventory"])
    values = [v for _, v in stats.ccdf]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert 0.0 <= stats.compression < 1.0
    assert stats.mean_cluster_size >= 1.0


# -- serialization ----------------------------------------------------------------


def test_proposal_roundtrip(provider):
    _groups, flat = planted_alias_fixture(n_groups=3, n_singletons=1, seed=2)
    for proposal in cluster_keys(flat, provider, 0.82):
        assert proposal_from_obj(proposal_to_obj(proposal)) == proposal
