from __future__ import annotations

import pytest

from kvcanon.backends import RuleBackend
from kvcanon.batch import BatchConfig, run_batch_iteration
from kvcanon.clustering import ReviewDecision, cluster_keys
from kvcanon.embedding import HashedBigramProvider
from kvcanon.errors import StateError, ValidationError
from kvcanon.inventory import CanonicalKeyEntry, KeyInventory, register_alias
from kvcanon.store import InventoryStore
from kvcanon.synthesis import GeneratorConfig, generate_synthetic_corpus


def test_store_initializes_empty(tmp_path):
    store = InventoryStore(tmp_path / "s")
    assert store.current_version() == 0
    assert store.current().entries == ()


def test_commit_requires_newer_version(tmp_path):
    store = InventoryStore(tmp_path / "s")
    inv = KeyInventory(version=1, entries=(CanonicalKeyEntry("主诉", frozenset(), 1),))
    store.commit(inv)
    assert store.current_version() == 1
    with pytest.raises(StateError):
        store.commit(inv)
    # every version stays readable
    assert store.get(0).entries == ()
    assert store.get(1).canonicalize("主诉") == "主诉"


def test_commit_rejects_restricted_views(tmp_path):
    from kvcanon.inventory import top_fraction_keys

    store = InventoryStore(tmp_path / "s")
    inv = KeyInventory(version=1, entries=(CanonicalKeyEntry("主诉", frozenset(), 1),))
    store.commit(inv)
    with pytest.raises(ValidationError):
        store.commit(top_fraction_keys(store.get(1), 100))


def test_mutate_serializes_and_persists(tmp_path):
    store = InventoryStore(tmp_path / "s")
    store.commit(KeyInventory(version=1, entries=(CanonicalKeyEntry("主诉", frozenset(), 1),)))
    new = store.mutate(lambda inv: register_alias(inv, "主诉", "主诉内容"))
    assert new.version == 2
    assert store.current().canonicalize("主诉内容") == "主诉"
    # no-op mutation does not bump the version
    same = store.mutate(lambda inv: register_alias(inv, "主诉", "主诉内容"))
    assert same.version == 2


def test_queue_and_decisions_replay(tmp_path):
    store = InventoryStore(tmp_path / "s")
    store.commit(KeyInventory(version=1, entries=(CanonicalKeyEntry("检查结论", frozenset(), 3),)))
    provider = HashedBigramProvider()
    proposals = cluster_keys([("腹部超声所见描述", 4), ("腹部超声所见描述表", 2)], provider, 0.8)
    store.append_proposals(proposals)
    assert len(store.queue("pending")) == 1
    decision = ReviewDecision(proposals[0].proposal_id, "accept")
    inv = store.apply_decision(decision)
    assert inv.version == 2
    assert store.queue("pending") == []
    assert store.queue("accepted")[0].proposal_id == proposals[0].proposal_id
    # decisions are append-only and reloadable
    assert [d.proposal_id for d in store.decisions()] == [proposals[0].proposal_id]
    with pytest.raises(StateError):
        store.apply_decision(decision)


def test_apply_decision_unknown_proposal(tmp_path):
    store = InventoryStore(tmp_path / "s")
    with pytest.raises(ValidationError):
        store.apply_decision(ReviewDecision("p_missing", "accept"))


# -- batch loop -------------------------------------------------------------------


def _loop_world(seed=77, n_keys=30, n_pages=120):
    corpus = generate_synthetic_corpus(
        GeneratorConfig(
            n_keys=n_keys, n_pages=n_pages, seed=seed, keys_per_page=(2, 5), include_pii=False
        )
    )
    # the loop starts from a bare inventory: canonicals only, no aliases
    bare = KeyInventory(
        version=1,
        entries=tuple(
            CanonicalKeyEntry(e.canonical, frozenset(), e.frequency, e.short_field)
            for e in corpus.inventory.entries
        ),
    )
    backend = RuleBackend(corpus.inventory)  # knowledge includes planted aliases
    return corpus, bare, backend


def test_batch_with_known_keys_only_is_stable(tmp_path):
    corpus, _bare, backend = _loop_world()
    store = InventoryStore(tmp_path / "s")
    store.commit(corpus.inventory)  # full planted inventory: nothing is novel
    record, predictions = run_batch_iteration(
        list(corpus.pages[:20]), store, backend, BatchConfig(mode="auto", tau=0.75)
    )
    assert record.novel_keys == ()
    assert record.proposals_created == 0
    assert record.inventory_version_before == record.inventory_version_after
    assert record.extracted_pairs == len(predictions) > 0


def test_batch_discovers_and_registers_aliases(tmp_path):
    corpus, bare, backend = _loop_world()
    store = InventoryStore(tmp_path / "s")
    store.commit(bare)
    batch = list(corpus.pages[:40])
    record, _preds = run_batch_iteration(batch, store, backend, BatchConfig(mode="auto", tau=0.75))
    assert record.proposals_created > 0
    assert len(record.novel_keys) > 0
    assert record.inventory_version_after > record.inventory_version_before
    # discovered aliases now canonicalize to their planted canonical
    final = store.current()
    for novel in record.novel_keys:
        resolved = final.canonicalize(novel)
        assert resolved is not None
        assert corpus.inventory.canonicalize(novel) == resolved
    assert record.coverage_after >= (record.coverage_before or 0.0)


def test_batch_interactive_only_enqueues(tmp_path):
    corpus, bare, backend = _loop_world(seed=78)
    store = InventoryStore(tmp_path / "s")
    store.commit(bare)
    record, _ = run_batch_iteration(
        list(corpus.pages[:40]), store, backend, BatchConfig(mode="interactive", tau=0.75)
    )
    assert record.proposals_created > 0
    assert record.inventory_version_after == record.inventory_version_before
    assert len(store.queue("pending")) == record.proposals_created


def test_empty_batch(tmp_path):
    corpus, bare, backend = _loop_world(seed=79, n_pages=10)
    store = InventoryStore(tmp_path / "s")
    store.commit(bare)
    record, predictions = run_batch_iteration([], store, backend, BatchConfig(mode="auto", tau=0.75))
    assert record.pages_processed == 0
    assert record.extracted_pairs == 0
    assert predictions == []
    assert record.coverage_before is None and record.coverage_after is None


def test_refresh_hook_runs_on_change(tmp_path):
    corpus, bare, backend = _loop_world(seed=80)
    store = InventoryStore(tmp_path / "s")
    store.commit(bare)
    marker = tmp_path / "refreshed.txt"
    config = BatchConfig(
        mode="auto",
        tau=0.75,
        refresh_command=("/bin/sh", "-c", f"echo refreshed > {marker}"),
    )
    run_batch_iteration(list(corpus.pages[:40]), store, backend, config)
    assert marker.exists()


def test_batch_records_are_appended(tmp_path):
    corpus, bare, backend = _loop_world(seed=81)
    store = InventoryStore(tmp_path / "s")
    store.commit(bare)
    run_batch_iteration(list(corpus.pages[:10]), store, backend, BatchConfig(mode="auto", tau=0.75))
    run_batch_iteration(list(corpus.pages[10:20]), store, backend, BatchConfig(mode="auto", tau=0.75))
    records = store.batches()
    assert [r["batch_id"] for r in records] == ["b0001", "b0002"]


def test_snippets_attached_to_proposals(tmp_path):
    corpus, bare, backend = _loop_world(seed=82)
    store = InventoryStore(tmp_path / "s")
    store.commit(bare)
    run_batch_iteration(list(corpus.pages[:40]), store, backend, BatchConfig(mode="interactive", tau=0.75))
    queue = store.queue("pending")
    assert queue
    with_snippets = [p for p in queue if p.snippets]
    assert with_snippets, "expected page snippets on at least one proposal"
    for proposal in with_snippets:
        for member, snippets in proposal.snippets.items():
            assert any(member in s for s in snippets)
