"""Single-writer persistence: append-only versioned inventory snapshots, the
review queue, the decision log, batch records, and the latest sweep table.

Snapshots are plain JSON files (inventory_vNNNNNN.json) so deployments need no
database; every version is kept for audit and for the review UI's history.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

from .clustering import (
    ClusterProposal,
    ReviewDecision,
    apply_review_decision,
    decision_from_obj,
    decision_to_obj,
    proposal_from_obj,
    proposal_to_obj,
)
from .errors import StateError, ValidationError
from .inventory import KeyInventory, inventory_from_obj, inventory_to_obj

_STATUS_AFTER_ACTION = {
    "accept": "accepted",
    "merge": "accepted",
    "reject": "rejected",
    "rename": "edited",
    "split": "edited",
}


class InventoryStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        if not self._versions():
            self._write_snapshot(KeyInventory(version=0))

    # -- snapshots -----------------------------------------------------------

    def snapshot_path(self, version: int) -> Path:
        return self.root / f"inventory_v{version:06d}.json"

    def _versions(self) -> list[int]:
        return sorted(
            int(p.stem.split("_v")[1]) for p in self.root.glob("inventory_v*.json")
        )

    def _write_snapshot(self, inv: KeyInventory) -> None:
        path = self.snapshot_path(inv.version)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(inventory_to_obj(inv), ensure_ascii=False, indent=2), encoding="utf-8"
        )
        os.replace(tmp, path)

    def current_version(self) -> int:
        with self._lock:
            return self._versions()[-1]

    def current(self) -> KeyInventory:
        return self.get(self.current_version())

    def get(self, version: int) -> KeyInventory:
        path = self.snapshot_path(version)
        if not path.exists():
            raise ValidationError(f"no inventory snapshot for version {version}")
        return inventory_from_obj(json.loads(path.read_text(encoding="utf-8")))

    def commit(self, inv: KeyInventory) -> None:
        """Persist a strictly newer snapshot (atomic write, then visible)."""
        with self._lock:
            if inv.restriction is not None:
                raise ValidationError("cannot persist a restricted view")
            head = self.current_version()
            if inv.version <= head:
                raise StateError(f"snapshot version {inv.version} not newer than {head}")
            self._write_snapshot(inv)

    def mutate(self, fn: Callable[[KeyInventory], KeyInventory]) -> KeyInventory:
        """Apply a pure inventory transformation under the writer lock."""
        with self._lock:
            inv = self.current()
            new_inv = fn(inv)
            if new_inv.version != inv.version:
                self.commit(new_inv)
            return new_inv

    # -- review queue ---------------------------------------------------------

    def _append_jsonl(self, name: str, objs: Sequence[dict]) -> None:
        with (self.root / name).open("a", encoding="utf-8") as fp:
            for obj in objs:
                fp.write(json.dumps(obj, ensure_ascii=False) + "\n")

    def _read_jsonl(self, name: str) -> list[dict]:
        path = self.root / name
        if not path.exists():
            return []
        out = []
        with path.open("r", encoding="utf-8") as fp:
            for line in fp:
                if line.strip():
                    out.append(json.loads(line))
        return out

    def append_proposals(self, proposals: Sequence[ClusterProposal]) -> None:
        with self._lock:
            known = {p["proposal_id"] for p in self._read_jsonl("proposals.jsonl")}
            fresh = [proposal_to_obj(p) for p in proposals if p.proposal_id not in known]
            self._append_jsonl("proposals.jsonl", fresh)

    def decisions(self) -> list[ReviewDecision]:
        return [decision_from_obj(obj) for obj in self._read_jsonl("decisions.jsonl")]

    def proposals(self) -> dict[str, ClusterProposal]:
        """All proposals with statuses replayed from the decision log."""
        with self._lock:
            items = {
                obj["proposal_id"]: proposal_from_obj(obj)
                for obj in self._read_jsonl("proposals.jsonl")
            }
            for decision in self.decisions():
                proposal = items.get(decision.proposal_id)
                if proposal is not None:
                    items[decision.proposal_id] = replace(
                        proposal, status=_STATUS_AFTER_ACTION[decision.action]
                    )
            return items

    def queue(self, status: str | None = None) -> list[ClusterProposal]:
        proposals = list(self.proposals().values())
        if status is not None:
            proposals = [p for p in proposals if p.status == status]
        return proposals

    def apply_decision(self, decision: ReviewDecision) -> KeyInventory:
        """Resolve the proposal, apply the decision, persist snapshot + log entry."""
        with self._lock:
            proposal = self.proposals().get(decision.proposal_id)
            if proposal is None:
                raise ValidationError(f"unknown proposal {decision.proposal_id!r}")
            inv = self.current()
            new_inv, _updated = apply_review_decision(inv, proposal, decision)
            if new_inv.version != inv.version:
                self.commit(new_inv)
            self._append_jsonl("decisions.jsonl", [decision_to_obj(decision)])
            return new_inv

    # -- batch records and sweep artifacts -------------------------------------

    def record_batch(self, record_obj: dict) -> None:
        with self._lock:
            self._append_jsonl("batches.jsonl", [record_obj])

    def batches(self) -> list[dict]:
        return self._read_jsonl("batches.jsonl")

    def save_sweep(self, payload: dict) -> None:
        with self._lock:
            tmp = self.root / "sweep.json.tmp"
            tmp.write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
            os.replace(tmp, self.root / "sweep.json")

    def load_sweep(self) -> dict | None:
        path = self.root / "sweep.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))
