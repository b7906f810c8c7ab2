import type { ClusterProposal, ReviewDecision } from "./types";

/** Each builder maps one reviewer action to exactly one decision record. */

export function acceptDecision(proposal: ClusterProposal): ReviewDecision {
  return { proposal_id: proposal.proposal_id, action: "accept" };
}

export function rejectDecision(proposal: ClusterProposal): ReviewDecision {
  return { proposal_id: proposal.proposal_id, action: "reject" };
}

export function renameDecision(proposal: ClusterProposal, newCanonical: string): ReviewDecision {
  const name = newCanonical.trim();
  if (!name) throw new Error("rename requires a non-empty canonical name");
  return {
    proposal_id: proposal.proposal_id,
    action: "rename",
    payload: { new_canonical: name },
  };
}

export function mergeDecision(proposal: ClusterProposal, targetCanonical: string): ReviewDecision {
  const target = targetCanonical.trim();
  if (!target) throw new Error("merge requires a target canonical");
  return {
    proposal_id: proposal.proposal_id,
    action: "merge",
    payload: { target_canonical: target },
  };
}

/** Split the members into [selected, rest]; both parts must be non-empty and
 * together cover the proposal exactly. */
export function splitDecision(proposal: ClusterProposal, selected: string[]): ReviewDecision {
  const all = proposal.members.map(([key]) => key);
  const chosen = all.filter((key) => selected.includes(key));
  const rest = all.filter((key) => !selected.includes(key));
  if (chosen.length === 0 || rest.length === 0) {
    throw new Error("split needs a proper non-empty subset of members");
  }
  return {
    proposal_id: proposal.proposal_id,
    action: "split",
    payload: { partition: [chosen, rest] },
  };
}
