/** Wire types mirroring the service's JSON payloads. */

export type ProposalStatus = "pending" | "accepted" | "rejected" | "edited";
export type ProposalKind = "new" | "attach";
export type DecisionAction = "accept" | "reject" | "rename" | "split" | "merge";

export interface ClusterProposal {
  proposal_id: string;
  /** [surface key, corpus frequency] pairs, most frequent first. */
  members: [string, number][];
  suggested_canonical: string;
  pairwise_similarities: number[][];
  status: ProposalStatus;
  kind: ProposalKind;
  snippets?: Record<string, string[]>;
}

export interface ReviewDecision {
  proposal_id: string;
  action: DecisionAction;
  payload?: Record<string, unknown>;
}

export interface DecisionResponse {
  inventory_version: number;
  proposal_id: string;
}

export interface HealthPayload {
  status: string;
  inventory_version: number;
}

export interface InventoryEntry {
  canonical: string;
  aliases: string[];
  frequency: number;
  short_field: boolean;
  alias_counts?: Record<string, number>;
}

export interface InventoryPayload {
  version: number;
  entries: InventoryEntry[];
  restriction?: Record<string, unknown>;
}

export interface SweepPayload {
  columns: string[];
  rows: number[][];
}

export interface BatchRecord {
  batch_id: string;
  pages_processed: number;
  extracted_pairs: number;
  novel_keys: string[];
  proposals_created: number;
  inventory_version_before: number;
  inventory_version_after: number;
  coverage_before: number | null;
  coverage_after: number | null;
}

export interface ExtractedPairPayload {
  canonical_key: string;
  surface_key: string;
  key_span: [number, number];
  value_span: [number, number] | null;
  value: string | null;
  score: number;
}

export interface ExtractResponse {
  pairs: ExtractedPairPayload[];
  inventory_version: number;
}

export interface CoveragePayload {
  coverage: number;
  mode: string;
  split: string;
  fraction?: number;
  inventory_version: number;
}
