import { filterByStatus, sortQueue, totalFrequency } from "./format";
import type { ClusterProposal, ProposalStatus } from "./types";

export interface QueueHandlers {
  onOpen: (proposalId: string) => void;
  onFilterChange: (status: ProposalStatus | "all") => void;
}

const STATUSES: (ProposalStatus | "all")[] = ["pending", "accepted", "rejected", "edited", "all"];

export function renderQueue(
  root: HTMLElement,
  proposals: ClusterProposal[],
  activeStatus: ProposalStatus | "all",
  handlers: QueueHandlers,
): void {
  root.innerHTML = "";
  const bar = document.createElement("div");
  bar.className = "filter-bar";
  for (const status of STATUSES) {
    const button = document.createElement("button");
    button.textContent = status;
    button.className = status === activeStatus ? "filter active" : "filter";
    button.dataset.status = status;
    button.addEventListener("click", () => handlers.onFilterChange(status));
    bar.appendChild(button);
  }
  root.appendChild(bar);

  const visible = sortQueue(filterByStatus(proposals, activeStatus));
  if (visible.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent =
      activeStatus === "pending"
        ? "Review queue is empty: no pending proposals."
        : `No ${activeStatus === "all" ? "" : activeStatus + " "}proposals.`;
    root.appendChild(empty);
    return;
  }

  const table = document.createElement("table");
  table.className = "queue-table";
  table.innerHTML =
    "<thead><tr><th>Suggested canonical</th><th>Kind</th><th>Members</th>" +
    "<th>Total frequency</th><th>Status</th></tr></thead>";
  const body = document.createElement("tbody");
  for (const proposal of visible) {
    const row = document.createElement("tr");
    row.dataset.proposalId = proposal.proposal_id;
    row.innerHTML =
      `<td>${escapeHtml(proposal.suggested_canonical)}</td>` +
      `<td>${proposal.kind}</td>` +
      `<td>${proposal.members.length}</td>` +
      `<td>${totalFrequency(proposal)}</td>` +
      `<td><span class="status status-${proposal.status}">${proposal.status}</span></td>`;
    row.addEventListener("click", () => handlers.onOpen(proposal.proposal_id));
    body.appendChild(row);
  }
  table.appendChild(body);
  root.appendChild(table);
}

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
