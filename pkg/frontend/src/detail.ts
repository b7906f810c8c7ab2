import {
  acceptDecision,
  mergeDecision,
  rejectDecision,
  renameDecision,
  splitDecision,
} from "./decisions";
import { similarityColor } from "./format";
import { escapeHtml } from "./queue";
import type { ClusterProposal, ReviewDecision } from "./types";

export interface DetailHandlers {
  onDecision: (decision: ReviewDecision) => void;
  onBack: () => void;
  onError: (message: string) => void;
}

function membersTable(proposal: ClusterProposal): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "members-table";
  table.innerHTML = "<thead><tr><th></th><th>Surface key</th><th>Frequency</th></tr></thead>";
  const body = document.createElement("tbody");
  for (const [key, count] of proposal.members) {
    const row = document.createElement("tr");
    const selected = key === proposal.suggested_canonical ? " (suggested)" : "";
    row.innerHTML =
      `<td><input type="checkbox" class="split-pick" value="${escapeHtml(key)}"></td>` +
      `<td>${escapeHtml(key)}${selected}</td><td>${count}</td>`;
    body.appendChild(row);
  }
  table.appendChild(body);
  return table;
}

function similarityMatrix(proposal: ClusterProposal): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "similarity";
  const keys = proposal.members.map(([key]) => key);
  const table = document.createElement("table");
  table.className = "similarity-matrix";
  const head = document.createElement("tr");
  head.innerHTML = "<th></th>" + keys.map((k) => `<th>${escapeHtml(k)}</th>`).join("");
  table.appendChild(head);
  proposal.pairwise_similarities.forEach((rowValues, i) => {
    const row = document.createElement("tr");
    const cells = rowValues
      .map(
        (value) =>
          `<td class="sim-cell" style="background:${similarityColor(value)}">${value.toFixed(3)}</td>`,
      )
      .join("");
    row.innerHTML = `<th>${escapeHtml(keys[i])}</th>` + cells;
    table.appendChild(row);
  });
  wrap.appendChild(table);
  return wrap;
}

function snippetsBlock(proposal: ClusterProposal): HTMLElement | null {
  const snippets = proposal.snippets ?? {};
  const entries = Object.entries(snippets);
  if (entries.length === 0) return null;
  const wrap = document.createElement("div");
  wrap.className = "snippets";
  wrap.innerHTML = "<h3>Page snippets</h3>";
  for (const [key, examples] of entries) {
    const item = document.createElement("div");
    item.innerHTML =
      `<strong>${escapeHtml(key)}</strong>` +
      `<ul>${examples.map((s) => `<li>${escapeHtml(s)}</li>`).join("")}</ul>`;
    wrap.appendChild(item);
  }
  return wrap;
}

export function renderDetail(
  root: HTMLElement,
  proposal: ClusterProposal,
  handlers: DetailHandlers,
): void {
  root.innerHTML = "";
  const back = document.createElement("button");
  back.textContent = "← queue";
  back.className = "back";
  back.addEventListener("click", handlers.onBack);
  root.appendChild(back);

  const heading = document.createElement("h2");
  heading.textContent = `${proposal.suggested_canonical} · ${proposal.kind} proposal`;
  root.appendChild(heading);
  const meta = document.createElement("p");
  meta.className = "meta";
  meta.textContent = `${proposal.proposal_id} · status: ${proposal.status}`;
  root.appendChild(meta);

  root.appendChild(membersTable(proposal));
  root.appendChild(similarityMatrix(proposal));
  const snippets = snippetsBlock(proposal);
  if (snippets) root.appendChild(snippets);

  const actions = document.createElement("div");
  actions.className = "actions";

  const guard = (builder: () => ReviewDecision) => () => {
    try {
      handlers.onDecision(builder());
    } catch (err) {
      handlers.onError(err instanceof Error ? err.message : String(err));
    }
  };

  const acceptButton = document.createElement("button");
  acceptButton.textContent = "Accept";
  acceptButton.className = "action accept";
  acceptButton.addEventListener("click", guard(() => acceptDecision(proposal)));

  const rejectButton = document.createElement("button");
  rejectButton.textContent = "Reject";
  rejectButton.className = "action reject";
  rejectButton.addEventListener("click", guard(() => rejectDecision(proposal)));

  const renameInput = document.createElement("input");
  renameInput.placeholder = "new canonical name";
  renameInput.className = "rename-input";
  const renameButton = document.createElement("button");
  renameButton.textContent = "Rename + accept";
  renameButton.className = "action rename";
  renameButton.addEventListener("click", guard(() => renameDecision(proposal, renameInput.value)));

  const mergeInput = document.createElement("input");
  mergeInput.placeholder = "merge into canonical";
  mergeInput.className = "merge-input";
  const mergeButton = document.createElement("button");
  mergeButton.textContent = "Merge";
  mergeButton.className = "action merge";
  mergeButton.addEventListener("click", guard(() => mergeDecision(proposal, mergeInput.value)));

  const splitButton = document.createElement("button");
  splitButton.textContent = "Split checked members";
  splitButton.className = "action split";
  splitButton.addEventListener(
    "click",
    guard(() => {
      const picks = Array.from(
        root.querySelectorAll<HTMLInputElement>(".split-pick:checked"),
      ).map((el) => el.value);
      return splitDecision(proposal, picks);
    }),
  );

  actions.append(
    acceptButton,
    rejectButton,
    renameInput,
    renameButton,
    mergeInput,
    mergeButton,
    splitButton,
  );
  root.appendChild(actions);
}
