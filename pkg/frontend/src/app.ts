import { ApiClient, ApiError } from "./api";
import { renderDashboard } from "./dashboard";
import { renderDetail } from "./detail";
import { renderQueue } from "./queue";
import type { ProposalStatus, ReviewDecision } from "./types";

/** Hash-routed single-page shell: #/queue (default), #/proposal/<id>, #/dashboard. */
export class App {
  private statusFilter: ProposalStatus | "all" = "pending";

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    void this.route();
  }

  async route(): Promise<void> {
    const hash = window.location.hash || "#/queue";
    const [, view, arg] = hash.split("/");
    try {
      if (view === "proposal" && arg) {
        await this.showDetail(decodeURIComponent(arg));
      } else if (view === "dashboard") {
        await this.showDashboard();
      } else {
        await this.showQueue();
      }
    } catch (err) {
      this.showBanner(err);
    }
  }

  private content(): HTMLElement {
    this.root.innerHTML = "";
    const nav = document.createElement("nav");
    nav.innerHTML =
      '<a href="#/queue">Review queue</a> <a href="#/dashboard">Dashboard</a>' +
      '<span id="version-badge" class="version-badge"></span>';
    this.root.appendChild(nav);
    const main = document.createElement("main");
    this.root.appendChild(main);
    void this.api
      .health()
      .then((h) => {
        const badge = this.root.querySelector("#version-badge");
        if (badge) badge.textContent = `inventory v${h.inventory_version}`;
      })
      .catch(() => undefined);
    return main;
  }

  private async showQueue(): Promise<void> {
    const main = this.content();
    const proposals = await this.api.queue(
      this.statusFilter === "all" ? undefined : this.statusFilter,
    );
    renderQueue(main, proposals, this.statusFilter, {
      onOpen: (id) => {
        window.location.hash = `#/proposal/${encodeURIComponent(id)}`;
      },
      onFilterChange: (status) => {
        this.statusFilter = status;
        void this.showQueue();
      },
    });
  }

  private async showDetail(proposalId: string): Promise<void> {
    const main = this.content();
    const proposals = await this.api.queue();
    const proposal = proposals.find((p) => p.proposal_id === proposalId);
    if (!proposal) {
      main.innerHTML = `<p class="error">Unknown proposal ${proposalId}</p>`;
      return;
    }
    renderDetail(main, proposal, {
      onBack: () => {
        window.location.hash = "#/queue";
      },
      onError: (message) => this.toast(message, true),
      onDecision: (decision) => void this.submitDecision(decision),
    });
  }

  private async submitDecision(decision: ReviewDecision): Promise<void> {
    try {
      const response = await this.api.postDecision(decision);
      this.toast(`${decision.action} recorded, inventory v${response.inventory_version}`);
      window.location.hash = "#/queue";
      await this.showQueue();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // decision conflicted with a concurrent reviewer: refresh the queue
        this.toast(`conflict: ${err.message}`, true);
        await this.showQueue();
      } else {
        this.toast(err instanceof Error ? err.message : String(err), true);
      }
    }
  }

  private async showDashboard(): Promise<void> {
    const main = this.content();
    let sweep = null;
    try {
      sweep = await this.api.sweep();
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 404)) throw err;
    }
    const batches = await this.api.batches();
    renderDashboard(main, sweep, batches);
  }

  private showBanner(err: unknown): void {
    this.root.innerHTML = "";
    const banner = document.createElement("div");
    banner.className = "banner error-banner";
    const message = err instanceof Error ? err.message : String(err);
    banner.innerHTML = `<span>Service unreachable or failing: ${message}</span>`;
    const retry = document.createElement("button");
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.route());
    banner.appendChild(retry);
    this.root.appendChild(banner);
  }

  toast(message: string, isError = false): void {
    const note = document.createElement("div");
    note.className = isError ? "toast toast-error" : "toast";
    note.textContent = message;
    this.root.appendChild(note);
    setTimeout(() => note.remove(), 4000);
  }
}
