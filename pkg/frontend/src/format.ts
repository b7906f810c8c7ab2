import type { ClusterProposal, ProposalStatus } from "./types";

export function totalFrequency(proposal: ClusterProposal): number {
  return proposal.members.reduce((sum, [, count]) => sum + count, 0);
}

/** Queue ordering: descending total member frequency, ties by proposal id. */
export function sortQueue(proposals: ClusterProposal[]): ClusterProposal[] {
  return [...proposals].sort((a, b) => {
    const diff = totalFrequency(b) - totalFrequency(a);
    return diff !== 0 ? diff : a.proposal_id.localeCompare(b.proposal_id);
  });
}

export function filterByStatus(
  proposals: ClusterProposal[],
  status: ProposalStatus | "all",
): ClusterProposal[] {
  if (status === "all") return proposals;
  return proposals.filter((p) => p.status === status);
}

/** Dashboard cells must match the API payload exactly; JS number-to-string
 * round-trips doubles, so String(x) is the lossless rendering. */
export function exactNumber(value: number): string {
  return String(value);
}

/** Background for a similarity cell; higher similarity = darker. */
export function similarityColor(value: number): string {
  const clamped = Math.max(0, Math.min(1, value));
  const lightness = 96 - Math.round(clamped * 58);
  return `hsl(214, 75%, ${lightness}%)`;
}

export interface ChartPoint {
  x: number;
  y: number;
}

/** Map (x, y) series onto SVG coordinates (y axis flipped). */
export function chartPoints(
  xs: number[],
  ys: number[],
  width: number,
  height: number,
  pad = 8,
): ChartPoint[] {
  if (xs.length === 0 || xs.length !== ys.length) return [];
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const ySpanMin = 0;
  const ySpanMax = 1;
  const spanX = xMax - xMin || 1;
  return xs.map((x, i) => ({
    x: pad + ((x - xMin) / spanX) * (width - 2 * pad),
    y: height - pad - ((ys[i] - ySpanMin) / (ySpanMax - ySpanMin)) * (height - 2 * pad),
  }));
}

export function polylineAttr(points: ChartPoint[]): string {
  return points.map((p) => `${round2(p.x)},${round2(p.y)}`).join(" ");
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export function columnIndex(columns: string[], name: string): number {
  const idx = columns.indexOf(name);
  if (idx < 0) throw new Error(`sweep payload missing column ${name}`);
  return idx;
}
