import { chartPoints, columnIndex, exactNumber, polylineAttr } from "./format";
import { escapeHtml } from "./queue";
import type { BatchRecord, SweepPayload } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 460;
const HEIGHT = 220;

function sweepChart(sweep: SweepPayload): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "sweep-chart");
  const fractionIdx = columnIndex(sweep.columns, "fraction");
  const xs = sweep.rows.map((row) => row[fractionIdx]);
  const series: { column: string; cls: string }[] = [
    { column: "em_f1", cls: "line-em" },
    { column: "btm_f1", cls: "line-btm" },
  ];
  for (const { column, cls } of series) {
    const idx = columnIndex(sweep.columns, column);
    const ys = sweep.rows.map((row) => row[idx]);
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", polylineAttr(chartPoints(xs, ys, WIDTH, HEIGHT)));
    line.setAttribute("class", cls);
    line.setAttribute("fill", "none");
    svg.appendChild(line);
    for (const point of chartPoints(xs, ys, WIDTH, HEIGHT)) {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(point.x));
      dot.setAttribute("cy", String(point.y));
      dot.setAttribute("r", "2.5");
      dot.setAttribute("class", cls);
      svg.appendChild(dot);
    }
  }
  return svg;
}

function sweepTable(sweep: SweepPayload): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "sweep-table";
  const head = document.createElement("tr");
  head.innerHTML = sweep.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  table.appendChild(head);
  for (const row of sweep.rows) {
    const tr = document.createElement("tr");
    // cells render the payload numbers losslessly (String round-trips doubles)
    tr.innerHTML = row.map((v) => `<td class="num">${exactNumber(v)}</td>`).join("");
    table.appendChild(tr);
  }
  return table;
}

function batchCoverage(batches: BatchRecord[]): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "batch-coverage";
  wrap.innerHTML = "<h3>Coverage per batch iteration</h3>";
  if (batches.length === 0) {
    wrap.innerHTML += '<p class="empty-state">No batch iterations recorded yet.</p>';
    return wrap;
  }
  const table = document.createElement("table");
  table.className = "batch-table";
  table.innerHTML =
    "<tr><th>Batch</th><th>Pages</th><th>Pairs</th><th>Novel keys</th>" +
    "<th>Inventory</th><th>Coverage before → after</th></tr>";
  for (const record of batches) {
    const tr = document.createElement("tr");
    const before = record.coverage_before === null ? "–" : exactNumber(record.coverage_before);
    const after = record.coverage_after === null ? "–" : exactNumber(record.coverage_after);
    tr.innerHTML =
      `<td>${escapeHtml(record.batch_id)}</td><td>${record.pages_processed}</td>` +
      `<td>${record.extracted_pairs}</td><td>${record.novel_keys.length}</td>` +
      `<td>v${record.inventory_version_before} → v${record.inventory_version_after}</td>` +
      `<td>${before} → ${after}</td>`;
    table.appendChild(tr);
  }
  wrap.appendChild(table);
  return wrap;
}

export function renderDashboard(
  root: HTMLElement,
  sweep: SweepPayload | null,
  batches: BatchRecord[],
): void {
  root.innerHTML = "<h2>Coverage dashboard</h2>";
  if (sweep === null) {
    const placeholder = document.createElement("p");
    placeholder.className = "empty-state sweep-placeholder";
    placeholder.textContent = "No sweep recorded yet. Run the sweep command against this store.";
    root.appendChild(placeholder);
  } else {
    root.appendChild(sweepChart(sweep));
    const legend = document.createElement("p");
    legend.className = "legend";
    legend.innerHTML =
      '<span class="line-em">■</span> exact-match F1  ' +
      '<span class="line-btm">■</span> boundary-tolerant F1, by inventory fraction';
    root.appendChild(legend);
    root.appendChild(sweepTable(sweep));
  }
  root.appendChild(batchCoverage(batches));
}
