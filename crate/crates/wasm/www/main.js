import init, { pixel_graph, mi_demo, haar_energies } from "./pkg/pagrad_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(id, f) {
  const out = $(id);
  try {
    const text = f();
    out.classList.remove("error");
    return text;
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e.message ?? e);
    return null;
  }
}

function clear(ctx) {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

function drawGraph() {
  $("g-threshold-v").textContent = num("g-threshold").toFixed(2);
  const text = show("g-out", () =>
    pixel_graph(num("g-snr"), num("g-label"), num("g-seed"), num("g-bins"), num("g-threshold")));
  if (text === null) return;
  const view = JSON.parse(text);
  const [dx, dy] = view.dims;
  const ctx = $("g-canvas").getContext("2d");
  clear(ctx);
  const cell = ctx.canvas.width / Math.max(dx, dy);
  const centre = (i) => [((i % dx) + 0.5) * cell, (Math.floor(i / dx) + 0.5) * cell];
  const lo = Math.min(...view.column_means);
  const hi = Math.max(...view.column_means);
  view.column_means.forEach((m, i) => {
    const g = Math.round(255 * (hi > lo ? (m - lo) / (hi - lo) : 0.5));
    ctx.fillStyle = `rgb(${g},${g},${g})`;
    ctx.fillRect((i % dx) * cell, Math.floor(i / dx) * cell, cell, cell);
  });
  for (const [u, v, w] of view.edges) {
    const [x0, y0] = centre(u);
    const [x1, y1] = centre(v);
    ctx.strokeStyle = `rgba(220,40,40,${0.15 + 0.85 * w})`;
    ctx.lineWidth = 0.5 + 2 * w;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
  }
  view.degrees.forEach((d, i) => {
    if (d === 0) return;
    const [x, y] = centre(i);
    ctx.fillStyle = "#1a5fb4";
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  });

  const sp = $("g-spectrum").getContext("2d");
  clear(sp);
  const ev = view.eigenvalues;
  const top = Math.max(1e-12, ...ev.map(Math.abs));
  const w = sp.canvas.width / ev.length;
  const mid = sp.canvas.height / 2;
  sp.fillStyle = "#1a5fb4";
  ev.forEach((l, i) => {
    const h = (l / top) * (mid - 10);
    sp.fillRect(i * w, h > 0 ? mid - h : mid, Math.max(1, w - 1), Math.abs(h));
  });
  sp.strokeStyle = "#999";
  sp.beginPath();
  sp.moveTo(0, mid);
  sp.lineTo(sp.canvas.width, mid);
  sp.stroke();

  const s = view.summary;
  $("g-out").textContent =
    `edges ${s.num_edges}, active nodes ${s.num_active_nodes} of ${dx * dy}, mean weight ${s.avg_edge_weight.toFixed(4)}\n` +
    `leading eigenvalues ${ev.slice(0, 8).map((x) => x.toFixed(3)).join(" ")}`;
}

function drawMi() {
  $("m-rho-v").textContent = num("m-rho").toFixed(2);
  const text = show("m-out", () => mi_demo(num("m-rho"), num("m-n"), num("m-bins"), num("m-seed")));
  if (text === null) return;
  const view = JSON.parse(text);
  const ctx = $("m-canvas").getContext("2d");
  clear(ctx);
  const size = ctx.canvas.width;
  const scale = size / 8;
  ctx.fillStyle = "rgba(26,95,180,0.45)";
  for (const [a, b] of view.points) {
    ctx.fillRect(size / 2 + a * scale - 1.5, size / 2 - b * scale - 1.5, 3, 3);
  }
  $("m-out").textContent =
    `histogram estimate ${view.estimate.toFixed(4)} nats with ${view.bins} bins and n = ${view.n}\n` +
    `bivariate normal value ${view.gaussian.toFixed(4)} nats`;
}

function drawHaar() {
  const text = show("h-out", () => haar_energies(num("h-snr"), num("h-label"), num("h-seed")));
  if (text === null) return;
  const view = JSON.parse(text);
  const ctx = $("h-canvas").getContext("2d");
  clear(ctx);
  const logs = view.subbands.map((b) => Math.log10(1 + b.energy));
  const top = Math.max(...logs);
  const w = ctx.canvas.width / logs.length;
  const base = ctx.canvas.height - 20;
  ctx.font = "12px system-ui";
  view.subbands.forEach((b, i) => {
    const h = (logs[i] / top) * (base - 10);
    ctx.fillStyle = "#26a269";
    ctx.fillRect(i * w + 6, base - h, w - 12, h);
    ctx.fillStyle = "#222";
    ctx.fillText(b.name, i * w + w / 2 - 12, base + 15);
  });
  const sum = view.subbands.reduce((acc, b) => acc + b.energy, 0);
  $("h-out").textContent =
    view.subbands.map((b) => `${b.name} ${b.energy.toExponential(4)}`).join("\n") +
    `\nsum of subbands ${sum.toExponential(8)}, patch energy ${view.total_energy.toExponential(8)}`;
}

await init();
for (const el of document.querySelectorAll("#graph input, #graph select")) el.addEventListener("input", drawGraph);
for (const el of document.querySelectorAll("#mi input")) el.addEventListener("input", drawMi);
for (const el of document.querySelectorAll("#haar input, #haar select")) el.addEventListener("input", drawHaar);
drawGraph();
drawMi();
drawHaar();
