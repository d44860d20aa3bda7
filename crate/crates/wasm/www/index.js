import init, { Demo, upsample_image } from "./pkg/gradrank_wasm.js";

const $ = (id) => document.getElementById(id);
const CELL_PX = 12;

let demo;
let sampleIndex = 0;
let grid = [];

function draw(canvas, image) {
  canvas.width = image.width;
  canvas.height = image.height;
  const data = new ImageData(new Uint8ClampedArray(image.rgba), image.width, image.height);
  canvas.getContext("2d").putImageData(data, 0, 0);
  image.free();
}

function loadSample(positive) {
  const s = JSON.parse(demo.sample(sampleIndex++));
  $("query").value = s.query;
  $("doc").value = positive ? s.positive : s.negative;
  runExplain();
}

function runExplain() {
  $("explain-error").textContent = "";
  try {
    const report = JSON.parse(demo.explain($("query").value, $("doc").value, Number($("window").value)));
    $("score").textContent = `score ${report.score}`;
    draw($("map-l"), demo.heatmap("L", CELL_PX));
    draw($("map-m"), demo.heatmap("M", CELL_PX));
    const list = (ts) => ts.map((t) => t.token).join(", ") || "none";
    $("terms").innerHTML =
      `<b>Effective terms:</b> ${list(report.effective_terms)}<br>` +
      `<b>Filtered terms:</b> ${list(report.filtered_terms)}<br>` +
      `<b>Kurtosis:</b> ${report.kurtosis ?? "n/a"} &nbsp; <b>Total:</b> ${report.total}`;
    showSnippets();
  } catch (e) {
    $("explain-error").textContent = e.message ?? String(e);
  }
}

function renderSpan(span, queryTokens) {
  return span.tokens
    .map((t) => `<span class="tok${queryTokens.has(t) ? " match" : ""}">${t}</span>`)
    .join(" ");
}

function showSnippets() {
  const w = Number($("window").value);
  $("window-value").textContent = w;
  if (!$("score").textContent) return;
  try {
    const pair = JSON.parse(demo.snippets(w));
    const query = new Set($("query").value.toLowerCase().split(/[^\p{L}\p{N}]+/u));
    const line = (name, s) =>
      `<div class="snip"><b>${name}</b>[${s.start}, ${s.end}) ${renderSpan(s, query)}</div>`;
    $("snippets").className = "";
    $("snippets").innerHTML =
      line("exact", pair.vanilla) + line("grad-cam", pair.gradcam) +
      `<p class="muted">${pair.same ? "Both pick the same window." : "The windows differ."}</p>`;
  } catch (e) {
    $("snippets").textContent = e.message ?? String(e);
  }
}

function reseed() {
  const rows = Number($("src-rows").value);
  const cols = Number($("src-cols").value);
  grid = Array.from({ length: rows * cols }, () => Math.random());
  upsample();
}

function upsample() {
  const rows = Number($("src-rows").value);
  const cols = Number($("src-cols").value);
  if (grid.length !== rows * cols) return reseed();
  $("upsample-error").textContent = "";
  try {
    const values = new Float64Array(grid);
    draw($("src"), upsample_image(values, rows, cols, rows, cols, 24));
    draw($("dst"), upsample_image(values, rows, cols, Number($("dst-rows").value), Number($("dst-cols").value), 6));
  } catch (e) {
    $("upsample-error").textContent = e.message ?? String(e);
  }
}

async function main() {
  await init();
  // Let the status text paint before the synchronous training run.
  await new Promise((r) => setTimeout(r, 20));
  demo = new Demo(7);
  const s = JSON.parse(demo.summary());
  $("status").textContent =
    `Model trained on ${s.queries} synthetic queries (${s.pairs} pairs, ${s.parameters} parameters): ` +
    `training pairwise accuracy ${s.accuracy.toFixed(3)}.`;
  for (const id of ["sample-pos", "sample-neg", "explain"]) $(id).disabled = false;
  $("sample-pos").onclick = () => loadSample(true);
  $("sample-neg").onclick = () => loadSample(false);
  $("explain").onclick = runExplain;
  $("window").oninput = showSnippets;
  for (const id of ["src-rows", "src-cols"]) $(id).oninput = reseed;
  for (const id of ["dst-rows", "dst-cols"]) $(id).oninput = upsample;
  $("reseed").onclick = reseed;
  reseed();
  loadSample(true);
}

main().catch((e) => {
  $("status").textContent = `Failed to start: ${e.message ?? e}`;
  $("status").className = "error";
});
