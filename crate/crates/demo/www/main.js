import init, { gain_pattern, codebook, optimize } from "./pkg/rotant_demo.js";

const $ = (id) => document.getElementById(id);

function drawPattern() {
  const p = Number($("p").value);
  $("p-value").textContent = p;
  const g = gain_pattern(p, 181);
  const c = $("pattern").getContext("2d");
  const { width: w, height: h } = c.canvas;
  c.clearRect(0, 0, w, h);
  // polar plot in the x-z plane, boresight pointing up
  const scale = (h - 20) / Math.max(...g);
  c.beginPath();
  for (let i = -180; i <= 180; i++) {
    const eps = (Math.abs(i) * Math.PI) / 180;
    const r = g[Math.abs(i)] * scale;
    const x = w / 2 + r * Math.sin(Math.sign(i) * eps);
    const y = h - 10 - r * Math.cos(eps);
    i === -180 ? c.moveTo(x, y) : c.lineTo(x, y);
  }
  c.strokeStyle = "#1f6feb";
  c.stroke();
}

function drawCodebook() {
  const cap = (Number($("cap").value) * Math.PI) / 180;
  const c = $("codebook").getContext("2d");
  const { width: w, height: h } = c.canvas;
  c.clearRect(0, 0, w, h);
  let pts;
  try {
    pts = codebook($("kind").value, Number($("n").value), cap);
  } catch (e) {
    c.fillText(String(e), 10, 20);
    return;
  }
  const rim = Math.max(Math.sin(cap), 1e-3);
  const s = (w / 2 - 10) / rim;
  c.beginPath();
  c.arc(w / 2, h / 2, rim * s, 0, 2 * Math.PI);
  c.strokeStyle = "#999";
  c.stroke();
  c.fillStyle = "#d1242f";
  for (let i = 0; i < pts.length; i += 3) {
    c.beginPath();
    c.arc(w / 2 + pts[i] * s, h / 2 - pts[i + 1] * s, 3, 0, 2 * Math.PI);
    c.fill();
  }
}

function drawScene(res) {
  const c = $("scene").getContext("2d");
  const { width: w, height: h } = c.canvas;
  c.clearRect(0, 0, w, h);
  // side view: x horizontal (0..100 m), z vertical (0..100 m)
  const X = (x) => 10 + (x / 100) * (w - 20);
  const Z = (z) => h - 10 - (z / 100) * (h - 20);
  const dot = (p, color, r) => {
    c.fillStyle = color;
    c.beginPath();
    c.arc(X(p[0]), Z(p[2]), r, 0, 2 * Math.PI);
    c.fill();
  };
  res.topology.clusters.forEach((q) => dot(q, "#999", 4));
  res.topology.users.forEach((u) => dot(u, "#1f6feb", 5));
  const m = res.orientations.length / res.topology.tx_centers.length;
  res.topology.tx_centers.forEach((t, k) => {
    dot(t, "#d1242f", 5);
    c.strokeStyle = "#d1242f";
    for (let j = 0; j < m; j++) {
      const f = res.orientations[k * m + j];
      c.beginPath();
      c.moveTo(X(t[0]), Z(t[2]));
      c.lineTo(X(t[0]) + f[0] * 30, Z(t[2]) - f[2] * 30);
      c.stroke();
    }
  });
}

function runOptimize() {
  const cap = (Number($("cap-opt").value) * Math.PI) / 180;
  try {
    const res = JSON.parse(optimize(Number($("seed").value), Number($("p-opt").value), cap, Number($("budget").value)));
    drawScene(res);
    $("result").textContent =
      `fixed boresights: ${res.fixed_wsr.toFixed(3)} bps/Hz\n` +
      `rotatable:        ${res.ra_wsr.toFixed(3)} bps/Hz (${res.trace.length} rounds)`;
  } catch (e) {
    $("result").textContent = String(e);
  }
}

await init();
$("p").addEventListener("input", drawPattern);
for (const id of ["kind", "n", "cap"]) $(id).addEventListener("input", drawCodebook);
$("run").addEventListener("click", runOptimize);
drawPattern();
drawCodebook();
runOptimize();
