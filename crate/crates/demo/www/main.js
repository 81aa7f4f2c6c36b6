import init, { models, check_map, simulate, couple } from "./pkg/ims_demo.js";

const FRAMES = 300;
const PALETTE = ["#ffffff", "#3b7dd8", "#2e8b57", "#d2691e", "#8b008b", "#444444"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function draw(canvas, frames, color) {
  const rows = frames.length, cols = frames[0].length;
  canvas.width = cols;
  canvas.height = rows;
  canvas.style.width = Math.max(cols, 240) + "px";
  canvas.style.height = Math.max(rows, 240) + "px";
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(cols, rows);
  frames.forEach((row, t) => row.forEach((v, x) => {
    const hex = color(v, t, x);
    const i = 4 * (t * cols + x);
    img.data[i] = parseInt(hex.slice(1, 3), 16);
    img.data[i + 1] = parseInt(hex.slice(3, 5), 16);
    img.data[i + 2] = parseInt(hex.slice(5, 7), 16);
    img.data[i + 3] = 255;
  }));
  ctx.putImageData(img, 0, 0);
}

function legend(el, n, labels) {
  el.innerHTML = "";
  for (let a = 0; a <= n; a++) {
    const sw = document.createElement("span");
    sw.style.background = PALETTE[a % PALETTE.length];
    sw.style.border = "1px solid #999";
    el.append(sw, labels ? `${a} ${labels[a]}` : `${a}`);
  }
}

function guard(out, f) {
  try { f(); } catch (e) { out.textContent = "error: " + (e.message ?? e); }
}

await init();
for (const sel of document.querySelectorAll(".models")) {
  for (const m of JSON.parse(models())) sel.add(new Option(m, m));
}
$("sim-model").value = "contact";
$("cp-model").value = "gbt";

$("check").onclick = () => guard($("check-out"), () => {
  const r = JSON.parse(check_map($("map").value));
  const lines = [r.attractive ? "attractive" : `not attractive: ${r.violations.length} violation(s)`];
  lines.push(...r.violations);
  lines.push("orderings under which the map is attractive: " +
    (r.orderings.length ? r.orderings.map((p) => "[" + p.join(" ") + "]").join(" ") : "none"));
  $("check-out").textContent = lines.join("\n");
});

$("simulate").onclick = () => guard($("sim-out"), () => {
  const r = JSON.parse(simulate($("sim-model").value, num("sim-sites"), num("sim-horizon"),
    BigInt(num("sim-seed")), $("sim-init").value, FRAMES));
  legend($("sim-legend"), r.n, r.labels);
  draw($("sim-canvas"), r.frames, (v) => PALETTE[v % PALETTE.length]);
  $("sim-out").textContent = `${r.transitions} transitions; time runs downward`;
});

$("couple").onclick = () => guard($("cp-out"), () => {
  const r = JSON.parse(couple($("cp-model").value, num("cp-sites"), num("cp-horizon"),
    BigInt(num("cp-seed")), FRAMES));
  const col = (v) => PALETTE[v % PALETTE.length];
  draw($("cp-lower"), r.lower.frames, col);
  draw($("cp-upper"), r.upper.frames, col);
  draw($("cp-diff"), r.lower.frames, (v, t, x) => {
    const u = r.upper.frames[t][x];
    return v === u ? "#ffffff" : v < u ? "#bbbbbb" : "#ff0000";
  });
  $("cp-out").textContent = [
    `model is ${r.attractive ? "attractive" : "not attractive"}`,
    "left: lower copy, middle: upper copy, right: grey where they differ, red where lower > upper",
    r.violation ? `order first broken at t=${r.violation[0].toFixed(4)}, site ${r.violation[1]}` : "order kept throughout",
  ].join("\n");
});
