import init, { Demo, perception } from "./pkg/aos_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let demo = null;

function paint(canvas, rgba) {
  canvas.width = demo.width();
  canvas.height = demo.height();
  const img = new ImageData(new Uint8ClampedArray(rgba), demo.width(), demo.height());
  canvas.getContext("2d").putImageData(img, 0, 0);
}

function refresh() {
  for (const id of ["u", "a", "ef", "h"]) $(`${id}-out`).textContent = num(id).toFixed(2);
  const errors = [];
  if (demo) {
    try { paint($("integral"), demo.integral(num("u"), num("a"), num("h"))); }
    catch (e) { errors.push(`integral: ${e.message}`); }
    try { paint($("anaglyph"), demo.anaglyph(num("u"), num("a"), num("ef"), num("h"))); }
    catch (e) { errors.push(`stereo: ${e.message}`); }
  }
  try {
    const p = JSON.parse(perception(num("ef"), num("acuity"), new Float64Array([0.3, 1.8, 21])));
    $("perception").tBodies[0].innerHTML = p.results.map((r) =>
      `<tr><td>${r.target_h}</td><td>${r.d_display_arcmin.toFixed(2)}</td>` +
      `<td>${r.pth === null ? "beyond infinity" : r.pth.toFixed(3)}</td><td>${r.gradient.toFixed(3)}</td>` +
      `<td>${r.detectable ? "yes" : "no"}</td><td>${r.fusible ? "yes" : "no"}</td></tr>`).join("");
    $("jddi").textContent = `Just-detectable depth interval: ${p.jddi.toFixed(3)} m`;
  } catch (e) { errors.push(`perception: ${e.message}`); }
  $("error").textContent = errors.join(" | ");
}

function simulate() {
  $("status").textContent = "rendering scan...";
  // Let the status text paint before the synchronous render blocks.
  setTimeout(() => {
    try {
      demo?.free();
      demo = new Demo($("preset").value, num("seed"));
      const d = JSON.parse(demo.describe());
      $("status").textContent = `${d.poses.length} frames at ${d.width}x${d.height}, altitude ${d.h} m`;
    } catch (e) {
      demo = null;
      $("status").textContent = e.message;
    }
    refresh();
  }, 10);
}

await init();
for (const id of ["u", "a", "ef", "h", "acuity"]) $(id).addEventListener("input", refresh);
$("simulate").addEventListener("click", simulate);
simulate();
