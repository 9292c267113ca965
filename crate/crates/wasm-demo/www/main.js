import init, { coneRegion, convexityCurve, solveSurface } from "./pkg/gma_wasm_demo.js";

const $ = (id) => document.getElementById(id);

function report(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

function drawCone() {
  const res = 150;
  const canvas = $("cone");
  const ctx = canvas.getContext("2d");
  const extent = Number($("extent").value);
  let v;
  try {
    v = coneRegion(
      new Float64Array([Number($("a1").value), Number($("a2").value), Number($("a3").value)]),
      Number($("h3").value), extent, res);
  } catch (e) {
    report("cone-out", String(e), true);
    return;
  }
  const img = ctx.createImageData(res, res);
  let inside = 0;
  for (let j = 0; j < res; j++) {
    for (let i = 0; i < res; i++) {
      const k = j * res + i;
      const [lh, rm, ll] = [v[3 * k], v[3 * k + 1], v[3 * k + 2]];
      let c = [200, 200, 200];
      if (lh > 0 && rm > 0 && ll > 0) { c = [90, 180, 100]; inside++; }
      else if (lh > 0 && rm <= 0) c = [240, 170, 80];
      else if (lh > 0) c = [230, 230, 140];
      // edge of the adjugate cone
      if (i > 0 && Math.sign(ll) !== Math.sign(v[3 * (k - 1) + 2])) c = [200, 30, 30];
      // image rows run top to bottom, h₂ bottom to top
      const p = 4 * ((res - 1 - j) * res + i);
      img.data.set([...c, 255], p);
    }
  }
  const tmp = new OffscreenCanvas(res, res);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
  report("cone-out",
    `h₁, h₂ ∈ (0, ${extent}]   h₃ = ${$("h3").value}   in cone: ${(100 * inside / (res * res)).toFixed(1)}%`);
}

function drawConvexity() {
  const canvas = $("convex");
  const ctx = canvas.getContext("2d");
  let v;
  try {
    v = convexityCurve(Number($("cseed").value) >>> 0, 101);
  } catch (e) {
    report("convex-out", String(e), true);
    return;
  }
  const n = v.length / 3;
  let lo = 0;
  for (let k = 0; k < n; k++) lo = Math.min(lo, v[3 * k + 1], v[3 * k + 2]);
  lo = lo === 0 ? -1 : lo * 1.1;
  const W = canvas.width, H = canvas.height, pad = 20;
  ctx.clearRect(0, 0, W, H);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(W - pad, pad);
  ctx.stroke();
  const x = (t) => pad + t * (W - 2 * pad);
  const y = (s) => pad + (s / lo) * (H - 2 * pad);
  for (const [col, off] of [["#2a6fd6", 1], ["#8a3fc0", 2]]) {
    ctx.strokeStyle = col;
    ctx.beginPath();
    for (let k = 0; k < n; k++) {
      const px = x(v[3 * k]), py = y(v[3 * k + off]);
      k === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    }
    ctx.stroke();
  }
  let maxSlack = -Infinity;
  for (let k = 0; k < n; k++) maxSlack = Math.max(maxSlack, v[3 * k + 1], v[3 * k + 2]);
  report("convex-out", `largest slack ${maxSlack.toExponential(2)}   deepest ${lo.toExponential(2)}`);
}

function runSolve() {
  const size = Number($("size").value);
  report("solve-out", "solving…");
  // let the status text paint before the solver blocks the thread
  setTimeout(() => {
    let v;
    const t0 = performance.now();
    try {
      v = solveSurface(size, Number($("amp").value), Number($("sseed").value) >>> 0);
    } catch (e) {
      report("solve-out", String(e), true);
      return;
    }
    const ms = performance.now() - t0;
    const [resid, newton, steps, sup] = v;
    const phi = v.subarray(4);
    const canvas = $("phi");
    const ctx = canvas.getContext("2d");
    const img = ctx.createImageData(size, size);
    const scale = sup > 0 ? sup : 1;
    for (let i = 0; i < size; i++) {
      for (let j = 0; j < size; j++) {
        const s = phi[i * size + j] / scale;
        const r = s > 0 ? 255 : Math.round(255 * (1 + s));
        const b = s < 0 ? 255 : Math.round(255 * (1 - s));
        const g = Math.round(255 * (1 - Math.abs(s)));
        // x₁ to the right, y₁ upward
        img.data.set([r, g, b, 255], 4 * ((size - 1 - j) * size + i));
      }
    }
    const tmp = new OffscreenCanvas(size, size);
    tmp.getContext("2d").putImageData(img, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
    report("solve-out",
      `residual ${resid.toExponential(2)}   Newton ${newton}   continuity steps ${steps}\n` +
      `sup|φ| ${sup.toExponential(3)}   ${ms.toFixed(0)} ms`);
  }, 20);
}

await init();
for (const id of ["a1", "a2", "a3", "h3", "extent"]) $(id).addEventListener("input", drawCone);
$("cseed").addEventListener("input", drawConvexity);
$("cnext").addEventListener("click", () => { $("cseed").value = Number($("cseed").value) + 1; drawConvexity(); });
$("solve").addEventListener("click", runSolve);
drawCone();
drawConvexity();
runSolve();
