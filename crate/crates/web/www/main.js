import init, { profile_curves, Simulation } from "./pkg/twistflow_web.js";

const $ = (id) => document.getElementById(id);
let sim = null;

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
}

function line(ctx, xs, ys, map, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, k) => {
    const [px, py] = map(x, ys[k]);
    k ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
  });
  ctx.stroke();
}

function drawProfile() {
  const m = +$("p-m").value, sigma = +$("p-s").value;
  $("p-m-v").textContent = m;
  $("p-s-v").textContent = sigma;
  const c = $("profile"), ctx = c.getContext("2d"), pad = 20, rMax = 5;
  const t = profile_curves(m, sigma, rMax, 400);
  const r = [], h1 = [], h3 = [];
  for (let k = 0; k < t.length; k += 3) { r.push(t[k]); h1.push(t[k + 1]); h3.push(t[k + 2]); }
  axes(ctx, c.width, c.height, pad);
  const map = (x, y) => [pad + (x / rMax) * (c.width - 2 * pad), c.height / 2 - y * (c.height / 2 - pad)];
  line(ctx, [0, rMax], [0, 0], map, "#ddd");
  line(ctx, r, h1, map, "#c33");
  line(ctx, r, h3, map, "#36c");
  ctx.fillStyle = "#c33"; ctx.fillText("h1", c.width - 50, 35);
  ctx.fillStyle = "#36c"; ctx.fillText("h3", c.width - 50, 50);
}

function drawSigma() {
  const c = $("sigma"), ctx = c.getContext("2d"), pad = 20;
  const t = sim.times(), s = sim.sigma().map(Math.log);
  const tEnd = t[t.length - 1], rate = sim.predicted_rate();
  const pred = t.map((x) => s[0] + rate * x);
  const lo = Math.min(...s, ...pred), hi = Math.max(...s, ...pred);
  const map = (x, y) => [pad + (x / tEnd) * (c.width - 2 * pad), c.height - pad - ((y - lo) / (hi - lo || 1)) * (c.height - 2 * pad)];
  axes(ctx, c.width, c.height, pad);
  line(ctx, t, pred, map, "#aaa");
  line(ctx, t, s, map, "#c33");
  ctx.fillStyle = "#c33"; ctx.fillText("log sigma", c.width - 90, 35);
  ctx.fillStyle = "#888"; ctx.fillText("predicted slope", c.width - 90, 50);
  const fit = sim.fitted_rate();
  $("rate").textContent = `${sim.status()}; predicted rate ${rate.toFixed(5)}, fitted ${fit.toFixed(5)}, rel err ${Math.abs(fit / rate - 1).toExponential(2)}`;
}

function drawSlice() {
  const hw = +$("d-w").value;
  $("d-w-v").textContent = hw;
  if (!sim) return;
  const res = 120, d = sim.director_slice(hw, res);
  const c = $("slice"), ctx = c.getContext("2d");
  const img = ctx.createImageData(res, res);
  for (let k = 0; k < res * res; k++) {
    const [x, y, z] = [d[3 * k], d[3 * k + 1], d[3 * k + 2]];
    const hue = (Math.atan2(y, x) / (2 * Math.PI) + 1) % 1;
    const rgb = hsl(hue, 1, 0.5 + 0.45 * z);
    img.data.set([...rgb, 255], 4 * k);
  }
  const tmp = new OffscreenCanvas(res, res);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, c.width, c.height);
}

function hsl(h, s, l) {
  const a = s * Math.min(l, 1 - l);
  const f = (n) => {
    const k = (n + h * 12) % 12;
    return Math.round(255 * (l - a * Math.max(-1, Math.min(k - 3, 9 - k, 1))));
  };
  return [f(0), f(8), f(4)];
}

function run() {
  $("rate").textContent = "running...";
  setTimeout(() => {
    try {
      if (sim) sim.free();
      sim = new Simulation(+$("s-m").value, +$("s-mu").value, +$("s-w").value, +$("s-n").value, +$("s-t").value);
      drawSigma();
      drawSlice();
    } catch (e) {
      sim = null;
      $("rate").textContent = `error: ${e.message ?? e}`;
    }
  });
}

await init();
for (const id of ["p-m", "p-s"]) $(id).addEventListener("input", drawProfile);
$("d-w").addEventListener("input", drawSlice);
$("run").addEventListener("click", run);
drawProfile();
run();
