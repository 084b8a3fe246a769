import init, { render_slice, lyapunov, verify } from "./pkg/pkattract_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(out, f) {
  try {
    f();
  } catch (e) {
    out.textContent = String(e);
  }
}

function drawSlice() {
  const canvas = $("slice");
  const status = $("render-status");
  guard(status, () => {
    const t0 = performance.now();
    const gray = render_slice(num("re"), num("im"), num("samples"), canvas.width, canvas.height, 1n);
    const ctx = canvas.getContext("2d");
    const img = ctx.createImageData(canvas.width, canvas.height);
    gray.forEach((g, i) => {
      img.data.set([g, g, g, 255], 4 * i);
    });
    ctx.putImageData(img, 0, 0);
    status.textContent = `${num("samples")} samples in ${(performance.now() - t0).toFixed(0)} ms`;
  });
}

function runLyapunov() {
  const out = $("lyap-out");
  guard(out, () => {
    const v = lyapunov(num("k"), num("re"), num("im"), num("orbits"), num("length"), 2n);
    const m = v.length / 2;
    out.textContent = Array.from(v.slice(0, m), (x, i) => `χ${i + 1} = ${x.toFixed(5)} ± ${v[m + i].toExponential(1)}`).join("\n");
  });
}

function runVerify() {
  const out = $("verify-out");
  guard(out, () => {
    out.textContent = verify(num("k"), num("re"), num("im"));
  });
}

await init();
$("render").onclick = drawSlice;
$("lyap").onclick = runLyapunov;
$("verify").onclick = runVerify;
drawSlice();
