/**
 * DOM wiring for the seed editor.  All segmentation math lives on the
 * service; this file only handles canvas painting, the parameter form, and
 * run polling.  The logic-bearing pieces (geometry, brush, raster, api,
 * poller) are plain modules with their own tests.
 */
import { ApiClient, ApiError, SessionState } from "./api.js";
import { BrushState, Stroke } from "./brush.js";
import { GridInfo, domainToPixel, nodeShape } from "./geometry.js";
import { SeedLabel, encodeSeedImage } from "./labels.js";
import { defaultParams, RunParams, validateParams } from "./params.js";
import { runAndPoll } from "./poller.js";
import { rasterizeStrokes, SeedConflictError } from "./raster.js";

interface AppState {
  client: ApiClient;
  sessionId: string | null;
  grid: GridInfo | null;
  image: ImageBitmap | null;
  strokes: Stroke[];
  brush: BrushState | null;
  running: boolean;
  lastState: SessionState | null;
}

export function mountApp(root: HTMLElement, baseUrl = ""): void {
  root.innerHTML = `
    <div class="toolbar">
      <input type="file" id="file" accept=".pgm,.png" />
      <label>brush
        <select id="label">
          <option value="outside">outside (red)</option>
          <option value="inside">inside (blue)</option>
          <option value="erase">erase</option>
        </select>
      </label>
      <label>radius <input id="radius" type="number" min="1" value="3" /></label>
      <button id="undo" disabled>undo stroke</button>
      <button id="export" disabled>export seed PNG</button>
      <button id="run" disabled>run</button>
      <span id="status">no session</span>
    </div>
    <details><summary>parameters</summary><form id="params"></form></details>
    <div class="stage"><canvas id="canvas"></canvas></div>
    <div id="summary"></div>
    <div id="toast"></div>
  `;
  const state: AppState = {
    client: new ApiClient(baseUrl),
    sessionId: null,
    grid: null,
    image: null,
    strokes: [],
    brush: null,
    running: false,
    lastState: null,
  };
  const canvas = root.querySelector<HTMLCanvasElement>("#canvas")!;
  const statusEl = root.querySelector<HTMLSpanElement>("#status")!;
  const toastEl = root.querySelector<HTMLDivElement>("#toast")!;
  const summaryEl = root.querySelector<HTMLDivElement>("#summary")!;
  const params = defaultParams();
  buildParamForm(root.querySelector<HTMLFormElement>("#params")!, params);

  const toast = (message: string) => {
    toastEl.textContent = message;
    setTimeout(() => {
      if (toastEl.textContent === message) toastEl.textContent = "";
    }, 4000);
  };

  const redraw = () => {
    if (!state.grid || !state.image) return;
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(state.image, 0, 0);
    drawSeeds(ctx, state);
    drawContour(ctx, state);
  };

  root.querySelector<HTMLInputElement>("#file")!.addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      const bytes = await file.arrayBuffer();
      const info = await state.client.createSession(bytes);
      state.sessionId = info.id;
      state.grid = { width: info.width, height: info.height };
      state.brush = new BrushState(state.grid);
      state.strokes = [];
      state.lastState = null;
      canvas.width = info.width;
      canvas.height = info.height;
      state.image = await imageBitmapFromUpload(file, info.width, info.height);
      statusEl.textContent = `session ${info.id.slice(0, 8)} (${info.width}x${info.height})`;
      for (const id of ["undo", "export", "run"]) {
        root.querySelector<HTMLButtonElement>(`#${id}`)!.disabled = false;
      }
      redraw();
    } catch (err) {
      toast(errorText(err));
    }
  });

  root.querySelector<HTMLSelectElement>("#label")!.addEventListener("change", (ev) => {
    if (state.brush) {
      state.brush.label = (ev.target as HTMLSelectElement).value as Stroke["label"];
    }
  });
  root.querySelector<HTMLInputElement>("#radius")!.addEventListener("change", (ev) => {
    try {
      state.brush?.setRadius(Number((ev.target as HTMLInputElement).value));
    } catch (err) {
      toast(errorText(err));
    }
  });

  const pointerPos = (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    return {
      px: ((ev.clientX - rect.left) / rect.width) * canvas.width,
      py: ((ev.clientY - rect.top) / rect.height) * canvas.height,
    };
  };
  canvas.addEventListener("pointerdown", (ev) => {
    if (!state.brush || state.running) return;
    canvas.setPointerCapture(ev.pointerId);
    state.brush.begin(pointerPos(ev));
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (state.brush?.painting) {
      state.brush.extend(pointerPos(ev));
      redraw();
    }
  });
  canvas.addEventListener("pointerup", async () => {
    if (!state.brush?.painting || !state.sessionId || !state.grid) return;
    const stroke = state.brush.end();
    if (!stroke) return;
    const attempt = [...state.strokes, stroke];
    try {
      rasterizeStrokes(attempt, state.grid); // local conflict check
      await state.client.putStrokes(state.sessionId, attempt);
      state.strokes = attempt;
    } catch (err) {
      // rolled back: state.strokes unchanged
      toast(err instanceof SeedConflictError ? err.message : errorText(err));
    }
    redraw();
  });

  root.querySelector<HTMLButtonElement>("#undo")!.addEventListener("click", async () => {
    if (!state.sessionId || state.strokes.length === 0) return;
    const attempt = state.strokes.slice(0, -1);
    try {
      await state.client.putStrokes(state.sessionId, attempt);
      state.strokes = attempt;
      redraw();
    } catch (err) {
      toast(errorText(err));
    }
  });

  root.querySelector<HTMLButtonElement>("#export")!.addEventListener("click", () => {
    if (!state.grid) return;
    const blobUrl = exportSeedPngUrl(state.strokes, state.grid);
    const a = document.createElement("a");
    a.href = blobUrl;
    a.download = "seeds.png";
    a.click();
  });

  root.querySelector<HTMLButtonElement>("#run")!.addEventListener("click", async () => {
    if (!state.sessionId || state.running) return;
    const problems = validateParams(params);
    if (problems.length) {
      toast(problems.join("; "));
      return;
    }
    state.running = true;
    statusEl.textContent = "running...";
    try {
      const final = await runAndPoll(state.client, state.sessionId, params, {
        onState: (s) => {
          state.lastState = s;
          statusEl.textContent = `step ${s.step}, t = ${s.time.toFixed(4)}`;
          redraw();
        },
      });
      state.lastState = final;
      summaryEl.textContent = summarize(final);
      statusEl.textContent = final.status;
    } catch (err) {
      toast(errorText(err));
      statusEl.textContent = "failed";
    } finally {
      state.running = false;
      redraw();
    }
  });
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return `${err.status}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

function summarize(s: SessionState): string {
  if (s.status === "failed") return `run failed: ${s.diagnostics.error}`;
  const solver = s.solver
    ? `, sweeps ${s.solver.sweeps}, residual ${s.solver.complementarityResidual.toExponential(2)}`
    : "";
  return `t = ${s.time.toFixed(4)}, components: ${s.componentCount}${solver}`;
}

function drawSeeds(ctx: CanvasRenderingContext2D, state: AppState): void {
  if (!state.grid) return;
  let labels: Uint8Array;
  try {
    labels = rasterizeStrokes(state.strokes, state.grid);
  } catch {
    return;
  }
  const { cols, rows } = nodeShape(state.grid);
  const rgba = encodeSeedImage(labels);
  for (let k = 0; k < labels.length; k++) {
    if (labels[k] === SeedLabel.Free) rgba[4 * k + 3] = 0;
    else rgba[4 * k + 3] = 160;
  }
  const overlay = new ImageData(rgba, cols, rows);
  // one node = one pixel; the extra node row/column lands on the canvas edge
  ctx.putImageData(overlay, 0, 0);
}

function drawContour(ctx: CanvasRenderingContext2D, state: AppState): void {
  const contour = state.lastState?.contour;
  if (!contour || !state.grid) return;
  ctx.save();
  ctx.strokeStyle = "#00ff55";
  ctx.lineWidth = 1.5;
  for (const poly of contour) {
    ctx.beginPath();
    poly.points.forEach(([x1, x2], idx) => {
      const p = domainToPixel({ x1, x2 }, state.grid!);
      if (idx === 0) ctx.moveTo(p.px, p.py);
      else ctx.lineTo(p.px, p.py);
    });
    if (poly.closed) ctx.closePath();
    ctx.stroke();
  }
  ctx.restore();
}

/** Rasterize the strokes to the node lattice and return a PNG object URL. */
export function exportSeedPngUrl(strokes: Stroke[], grid: GridInfo): string {
  const { cols, rows } = nodeShape(grid);
  const labels = rasterizeStrokes(strokes, grid);
  const off = document.createElement("canvas");
  off.width = cols;
  off.height = rows;
  const ctx = off.getContext("2d")!;
  ctx.putImageData(new ImageData(encodeSeedImage(labels), cols, rows), 0, 0);
  return off.toDataURL("image/png");
}

function buildParamForm(form: HTMLFormElement, params: RunParams): void {
  const fields: [keyof RunParams, string][] = [
    ["epsilon", "epsilon"],
    ["lambda", "lambda"],
    ["gForm", "g form"],
    ["sigma", "sigma (blank = h1)"],
    ["tau", "tau (blank = h1*h2)"],
    ["omega", "omega"],
    ["tol", "tol"],
    ["maxSweeps", "max sweeps"],
    ["finalTime", "final time"],
    ["stepCount", "step count"],
    ["steadyTol", "steady tol"],
    ["delta", "delta (blank = 0.05*min L)"],
    ["bigM", "big M"],
  ];
  for (const [key, title] of fields) {
    const label = document.createElement("label");
    label.textContent = `${title} `;
    const input = document.createElement("input");
    input.name = key;
    const value = params[key];
    input.value = value === null ? "" : String(value);
    input.addEventListener("change", () => {
      const raw = input.value.trim();
      if (key === "gForm") {
        params.gForm = raw === "rational" ? "rational" : "inverse_sqrt";
      } else if (raw === "") {
        (params as unknown as Record<string, unknown>)[key] = null;
      } else {
        (params as unknown as Record<string, unknown>)[key] = Number(raw);
      }
    });
    label.appendChild(input);
    form.appendChild(label);
  }
}

async function imageBitmapFromUpload(
  file: File,
  width: number,
  height: number,
): Promise<ImageBitmap> {
  if (file.name.toLowerCase().endsWith(".pgm")) {
    const gray = decodePgm(new Uint8Array(await file.arrayBuffer()), width, height);
    const rgba = new Uint8ClampedArray(width * height * 4);
    for (let k = 0; k < gray.length; k++) {
      rgba[4 * k] = rgba[4 * k + 1] = rgba[4 * k + 2] = gray[k];
      rgba[4 * k + 3] = 255;
    }
    return createImageBitmap(new ImageData(rgba, width, height));
  }
  return createImageBitmap(file);
}

/** Minimal binary PGM (P5, maxval <= 255) decoder for display only. */
export function decodePgm(bytes: Uint8Array, width: number, height: number): Uint8Array {
  let pos = 0;
  const token = (): string => {
    while (pos < bytes.length && /\s/.test(String.fromCharCode(bytes[pos]))) pos++;
    if (bytes[pos] === 0x23) {
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      return token();
    }
    let out = "";
    while (pos < bytes.length && !/\s/.test(String.fromCharCode(bytes[pos]))) {
      out += String.fromCharCode(bytes[pos++]);
    }
    return out;
  };
  if (token() !== "P5") throw new Error("not a binary PGM");
  const w = Number(token());
  const h = Number(token());
  const maxval = Number(token());
  pos++; // single whitespace after maxval
  if (w !== width || h !== height) throw new Error("PGM size mismatch");
  if (maxval > 255) throw new Error("16-bit PGM display not supported");
  return bytes.slice(pos, pos + w * h);
}
