import { Stroke } from "./brush.js";
import { GridInfo, meshStep, nodeShape } from "./geometry.js";
import { SeedLabel } from "./labels.js";

export class SeedConflictError extends Error {}

/**
 * Local mirror of the service's stroke rasterizer, so the canvas preview
 * and the exported seed PNG match what the service will compute.
 *
 * A stroke covers every node within an ellipse of radii
 * (max(radius*h1, h1/2), max(radius*h2, h2/2)) swept along the polyline.
 * Inside/Outside overlap is an error; "erase" strokes reset coverage to
 * Free.
 */
export function rasterizeStrokes(strokes: Stroke[], grid: GridInfo): Uint8Array {
  const { cols, rows } = nodeShape(grid);
  const { h1, h2 } = meshStep(grid);
  const labels = new Uint8Array(cols * rows);
  for (const stroke of strokes) {
    const label =
      stroke.label === "inside"
        ? SeedLabel.Inside
        : stroke.label === "outside"
          ? SeedLabel.Outside
          : SeedLabel.Free;
    const r1 = Math.max(stroke.radius * h1, h1 / 2);
    const r2 = Math.max(stroke.radius * h2, h2 / 2);
    const pts = stroke.polyline;
    if (pts.length === 0) continue;
    const covered = new Uint8Array(cols * rows);
    const segments: [[number, number], [number, number]][] = [];
    for (let s = 0; s + 1 < pts.length; s++) segments.push([pts[s], pts[s + 1]]);
    if (segments.length === 0) segments.push([pts[0], pts[0]]);
    for (const [[ax, ay], [bx, by]] of segments) {
      const n = Math.max(
        Math.trunc(Math.hypot((bx - ax) / r1, (by - ay) / r2) * 2),
        1,
      );
      const step = 1 / n;
      for (let k = 0; k <= n; k++) {
        const t = k === n ? 1.0 : k * step;
        const cx = ax + t * (bx - ax);
        const cy = ay + t * (by - ay);
        markEllipse(covered, cols, rows, h1, h2, cx, cy, r1, r2);
      }
    }
    for (let k = 0; k < labels.length; k++) {
      if (!covered[k]) continue;
      if (label === SeedLabel.Free) {
        labels[k] = SeedLabel.Free;
      } else {
        const opposite =
          label === SeedLabel.Inside ? SeedLabel.Outside : SeedLabel.Inside;
        if (labels[k] === opposite) {
          throw new SeedConflictError(
            "stroke overlaps a node of the opposite label",
          );
        }
        labels[k] = label;
      }
    }
  }
  return labels;
}

function markEllipse(
  covered: Uint8Array,
  cols: number,
  rows: number,
  h1: number,
  h2: number,
  cx: number,
  cy: number,
  r1: number,
  r2: number,
): void {
  const iLo = Math.max(Math.ceil((cx - r1) / h1), 0);
  const iHi = Math.min(Math.floor((cx + r1) / h1), cols - 1);
  const jLo = Math.max(Math.ceil((cy - r2) / h2), 0);
  const jHi = Math.min(Math.floor((cy + r2) / h2), rows - 1);
  for (let j = jLo; j <= jHi; j++) {
    for (let i = iLo; i <= iHi; i++) {
      const dx = (i * h1 - cx) / r1;
      const dy = (j * h2 - cy) / r2;
      if (dx * dx + dy * dy <= 1.0) covered[j * cols + i] = 1;
    }
  }
}
