import { GridInfo, PixelPoint, pixelToDomain } from "./geometry.js";
import { BrushLabel } from "./labels.js";

/** A finished stroke in the service's wire format. */
export interface Stroke {
  label: BrushLabel;
  /** polyline in domain coordinates */
  polyline: [number, number][];
  /** brush radius in node (= pixel) units */
  radius: number;
}

/** Painting state: current label, radius, and the stroke in progress. */
export class BrushState {
  label: BrushLabel = "outside";
  radius = 3;
  private path: PixelPoint[] = [];

  constructor(private readonly grid: GridInfo) {}

  setRadius(radius: number): void {
    if (!(radius >= 1)) throw new Error("brush radius must be >= 1 pixel");
    this.radius = radius;
  }

  get painting(): boolean {
    return this.path.length > 0;
  }

  get currentPath(): readonly PixelPoint[] {
    return this.path;
  }

  begin(p: PixelPoint): void {
    this.path = [p];
  }

  extend(p: PixelPoint): void {
    if (!this.painting) throw new Error("no stroke in progress");
    const last = this.path[this.path.length - 1];
    // drop sub-pixel jitter so payloads stay small
    if (Math.hypot(p.px - last.px, p.py - last.py) >= 1) this.path.push(p);
  }

  /** Finish the stroke and return the wire payload (null for an empty one). */
  end(): Stroke | null {
    const path = this.path;
    this.path = [];
    if (path.length === 0) return null;
    const polyline = path.map((p) => {
      const d = pixelToDomain(p, this.grid);
      return [d.x1, d.x2] as [number, number];
    });
    return { label: this.label, polyline, radius: this.radius };
  }
}

export function strokesPayload(strokes: Stroke[]): { strokes: Stroke[] } {
  return { strokes };
}
