/**
 * Seed labels and their wire colors.
 *
 * The service decodes seed PNGs with fixed thresholds: a pixel is Outside
 * when R > 128 and G, B < 64; Inside when B > 128 and R, G < 64; anything
 * else is Free.  We emit saturated colors so the round trip is exact.
 */
export enum SeedLabel {
  Free = 0,
  Inside = 1,
  Outside = 2,
}

export type BrushLabel = "inside" | "outside" | "erase";

export const LABEL_COLORS: Record<SeedLabel, [number, number, number]> = {
  [SeedLabel.Free]: [0, 0, 0],
  [SeedLabel.Inside]: [0, 0, 255],
  [SeedLabel.Outside]: [255, 0, 0],
};

const RED_MIN = 128;
const OTHER_MAX = 64;

/** Classify one RGB pixel with the service's thresholds. */
export function labelFromRgb(r: number, g: number, b: number): SeedLabel {
  if (r > RED_MIN && g < OTHER_MAX && b < OTHER_MAX) return SeedLabel.Outside;
  if (b > RED_MIN && r < OTHER_MAX && g < OTHER_MAX) return SeedLabel.Inside;
  return SeedLabel.Free;
}

/** Label grid -> RGBA pixels (one pixel per node, row-major). */
export function encodeSeedImage(labels: Uint8Array): Uint8ClampedArray<ArrayBuffer> {
  const rgba = new Uint8ClampedArray(new ArrayBuffer(labels.length * 4));
  for (let k = 0; k < labels.length; k++) {
    const [r, g, b] = LABEL_COLORS[labels[k] as SeedLabel];
    rgba[4 * k] = r;
    rgba[4 * k + 1] = g;
    rgba[4 * k + 2] = b;
    rgba[4 * k + 3] = 255;
  }
  return rgba;
}

/** RGBA pixels -> label grid, mirroring the service's decoder. */
export function decodeSeedImage(rgba: Uint8ClampedArray | Uint8Array): Uint8Array {
  const labels = new Uint8Array(rgba.length / 4);
  for (let k = 0; k < labels.length; k++) {
    labels[k] = labelFromRgb(rgba[4 * k], rgba[4 * k + 1], rgba[4 * k + 2]);
  }
  return labels;
}
