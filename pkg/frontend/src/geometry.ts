/**
 * Coordinate conventions shared with the service.
 *
 * An uploaded image of `width x height` pixels becomes a computational grid
 * of (width + 1) x (height + 1) nodes over the domain
 * [0, width/height] x [0, 1]; node (i, j) sits at (i * h1, j * h2) with
 * h1 = h2 = 1 / height.  Canvas pixels are drawn 1:1 with image pixels, so
 * node indices coincide with pixel coordinates (up to the one extra
 * node row/column at the far edges).
 */
export interface GridInfo {
  /** image width in pixels (= N1) */
  readonly width: number;
  /** image height in pixels (= N2) */
  readonly height: number;
}

export interface DomainPoint {
  readonly x1: number;
  readonly x2: number;
}

export interface PixelPoint {
  readonly px: number;
  readonly py: number;
}

export function domainExtent(grid: GridInfo): { l1: number; l2: number } {
  return { l1: grid.width / grid.height, l2: 1.0 };
}

export function meshStep(grid: GridInfo): { h1: number; h2: number } {
  return { h1: 1 / grid.height, h2: 1 / grid.height };
}

/** Canvas/image pixel to domain coordinates. */
export function pixelToDomain(p: PixelPoint, grid: GridInfo): DomainPoint {
  const { h1, h2 } = meshStep(grid);
  return { x1: p.px * h1, x2: p.py * h2 };
}

/** Domain coordinates back to canvas/image pixels. */
export function domainToPixel(d: DomainPoint, grid: GridInfo): PixelPoint {
  const { h1, h2 } = meshStep(grid);
  return { px: d.x1 / h1, py: d.x2 / h2 };
}

/** Nearest grid node of a pixel position, clamped to the node lattice. */
export function pixelToNode(p: PixelPoint, grid: GridInfo): { i: number; j: number } {
  const clamp = (value: number, hi: number) =>
    Math.min(Math.max(Math.round(value), 0), hi);
  return { i: clamp(p.px, grid.width), j: clamp(p.py, grid.height) };
}

/** Number of nodes per row / number of node rows. */
export function nodeShape(grid: GridInfo): { cols: number; rows: number } {
  return { cols: grid.width + 1, rows: grid.height + 1 };
}
