import { describe, expect, it } from "vitest";

import { BrushState } from "../src/brush.js";

const grid = { width: 128, height: 128 };

describe("BrushState", () => {
  it("builds a stroke payload in domain coordinates", () => {
    const brush = new BrushState(grid);
    brush.label = "outside";
    brush.setRadius(2.5);
    brush.begin({ px: 64, py: 25.6 });
    brush.extend({ px: 64, py: 102.4 });
    const stroke = brush.end()!;
    expect(stroke.label).toBe("outside");
    expect(stroke.radius).toBe(2.5);
    expect(stroke.polyline[0][0]).toBeCloseTo(0.5, 12);
    expect(stroke.polyline[0][1]).toBeCloseTo(0.2, 12);
    expect(stroke.polyline[1][1]).toBeCloseTo(0.8, 12);
    expect(brush.painting).toBe(false);
  });

  it("drops sub-pixel jitter but keeps real motion", () => {
    const brush = new BrushState(grid);
    brush.begin({ px: 10, py: 10 });
    brush.extend({ px: 10.3, py: 10.2 }); // < 1 px, dropped
    brush.extend({ px: 12, py: 10 });
    const stroke = brush.end()!;
    expect(stroke.polyline.length).toBe(2);
  });

  it("rejects radii below one pixel", () => {
    const brush = new BrushState(grid);
    expect(() => brush.setRadius(0.5)).toThrow();
    expect(() => brush.setRadius(NaN)).toThrow();
  });

  it("returns null for an empty stroke and guards extend", () => {
    const brush = new BrushState(grid);
    expect(brush.end()).toBeNull();
    expect(() => brush.extend({ px: 0, py: 0 })).toThrow();
  });
});
