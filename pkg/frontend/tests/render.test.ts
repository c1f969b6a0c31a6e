import { describe, expect, it } from "vitest";

import { boxSilhouette, convexHull, fillColor, renderSvg } from "../src/render.js";
import type { Box, Capabilities, FkResponse } from "../src/types.js";

const CAPS: Capabilities = {
  version: "t",
  axes: {},
  config: {
    focal_height: 2.27,
    boom_radius_nominal: 3.44,
    probe_aperture_radius: 3.0,
    turntable_diameter: 6.5,
    clearance: 0.1,
  },
  collision_enabled: true,
  table: null,
  scenes: [],
};

function axisAlignedBox(): Box {
  return {
    center: [1, 2, 3],
    half_extents: [0.5, 0.25, 1],
    axes: [
      [1, 0, 0],
      [0, 1, 0],
      [0, 0, 1],
    ],
  };
}

function fkWith(boxes: Box[], colliding: boolean): FkResponse {
  const pose = {
    position: [0, 0, 3.44] as [number, number, number],
    boresight: [0, 0, -1] as [number, number, number],
    e_co: [1, 0, 0] as [number, number, number],
    e_cx: [0, 1, 0] as [number, number, number],
  };
  return {
    tx: pose,
    rx: pose,
    bistatic: {
      phi_ill: 0, theta_ill: 0, phi_obs: 0, theta_obs: 0,
      pol_ill: 0, pol_obs: 0, r_ill: 3.44, r_obs: 3.44,
    },
    colliding,
    boxes: { tx: boxes, rx: [] },
  };
}

describe("geometry", () => {
  it("convex hull of a square with interior points", () => {
    const hull = convexHull([
      [0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.7],
    ]);
    expect(hull).toHaveLength(4);
  });

  it("axis-aligned box projects to its footprint", () => {
    const top = boxSilhouette(axisAlignedBox(), "top");
    const xs = top.map((p) => p[0]);
    const ys = top.map((p) => p[1]);
    expect(Math.min(...xs)).toBeCloseTo(0.5, 12);
    expect(Math.max(...xs)).toBeCloseTo(1.5, 12);
    expect(Math.min(...ys)).toBeCloseTo(1.75, 12);
    expect(Math.max(...ys)).toBeCloseTo(2.25, 12);
  });

  it("obliquely rotated cube silhouette is a hexagon", () => {
    // rotate 45 deg about z then 45 deg about x: no box axis stays aligned
    // with the top-view normal, so the silhouette gains corners
    const s = Math.SQRT1_2;
    const rz: number[][] = [
      [s, -s, 0],
      [s, s, 0],
      [0, 0, 1],
    ];
    const rx: number[][] = [
      [1, 0, 0],
      [0, s, -s],
      [0, s, s],
    ];
    const mul = (a: number[][], b: number[][]) =>
      a.map((row, i) => row.map((_, j) => a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j]));
    const r = mul(rx, rz);
    const col = (j: number): [number, number, number] => [r[0][j], r[1][j], r[2][j]];
    const box: Box = {
      center: [0, 0, 0],
      half_extents: [1, 1, 1],
      axes: [col(0), col(1), col(2)],
    };
    expect(boxSilhouette(box, "top").length).toBe(6);
  });
});

describe("collision coloring", () => {
  it("colliding renders red for both gantry groups", () => {
    expect(fillColor("colliding", "tx")).toBe("#d62828");
    expect(fillColor("colliding", "rx")).toBe("#d62828");
    expect(fillColor("safe", "tx")).not.toBe("#d62828");
    expect(fillColor("pending", "rx")).not.toBe("#d62828");
  });

  it("svg paints polygons red exactly when the server flag is true", () => {
    const red = renderSvg(fkWith([axisAlignedBox()], true), "colliding", CAPS, "top");
    expect(red).toContain('class="gantry tx colliding"');
    expect(red).toContain('fill="#d62828"');
    const green = renderSvg(fkWith([axisAlignedBox()], false), "safe", CAPS, "top");
    expect(green).not.toContain("#d62828");
  });

  it("empty fk still renders the hall primitives from capabilities", () => {
    const svg = renderSvg(null, "unknown", CAPS, "top");
    expect(svg).toContain("<circle");
    expect(svg).not.toContain("polygon");
  });
});
