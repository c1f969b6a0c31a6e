import type { Box, Capabilities, FkResponse } from "./types.js";
import type { CollisionDisplay } from "./viewmodel.js";

// Orthographic schematic rendering of the server-supplied box primitives.
// The frontend holds no geometry constants of its own: boxes come posed
// from /fk, hall dimensions from /capabilities.

export type View = "top" | "side";

export interface Polygon {
  points: [number, number][];
  group: "tx" | "rx";
}

function corners(box: Box): [number, number, number][] {
  const out: [number, number, number][] = [];
  const [cx, cy, cz] = box.center;
  const h = box.half_extents;
  const ax = box.axes;
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        out.push([
          cx + sx * h[0] * ax[0][0] + sy * h[1] * ax[1][0] + sz * h[2] * ax[2][0],
          cy + sx * h[0] * ax[0][1] + sy * h[1] * ax[1][1] + sz * h[2] * ax[2][1],
          cz + sx * h[0] * ax[0][2] + sy * h[1] * ax[1][2] + sz * h[2] * ax[2][2],
        ]);
      }
    }
  }
  return out;
}

function project(p: [number, number, number], view: View): [number, number] {
  return view === "top" ? [p[0], p[1]] : [p[0], p[2]];
}

/** Convex hull (monotone chain); projected boxes become their silhouette. */
export function convexHull(pts: [number, number][]): [number, number][] {
  const s = [...pts].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  if (s.length <= 2) return s;
  const cross = (o: number[], a: number[], b: number[]) =>
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  const lower: [number, number][] = [];
  for (const p of s) {
    while (lower.length >= 2 && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0)
      lower.pop();
    lower.push(p);
  }
  const upper: [number, number][] = [];
  for (const p of [...s].reverse()) {
    while (upper.length >= 2 && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0)
      upper.pop();
    upper.push(p);
  }
  return lower.slice(0, -1).concat(upper.slice(0, -1));
}

export function boxSilhouette(box: Box, view: View): [number, number][] {
  return convexHull(corners(box).map((c) => project(c, view)));
}

export function gantryPolygons(fk: FkResponse, view: View): Polygon[] {
  const out: Polygon[] = [];
  for (const b of fk.boxes.tx) out.push({ points: boxSilhouette(b, view), group: "tx" });
  for (const b of fk.boxes.rx) out.push({ points: boxSilhouette(b, view), group: "rx" });
  return out;
}

export const DISPLAY_COLORS: Record<CollisionDisplay, string> = {
  // colliding geometry is drawn red exactly when the server said so
  colliding: "#d62828",
  safe: "#4a7db3",
  pending: "#b8922a",
  unknown: "#8a8a8a",
};

export function fillColor(display: CollisionDisplay, group: "tx" | "rx"): string {
  if (display === "colliding") return DISPLAY_COLORS.colliding;
  if (display === "safe") return group === "tx" ? "#4a7db3" : "#3f9960";
  return DISPLAY_COLORS[display];
}

/** Full SVG document of one orthographic view. */
export function renderSvg(
  fk: FkResponse | null,
  display: CollisionDisplay,
  caps: Capabilities,
  view: View,
  sizePx = 420,
): string {
  const extent = caps.config.boom_radius_nominal * 1.6;
  const s = sizePx / (2 * extent);
  const toPx = ([x, y]: [number, number]): string =>
    `${(sizePx / 2 + x * s).toFixed(1)},${(sizePx / 2 - y * s).toFixed(1)}`;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${sizePx}" height="${sizePx}" viewBox="0 0 ${sizePx} ${sizePx}">`,
  );
  parts.push(`<rect width="100%" height="100%" fill="#16181d"/>`);
  const r_tt = (caps.config.turntable_diameter / 2) * s;
  if (view === "top") {
    parts.push(
      `<circle cx="${sizePx / 2}" cy="${sizePx / 2}" r="${r_tt.toFixed(1)}" fill="#23262e" stroke="#3a3f4a"/>`,
    );
  } else {
    const floorY = sizePx / 2 + caps.config.focal_height * s;
    parts.push(
      `<line x1="0" y1="${floorY.toFixed(1)}" x2="${sizePx}" y2="${floorY.toFixed(1)}" stroke="#3a3f4a"/>`,
    );
  }
  parts.push(
    `<circle cx="${sizePx / 2}" cy="${sizePx / 2}" r="2.5" fill="#e8e8e8"/>`,
  );
  if (fk) {
    for (const poly of gantryPolygons(fk, view)) {
      const pts = poly.points.map(toPx).join(" ");
      parts.push(
        `<polygon class="gantry ${poly.group} ${display}" points="${pts}" ` +
          `fill="${fillColor(display, poly.group)}" fill-opacity="0.55" ` +
          `stroke="${fillColor(display, poly.group)}" stroke-width="1"/>`,
      );
    }
    for (const [probe, color] of [
      [fk.tx, "#9ecbff"],
      [fk.rx, "#a5e8c0"],
    ] as const) {
      const p = project(probe.position, view);
      parts.push(
        `<circle cx="${(sizePx / 2 + p[0] * s).toFixed(1)}" cy="${(sizePx / 2 - p[1] * s).toFixed(1)}" r="4" fill="${color}"/>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}
