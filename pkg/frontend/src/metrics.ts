// Chart data extraction and hand-rolled SVG line charts for the metrics
// dashboard. Values are taken verbatim from the /stats payload; only the
// geometry is computed here.

import type { StatsRecord } from "./api.js";

export interface Series {
  name: string;
  color: string;
  points: { x: number; y: number | null }[];
}

export function fitnessSeries(records: readonly StatsRecord[]): Series[] {
  return [
    {
      name: "best fitness",
      color: "#d33682",
      points: records.map((r) => ({ x: r.generation, y: r.best_fitness })),
    },
    {
      name: "mean fitness",
      color: "#6c71c4",
      points: records.map((r) => ({ x: r.generation, y: r.mean_fitness })),
    },
  ];
}

export function elementSeries(records: readonly StatsRecord[]): Series[] {
  return [
    {
      name: "best elements",
      color: "#cb4b16",
      points: records.map((r) => ({ x: r.generation, y: r.best_element_count })),
    },
    {
      name: "mean elements",
      color: "#859900",
      points: records.map((r) => ({ x: r.generation, y: r.mean_element_count })),
    },
  ];
}

export function subsetSeries(records: readonly StatsRecord[]): Series[] {
  return [
    {
      name: "evaluated glyphs",
      color: "#268bd2",
      points: records.map((r) => ({ x: r.generation, y: r.mean_l_score })),
    },
    {
      name: "remaining glyphs",
      color: "#2aa198",
      points: records.map((r) => ({ x: r.generation, y: r.mean_nonl_score })),
    },
  ];
}

export function similaritySeries(records: readonly StatsRecord[]): Series[] {
  return [
    {
      name: "population similarity",
      color: "#b58900",
      points: records.map((r) => ({ x: r.generation, y: r.population_similarity })),
    },
    {
      name: "boost active",
      color: "#dc322f",
      points: records.map((r) => ({ x: r.generation, y: r.boost_active ? 1 : 0 })),
    },
  ];
}

export interface ChartGeometry {
  width: number;
  height: number;
  padding: number;
}

// Maps one series to an SVG polyline points string; gaps (null y) split the
// line into separate segments, so missing generations are skipped, not drawn.
export function polylinePoints(
  series: Series,
  xMax: number,
  yMin: number,
  yMax: number,
  geom: ChartGeometry,
): string[] {
  const { width, height, padding } = geom;
  const spanX = Math.max(xMax, 1);
  const spanY = yMax - yMin || 1;
  const runs: string[][] = [[]];
  for (const p of series.points) {
    if (p.y === null || p.y === undefined) {
      if (runs[runs.length - 1].length) runs.push([]);
      continue;
    }
    const px = padding + (p.x / spanX) * (width - 2 * padding);
    const py = height - padding - ((p.y - yMin) / spanY) * (height - 2 * padding);
    runs[runs.length - 1].push(`${round2(px)},${round2(py)}`);
  }
  return runs.filter((r) => r.length > 0).map((r) => r.join(" "));
}

export function seriesBounds(series: readonly Series[]): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      if (p.y === null || p.y === undefined) continue;
      min = Math.min(min, p.y);
      max = Math.max(max, p.y);
    }
  }
  if (!isFinite(min)) return { min: 0, max: 1 };
  if (min === max) return { min: min - 0.5, max: max + 0.5 };
  return { min, max };
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export function lineChartSvg(
  series: readonly Series[],
  geom: ChartGeometry = { width: 420, height: 160, padding: 14 },
): string {
  const records = series.flatMap((s) => s.points);
  const xMax = records.reduce((m, p) => Math.max(m, p.x), 0);
  const { min, max } = seriesBounds(series);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${geom.width}" height="${geom.height}" viewBox="0 0 ${geom.width} ${geom.height}">`,
    `<rect width="${geom.width}" height="${geom.height}" fill="#fdf6e3"/>`,
  ];
  for (const s of series) {
    for (const pts of polylinePoints(s, xMax, min, max, geom)) {
      parts.push(
        `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="1.5"/>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}
