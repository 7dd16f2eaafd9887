// Shape-mapping state for the element replacement editor. Exported files use
// the same schema the CLI consumes, so a studio preview and a CLI render fed
// the exported mapping are byte-identical.

export interface MappingFile {
  format: "shape-mapping";
  version: 1;
  mode: "explicit" | "random";
  seed?: number;
  assignments: Record<string, string>;
}

// Small deterministic PRNG so "randomize (seed)" is reproducible in the UI
// without any server round trip.
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomAssignments(
  seed: number,
  segmentCount: number,
  shapeIds: readonly string[],
): Map<number, string> {
  if (shapeIds.length === 0) throw new Error("shape library is empty");
  const rand = mulberry32(seed);
  const out = new Map<number, string>();
  for (let i = 0; i < segmentCount; i++) {
    out.set(i, shapeIds[Math.floor(rand() * shapeIds.length)]);
  }
  return out;
}

export function buildMappingFile(assignments: Map<number, string>): MappingFile {
  const entries: Record<string, string> = {};
  for (const idx of [...assignments.keys()].sort((a, b) => a - b)) {
    entries[String(idx)] = assignments.get(idx)!;
  }
  return { format: "shape-mapping", version: 1, mode: "explicit", assignments: entries };
}

export function serializeMappingFile(file: MappingFile): string {
  return JSON.stringify(file, null, 2) + "\n";
}

export function parseMappingFile(text: string): MappingFile {
  const raw = JSON.parse(text) as Partial<MappingFile>;
  if (raw.format !== "shape-mapping" || raw.version !== 1) {
    throw new Error("not a shape-mapping file");
  }
  const mode = raw.mode ?? "explicit";
  if (mode !== "explicit" && mode !== "random") {
    throw new Error(`unknown mapping mode ${String(raw.mode)}`);
  }
  if (mode === "random" && typeof raw.seed !== "number") {
    throw new Error("random mapping mode needs a seed");
  }
  return {
    format: "shape-mapping",
    version: 1,
    mode,
    seed: raw.seed,
    assignments: raw.assignments ?? {},
  };
}

export function assignmentsFromFile(file: MappingFile): Map<number, string> {
  const out = new Map<number, string>();
  for (const [k, v] of Object.entries(file.assignments)) {
    out.set(Number(k), v);
  }
  return out;
}

// Active segment indices with no assigned shape; must be empty before export.
export function unmappedActiveIndices(
  assignments: Map<number, string>,
  activeIndices: readonly number[],
): number[] {
  return activeIndices.filter((i) => !assignments.has(i));
}

export function activeIndicesOfMask(mask: string): number[] {
  const out: number[] = [];
  for (let i = 0; i < mask.length; i++) {
    if (mask[i] === "1") out.push(i);
  }
  return out;
}
