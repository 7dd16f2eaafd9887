import { describe, expect, it } from "vitest";

import {
  activeIndicesOfMask,
  assignmentsFromFile,
  buildMappingFile,
  parseMappingFile,
  randomAssignments,
  serializeMappingFile,
  unmappedActiveIndices,
} from "../src/mapping.js";

const SHAPES = ["line", "solid-bar", "dot-row", "dash-row"];

describe("randomAssignments", () => {
  it("is reproducible for the same seed", () => {
    const a = randomAssignments(7, 20, SHAPES);
    const b = randomAssignments(7, 20, SHAPES);
    expect([...a.entries()]).toEqual([...b.entries()]);
  });

  it("differs across seeds", () => {
    const a = randomAssignments(1, 20, SHAPES);
    const b = randomAssignments(2, 20, SHAPES);
    expect([...a.values()]).not.toEqual([...b.values()]);
  });

  it("covers every segment index", () => {
    const a = randomAssignments(3, 13, SHAPES);
    expect([...a.keys()].sort((x, y) => x - y)).toEqual(
      Array.from({ length: 13 }, (_, i) => i),
    );
    for (const v of a.values()) expect(SHAPES).toContain(v);
  });
});

describe("mapping files", () => {
  it("serializes in the CLI schema", () => {
    const file = buildMappingFile(new Map([[2, "dot-row"], [0, "line"]]));
    const parsed = JSON.parse(serializeMappingFile(file));
    expect(parsed).toEqual({
      format: "shape-mapping",
      version: 1,
      mode: "explicit",
      assignments: { "0": "line", "2": "dot-row" },
    });
  });

  it("round-trips through parse", () => {
    const file = buildMappingFile(randomAssignments(5, 8, SHAPES));
    const back = parseMappingFile(serializeMappingFile(file));
    expect(back).toEqual(file);
    expect([...assignmentsFromFile(back).keys()]).toHaveLength(8);
  });

  it("rejects foreign files", () => {
    expect(() => parseMappingFile('{"format":"other","version":1}')).toThrow();
    expect(() =>
      parseMappingFile('{"format":"shape-mapping","version":1,"mode":"random"}'),
    ).toThrow(/seed/);
  });
});

describe("mask helpers", () => {
  it("extracts active indices from a bitstring", () => {
    expect(activeIndicesOfMask("0110")).toEqual([1, 2]);
    expect(activeIndicesOfMask("0000")).toEqual([]);
  });

  it("reports unmapped active indices before export", () => {
    const assignments = new Map([[1, "line"]]);
    expect(unmappedActiveIndices(assignments, [1, 2, 3])).toEqual([2, 3]);
    expect(unmappedActiveIndices(assignments, [1])).toEqual([]);
  });
});
