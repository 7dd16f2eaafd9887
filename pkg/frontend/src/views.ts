// The four inspection views: ranked population browser, per-character
// alternatives, specimen composer, and the metrics dashboard, plus the
// shape-mapping editor driving live re-renders.

import {
  Api,
  AlternativesPage,
  PopulationPage,
  StatsPage,
  StencilDocumentJson,
  ShapeAssetJson,
} from "./api.js";
import { banner, clear, debounce, el, svgContainer } from "./dom.js";
import {
  activeIndicesOfMask,
  buildMappingFile,
  MappingFile,
  randomAssignments,
  serializeMappingFile,
  unmappedActiveIndices,
} from "./mapping.js";
import {
  elementSeries,
  fitnessSeries,
  lineChartSvg,
  similaritySeries,
  subsetSeries,
} from "./metrics.js";

export interface Selection {
  runId: string;
  generation: number;
  rank: number;
  character: string;
  document?: StencilDocumentJson;
}

export class StudioState {
  selection: Selection | null = null;
  assignments = new Map<number, string>();
  mappingSeed = 1;
  useMapping = false;
  text = "STENCIL";
  // an alternative mask previewed in place of the stored best mask
  previewMask: { character: string; mask: string } | null = null;
  onChange: () => void = () => {};

  mappingFile(): MappingFile | null {
    if (!this.useMapping) return null;
    return buildMappingFile(this.assignments);
  }

  // The document POSTed for specimen renders: the selected stencil with the
  // previewed alternative (if any) swapped in for its character.
  specimenDocument(): StencilDocumentJson | null {
    const doc = this.selection?.document;
    if (!doc) return null;
    if (!this.previewMask) return doc;
    const { character, mask } = this.previewMask;
    return {
      ...doc,
      solutions: doc.solutions.map((s) =>
        s.character === character ? { ...s, mask } : s,
      ),
    };
  }
}

export class PopulationBrowser {
  constructor(
    private api: Api,
    private root: HTMLElement,
    private state: StudioState,
  ) {}

  async refresh(runId: string): Promise<void> {
    let page: PopulationPage;
    try {
      page = await this.api.population(runId);
    } catch (err) {
      banner(this.root, `population unavailable: ${String(err)}`);
      return;
    }
    const keepRank = this.state.selection?.rank ?? 0;
    clear(this.root);
    this.root.append(
      el("h3", {}, `population @ generation ${page.generation}`),
    );
    const list = el("div", { class: "population-list" });
    for (const entry of page.stencils) {
      const row = el(
        "button",
        { class: entry.rank === keepRank ? "stencil-row selected" : "stencil-row" },
        `#${entry.rank}  fitness ${entry.fitness.toFixed(4)}  elements ${entry.element_count}`,
      );
      row.addEventListener("click", () => this.select(runId, page.generation, entry.rank));
      list.append(row);
    }
    this.root.append(list);
    if (this.state.selection === null && page.stencils.length > 0) {
      await this.select(runId, page.generation, 0);
    }
  }

  async select(runId: string, generation: number, rank: number): Promise<void> {
    const doc = await this.api.stencilDocument(runId, rank, generation);
    const prev = this.state.selection;
    this.state.selection = {
      runId,
      generation,
      rank,
      character: prev?.character ?? "A",
      document: doc,
    };
    this.state.previewMask = null; // another stencil's masks don't transfer
    this.state.onChange();
  }
}

export class AlternativesPanel {
  constructor(
    private api: Api,
    private root: HTMLElement,
    private state: StudioState,
    private onPreview: (mask: string) => void,
  ) {}

  async refresh(): Promise<void> {
    const sel = this.state.selection;
    clear(this.root);
    if (!sel?.document) {
      this.root.append(el("p", { class: "empty" }, "select a stencil first"));
      return;
    }
    const characters = sel.document.solutions.map((s) => s.character);
    const picker = el("div", { class: "char-picker" });
    for (const ch of characters) {
      const b = el(
        "button",
        { class: ch === sel.character ? "char selected" : "char" },
        ch,
      );
      b.addEventListener("click", () => {
        sel.character = ch;
        this.state.previewMask = null;
        this.state.onChange();
      });
      picker.append(b);
    }
    this.root.append(el("h3", {}, `alternatives for '${sel.character}'`), picker);

    let page: AlternativesPage;
    try {
      page = await this.api.alternatives(
        sel.runId,
        sel.rank,
        sel.character,
        sel.generation,
      );
    } catch (err) {
      this.root.append(el("p", { class: "empty" }, `no solution: ${String(err)}`));
      return;
    }
    const grid = el("div", { class: "alt-grid" });
    for (const alt of page.alternatives) {
      const cell = el("div", { class: "alt-cell" });
      if (alt.svg) cell.append(svgContainer(alt.svg, "glyph"));
      cell.append(el("div", { class: "score" }, alt.score.toFixed(4)));
      cell.addEventListener("click", () => {
        this.state.previewMask = { character: sel.character, mask: alt.mask };
        this.onPreview(alt.mask);
      });
      grid.append(cell);
    }
    this.root.append(grid);
  }
}

export class SpecimenComposer {
  private input: HTMLInputElement;
  private page: HTMLElement;
  private requestRender: () => void;

  constructor(
    private api: Api,
    private root: HTMLElement,
    private state: StudioState,
    debounceMs = 300,
  ) {
    this.input = el("input", {
      type: "text",
      value: state.text,
      placeholder: "type a specimen line",
    });
    this.page = el("div", { class: "specimen-page" });
    this.root.append(el("h3", {}, "specimen"), this.input, this.page);
    this.requestRender = debounce(() => void this.render(), debounceMs);
    this.input.addEventListener("input", () => {
      this.state.text = this.input.value;
      this.requestRender();
    });
  }

  async render(): Promise<void> {
    const doc = this.state.specimenDocument();
    if (!doc) return;
    const request: Record<string, unknown> = {
      text: this.state.text,
      stencil: doc,
    };
    const mapping = this.state.mappingFile();
    if (mapping) request.mapping = mapping;
    try {
      const svg = await this.api.renderSpecimen(request);
      clear(this.page).append(svgContainer(svg, "specimen-render"));
    } catch (err) {
      clear(this.page).append(el("p", { class: "error" }, String(err)));
    }
  }
}

export class MappingEditor {
  private shapes: ShapeAssetJson[] = [];

  constructor(
    private api: Api,
    private root: HTMLElement,
    private state: StudioState,
  ) {}

  async loadShapes(): Promise<void> {
    this.shapes = (await this.api.shapes()).shapes;
  }

  refresh(): void {
    const sel = this.state.selection;
    clear(this.root);
    this.root.append(el("h3", {}, "element shapes"));
    if (!sel?.document) {
      this.root.append(el("p", { class: "empty" }, "select a stencil first"));
      return;
    }
    const doc = sel.document;
    const enable = el("label", {}, " use shape mapping ");
    const check = el("input", { type: "checkbox" });
    check.checked = this.state.useMapping;
    check.addEventListener("change", () => {
      this.state.useMapping = check.checked;
      this.state.onChange();
    });
    enable.prepend(check);

    const seedBox = el("input", { type: "number", value: String(this.state.mappingSeed) });
    const randomize = el("button", {}, `randomize (seed ${this.state.mappingSeed})`);
    randomize.addEventListener("click", () => {
      this.state.mappingSeed = Number(seedBox.value) || 0;
      this.state.assignments = randomAssignments(
        this.state.mappingSeed,
        doc.segments.length,
        this.shapes.map((s) => s.id),
      );
      this.state.useMapping = true;
      this.state.onChange();
    });

    const exportBtn = el("button", {}, "export mapping file");
    exportBtn.addEventListener("click", () => {
      const solution = doc.solutions.find((s) => s.character === sel.character);
      const active = solution ? activeIndicesOfMask(solution.mask) : [];
      const unmapped = unmappedActiveIndices(this.state.assignments, active);
      if (unmapped.length > 0) {
        banner(this.root, `unmapped active elements: ${unmapped.join(", ")}`);
        this.highlight(unmapped);
        return;
      }
      const text = serializeMappingFile(buildMappingFile(this.state.assignments));
      const blob = new Blob([text], { type: "application/json" });
      const a = el("a", {
        href: URL.createObjectURL(blob),
        download: "mapping.json",
      });
      a.click();
    });

    this.root.append(el("div", { class: "mapping-controls" }, enable, seedBox, randomize, exportBtn));

    const table = el("div", { class: "mapping-table" });
    doc.segments.forEach((_, idx) => {
      const select = el("select", { "data-index": String(idx) });
      select.append(el("option", { value: "" }, "(none)"));
      for (const s of this.shapes) {
        const opt = el("option", { value: s.id }, s.id);
        if (this.state.assignments.get(idx) === s.id) opt.setAttribute("selected", "");
        select.append(opt);
      }
      select.addEventListener("change", () => {
        if (select.value) this.state.assignments.set(idx, select.value);
        else this.state.assignments.delete(idx);
        this.state.onChange();
      });
      const swatch = el("span", { class: "swatch", style: `background:${elementColor(idx)}` });
      table.append(el("div", { class: "mapping-row" }, swatch, `element ${idx}: `, select));
    });
    this.root.append(table);
  }

  private highlight(indices: number[]): void {
    for (const idx of indices) {
      const select = this.root.querySelector(`select[data-index="${idx}"]`);
      select?.classList.add("unmapped");
    }
  }
}

// Mirrors the per-index element colors used by the stencil SVG export: the
// hue is derived from the index alone so studio and exports agree.
export function elementColor(index: number): string {
  let h = 2166136261;
  const key = `stencil-element-${index}`;
  for (let i = 0; i < key.length; i++) {
    h = Math.imul(h ^ key.charCodeAt(i), 16777619) >>> 0;
  }
  return `hsl(${h % 360} 70% 45%)`;
}

export class MetricsDashboard {
  constructor(
    private api: Api,
    private root: HTMLElement,
  ) {}

  async refresh(runId: string): Promise<void> {
    let page: StatsPage;
    try {
      page = await this.api.stats(runId);
    } catch (err) {
      banner(this.root, `stats unavailable: ${String(err)}`);
      return;
    }
    clear(this.root);
    this.root.append(el("h3", {}, `metrics (${page.records.length} generations)`));
    const charts: [string, string][] = [
      ["fitness", lineChartSvg(fitnessSeries(page.records))],
      ["element counts", lineChartSvg(elementSeries(page.records))],
      ["evaluated vs remaining glyphs", lineChartSvg(subsetSeries(page.records))],
      ["similarity / boost", lineChartSvg(similaritySeries(page.records))],
    ];
    for (const [label, svg] of charts) {
      const box = el("div", { class: "chart" });
      box.append(el("h4", {}, label));
      box.append(svgContainer(svg, "chart-svg"));
      this.root.append(box);
    }
  }
}
