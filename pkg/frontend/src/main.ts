// Studio shell: create/control runs, poll the latest generation while the
// tab is visible, and wire the four inspection views together.

import { Api, RunHandle } from "./api.js";
import { banner, clear, el } from "./dom.js";
import {
  AlternativesPanel,
  MappingEditor,
  MetricsDashboard,
  PopulationBrowser,
  SpecimenComposer,
  StudioState,
} from "./views.js";

const POLL_INTERVAL_MS = 1000;

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function startRun(api: Api, form: HTMLElement): Promise<RunHandle> {
  const num = (id: string) => Number((byId(id) as HTMLInputElement).value);
  const str = (id: string) => (byId(id) as HTMLInputElement).value;
  return api.createRun({
    fitness: str("cfg-fitness"),
    subset: str("cfg-subset"),
    population_size: num("cfg-pop"),
    generations: num("cfg-gens"),
    seed: num("cfg-seed"),
    canvas_size: num("cfg-canvas"),
  });
}

function main(): void {
  const api = new Api("");
  const state = new StudioState();

  const runPicker = byId("run-picker");
  const population = new PopulationBrowser(api, byId("population"), state);
  const specimen = new SpecimenComposer(api, byId("specimen"), state);
  const alternatives = new AlternativesPanel(api, byId("alternatives"), state, () =>
    void specimen.render(),
  );
  const mapping = new MappingEditor(api, byId("mapping"), state);
  const metrics = new MetricsDashboard(api, byId("metrics"));
  void mapping.loadShapes();

  let currentRun: string | null = null;
  let lastSeenGeneration = -1;

  state.onChange = () => {
    void alternatives.refresh();
    mapping.refresh();
    void specimen.render();
  };

  byId("start-run").addEventListener("click", () => {
    startRun(api, byId("run-form"))
      .then((handle) => {
        currentRun = handle.run_id;
        state.selection = null;
        lastSeenGeneration = -1;
        banner(byId("run-form"), `started ${handle.run_id} (seed shown: ${handle.config.seed})`);
      })
      .catch((err) => banner(byId("run-form"), String(err)));
  });
  byId("pause-run").addEventListener("click", () => {
    if (currentRun) void api.pause(currentRun).catch((e) => banner(runPicker, String(e)));
  });
  byId("resume-run").addEventListener("click", () => {
    if (currentRun) void api.resume(currentRun).catch((e) => banner(runPicker, String(e)));
  });

  async function refreshRunList(): Promise<void> {
    const runs = await api.listRuns();
    clear(runPicker);
    for (const run of runs) {
      const label = `${run.run_id} [${run.state}] gen ${run.current_generation}`;
      const b = el(
        "button",
        { class: run.run_id === currentRun ? "run selected" : "run" },
        label,
      );
      b.addEventListener("click", () => {
        currentRun = run.run_id;
        state.selection = null;
        lastSeenGeneration = -1;
      });
      runPicker.append(b);
    }
  }

  async function poll(): Promise<void> {
    if (document.hidden) return; // paused while the tab is hidden
    try {
      await refreshRunList();
      if (!currentRun) return;
      const handle = await api.runHandle(currentRun);
      if (handle.current_generation !== lastSeenGeneration) {
        lastSeenGeneration = handle.current_generation;
        await population.refresh(currentRun);
        await metrics.refresh(currentRun);
        if (state.selection) {
          // keep following the selected stencil identity across generations
          await population.select(currentRun, handle.current_generation, state.selection.rank);
        }
      }
    } catch (err) {
      banner(runPicker, `poll failed: ${String(err)}`);
    }
  }

  setInterval(() => void poll(), POLL_INTERVAL_MS);
  void poll();
}

document.addEventListener("DOMContentLoaded", main);
