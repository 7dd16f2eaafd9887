// Typed client for the stencilforge service. The studio holds no state of
// its own: every view reconstructs itself from these endpoints, and repeated
// identical render requests are served from a digest-keyed local cache.

export interface RunHandle {
  run_id: string;
  state: "RUNNING" | "PAUSED" | "DONE" | "FAILED";
  current_generation: number;
  error: string | null;
  config: {
    fitness: string;
    subset: string;
    population_size: number;
    generations: number;
    seed: number;
    grid_density: number;
    canvas_size: number;
    stroke_weight: number;
    bounds: number[];
    top_k: number;
  };
}

export interface PopulationEntry {
  rank: number;
  fitness: number;
  element_count: number;
  document: string;
}

export interface PopulationPage {
  run_id: string;
  generation: number;
  stencils: PopulationEntry[];
}

export interface AlternativeEntry {
  mask: string;
  score: number;
  media_type: string;
  svg?: string;
  png_base64?: string;
}

export interface AlternativesPage {
  run_id: string;
  generation: number;
  character: string;
  alternatives: AlternativeEntry[];
}

export interface StatsRecord {
  generation: number;
  best_fitness: number;
  mean_fitness: number;
  best_element_count: number;
  mean_element_count: number;
  mean_l_score: number;
  mean_nonl_score: number | null;
  population_similarity: number;
  boost_active: boolean;
}

export interface StatsPage {
  run_id: string;
  columns: string[];
  records: StatsRecord[];
}

export interface StencilDocumentJson {
  format: string;
  version: number;
  grid: { density: number };
  bounds: number[];
  render: { canvas_size: number; stroke_weight: number };
  segments: number[][];
  solutions: {
    character: string;
    mask: string;
    score: number;
    alternatives: [string, number][];
  }[];
  fitness: { variant: string | null; value: number | null };
  provenance: Record<string, unknown>;
}

export interface ShapeAssetJson {
  id: string;
  path: string;
  stroke: boolean;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Api {
  private inflight = new Map<string, Promise<unknown>>();
  private specimenCache = new Map<string, string>();

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    // Overlapping identical GETs share one request.
    const existing = this.inflight.get(path);
    if (existing) return existing as Promise<T>;
    const promise = (async () => {
      const resp = await this.fetchImpl(this.baseUrl + path);
      if (!resp.ok) throw new ApiError(resp.status, await resp.text());
      return (await resp.json()) as T;
    })().finally(() => this.inflight.delete(path));
    this.inflight.set(path, promise);
    return promise as Promise<T>;
  }

  createRun(config: Record<string, unknown>): Promise<RunHandle> {
    return this.postJson("/runs", config);
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return (await resp.json()) as T;
  }

  listRuns(): Promise<RunHandle[]> {
    return this.getJson("/runs");
  }

  runHandle(runId: string): Promise<RunHandle> {
    return this.getJson(`/runs/${runId}`);
  }

  population(runId: string, generation?: number): Promise<PopulationPage> {
    const q = generation === undefined ? "" : `?generation=${generation}`;
    return this.getJson(`/runs/${runId}/population${q}`);
  }

  stencilDocument(runId: string, rank: number, generation: number): Promise<StencilDocumentJson> {
    return this.getJson(
      `/runs/${runId}/stencils/${rank}/document?generation=${generation}`,
    );
  }

  alternatives(
    runId: string,
    rank: number,
    character: string,
    generation: number,
  ): Promise<AlternativesPage> {
    return this.getJson(
      `/runs/${runId}/stencils/${rank}/glyphs/${encodeURIComponent(character)}` +
        `/alternatives?generation=${generation}&format=svg`,
    );
  }

  stats(runId: string): Promise<StatsPage> {
    return this.getJson(`/runs/${runId}/stats`);
  }

  shapes(): Promise<{ shapes: ShapeAssetJson[] }> {
    return this.getJson("/shapes");
  }

  async pause(runId: string): Promise<void> {
    await this.postJson(`/runs/${runId}/pause`, {});
  }

  async resume(runId: string): Promise<void> {
    await this.postJson(`/runs/${runId}/resume`, {});
  }

  async deleteRun(runId: string): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/runs/${runId}`, {
      method: "DELETE",
    });
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
  }

  specimenCacheSize(): number {
    return this.specimenCache.size;
  }

  // Renders a specimen line; byte-identical repeats come from the cache.
  async renderSpecimen(request: Record<string, unknown>): Promise<string> {
    const key = JSON.stringify(request);
    const hit = this.specimenCache.get(key);
    if (hit !== undefined) return hit;
    const resp = await this.fetchImpl(`${this.baseUrl}/render/specimen`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: key,
    });
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    const svg = await resp.text();
    this.specimenCache.set(key, svg);
    return svg;
  }
}
