import { describe, expect, it, vi } from "vitest";

import { Api, ApiError } from "../src/api.js";

function fakeResponse(body: string, ok = true, status = 200): Response {
  return {
    ok,
    status,
    json: async () => JSON.parse(body),
    text: async () => body,
  } as unknown as Response;
}

describe("Api", () => {
  it("serves repeated specimen renders from the cache, byte-equal", async () => {
    const fetchImpl = vi.fn(async () => fakeResponse("<svg>one</svg>"));
    const api = new Api("", fetchImpl);
    const req = { text: "AB", stencil: { format: "stencil-document" } };
    const first = await api.renderSpecimen(req);
    const second = await api.renderSpecimen(req);
    expect(second).toBe(first);
    expect(fetchImpl).toHaveBeenCalledTimes(1);
    expect(api.specimenCacheSize()).toBe(1);
  });

  it("issues a fresh request when the specimen request differs", async () => {
    let n = 0;
    const fetchImpl = vi.fn(async () => fakeResponse(`<svg>${n++}</svg>`));
    const api = new Api("", fetchImpl);
    await api.renderSpecimen({ text: "AB" });
    await api.renderSpecimen({ text: "AC" });
    expect(fetchImpl).toHaveBeenCalledTimes(2);
  });

  it("deduplicates overlapping identical GETs", async () => {
    let resolve: (r: Response) => void = () => {};
    const gate = new Promise<Response>((res) => (resolve = res));
    const fetchImpl = vi.fn(() => gate);
    const api = new Api("", fetchImpl as never);
    const a = api.stats("run-1");
    const b = api.stats("run-1");
    resolve(fakeResponse('{"run_id":"run-1","columns":[],"records":[]}'));
    const [ra, rb] = await Promise.all([a, b]);
    expect(fetchImpl).toHaveBeenCalledTimes(1);
    expect(ra).toEqual(rb);
  });

  it("raises ApiError with status on failures", async () => {
    const fetchImpl = vi.fn(async () => fakeResponse("no such run", false, 404));
    const api = new Api("", fetchImpl);
    await expect(api.stats("run-404")).rejects.toMatchObject({ status: 404 });
    await expect(api.stats("run-404")).rejects.toBeInstanceOf(ApiError);
  });

  it("targets the configured base url", async () => {
    const fetchImpl = vi.fn(async () => fakeResponse("[]"));
    const api = new Api("http://svc:8000", fetchImpl);
    await api.listRuns();
    expect(fetchImpl).toHaveBeenCalledWith("http://svc:8000/runs");
  });
});
