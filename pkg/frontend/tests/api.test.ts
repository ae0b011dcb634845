import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { defaultParams } from "../src/params.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("creates a session from raw image bytes", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse(201, { id: "abc", width: 128, height: 128 }),
    );
    const client = new ApiClient("http://svc", fetchMock);
    const info = await client.createSession(new Uint8Array([1, 2, 3]));
    expect(info).toEqual({ id: "abc", width: 128, height: 128 });
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://svc/sessions");
    expect(init?.method).toBe("POST");
  });

  it("surfaces service errors with status and message", async () => {
    const fetchMock = vi.fn(async () => jsonResponse(409, { error: "a run is active" }));
    const client = new ApiClient("", fetchMock);
    await expect(client.startRun("abc", defaultParams())).rejects.toThrowError(
      ApiError,
    );
    await expect(client.putStrokes("abc", [])).rejects.toMatchObject({
      status: 409,
      message: "a run is active",
    });
  });

  it("sends strokes as the service's JSON shape", async () => {
    const fetchMock = vi.fn(async () => new Response(null, { status: 204 }));
    const client = new ApiClient("", fetchMock);
    await client.putStrokes("abc", [
      { label: "outside", polyline: [[0.5, 0.2], [0.5, 0.8]], radius: 2.5 },
    ]);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("/sessions/abc/seeds");
    expect(JSON.parse(init!.body as string)).toEqual({
      strokes: [{ label: "outside", polyline: [[0.5, 0.2], [0.5, 0.8]], radius: 2.5 }],
    });
  });

  it("omits null parameters from the run payload", async () => {
    const fetchMock = vi.fn(async () => jsonResponse(202, { runId: "r1" }));
    const client = new ApiClient("", fetchMock);
    const params = defaultParams();
    params.stepCount = 5;
    const runId = await client.startRun("abc", params);
    expect(runId).toBe("r1");
    const body = JSON.parse(fetchMock.mock.calls[0][1]!.body as string);
    expect(body.stepCount).toBe(5);
    expect("tau" in body).toBe(false);
    expect("finalTime" in body).toBe(false);
    expect(body.lambda).toBe(100.0);
  });

  it("parses state responses", async () => {
    const state = {
      status: "done",
      step: 3,
      time: 0.003,
      contour: [{ points: [[0.1, 0.2]], closed: true }],
      componentCount: 2,
      componentAreas: [0.01, 0.02],
      solver: { sweeps: 7, sweepDiff: 1e-10, complementarityResidual: 1e-10, converged: true },
      diagnostics: { g0: { min: 0.1, max: 1, mean: 0.9 }, error: null },
    };
    const client = new ApiClient("", vi.fn(async () => jsonResponse(200, state)));
    expect(await client.getState("abc")).toEqual(state);
  });
});
