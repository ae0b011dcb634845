import { Stroke } from "./brush.js";
import { RunParams, toWire } from "./params.js";

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
}

export interface ContourPolyline {
  points: [number, number][];
  closed: boolean;
}

export interface SolverState {
  sweeps: number;
  sweepDiff: number;
  complementarityResidual: number;
  converged: boolean;
}

export interface SessionState {
  status: "idle" | "running" | "done" | "failed";
  step: number;
  time: number;
  contour: ContourPolyline[];
  componentCount: number;
  componentAreas?: number[];
  solver?: SolverState;
  diagnostics: {
    g0: { min: number; max: number; mean: number };
    error: string | null;
  };
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the session service HTTP API. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let message = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string };
        if (body.error) message = body.error;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, message);
    }
    return resp;
  }

  async createSession(image: ArrayBuffer | Uint8Array): Promise<SessionInfo> {
    const resp = await this.request("/sessions", {
      method: "POST",
      body: image as BodyInit,
      headers: { "content-type": "application/octet-stream" },
    });
    return (await resp.json()) as SessionInfo;
  }

  async putStrokes(sessionId: string, strokes: Stroke[]): Promise<void> {
    await this.request(`/sessions/${sessionId}/seeds`, {
      method: "PUT",
      body: JSON.stringify({ strokes }),
      headers: { "content-type": "application/json" },
    });
  }

  async putSeedPng(sessionId: string, png: ArrayBuffer | Uint8Array): Promise<void> {
    await this.request(`/sessions/${sessionId}/seeds`, {
      method: "PUT",
      body: png as BodyInit,
      headers: { "content-type": "image/png" },
    });
  }

  async startRun(sessionId: string, params: RunParams): Promise<string> {
    const resp = await this.request(`/sessions/${sessionId}/run`, {
      method: "POST",
      body: JSON.stringify(toWire(params)),
      headers: { "content-type": "application/json" },
    });
    const body = (await resp.json()) as { runId: string };
    return body.runId;
  }

  async getState(sessionId: string): Promise<SessionState> {
    const resp = await this.request(`/sessions/${sessionId}/state`);
    return (await resp.json()) as SessionState;
  }
}
