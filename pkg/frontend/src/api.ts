import type { GraphJson, OverlayDto, SegmentStatus, StatusDto, TeleportDto } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

// Thin typed client over the session HTTP API. The fetch implementation is
// injected so tests can run against an in-memory server.
export class SessionApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail = (body as { detail?: string }).detail ?? `HTTP ${resp.status}`;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  status(sessionId: string): Promise<StatusDto> {
    return this.request(`/sessions/${sessionId}/status`);
  }

  base(sessionId: string): Promise<GraphJson> {
    return this.request(`/sessions/${sessionId}/base`);
  }

  overlay(sessionId: string, pruned: boolean): Promise<OverlayDto> {
    return this.request(`/sessions/${sessionId}/overlay?pruned=${pruned ? 1 : 0}`);
  }

  act(sessionId: string, segmentId: string, action: "accept" | "reject"): Promise<{ id: string; status: SegmentStatus }> {
    return this.request(`/sessions/${sessionId}/segments/${segmentId}/${action}`, { method: "POST" });
  }

  teleport(sessionId: string): Promise<TeleportDto> {
    return this.request(`/sessions/${sessionId}/teleport`, { method: "POST" });
  }

  export(sessionId: string, format: "graph-json" | "geojson" = "graph-json"): Promise<GraphJson> {
    return this.request(`/sessions/${sessionId}/export?format=${format}`);
  }
}
