// Typed client for the segmentation query service. All inference happens
// server-side; the client only fetches scene geometry and assignments.

export interface SceneSummary {
  scene_id: string;
  source_id: string;
  point_count: number;
}

export interface ScenePayload {
  scene_id: string;
  source_id: string;
  point_count: number;
  xyz: Float32Array; // length 3 * point_count
  rgb: Float32Array;
}

export interface QueryResponse {
  scene_id: string;
  labels: string[];
  assignments: number[];
  colors: Record<string, [number, number, number]>;
  timing_ms: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Decode a base64 little-endian float32 array payload. */
export function decodeF32(b64: string): Float32Array {
  const binary = atob(b64);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    bytes[i] = binary.charCodeAt(i);
  }
  return new Float32Array(bytes.buffer);
}

async function expectJson(response: Response): Promise<unknown> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: unknown };
      if (body && body.detail !== undefined) detail = JSON.stringify(body.detail);
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, `HTTP ${response.status}: ${detail}`);
  }
  return response.json();
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  async health(): Promise<{ status: string; model_version: string | null }> {
    return (await expectJson(await fetch(`${this.baseUrl}/health`))) as {
      status: string;
      model_version: string | null;
    };
  }

  async scenes(): Promise<SceneSummary[]> {
    return (await expectJson(await fetch(`${this.baseUrl}/scenes`))) as SceneSummary[];
  }

  async scene(sceneId: string): Promise<ScenePayload> {
    const raw = (await expectJson(
      await fetch(`${this.baseUrl}/scenes/${encodeURIComponent(sceneId)}`),
    )) as { scene_id: string; source_id: string; point_count: number; xyz: string; rgb: string };
    return {
      scene_id: raw.scene_id,
      source_id: raw.source_id,
      point_count: raw.point_count,
      xyz: decodeF32(raw.xyz),
      rgb: decodeF32(raw.rgb),
    };
  }

  async query(sceneId: string, labels: string[]): Promise<QueryResponse> {
    const response = await fetch(`${this.baseUrl}/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ scene_id: sceneId, labels }),
    });
    return (await expectJson(response)) as QueryResponse;
  }
}
