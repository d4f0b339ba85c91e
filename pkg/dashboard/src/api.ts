// Typed client for the prediction-service REST API.

import type { ApiErrorBody, ClinicalDocument, PredictionResult } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = `http_${response.status}`;
  let detail = response.statusText;
  try {
    const body = (await response.json()) as ApiErrorBody;
    if (body.code) code = body.code;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, code, detail);
}

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async health(): Promise<{ status: string; replica_id: string }> {
    return this.request("/health");
  }

  async listPatients(): Promise<string[]> {
    const body = await this.request<{ patients: string[] }>("/patients");
    return body.patients;
  }

  async getPatient(patientId: string): Promise<ClinicalDocument> {
    return this.request(`/patients/${encodeURIComponent(patientId)}`);
  }

  async predict(
    patientId: string,
    atIculos?: number,
  ): Promise<PredictionResult> {
    const payload: Record<string, unknown> = { patient_id: patientId };
    if (atIculos !== undefined) payload.at_iculos = atIculos;
    return this.request("/predict", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }
}

/** Base URL resolution: ?api= query param, injected global, same origin. */
export function resolveApiBase(win: Window = window): string {
  const fromQuery = new URLSearchParams(win.location.search).get("api");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  const injected = (win as unknown as { SEPSERVE_API_BASE?: string })
    .SEPSERVE_API_BASE;
  if (injected) return injected.replace(/\/$/, "");
  return "";
}
