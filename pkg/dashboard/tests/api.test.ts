import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, resolveApiBase } from "../src/api.js";

function fakeFetch(status: number, body: unknown): typeof fetch {
  return async () =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
}

describe("api client", () => {
  it("unwraps the patient list", async () => {
    const api = new ApiClient("http://x", fakeFetch(200, { patients: ["a", "b"] }));
    expect(await api.listPatients()).toEqual(["a", "b"]);
  });

  it("sends the prediction request body the service expects", async () => {
    let captured: { url: string; init?: RequestInit } | null = null;
    const fetchFn: typeof fetch = async (url, init) => {
      captured = { url: String(url), init };
      return new Response(JSON.stringify({ probability: 0.5 }), { status: 200 });
    };
    const api = new ApiClient("http://x", fetchFn);
    await api.predict("p1", 7);
    expect(captured!.url).toBe("http://x/predict");
    expect(JSON.parse(String(captured!.init?.body))).toEqual({
      patient_id: "p1",
      at_iculos: 7,
    });

    await api.predict("p1");
    expect(JSON.parse(String(captured!.init?.body))).toEqual({ patient_id: "p1" });
  });

  it("surfaces machine-readable error codes", async () => {
    const api = new ApiClient(
      "http://x",
      fakeFetch(404, { code: "patient_not_found", detail: "unknown patient" }),
    );
    await expect(api.getPatient("zz")).rejects.toMatchObject({
      status: 404,
      code: "patient_not_found",
    });
    await expect(api.getPatient("zz")).rejects.toBeInstanceOf(ApiError);
  });

  it("falls back to the HTTP status for non-JSON errors", async () => {
    const fetchFn: typeof fetch = async () =>
      new Response("<html>bad gateway</html>", { status: 502 });
    const api = new ApiClient("http://x", fetchFn);
    await expect(api.health()).rejects.toMatchObject({ code: "http_502" });
  });
});

describe("api base resolution", () => {
  const win = (search: string, injected?: string) =>
    ({
      location: { search } as Location,
      SEPSERVE_API_BASE: injected,
    }) as unknown as Window;

  it("prefers the query parameter, then the injected global", () => {
    expect(resolveApiBase(win("?api=http://h:1/"))).toBe("http://h:1");
    expect(resolveApiBase(win("", "http://inj:2"))).toBe("http://inj:2");
    expect(resolveApiBase(win(""))).toBe("");
  });
});
