import { describe, expect, it } from "vitest";

import {
  applyPrediction,
  initialState,
  selectPatient,
  setRefreshInterval,
  switchSource,
  switchTab,
} from "../src/state.js";
import type { PredictionResult } from "../src/types.js";

function prediction(over: Partial<PredictionResult> = {}): PredictionResult {
  return {
    patient_id: "p1",
    probability: 0.7,
    alert: true,
    at_iculos: 12,
    model_version: "m1",
    server_time_ms: 1.5,
    replica_id: "r0",
    ...over,
  };
}

describe("view state", () => {
  it("defaults to a 10 second refresh and the vitals tab", () => {
    const state = initialState();
    expect(state.refreshIntervalS).toBe(10);
    expect(state.activeTab).toBe("vitals");
    expect(state.alertBanner).toBeNull();
  });

  it("banner is a pure function of the latest prediction", () => {
    let state = initialState();
    state = applyPrediction(state, prediction({ alert: true, probability: 0.7 }), 1000);
    expect(state.alertBanner).not.toBeNull();
    expect(state.alertBanner?.probability).toBe(0.7);

    // the next non-alert result clears it; stale alerts never linger
    state = applyPrediction(state, prediction({ alert: false, probability: 0.3 }), 2000);
    expect(state.alertBanner).toBeNull();
    expect(state.lastPrediction?.probability).toBe(0.3);

    state = applyPrediction(state, prediction({ alert: true, probability: 0.9 }), 3000);
    expect(state.alertBanner?.probability).toBe(0.9);
  });

  it("selecting a patient drops stale prediction state", () => {
    let state = applyPrediction(initialState(), prediction(), 1000);
    state = selectPatient(state, "p2");
    expect(state.selectedPatientId).toBe("p2");
    expect(state.alertBanner).toBeNull();
    expect(state.lastPrediction).toBeNull();
  });

  it("switching source resets the selection", () => {
    let state = selectPatient(initialState(), "p1");
    state = switchSource(state, "local_csv");
    expect(state.source).toBe("local_csv");
    expect(state.selectedPatientId).toBeNull();
  });

  it("tabs switch without touching prediction state", () => {
    let state = applyPrediction(initialState(), prediction(), 1000);
    state = switchTab(state, "labs");
    expect(state.activeTab).toBe("labs");
    expect(state.alertBanner).not.toBeNull();
  });

  it("rejects a non-positive refresh interval", () => {
    expect(() => setRefreshInterval(initialState(), 0)).toThrow();
    expect(setRefreshInterval(initialState(), 5).refreshIntervalS).toBe(5);
  });
});
