// Dashboard view state and the pure banner rule.

import type { PredictionResult } from "./types.js";

export type Tab = "vitals" | "labs" | "scores" | "model_query";
export type DataSource = "api_store" | "local_csv";

export interface AlertBanner {
  probability: number;
  atIculos: number;
  timestamp: number; // ms epoch of the poll that produced it
}

export interface DashboardViewState {
  source: DataSource;
  selectedPatientId: string | null;
  activeTab: Tab;
  refreshIntervalS: number;
  alertBanner: AlertBanner | null;
  lastPrediction: PredictionResult | null;
}

export function initialState(): DashboardViewState {
  return {
    source: "api_store",
    selectedPatientId: null,
    activeTab: "vitals",
    refreshIntervalS: 10,
    alertBanner: null,
    lastPrediction: null,
  };
}

/**
 * Banner visibility is a pure function of the latest prediction: shown iff
 * the latest result raised the alert flag, cleared by the first non-alert
 * result. Stale results never resurrect a banner.
 */
export function applyPrediction(
  state: DashboardViewState,
  result: PredictionResult,
  now: number,
): DashboardViewState {
  return {
    ...state,
    lastPrediction: result,
    alertBanner: result.alert
      ? {
          probability: result.probability,
          atIculos: result.at_iculos,
          timestamp: now,
        }
      : null,
  };
}

export function selectPatient(
  state: DashboardViewState,
  patientId: string | null,
): DashboardViewState {
  // prediction state belongs to the previous patient; drop it
  return {
    ...state,
    selectedPatientId: patientId,
    alertBanner: null,
    lastPrediction: null,
  };
}

export function switchTab(state: DashboardViewState, tab: Tab): DashboardViewState {
  return { ...state, activeTab: tab };
}

export function switchSource(
  state: DashboardViewState,
  source: DataSource,
): DashboardViewState {
  return { ...selectPatient(state, null), source };
}

export function setRefreshInterval(
  state: DashboardViewState,
  seconds: number,
): DashboardViewState {
  if (!(seconds > 0)) {
    throw new Error("refresh interval must be positive");
  }
  return { ...state, refreshIntervalS: seconds };
}
