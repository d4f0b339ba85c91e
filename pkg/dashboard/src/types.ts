// Shapes of the prediction-service REST payloads.

export type Series = (number | null)[];

export interface ClinicalDocument {
  patient_id: string;
  demographics: Record<string, number | null>;
  vitals: Record<string, Series>;
  labs: Record<string, Series>;
  derived_scores: { sirs: (number | null)[]; sofa: (number | null)[] };
  iculos: number[];
  provenance: Record<string, string | null>;
}

export interface PredictionResult {
  patient_id: string;
  probability: number;
  alert: boolean;
  at_iculos: number;
  model_version: string;
  server_time_ms: number;
  replica_id: string;
}

export interface ApiErrorBody {
  code: string;
  detail: string;
}

export const VITAL_NAMES = [
  "HR",
  "O2Sat",
  "Temp",
  "SBP",
  "MAP",
  "DBP",
  "Resp",
  "EtCO2",
] as const;

export const VITAL_LABELS: Record<string, string> = {
  HR: "Heart rate (bpm)",
  O2Sat: "O2 saturation (%)",
  Temp: "Temperature (°C)",
  SBP: "Systolic BP (mmHg)",
  MAP: "Mean arterial pressure (mmHg)",
  DBP: "Diastolic BP (mmHg)",
  Resp: "Respiratory rate (/min)",
  EtCO2: "EtCO2 (mmHg)",
};
