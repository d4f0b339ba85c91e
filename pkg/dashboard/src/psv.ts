// Client-side parser for the raw patient file formats (offline mode).
//
// Accepts pipe-separated (.psv) or comma-separated (.csv) text with a
// header row; the literal token `NaN` (or an empty cell) is a missing
// value. Produces a document-shaped object so the same views render it;
// derived scores are not computed client-side (they come from the
// ingestion pipeline), so the scores arrays stay empty offline.

import type { ClinicalDocument, Series } from "./types.js";
import { VITAL_NAMES } from "./types.js";

const LAB_NAMES = [
  "BaseExcess", "HCO3", "FiO2", "pH", "PaCO2", "SaO2", "AST", "BUN",
  "Alkalinephos", "Calcium", "Chloride", "Creatinine", "Bilirubin_direct",
  "Glucose", "Lactate", "Magnesium", "Phosphate", "Potassium",
  "Bilirubin_total", "TroponinI", "Hct", "Hgb", "PTT", "WBC",
  "Fibrinogen", "Platelets",
];

export class LocalParseError extends Error {}

function cell(token: string): number | null {
  const trimmed = token.trim();
  if (trimmed === "" || trimmed === "NaN") return null;
  const value = Number(trimmed);
  if (Number.isNaN(value)) {
    throw new LocalParseError(`not a number: "${trimmed}"`);
  }
  return value;
}

export function parseLocalFile(text: string, patientId: string): ClinicalDocument {
  const lines = text.split(/\r?\n/).filter((line) => line.trim() !== "");
  if (lines.length === 0) {
    throw new LocalParseError("file is empty");
  }
  const delimiter = lines[0].includes("|") ? "|" : ",";
  const header = lines[0].split(delimiter).map((h) => h.trim());
  const iculosIdx = header.indexOf("ICULOS");
  if (iculosIdx < 0) {
    throw new LocalParseError("no ICULOS column found");
  }

  const vitals: Record<string, Series> = {};
  const labs: Record<string, Series> = {};
  for (const name of VITAL_NAMES) vitals[name] = [];
  for (const name of LAB_NAMES) labs[name] = [];
  const demographics: Record<string, number | null> = {};
  const iculos: number[] = [];

  for (const [lineNo, line] of lines.slice(1).entries()) {
    const tokens = line.split(delimiter);
    if (tokens.length !== header.length) {
      throw new LocalParseError(
        `line ${lineNo + 2}: ${tokens.length} fields, header has ${header.length}`,
      );
    }
    const hour = cell(tokens[iculosIdx]);
    if (hour === null) {
      throw new LocalParseError(`line ${lineNo + 2}: missing ICULOS`);
    }
    iculos.push(hour);
    for (const [i, name] of header.entries()) {
      const value = cell(tokens[i]);
      if ((VITAL_NAMES as readonly string[]).includes(name)) {
        vitals[name].push(value);
      } else if (LAB_NAMES.includes(name)) {
        labs[name].push(value);
      } else if (name !== "ICULOS" && value !== null) {
        demographics[name] = value;
      }
    }
  }

  return {
    patient_id: patientId,
    demographics,
    vitals,
    labs,
    derived_scores: { sirs: [], sofa: [] },
    iculos,
    provenance: { source_file: patientId, transform_version: null, imputation: null },
  };
}
