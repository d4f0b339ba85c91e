// DOM rendering. Every number shown comes straight from an API payload
// field; presentation rounds to 2 decimals and keeps the raw value in the
// title attribute for hover.

import { seriesPanel } from "./charts.js";
import type { AlertBanner, DashboardViewState, Tab } from "./state.js";
import type { ClinicalDocument, PredictionResult } from "./types.js";
import { VITAL_LABELS, VITAL_NAMES } from "./types.js";

export const TABS: { id: Tab; label: string }[] = [
  { id: "vitals", label: "Clinical variables" },
  { id: "labs", label: "Laboratory data" },
  { id: "scores", label: "Prediction scores" },
  { id: "model_query", label: "AI model query" },
];

function card(className: string, text: string): HTMLElement {
  const el = document.createElement("div");
  el.className = `card ${className}`;
  el.textContent = text;
  return el;
}

export const loadingCard = () => card("loading", "Loading…");
export const notFoundCard = (patientId: string) =>
  card("error", `Patient ${patientId} was not found.`);
export const errorCard = (detail: string) =>
  card("error", `Request failed: ${detail}`);
export const offlineNotice = () =>
  card(
    "notice",
    "Local file mode: predictions need the prediction API and are disabled.",
  );

export function renderBanner(banner: AlertBanner | null): HTMLElement {
  const el = document.createElement("div");
  el.id = "alert-banner";
  if (banner === null) {
    el.className = "banner hidden";
    return el;
  }
  el.className = "banner alert";
  const probability = document.createElement("strong");
  probability.textContent = banner.probability.toFixed(2);
  probability.title = String(banner.probability); // raw value on hover
  el.append(
    "Sepsis risk alert: probability ",
    probability,
    ` at ICULOS ${banner.atIculos}`,
  );
  return el;
}

export function renderPatientList(
  patients: string[],
  selected: string | null,
  onSelect: (id: string) => void,
): HTMLElement {
  const list = document.createElement("ul");
  list.id = "patient-list";
  for (const id of patients) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = id;
    button.className = id === selected ? "selected" : "";
    button.addEventListener("click", () => onSelect(id));
    item.appendChild(button);
    list.appendChild(item);
  }
  return list;
}

export function renderTabs(
  active: Tab,
  onSwitch: (tab: Tab) => void,
): HTMLElement {
  const nav = document.createElement("nav");
  nav.id = "tabs";
  for (const { id, label } of TABS) {
    const button = document.createElement("button");
    button.textContent = label;
    button.dataset.tab = id;
    button.className = id === active ? "active" : "";
    button.addEventListener("click", () => onSwitch(id));
    nav.appendChild(button);
  }
  return nav;
}

export function renderDemographics(doc: ClinicalDocument): HTMLElement {
  const dl = document.createElement("dl");
  dl.className = "demographics";
  for (const [key, value] of Object.entries(doc.demographics)) {
    const dt = document.createElement("dt");
    dt.textContent = key;
    const dd = document.createElement("dd");
    dd.textContent = value === null ? "–" : String(value);
    dl.append(dt, dd);
  }
  return dl;
}

/** The eight vital-sign timelines over the hourly axis. */
export function renderVitalsTab(doc: ClinicalDocument): HTMLElement {
  const grid = document.createElement("div");
  grid.className = "panel-grid";
  grid.dataset.panelCount = String(VITAL_NAMES.length);
  for (const name of VITAL_NAMES) {
    grid.appendChild(
      seriesPanel(VITAL_LABELS[name] ?? name, doc.iculos, doc.vitals[name] ?? []),
    );
  }
  return grid;
}

export function renderLabsTab(doc: ClinicalDocument): HTMLElement {
  const grid = document.createElement("div");
  grid.className = "panel-grid";
  for (const [name, series] of Object.entries(doc.labs)) {
    grid.appendChild(seriesPanel(name, doc.iculos, series));
  }
  return grid;
}

export function renderScoresTab(doc: ClinicalDocument): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "panel-grid";
  const { sirs, sofa } = doc.derived_scores;
  if (sirs.length === 0 && sofa.length === 0) {
    wrap.appendChild(
      card(
        "notice",
        "Derived scores are computed by the ingestion pipeline and are not available for local files.",
      ),
    );
    return wrap;
  }
  wrap.appendChild(seriesPanel("SIRS (0–4)", doc.iculos, sirs));
  wrap.appendChild(seriesPanel("Partial SOFA", doc.iculos, sofa));
  return wrap;
}

export function renderModelQueryTab(
  state: DashboardViewState,
  onQuery: (atIculos: number | undefined) => void,
): HTMLElement {
  const wrap = document.createElement("div");
  wrap.id = "model-query";
  if (state.source === "local_csv") {
    wrap.appendChild(offlineNotice());
    return wrap;
  }
  const form = document.createElement("form");
  const hour = document.createElement("input");
  hour.type = "number";
  hour.placeholder = "hour (default: latest)";
  hour.name = "at_iculos";
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Query model";
  form.append(hour, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    onQuery(hour.value === "" ? undefined : Number(hour.value));
  });
  wrap.appendChild(form);
  if (state.lastPrediction) {
    wrap.appendChild(renderPredictionDetail(state.lastPrediction));
  }
  return wrap;
}

export function renderPredictionDetail(result: PredictionResult): HTMLElement {
  const dl = document.createElement("dl");
  dl.className = "prediction-detail";
  const rows: [string, string, string?][] = [
    ["probability", result.probability.toFixed(2), String(result.probability)],
    ["alert", String(result.alert)],
    ["hour", String(result.at_iculos)],
    ["model", result.model_version],
    ["served by", result.replica_id],
    ["server time (ms)", result.server_time_ms.toFixed(2), String(result.server_time_ms)],
  ];
  for (const [label, value, raw] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.textContent = value;
    if (raw !== undefined) dd.title = raw;
    dl.append(dt, dd);
  }
  return dl;
}

export function renderActiveTab(
  state: DashboardViewState,
  doc: ClinicalDocument,
  onQuery: (atIculos: number | undefined) => void,
): HTMLElement {
  switch (state.activeTab) {
    case "vitals":
      return renderVitalsTab(doc);
    case "labs":
      return renderLabsTab(doc);
    case "scores":
      return renderScoresTab(doc);
    case "model_query":
      return renderModelQueryTab(state, onQuery);
  }
}
