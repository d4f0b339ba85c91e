// Application bootstrap and wiring.

import { ApiClient, ApiError, resolveApiBase } from "./api.js";
import { PredictionPoller } from "./poller.js";
import { parseLocalFile } from "./psv.js";
import {
  applyPrediction,
  type DashboardViewState,
  initialState,
  selectPatient,
  setRefreshInterval,
  switchSource,
  switchTab,
} from "./state.js";
import type { ClinicalDocument } from "./types.js";
import {
  errorCard,
  loadingCard,
  notFoundCard,
  offlineNotice,
  renderActiveTab,
  renderBanner,
  renderDemographics,
  renderPatientList,
  renderTabs,
} from "./views.js";

class Dashboard {
  private state: DashboardViewState = initialState();
  private api = new ApiClient(resolveApiBase());
  private poller: PredictionPoller | null = null;
  private patients: string[] = [];
  private localDocs = new Map<string, ClinicalDocument>();
  private currentDoc: ClinicalDocument | null = null;
  private lastError: string | null = null;

  constructor(private readonly root: HTMLElement) {}

  async start(): Promise<void> {
    await this.refreshPatients();
    this.render();
  }

  private async refreshPatients(): Promise<void> {
    if (this.state.source === "local_csv") {
      this.patients = [...this.localDocs.keys()].sort();
      return;
    }
    try {
      this.patients = await this.api.listPatients();
      this.lastError = null;
    } catch (error) {
      this.patients = [];
      this.lastError = error instanceof Error ? error.message : String(error);
    }
  }

  private restartPoller(): void {
    this.poller?.stop();
    this.poller = null;
    const patient = this.state.selectedPatientId;
    if (patient === null || this.state.source === "local_csv") return;
    this.poller = new PredictionPoller(
      this.api,
      patient,
      this.state.refreshIntervalS * 1000,
      {
        onResult: (result) => {
          this.state = applyPrediction(this.state, result, Date.now());
          void this.refreshDocument().then(() => this.render());
        },
        onError: (error) => {
          this.lastError = error instanceof Error ? error.message : String(error);
          this.render();
        },
      },
    );
    this.poller.start();
  }

  private async refreshDocument(): Promise<void> {
    const patient = this.state.selectedPatientId;
    if (patient === null) {
      this.currentDoc = null;
      return;
    }
    if (this.state.source === "local_csv") {
      this.currentDoc = this.localDocs.get(patient) ?? null;
      return;
    }
    try {
      this.currentDoc = await this.api.getPatient(patient);
      this.lastError = null;
    } catch (error) {
      this.currentDoc = null;
      this.lastError = error instanceof Error ? error.message : String(error);
      if (error instanceof ApiError && error.code === "patient_not_found") {
        this.lastError = `patient_not_found:${patient}`;
      }
    }
  }

  private onSelectPatient = (id: string): void => {
    this.state = selectPatient(this.state, id);
    this.currentDoc = null;
    this.render(); // show the loading state immediately
    void this.refreshDocument().then(() => {
      this.restartPoller();
      this.render();
    });
  };

  private onLocalFile = async (file: File): Promise<void> => {
    const name = file.name.replace(/\.(psv|csv|txt)$/i, "");
    try {
      const doc = parseLocalFile(await file.text(), name);
      this.localDocs.set(name, doc);
      this.lastError = null;
    } catch (error) {
      this.lastError = error instanceof Error ? error.message : String(error);
    }
    await this.refreshPatients();
    this.render();
  };

  private header(): HTMLElement {
    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "Sepsis monitoring";
    header.appendChild(title);

    const source = document.createElement("select");
    source.id = "source-select";
    for (const [value, label] of [
      ["api_store", "Document store (API)"],
      ["local_csv", "Local CSV/PSV file"],
    ] as const) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      option.selected = this.state.source === value;
      source.appendChild(option);
    }
    source.addEventListener("change", () => {
      this.poller?.stop();
      this.state = switchSource(
        this.state,
        source.value as DashboardViewState["source"],
      );
      this.currentDoc = null;
      void this.refreshPatients().then(() => this.render());
    });
    header.appendChild(source);

    if (this.state.source === "local_csv") {
      const input = document.createElement("input");
      input.type = "file";
      input.id = "local-file";
      input.accept = ".psv,.csv,.txt";
      input.addEventListener("change", () => {
        const file = input.files?.[0];
        if (file) void this.onLocalFile(file);
      });
      header.appendChild(input);
    }

    const interval = document.createElement("input");
    interval.type = "number";
    interval.id = "refresh-interval";
    interval.min = "1";
    interval.value = String(this.state.refreshIntervalS);
    interval.title = "refresh interval (seconds)";
    interval.addEventListener("change", () => {
      const seconds = Number(interval.value);
      if (seconds > 0) {
        this.state = setRefreshInterval(this.state, seconds);
        this.restartPoller();
      }
    });
    header.appendChild(interval);
    return header;
  }

  render(): void {
    this.root.replaceChildren();
    this.root.appendChild(this.header());
    this.root.appendChild(renderBanner(this.state.alertBanner));

    const layout = document.createElement("div");
    layout.className = "layout";
    const side = document.createElement("aside");
    side.appendChild(
      renderPatientList(this.patients, this.state.selectedPatientId, this.onSelectPatient),
    );
    layout.appendChild(side);

    const content = document.createElement("main");
    content.appendChild(
      renderTabs(this.state.activeTab, (tab) => {
        this.state = switchTab(this.state, tab);
        this.render();
      }),
    );

    if (this.state.source === "local_csv") content.appendChild(offlineNotice());

    const patient = this.state.selectedPatientId;
    if (patient === null) {
      const hint = document.createElement("p");
      hint.className = "hint";
      hint.textContent =
        this.lastError !== null ? `Error: ${this.lastError}` : "Select a patient.";
      content.appendChild(hint);
    } else if (this.currentDoc !== null) {
      content.appendChild(renderDemographics(this.currentDoc));
      content.appendChild(
        renderActiveTab(this.state, this.currentDoc, (atIculos) => {
          void this.api
            .predict(patient, atIculos)
            .then((result) => {
              this.state = applyPrediction(this.state, result, Date.now());
              this.render();
            })
            .catch((error) => {
              this.lastError =
                error instanceof Error ? error.message : String(error);
              this.render();
            });
        }),
      );
    } else if (this.lastError?.startsWith("patient_not_found:")) {
      content.appendChild(notFoundCard(patient));
    } else if (this.lastError !== null) {
      content.appendChild(errorCard(this.lastError));
    } else {
      content.appendChild(loadingCard());
    }

    layout.appendChild(content);
    this.root.appendChild(layout);
  }
}

const rootEl = document.getElementById("app");
if (rootEl) {
  void new Dashboard(rootEl).start();
}

export { Dashboard };
