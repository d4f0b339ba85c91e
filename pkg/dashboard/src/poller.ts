// Periodic prediction polling with a hard one-in-flight guarantee.

import type { ApiClient } from "./api.js";
import type { PredictionResult } from "./types.js";

export interface PollerCallbacks {
  onResult: (result: PredictionResult) => void;
  onError?: (error: unknown) => void;
}

/**
 * Polls POST /predict for one patient on a fixed interval. If a poll is
 * still in flight when the next tick fires, that tick is skipped: at most
 * one request is outstanding per patient at any time, so slow backends
 * never cause request storms.
 */
export class PredictionPoller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  private stopped = false;

  constructor(
    private readonly api: ApiClient,
    private readonly patientId: string,
    private readonly intervalMs: number,
    private readonly callbacks: PollerCallbacks,
  ) {}

  /** Starts the loop with an immediate first poll. */
  start(): void {
    this.stopped = false;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private async tick(): Promise<void> {
    if (this.inFlight || this.stopped) return;
    this.inFlight = true;
    try {
      const result = await this.api.predict(this.patientId);
      if (!this.stopped) this.callbacks.onResult(result);
    } catch (error) {
      if (!this.stopped) this.callbacks.onError?.(error);
    } finally {
      this.inFlight = false;
    }
  }
}
