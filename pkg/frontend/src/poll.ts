/** Polling loop with coalescing.
 *
 * Video generation takes minutes, so the console polls rather than holding a
 * push channel. Two rules keep the loop well behaved on a slow service:
 * ticks that fire while a poll is still in flight share that poll instead of
 * stacking requests, and a failed poll never erases the last good timestamp,
 * so staleness can be flagged to the operator.
 */

export interface PollerOptions {
  intervalMs?: number;
  /** View counts as stale once this long has passed since the last success. */
  staleAfterMs?: number;
  now?: () => number;
}

export const DEFAULT_POLL_INTERVAL_MS = 2000;

export class Poller {
  readonly intervalMs: number;
  readonly staleAfterMs: number;
  lastSuccessAt: number | null = null;
  lastError: string | null = null;

  private readonly task: () => Promise<void>;
  private readonly now: () => number;
  private inFlight: Promise<void> | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(task: () => Promise<void>, options: PollerOptions = {}) {
    this.task = task;
    this.intervalMs = options.intervalMs ?? DEFAULT_POLL_INTERVAL_MS;
    // 2.5 intervals: one missed poll is routine latency, two plus slack is a gap
    this.staleAfterMs = options.staleAfterMs ?? Math.round(this.intervalMs * 2.5);
    this.now = options.now ?? Date.now;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.poll(), this.intervalMs);
    void this.poll();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Run one poll, or join the one already running. */
  poll(): Promise<void> {
    if (this.inFlight) return this.inFlight;
    this.inFlight = this.task()
      .then(
        () => {
          this.lastSuccessAt = this.now();
          this.lastError = null;
        },
        (err: unknown) => {
          this.lastError = err instanceof Error ? err.message : String(err);
        },
      )
      .finally(() => {
        this.inFlight = null;
      });
    return this.inFlight;
  }

  isStale(): boolean {
    return this.lastSuccessAt !== null && this.now() - this.lastSuccessAt > this.staleAfterMs;
  }
}
