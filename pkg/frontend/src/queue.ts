import type { Choice } from './types';
import type { SubmitOutcome } from './api';

type PendingEntry = {
  pairId: string;
  choice: Choice;
  resolve: (outcome: SubmitOutcome) => void;
  reject: (err: unknown) => void;
};

export type SubmitFn = (pairId: string, choice: Choice) => Promise<SubmitOutcome>;

/**
 * Sequential submission queue with offline retry.
 *
 * A network failure keeps the entry queued; a later drain (retry timer or
 * the browser's `online` event) re-sends it. A server duplicate rejection
 * resolves the entry as already recorded, so no pair can ever be recorded
 * twice from this client: there is at most one entry per pair and an entry
 * leaves the queue only once the server has acknowledged it.
 */
export class SubmitQueue {
  private readonly entries: PendingEntry[] = [];
  private readonly queuedPairs = new Map<string, Promise<SubmitOutcome>>();
  private draining = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly submit: SubmitFn,
    private readonly retryDelayMs = 2000,
  ) {
    if (typeof window !== 'undefined') {
      window.addEventListener('online', () => void this.drain());
    }
  }

  get pending(): number {
    return this.entries.length;
  }

  /** Queue one choice; repeated enqueues of a pair share the first entry. */
  enqueue(pairId: string, choice: Choice): Promise<SubmitOutcome> {
    const existing = this.queuedPairs.get(pairId);
    if (existing) {
      return existing;
    }
    const promise = new Promise<SubmitOutcome>((resolve, reject) => {
      this.entries.push({ pairId, choice, resolve, reject });
    });
    this.queuedPairs.set(pairId, promise);
    void this.drain();
    return promise;
  }

  async drain(): Promise<void> {
    if (this.draining) {
      return;
    }
    this.draining = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    try {
      while (this.entries.length > 0) {
        const entry = this.entries[0];
        let outcome: SubmitOutcome;
        try {
          outcome = await this.submit(entry.pairId, entry.choice);
        } catch {
          // network failure: keep the entry and retry later
          this.scheduleRetry();
          return;
        }
        this.entries.shift();
        this.queuedPairs.delete(entry.pairId);
        entry.resolve(outcome);
      }
    } finally {
      this.draining = false;
    }
  }

  private scheduleRetry(): void {
    if (this.retryTimer === null) {
      this.retryTimer = setTimeout(() => {
        this.retryTimer = null;
        void this.drain();
      }, this.retryDelayMs);
    }
  }
}
