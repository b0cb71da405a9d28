import type { ApiClient } from './api';
import { SubmitQueue } from './queue';
import { PairViewer } from './viewer';
import type { Choice, PairPayload, SessionInfo } from './types';
import { isDone } from './types';

export type AppOptions = {
  root: HTMLElement;
  api: ApiClient;
  annotator: string;
  retryDelayMs?: number;
};

/**
 * Session flow: resume at the server-side cursor, show one pair at a time,
 * record exactly one choice per pair (rapid double presses and offline
 * retries cannot double-submit), then show the completion screen.
 */
export class AnnotationApp {
  readonly viewer: PairViewer;
  private readonly api: ApiClient;
  private readonly annotator: string;
  private readonly queue: SubmitQueue;
  private readonly progressLabel: HTMLElement;
  private readonly statusLabel: HTMLElement;
  private readonly completionScreen: HTMLElement;
  private session: SessionInfo | null = null;
  private current: PairPayload | null = null;
  private submitting = false;

  constructor(options: AppOptions) {
    this.api = options.api;
    this.annotator = options.annotator;
    this.queue = new SubmitQueue(
      (pairId, choice) => this.api.submitChoice(this.session!.session_id, pairId, choice),
      options.retryDelayMs ?? 2000,
    );

    const header = document.createElement('header');
    this.progressLabel = document.createElement('span');
    this.progressLabel.className = 'progress';
    this.statusLabel = document.createElement('span');
    this.statusLabel.className = 'status';
    const hint = document.createElement('span');
    hint.className = 'hint';
    hint.textContent = '← left is better · → right is better · Space flips the in-place view';
    header.append(this.progressLabel, hint, this.statusLabel);
    options.root.append(header);

    this.viewer = new PairViewer(options.root);

    this.completionScreen = document.createElement('div');
    this.completionScreen.className = 'completion';
    this.completionScreen.style.display = 'none';
    options.root.append(this.completionScreen);

    document.addEventListener('keydown', (event) => this.onKey(event));
  }

  async start(): Promise<void> {
    this.session = await this.api.startSession(this.annotator);
    await this.advance();
  }

  get currentPairId(): string | null {
    return this.current?.pair_id ?? null;
  }

  private async advance(): Promise<void> {
    const next = await this.api.nextPair(this.session!.session_id);
    if (isDone(next)) {
      this.current = null;
      this.viewer.root.style.display = 'none';
      this.completionScreen.style.display = 'block';
      this.completionScreen.textContent = `All done: ${next.total} of ${next.total} pairs answered. Thank you!`;
      this.progressLabel.textContent = `${next.total}/${next.total}`;
      return;
    }
    this.current = next;
    this.viewer.root.style.display = '';
    this.completionScreen.style.display = 'none';
    this.progressLabel.textContent = `${next.index}/${next.total}`;
    this.viewer.show({
      pairId: next.pair_id,
      leftUrl: this.api.imageUrl(next.left),
      rightUrl: this.api.imageUrl(next.right),
      mode: 'side-by-side',
      flickerSide: 'left',
      answered: next.index,
      total: next.total,
    });
  }

  async choose(choice: Choice): Promise<void> {
    if (!this.current || this.submitting) {
      return;
    }
    this.submitting = true;
    this.statusLabel.textContent = '';
    const pairId = this.current.pair_id;
    try {
      // 'recorded' and 'duplicate' both mean the server has this pair
      await this.queue.enqueue(pairId, choice);
      await this.advance();
    } catch (err) {
      this.statusLabel.textContent = `submission failed: ${String(err)}`;
    } finally {
      this.submitting = false;
    }
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.current) {
      return;
    }
    if (event.key === 'ArrowLeft') {
      event.preventDefault();
      void this.choose('left');
    } else if (event.key === 'ArrowRight') {
      event.preventDefault();
      void this.choose('right');
    } else if (event.key === ' ' || event.code === 'Space') {
      event.preventDefault();
      if (this.viewer.mode === 'side-by-side') {
        this.viewer.setMode('flicker');
      } else {
        this.viewer.toggleFlickerSide();
      }
    } else if (event.key === 'Escape') {
      this.viewer.setMode('side-by-side');
    }
  }
}
