import type { Choice, DisplayMode, UiPairView } from './types';

/**
 * Renders one comparison pair.
 *
 * Side-by-side shows both images; flicker shows exactly one image at a
 * fixed viewport position and toggling only swaps the img `src`, never the
 * element or its geometry, so differences read as temporal change. The
 * rendered markup carries nothing but opaque image refs: no method names,
 * no filenames.
 */
export class PairViewer {
  readonly root: HTMLElement;
  private readonly sideBySide: HTMLElement;
  private readonly leftImg: HTMLImageElement;
  private readonly rightImg: HTMLImageElement;
  private readonly flickerBox: HTMLElement;
  private readonly flickerImg: HTMLImageElement;
  private view: UiPairView | null = null;

  constructor(container: HTMLElement) {
    this.root = document.createElement('div');
    this.root.className = 'pair-viewer';

    this.sideBySide = document.createElement('div');
    this.sideBySide.className = 'side-by-side';
    this.leftImg = document.createElement('img');
    this.leftImg.className = 'pane pane-left';
    this.leftImg.alt = 'left image';
    this.rightImg = document.createElement('img');
    this.rightImg.className = 'pane pane-right';
    this.rightImg.alt = 'right image';
    this.sideBySide.append(this.leftImg, this.rightImg);

    this.flickerBox = document.createElement('div');
    this.flickerBox.className = 'flicker-box';
    this.flickerImg = document.createElement('img');
    this.flickerImg.className = 'pane pane-flicker';
    this.flickerImg.alt = 'comparison image';
    this.flickerBox.append(this.flickerImg);

    this.root.append(this.sideBySide, this.flickerBox);
    container.append(this.root);

    // native resolution, no browser smoothing: pixel-level sharpness is
    // exactly what annotators judge
    for (const img of [this.leftImg, this.rightImg, this.flickerImg]) {
      img.style.imageRendering = 'pixelated';
      img.draggable = false;
      img.addEventListener('load', () => this.lockGeometry(img));
    }
  }

  private lockGeometry(img: HTMLImageElement): void {
    // freeze layout at the intrinsic size reported on first load; both
    // images of a pair share dimensions, so the box never moves again
    if (img.naturalWidth > 0 && !img.style.width) {
      img.style.width = `${img.naturalWidth}px`;
      img.style.height = `${img.naturalHeight}px`;
    }
  }

  show(view: UiPairView): void {
    this.view = { ...view };
    this.leftImg.src = view.leftUrl;
    this.rightImg.src = view.rightUrl;
    this.applyMode();
  }

  get mode(): DisplayMode {
    return this.view?.mode ?? 'side-by-side';
  }

  get flickerSide(): Choice {
    return this.view?.flickerSide ?? 'left';
  }

  get flickerElement(): HTMLImageElement {
    return this.flickerImg;
  }

  setMode(mode: DisplayMode): void {
    if (!this.view) {
      return;
    }
    this.view.mode = mode;
    this.applyMode();
  }

  /** Swap which side the flicker view shows; geometry must not change. */
  toggleFlickerSide(): void {
    if (!this.view) {
      return;
    }
    this.view.flickerSide = this.view.flickerSide === 'left' ? 'right' : 'left';
    this.applyMode();
  }

  private applyMode(): void {
    if (!this.view) {
      return;
    }
    const flicker = this.view.mode === 'flicker';
    this.sideBySide.style.display = flicker ? 'none' : 'flex';
    this.flickerBox.style.display = flicker ? 'block' : 'none';
    if (flicker) {
      const url = this.view.flickerSide === 'left' ? this.view.leftUrl : this.view.rightUrl;
      if (this.flickerImg.getAttribute('src') !== url) {
        this.flickerImg.src = url;
      }
    }
  }
}
