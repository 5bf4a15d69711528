// Canvas painting: the 16-frame fringe animation at native 64x64 scaled up
// with nearest-neighbour so individual camera pixels stay visible, plus
// small polyline traces for visibility/reward/intensity.

export class FrameAnimator {
  private images: HTMLImageElement[] = [];
  private index = 0;
  private timer: number | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private periodMs = 1600, // one piezo period for the 16-frame loop
  ) {}

  setFrames(pngBase64: string[]): void {
    this.images = pngBase64.map((b64) => {
      const img = new Image();
      img.src = `data:image/png;base64,${b64}`;
      return img;
    });
    this.index = 0;
  }

  start(): void {
    if (this.timer !== null) return;
    const tick = () => {
      this.draw();
      this.index = this.images.length ? (this.index + 1) % this.images.length : 0;
    };
    this.timer = window.setInterval(tick, this.periodMs / 16);
  }

  stop(): void {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.images.length) return;
    const img = this.images[this.index];
    if (!img.complete) return;
    ctx.imageSmoothingEnabled = false;  // nearest-neighbour: pixel truth
    ctx.drawImage(img, 0, 0, this.canvas.width, this.canvas.height);
  }
}

export function drawTrace(
  canvas: HTMLCanvasElement,
  values: (number | null)[],
  yMin: number,
  yMax: number,
  color: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#444";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  const pts = values
    .map((v, i) => ({ v, i }))
    .filter((p): p is { v: number; i: number } => p.v !== null && Number.isFinite(p.v));
  if (!pts.length) return;
  const n = Math.max(values.length - 1, 1);
  ctx.strokeStyle = color;
  ctx.beginPath();
  for (const [k, p] of pts.entries()) {
    const x = (p.i / n) * (width - 8) + 4;
    const y = height - 4 - ((p.v - yMin) / (yMax - yMin)) * (height - 8);
    if (k === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.stroke();
}
