/**
 * Decode the base64 binary PGM thumbnails the engine attaches to reports
 * when snapshots are on. Only the 8-bit P5 form the engine emits is
 * accepted.
 */

export interface PgmImage {
  width: number;
  height: number;
  /** Row-major grayscale bytes, length width * height. */
  pixels: Uint8Array;
}

export function decodePgmBase64(b64: string): PgmImage {
  const raw = atob(b64);
  const bytes = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return decodePgm(bytes);
}

export function decodePgm(bytes: Uint8Array): PgmImage {
  // Header: "P5" <ws> width <ws> height <ws> maxval <single ws> raster.
  let pos = 0;
  const token = (): string => {
    while (pos < bytes.length && isSpace(bytes[pos])) pos++;
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    return String.fromCharCode(...bytes.subarray(start, pos));
  };
  if (token() !== "P5") throw new Error("not a binary PGM");
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0) || !(height > 0)) throw new Error("bad PGM dimensions");
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  pos += 1; // the single whitespace byte after maxval
  const pixels = bytes.subarray(pos, pos + width * height);
  if (pixels.length !== width * height) throw new Error("truncated PGM raster");
  return { width, height, pixels: new Uint8Array(pixels) };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}

/** Paint a decoded thumbnail onto a canvas, scaling it up to fit. */
export function drawPgm(canvas: HTMLCanvasElement, img: PgmImage): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const data = ctx.createImageData(img.width, img.height);
  for (let i = 0; i < img.pixels.length; i++) {
    const v = img.pixels[i];
    data.data[i * 4] = v;
    data.data[i * 4 + 1] = v;
    data.data[i * 4 + 2] = v;
    data.data[i * 4 + 3] = 255;
  }
  const off = document.createElement("canvas");
  off.width = img.width;
  off.height = img.height;
  off.getContext("2d")!.putImageData(data, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}
