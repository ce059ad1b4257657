/**
 * Deterministic fixture backend.
 *
 * Stands in for the pre-trained models when none is configured: a frame-local
 * random-projection featurizer plays the encoder (768-dim frames at 400/320),
 * and a sinusoidal band renderer plays the vocoder (log-mel-like centroids to
 * audio). Both are seeded constants, so every run is byte-identical.
 */

export const ENCODER_DIM = 768;
export const FRAME_WIN = 400;
export const FRAME_HOP = 320;
export const SAMPLE_RATE = 16000;

/** splitmix32: tiny deterministic PRNG, uniform in [0, 1). */
export function splitmix32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x9e3779b9) >>> 0;
    let z = state;
    z ^= z >>> 16;
    z = Math.imul(z, 0x21f0aaad);
    z ^= z >>> 15;
    z = Math.imul(z, 0x735a2d97);
    z ^= z >>> 15;
    return (z >>> 0) / 4294967296;
  };
}

let projectionCache: Float64Array | null = null;

function projection(): Float64Array {
  if (projectionCache === null) {
    const rand = splitmix32(0x5eed0001);
    const p = new Float64Array(FRAME_WIN * ENCODER_DIM);
    const scale = 1 / Math.sqrt(FRAME_WIN);
    for (let i = 0; i < p.length; i++) p[i] = (rand() * 2 - 1) * scale;
    projectionCache = p;
  }
  return projectionCache;
}

/** The stand-in for a learned mask vector, fixed across runs. */
export function maskVector(): Float64Array {
  const rand = splitmix32(0x5eed0002);
  const m = new Float64Array(ENCODER_DIM);
  for (let i = 0; i < m.length; i++) m[i] = (rand() * 2 - 1) * 0.5;
  return m;
}

export function frameCount(totalSamples: number): number {
  if (totalSamples < FRAME_WIN) return 0;
  return Math.floor((totalSamples - FRAME_WIN) / FRAME_HOP) + 1;
}

/**
 * Frame-local features: tanh of a fixed random projection of each frame.
 * Purely local by construction, which makes the masked/unmasked locality
 * property exact.
 */
export function encodeFrames(samples: Float64Array): Float32Array {
  const n = frameCount(samples.length);
  const p = projection();
  const out = new Float32Array(n * ENCODER_DIM);
  for (let l = 0; l < n; l++) {
    const start = l * FRAME_HOP;
    for (let d = 0; d < ENCODER_DIM; d++) {
      let acc = 0;
      for (let t = 0; t < FRAME_WIN; t++) {
        acc += samples[start + t] * p[t * ENCODER_DIM + d];
      }
      out[l * ENCODER_DIM + d] = Math.tanh(acc);
    }
  }
  return out;
}

/** Slaney-style mel band center frequencies over [0, fmax]. */
export function melBandCenters(nBands: number, fmax: number): Float64Array {
  const fSp = 200 / 3;
  const logstep = Math.log(6.4) / 27;
  const hzToMel = (hz: number) => (hz >= 1000 ? 15 + Math.log(hz / 1000) / logstep : hz / fSp);
  const melToHz = (mel: number) => (mel >= 15 ? 1000 * Math.exp(logstep * (mel - 15)) : mel * fSp);
  const top = hzToMel(fmax);
  const centers = new Float64Array(nBands);
  for (let b = 0; b < nBands; b++) {
    centers[b] = melToHz(((b + 1) * top) / (nBands + 1));
  }
  return centers;
}

/**
 * Sinusoidal rendering of a log-energy band sequence: one phase-continuous
 * oscillator per band at its center frequency, amplitude interpolated across
 * frames. Output length is exactly nFrames * hop samples.
 */
export function renderBands(
  logBands: Float32Array | Float64Array,
  nFrames: number,
  nBands: number,
  hop: number,
  sampleRate: number
): Float64Array {
  const centers = melBandCenters(nBands, sampleRate / 2);
  const out = new Float64Array(nFrames * hop);
  if (nFrames === 0) return out;
  const gain = 1 / Math.sqrt(nBands);
  for (let b = 0; b < nBands; b++) {
    const omega = (2 * Math.PI * centers[b]) / sampleRate;
    let phase = 0;
    for (let t = 0; t < out.length; t++) {
      const pos = t / hop;
      const l0 = Math.min(nFrames - 1, Math.floor(pos));
      const l1 = Math.min(nFrames - 1, l0 + 1);
      const frac = pos - l0;
      const a0 = Math.sqrt(Math.exp(logBands[l0 * nBands + b]));
      const a1 = Math.sqrt(Math.exp(logBands[l1 * nBands + b]));
      const amp = a0 + frac * (a1 - a0);
      out[t] += gain * amp * Math.sin(phase);
      phase += omega;
    }
  }
  return out;
}

export function rmsDbfs(samples: Float64Array): number {
  let acc = 0;
  for (let i = 0; i < samples.length; i++) acc += samples[i] * samples[i];
  const rms = Math.sqrt(acc / Math.max(1, samples.length));
  return 20 * Math.log10(Math.max(rms, 1e-12));
}
