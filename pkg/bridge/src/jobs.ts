/**
 * Bridge jobs. Each job reads/writes interchange files only; nothing links
 * against the core toolkit. A job runs on the configured backend: an external
 * command (environment variables SPEECHFILL_BRIDGE_*_CMD, "{in}"/"{out}"
 * placeholders) when a real model is available, or the deterministic fixture
 * backend otherwise. Every job writes a lockfile next to its output recording
 * the backend and capability flags.
 */

import { execFileSync } from "node:child_process";
import { readFileSync, writeFileSync } from "node:fs";

import {
  readCodebook,
  readEmbeddings,
  readUnits,
  readWav,
  writeEmbeddings,
  writeJsonLines,
  writeWav,
} from "./formats.js";
import {
  ENCODER_DIM,
  FRAME_HOP,
  FRAME_WIN,
  SAMPLE_RATE,
  encodeFrames,
  frameCount,
  maskVector,
  renderBands,
} from "./fixture.js";

const BRIDGE_VERSION = "0.1.0";

export interface JobResult {
  outputs: string[];
  backend: string;
  capabilities: Record<string, string>;
}

function externalCommand(name: string): string | undefined {
  return process.env[`SPEECHFILL_BRIDGE_${name}_CMD`];
}

function runExternal(template: string, input: string, output: string): void {
  const parts = template.split(/\s+/).map((p) => p.replace("{in}", input).replace("{out}", output));
  execFileSync(parts[0], parts.slice(1), { stdio: "inherit" });
}

function writeLockfile(outputPath: string, result: JobResult): void {
  const lock = {
    bridge_version: BRIDGE_VERSION,
    backend: result.backend,
    capabilities: result.capabilities,
    outputs: result.outputs,
  };
  writeFileSync(`${outputPath}.lock.json`, JSON.stringify(lock, null, 2) + "\n");
}

function requireRate(actual: number, path: string): void {
  if (actual !== SAMPLE_RATE) {
    throw new Error(`expected ${SAMPLE_RATE} Hz input, got ${actual} Hz: ${path}`);
  }
}

/** Export frame embeddings; optionally replace a frame interval with the mask vector. */
export function runEmbed(input: string, output: string, mask?: [number, number]): JobResult {
  const external = externalCommand("EMBED");
  if (external && !mask) {
    runExternal(external, input, output);
    const result: JobResult = {
      outputs: [output],
      backend: `external:${external.split(/\s+/)[0]}`,
      capabilities: { mask_injection: "unavailable" },
    };
    writeLockfile(output, result);
    return result;
  }
  const wav = readWav(input);
  requireRate(wav.sampleRate, input);
  if (wav.samples.length < FRAME_WIN) {
    throw new Error(`input shorter than one frame (${FRAME_WIN} samples): ${input}`);
  }
  const frames = encodeFrames(wav.samples);
  const n = frameCount(wav.samples.length);
  if (mask && mask[0] <= mask[1]) {
    // an empty interval (l1 > l2) is a no-op, so embed-masked(empty) == embed
    const [l1, l2] = mask;
    if (l1 < 0 || l2 >= n) {
      throw new Error(`mask frames [${l1}, ${l2}] outside sequence of ${n} frames`);
    }
    const m = maskVector();
    for (let l = l1; l <= l2; l++) {
      for (let d = 0; d < ENCODER_DIM; d++) frames[l * ENCODER_DIM + d] = m[d];
    }
  }
  writeEmbeddings(output, {
    frames,
    nFrames: n,
    dim: ENCODER_DIM,
    sampleRate: SAMPLE_RATE,
    hopSamples: FRAME_HOP,
    winSamples: FRAME_WIN,
  });
  const result: JobResult = {
    outputs: [output],
    backend: "fixture:random-projection-encoder",
    capabilities: { mask_injection: mask ? "frame-vector" : "none-requested" },
  };
  writeLockfile(output, result);
  return result;
}

/** Synthesize audio from a unit file + codebook (centroid lookup, band renderer). */
export function runSynthUnits(unitsPath: string, codebookPath: string, output: string): JobResult {
  const external = externalCommand("SYNTH_UNITS");
  if (external) {
    runExternal(external, unitsPath, output);
    const result: JobResult = {
      outputs: [output],
      backend: `external:${external.split(/\s+/)[0]}`,
      capabilities: {},
    };
    writeLockfile(output, result);
    return result;
  }
  const units = readUnits(unitsPath);
  const cb = readCodebook(codebookPath);
  if (cb.kind !== "euclidean") {
    throw new Error("fixture synthesis expects a euclidean (log-energy centroid) codebook");
  }
  for (const idx of units.indices) {
    if (idx < 0 || idx >= cb.k) throw new Error(`unit index ${idx} out of vocabulary (K=${cb.k})`);
  }
  const n = units.indices.length;
  const bands = new Float64Array(n * cb.dim);
  for (let l = 0; l < n; l++) {
    const c = units.indices[l] * cb.dim;
    for (let d = 0; d < cb.dim; d++) bands[l * cb.dim + d] = cb.centroids[c + d];
  }
  const audio = renderBands(bands, n, cb.dim, units.hopSamples, units.sampleRate);
  writeWav(output, audio, units.sampleRate);
  const result: JobResult = {
    outputs: [output],
    backend: "fixture:sinusoidal-band-renderer",
    capabilities: { synth_rate: String(units.sampleRate) },
  };
  writeLockfile(output, result);
  return result;
}

/** Synthesize audio straight from a log-mel embedding file. */
export function runSynthMel(melPath: string, output: string): JobResult {
  const external = externalCommand("SYNTH_MEL");
  if (external) {
    runExternal(external, melPath, output);
    const result: JobResult = {
      outputs: [output],
      backend: `external:${external.split(/\s+/)[0]}`,
      capabilities: {},
    };
    writeLockfile(output, result);
    return result;
  }
  const mel = readEmbeddings(melPath);
  const audio = renderBands(mel.frames, mel.nFrames, mel.dim, mel.hopSamples, mel.sampleRate);
  writeWav(output, audio, mel.sampleRate);
  const result: JobResult = {
    outputs: [output],
    backend: "fixture:sinusoidal-band-renderer",
    capabilities: { synth_rate: String(mel.sampleRate) },
  };
  writeLockfile(output, result);
  return result;
}

function readTranscript(path: string): string {
  const text = readFileSync(path, "utf8").trim();
  if (!text) throw new Error(`empty transcript file: ${path}`);
  return text;
}

/** Transcribe audio. The fixture backend can only echo a provided transcript. */
export function runAsr(input: string, output: string, transcriptPath?: string): JobResult {
  const external = externalCommand("ASR");
  const finish = (usedBackend: string): JobResult => {
    const result: JobResult = { outputs: [output], backend: usedBackend, capabilities: {} };
    writeLockfile(output, result);
    return result;
  };
  if (external) {
    runExternal(external, input, output);
    return finish(`external:${external.split(/\s+/)[0]}`);
  }
  if (!transcriptPath) {
    throw new Error("no ASR model configured; fixture backend needs --transcript to echo");
  }
  writeFileSync(output, readTranscript(transcriptPath) + "\n");
  return finish("fixture:echo-transcript");
}

/** Zero-shot synthetic rendering. The fixture backend echoes the speaker prompt audio. */
export function runTts(textPath: string, speakerWav: string, output: string): JobResult {
  const external = externalCommand("TTS");
  if (external) {
    runExternal(external, textPath, output);
    const result: JobResult = {
      outputs: [output],
      backend: `external:${external.split(/\s+/)[0]}`,
      capabilities: {},
    };
    writeLockfile(output, result);
    return result;
  }
  const wav = readWav(speakerWav);
  requireRate(wav.sampleRate, speakerWav);
  writeWav(output, wav.samples, wav.sampleRate);
  const result: JobResult = {
    outputs: [output],
    backend: "fixture:echo-speaker-audio",
    capabilities: { voice_cloning: "echo" },
  };
  writeLockfile(output, result);
  return result;
}

export interface PrepareEntry {
  utt: string;
  wav: string; // corrupted input
  transcript?: string; // fixture echo source
  speakerWav: string; // prompt audio for the synthetic rendering
}

/** Produce {utt, synthetic_wav, decoded_text} records for the assembly step. */
export function runAsrTtsPrepare(entries: PrepareEntry[], outDir: string, manifestOut: string): JobResult {
  const records: object[] = [];
  for (const entry of entries) {
    const textOut = `${outDir}/${entry.utt}.txt`;
    const synthOut = `${outDir}/${entry.utt}.synthetic.wav`;
    runAsr(entry.wav, textOut, entry.transcript);
    runTts(textOut, entry.speakerWav, synthOut);
    records.push({ utt: entry.utt, synthetic_wav: synthOut, decoded_text: readTranscript(textOut) });
  }
  writeJsonLines(manifestOut, records);
  const result: JobResult = {
    outputs: [manifestOut],
    backend: "per-entry (see entry lockfiles)",
    capabilities: {},
  };
  writeLockfile(manifestOut, result);
  return result;
}
