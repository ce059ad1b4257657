/**
 * Interchange formats shared with the core toolkit: 16-bit PCM mono WAV,
 * SIEF embedding files, SICB codebooks, unit files with JSON sidecars, and
 * JSON-lines records. All binary data is little-endian.
 */

import { readFileSync, writeFileSync } from "node:fs";

export interface Wav {
  samples: Float64Array;
  sampleRate: number;
}

export interface EmbeddingFile {
  frames: Float32Array; // row-major nFrames x dim
  nFrames: number;
  dim: number;
  sampleRate: number;
  hopSamples: number;
  winSamples: number;
}

export interface CodebookFile {
  kind: "euclidean" | "cosine";
  k: number;
  dim: number;
  temperature: number;
  centroids: Float32Array; // row-major k x dim
}

export interface UnitFile {
  indices: Int32Array;
  sampleRate: number;
  hopSamples: number;
  winSamples: number;
}

export function readWav(path: string): Wav {
  const buf = readFileSync(path);
  if (buf.length < 44 || buf.toString("ascii", 0, 4) !== "RIFF" || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error(`not a RIFF/WAVE file: ${path}`);
  }
  let offset = 12;
  let sampleRate = 0;
  let dataStart = -1;
  let dataLen = 0;
  while (offset + 8 <= buf.length) {
    const chunkId = buf.toString("ascii", offset, offset + 4);
    const chunkSize = buf.readUInt32LE(offset + 4);
    const body = offset + 8;
    if (chunkId === "fmt ") {
      const audioFormat = buf.readUInt16LE(body);
      const channels = buf.readUInt16LE(body + 2);
      sampleRate = buf.readUInt32LE(body + 4);
      const bits = buf.readUInt16LE(body + 14);
      if (audioFormat !== 1) throw new Error(`unsupported WAV codec ${audioFormat}: ${path}`);
      if (channels !== 1) throw new Error(`expected mono, got ${channels} channels: ${path}`);
      if (bits !== 16) throw new Error(`expected 16-bit samples, got ${bits}: ${path}`);
    } else if (chunkId === "data") {
      dataStart = body;
      dataLen = chunkSize;
    }
    offset = body + chunkSize + (chunkSize % 2); // chunks are word-aligned
  }
  if (sampleRate === 0 || dataStart < 0) throw new Error(`missing fmt/data chunk: ${path}`);
  const n = Math.floor(dataLen / 2);
  const samples = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    samples[i] = buf.readInt16LE(dataStart + 2 * i) / 32768;
  }
  return { samples, sampleRate };
}

export function writeWav(path: string, samples: Float64Array, sampleRate: number): void {
  const n = samples.length;
  const buf = Buffer.alloc(44 + 2 * n);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + 2 * n, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20); // PCM
  buf.writeUInt16LE(1, 22); // mono
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 2, 28);
  buf.writeUInt16LE(2, 32);
  buf.writeUInt16LE(16, 34);
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(2 * n, 40);
  for (let i = 0; i < n; i++) {
    let v = Math.round(samples[i] * 32768);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    buf.writeInt16LE(v, 44 + 2 * i);
  }
  writeFileSync(path, buf);
}

const SIEF_MAGIC = "SIEF";
const SIEF_VERSION = 1;

export function writeEmbeddings(path: string, emb: EmbeddingFile): void {
  const header = Buffer.alloc(4 + 4 * 5 + 8);
  header.write(SIEF_MAGIC, 0, "ascii");
  header.writeUInt32LE(SIEF_VERSION, 4);
  header.writeUInt32LE(emb.sampleRate, 8);
  header.writeUInt32LE(emb.hopSamples, 12);
  header.writeUInt32LE(emb.winSamples, 16);
  header.writeUInt32LE(emb.dim, 20);
  header.writeBigUInt64LE(BigInt(emb.nFrames), 24);
  const payload = Buffer.alloc(4 * emb.frames.length);
  for (let i = 0; i < emb.frames.length; i++) payload.writeFloatLE(emb.frames[i], 4 * i);
  writeFileSync(path, Buffer.concat([header, payload]));
}

export function readEmbeddings(path: string): EmbeddingFile {
  const buf = readFileSync(path);
  if (buf.toString("ascii", 0, 4) !== SIEF_MAGIC) throw new Error(`bad embedding magic: ${path}`);
  const version = buf.readUInt32LE(4);
  if (version !== SIEF_VERSION) throw new Error(`unsupported embedding version ${version}`);
  const sampleRate = buf.readUInt32LE(8);
  const hopSamples = buf.readUInt32LE(12);
  const winSamples = buf.readUInt32LE(16);
  const dim = buf.readUInt32LE(20);
  const nFrames = Number(buf.readBigUInt64LE(24));
  const frames = new Float32Array(nFrames * dim);
  for (let i = 0; i < frames.length; i++) frames[i] = buf.readFloatLE(32 + 4 * i);
  return { frames, nFrames, dim, sampleRate, hopSamples, winSamples };
}

const SICB_MAGIC = "SICB";

export function readCodebook(path: string): CodebookFile {
  const buf = readFileSync(path);
  if (buf.toString("ascii", 0, 4) !== SICB_MAGIC) throw new Error(`bad codebook magic: ${path}`);
  const version = buf.readUInt32LE(4);
  if (version !== 1) throw new Error(`unsupported codebook version ${version}`);
  const kindCode = buf.readUInt8(8);
  const k = buf.readUInt32LE(9);
  const dim = buf.readUInt32LE(13);
  const temperature = buf.readFloatLE(17);
  const centroids = new Float32Array(k * dim);
  for (let i = 0; i < centroids.length; i++) centroids[i] = buf.readFloatLE(21 + 4 * i);
  return { kind: kindCode === 0 ? "euclidean" : "cosine", k, dim, temperature, centroids };
}

export function readUnits(path: string): UnitFile {
  const sidecar = JSON.parse(readFileSync(`${path}.json`, "utf8"));
  const lines = readFileSync(path, "utf8")
    .split(/\s+/)
    .filter((s) => s.length > 0);
  const indices = new Int32Array(lines.length);
  for (let i = 0; i < lines.length; i++) indices[i] = parseInt(lines[i], 10);
  if (indices.length !== sidecar.n_frames) {
    throw new Error(`unit file has ${indices.length} entries, sidecar says ${sidecar.n_frames}`);
  }
  return {
    indices,
    sampleRate: sidecar.sample_rate,
    hopSamples: sidecar.hop_samples,
    winSamples: sidecar.win_samples,
  };
}

export function writeJsonLines(path: string, records: object[]): void {
  writeFileSync(path, records.map((r) => JSON.stringify(r, Object.keys(r).sort())).join("\n") + "\n");
}

export function readJsonLines(path: string): any[] {
  return readFileSync(path, "utf8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}
