import assert from "node:assert/strict";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { FRAME_HOP, FRAME_WIN, melBandCenters, rmsDbfs } from "../src/fixture.js";
import { readEmbeddings, readWav, writeWav } from "../src/formats.js";
import { runAsr, runAsrTtsPrepare, runEmbed, runSynthUnits, runTts } from "../src/jobs.js";

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "bridge-jobs-"));
}

function makeTone(dir: string, name: string, seconds = 1.0): string {
  const n = Math.round(16000 * seconds);
  const samples = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    samples[i] =
      0.3 * Math.sin((2 * Math.PI * 330 * i) / 16000) +
      0.2 * Math.sin((2 * Math.PI * 1150 * i) / 16000);
  }
  const path = join(dir, name);
  writeWav(path, samples, 16000);
  return path;
}

/** Minimal SICB writer for test codebooks (euclidean kind only). */
function writeTestCodebook(path: string, centroids: number[][]): void {
  const k = centroids.length;
  const dim = centroids[0].length;
  const buf = Buffer.alloc(4 + 4 + 1 + 4 + 4 + 4 + 4 * k * dim);
  buf.write("SICB", 0, "ascii");
  buf.writeUInt32LE(1, 4);
  buf.writeUInt8(0, 8);
  buf.writeUInt32LE(k, 9);
  buf.writeUInt32LE(dim, 13);
  buf.writeFloatLE(0.1, 17);
  for (let i = 0; i < k; i++)
    for (let d = 0; d < dim; d++) buf.writeFloatLE(centroids[i][d], 21 + 4 * (i * dim + d));
  writeFileSync(path, buf);
}

function writeTestUnits(path: string, indices: number[], hop = 320, win = 736): void {
  writeFileSync(path, indices.map((i) => `${i}\n`).join(""));
  writeFileSync(
    `${path}.json`,
    JSON.stringify({ n_frames: indices.length, hop_samples: hop, win_samples: win, sample_rate: 16000 }) + "\n"
  );
}

test("embed: frame count formula, dim 768, deterministic, lockfile", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "in.wav", 1.0);
  const outA = join(dir, "a.sief");
  const outB = join(dir, "b.sief");
  const result = runEmbed(wav, outA);
  runEmbed(wav, outB);
  const emb = readEmbeddings(outA);
  const expected = Math.floor((16000 - FRAME_WIN) / FRAME_HOP) + 1;
  assert.ok(Math.abs(emb.nFrames - expected) <= 1, `${emb.nFrames} vs ${expected}`);
  assert.equal(emb.dim, 768);
  assert.deepEqual(readFileSync(outA), readFileSync(outB));
  assert.equal(result.backend, "fixture:random-projection-encoder");
  const lock = JSON.parse(readFileSync(`${outA}.lock.json`, "utf8"));
  assert.equal(lock.backend, "fixture:random-projection-encoder");
});

test("embed-masked: differs only inside the masked frame interval", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "in.wav", 1.0);
  const plain = join(dir, "plain.sief");
  const masked = join(dir, "masked.sief");
  runEmbed(wav, plain);
  runEmbed(wav, masked, [10, 20]);
  const a = readEmbeddings(plain);
  const b = readEmbeddings(masked);
  for (let l = 0; l < a.nFrames; l++) {
    const same = Buffer.compare(
      Buffer.from(a.frames.buffer, l * a.dim * 4, a.dim * 4),
      Buffer.from(b.frames.buffer, l * b.dim * 4, b.dim * 4)
    ) === 0;
    if (l >= 10 && l <= 20) assert.ok(!same, `frame ${l} should be replaced`);
    else assert.ok(same, `frame ${l} should be untouched`);
  }
});

test("embed-masked: empty mask equals embed exactly", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "in.wav", 0.5);
  const plain = join(dir, "plain.sief");
  const empty = join(dir, "empty.sief");
  runEmbed(wav, plain);
  runEmbed(wav, empty, [5, 4]);
  assert.deepEqual(readFileSync(empty), readFileSync(plain));
});

test("embed-masked: out-of-range frames rejected", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "in.wav", 0.5);
  assert.throws(() => runEmbed(wav, join(dir, "x.sief"), [0, 10_000]), /outside sequence/);
});

test("synth-units: duration is frames*hop; silence codebook stays below -40 dBFS", () => {
  const dir = tempDir();
  const floorLog = Math.log(1e-10);
  const cbPath = join(dir, "cb.sicb");
  writeTestCodebook(cbPath, [new Array(80).fill(floorLog), new Array(80).fill(-3.0)]);
  const unitsPath = join(dir, "u.units");
  writeTestUnits(unitsPath, new Array(40).fill(0));
  const out = join(dir, "silence.wav");
  runSynthUnits(unitsPath, cbPath, out);
  const wav = readWav(out);
  assert.equal(wav.samples.length, 40 * 320);
  assert.ok(rmsDbfs(wav.samples) < -40, `rms ${rmsDbfs(wav.samples)} dBFS`);

  const loud = join(dir, "loud.wav");
  writeTestUnits(join(dir, "u2.units"), new Array(40).fill(1));
  runSynthUnits(join(dir, "u2.units"), cbPath, loud);
  assert.ok(rmsDbfs(readWav(loud).samples) > -40);
});

test("synth-units: out-of-vocabulary index rejected", () => {
  const dir = tempDir();
  const cbPath = join(dir, "cb.sicb");
  writeTestCodebook(cbPath, [new Array(80).fill(-3.0)]);
  const unitsPath = join(dir, "u.units");
  writeTestUnits(unitsPath, [0, 1]);
  assert.throws(() => runSynthUnits(unitsPath, cbPath, join(dir, "x.wav")), /out of vocabulary/);
});

test("mel band centers are ordered and span the band", () => {
  const centers = melBandCenters(80, 8000);
  assert.equal(centers.length, 80);
  for (let i = 1; i < centers.length; i++) assert.ok(centers[i] > centers[i - 1]);
  assert.ok(centers[0] > 0 && centers[79] < 8000);
});

test("asr fixture echoes the provided transcript and errors without one", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "in.wav", 0.5);
  const ref = join(dir, "ref.txt");
  writeFileSync(ref, "hello bridge\n");
  const out = join(dir, "decoded.txt");
  const result = runAsr(wav, out, ref);
  assert.equal(readFileSync(out, "utf8").trim(), "hello bridge");
  assert.equal(result.backend, "fixture:echo-transcript");
  assert.throws(() => runAsr(wav, join(dir, "y.txt")), /no ASR model configured/);
});

test("tts fixture echoes the speaker audio at 16 kHz", () => {
  const dir = tempDir();
  const speaker = makeTone(dir, "spk.wav", 0.6);
  const textPath = join(dir, "t.txt");
  writeFileSync(textPath, "some words\n");
  const out = join(dir, "synth.wav");
  runTts(textPath, speaker, out);
  const wav = readWav(out);
  assert.equal(wav.sampleRate, 16000);
  assert.deepEqual(readFileSync(out), readFileSync(speaker));
});

test("asr-tts-prepare writes assembly records", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "u1.wav", 0.6);
  const ref = join(dir, "u1.txt");
  writeFileSync(ref, "content of utterance one\n");
  const manifest = join(dir, "asr_tts.jsonl");
  runAsrTtsPrepare([{ utt: "u1", wav, transcript: ref, speakerWav: wav }], dir, manifest);
  const records = readFileSync(manifest, "utf8")
    .trim()
    .split("\n")
    .map((l) => JSON.parse(l));
  assert.equal(records.length, 1);
  assert.equal(records[0].utt, "u1");
  assert.equal(records[0].decoded_text, "content of utterance one");
  assert.ok(readWav(records[0].synthetic_wav).samples.length > 0);
});

test("jobs are deterministic across invocations", () => {
  const dir = tempDir();
  const wav = makeTone(dir, "in.wav", 0.8);
  const cbPath = join(dir, "cb.sicb");
  writeTestCodebook(cbPath, [new Array(80).fill(-4.0), new Array(80).fill(-2.0)]);
  const unitsPath = join(dir, "u.units");
  writeTestUnits(unitsPath, [0, 1, 0, 1, 1, 0]);
  const outA = join(dir, "a.wav");
  const outB = join(dir, "b.wav");
  runSynthUnits(unitsPath, cbPath, outA);
  runSynthUnits(unitsPath, cbPath, outB);
  assert.deepEqual(readFileSync(outA), readFileSync(outB));
});
