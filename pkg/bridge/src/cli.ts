/**
 * Bridge command line. One job per invocation:
 *
 *   bridge embed           --in x.wav --out x.sief
 *   bridge embed-masked    --in x.wav --out x.sief --l1 10 --l2 20
 *   bridge synth-units     --units u.units --codebook cb.sicb --out y.wav
 *   bridge synth-mel       --mel m.sief --out y.wav
 *   bridge asr             --in x.wav --out text.txt [--transcript ref.txt]
 *   bridge tts             --text text.txt --speaker spk.wav --out y.wav
 *   bridge asr-tts-prepare --jobs entries.jsonl --out-dir dir --out manifest.jsonl
 *
 * Without SPEECHFILL_BRIDGE_*_CMD environment overrides, everything runs on
 * the deterministic fixture backend; each output gets a <name>.lock.json
 * recording which backend produced it.
 */

import { readJsonLines } from "./formats.js";
import {
  PrepareEntry,
  runAsr,
  runAsrTtsPrepare,
  runEmbed,
  runSynthMel,
  runSynthUnits,
  runTts,
} from "./jobs.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command || command === "-h" || command === "--help") {
    console.log((module_doc()));
    return command ? 0 : 2;
  }
  const flags = parseFlags(rest);
  switch (command) {
    case "embed": {
      const result = runEmbed(need(flags, "in"), need(flags, "out"));
      console.log(`embed -> ${result.outputs[0]} [${result.backend}]`);
      return 0;
    }
    case "embed-masked": {
      const l1 = parseInt(need(flags, "l1"), 10);
      const l2 = parseInt(need(flags, "l2"), 10);
      const result = runEmbed(need(flags, "in"), need(flags, "out"), [l1, l2]);
      console.log(`embed-masked [${l1}, ${l2}] -> ${result.outputs[0]} [${result.backend}]`);
      return 0;
    }
    case "synth-units": {
      const result = runSynthUnits(need(flags, "units"), need(flags, "codebook"), need(flags, "out"));
      console.log(`synth-units -> ${result.outputs[0]} [${result.backend}]`);
      return 0;
    }
    case "synth-mel": {
      const result = runSynthMel(need(flags, "mel"), need(flags, "out"));
      console.log(`synth-mel -> ${result.outputs[0]} [${result.backend}]`);
      return 0;
    }
    case "asr": {
      const result = runAsr(need(flags, "in"), need(flags, "out"), flags.get("transcript"));
      console.log(`asr -> ${result.outputs[0]} [${result.backend}]`);
      return 0;
    }
    case "tts": {
      const result = runTts(need(flags, "text"), need(flags, "speaker"), need(flags, "out"));
      console.log(`tts -> ${result.outputs[0]} [${result.backend}]`);
      return 0;
    }
    case "asr-tts-prepare": {
      const entries = readJsonLines(need(flags, "jobs")) as PrepareEntry[];
      const result = runAsrTtsPrepare(entries, need(flags, "out-dir"), need(flags, "out"));
      console.log(`asr-tts-prepare ${entries.length} entries -> ${result.outputs[0]}`);
      return 0;
    }
    default:
      console.error(`unknown command: ${command}`);
      return 2;
  }
}

function module_doc(): string {
  return `speechfill-bridge: export model artifacts into the interchange formats

commands:
  embed            wav -> SIEF frame embeddings
  embed-masked     wav -> SIEF with frames [--l1, --l2] replaced by the mask vector
  synth-units      unit file + codebook -> wav
  synth-mel        SIEF log-mel -> wav
  asr              wav -> transcript text (fixture echoes --transcript)
  tts              text + speaker wav -> synthetic wav (fixture echoes the speaker audio)
  asr-tts-prepare  JSONL of {utt, wav, transcript, speakerWav} -> assembly manifest`;
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
}
