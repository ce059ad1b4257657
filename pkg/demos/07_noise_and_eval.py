"""Corpus evaluation: noise conditions, random masks, and the results table.

Builds a small synthetic corpus on disk, then runs one evaluation condition per
mask length through the harness (the same machinery the CLI `eval` subcommand
drives). The summary table reports the mean score with both a normal and a
binomial 95% half-width, and reruns are byte-identical.
"""

import json
from pathlib import Path

from speechfill import mix_noise_at_snr, white_noise, write_wav
from speechfill.formats import ManifestEntry, save_manifest
from speechfill.harness import RunConfig, run_eval
from speechfill.synth import vowel_utterance

out_dir = Path(__file__).parent / "output" / "eval_demo"
out_dir.mkdir(parents=True, exist_ok=True)

entries = []
for i in range(6):
    w = vowel_utterance(1.5, seed=600 + i)
    path = out_dir / f"utt{i}.wav"
    write_wav(w, path)
    entries.append(ManifestEntry(f"utt{i}", str(path)))
save_manifest(entries, out_dir / "manifest.jsonl")

noisy = mix_noise_at_snr(vowel_utterance(1.5, seed=600), white_noise(24000, 16000, seed=1), 10.0)
print(f"(noise mixing check: 10 dB condition peaks at {abs(noisy.samples).max():.2f})\n")

print(f"{'mask_ms':>8} {'mean stoi':>10} {'ci_normal':>10} {'n':>3}")
for mask_ms in (100, 200, 400):
    config = RunConfig(method="li", mode="informed", mask_ms=mask_ms, seed=4, griffin_lim_iters=30)
    result = run_eval(entries, config, out_dir / f"run_{mask_ms}ms")
    agg = result.aggregates[0]
    print(f"{mask_ms:>8} {agg['mean']:>10.3f} {agg['ci_normal']:>10.3f} {agg['n']:>3}")

print(f"\nper-score rows live in {out_dir}/run_200ms/scores.jsonl, e.g.:")
first = (out_dir / "run_200ms" / "scores.jsonl").read_text().splitlines()[0]
print(f"  {json.dumps(json.loads(first), sort_keys=True)}")
print(f"frozen config copy: {out_dir}/run_200ms/config.frozen.json")
