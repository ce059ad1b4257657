"""Corpus-level orchestration: random mask generation, per-utterance pipeline
runs, score aggregation with confidence intervals, and deterministic outputs.

Every run writes scores.jsonl (one score row per line), summary.csv, the
generated masks, and a frozen copy of its configuration. Outputs are sorted by
utterance id and formatted with fixed precision, so a rerun with the same seeds
is byte-identical no matter how many workers were used.
"""

from __future__ import annotations

import hashlib
import json
import math
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from speechfill.dsp import MelConfig, Waveform, mix_noise_at_snr, read_wav, resample, white_noise
from speechfill.formats import ManifestEntry, read_embeddings, write_masks
from speechfill.inpaint import (
    BLIND,
    INFORMED,
    InpaintDeps,
    MaskSpec,
    apply_corruption,
    run_blind,
    run_informed,
)
from speechfill.metrics import cer, eval_window, snr_measure, stoi
from speechfill.quantize import load_codebook

CI_Z = 1.96  # 95% two-sided normal quantile


@dataclass(frozen=True)
class NoiseSpec:
    kind: str  # "white" | "crowd"
    snr_db: float
    wav_path: str | None = None  # crowd noise source

    def __post_init__(self):
        if self.kind not in ("white", "crowd"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "crowd" and not self.wav_path:
            raise ValueError("crowd noise needs a source wav")


@dataclass
class RunConfig:
    method: str = "li"
    mode: str = INFORMED
    mask_ms: int = 200
    seed: int = 0
    sample_rate: int = 16000
    edge_margin_ms: int = 100
    noise: NoiseSpec | None = None
    codebook_path: str | None = None
    decoder: str = "griffin-lim"
    griffin_lim_iters: int = 60
    metrics: tuple = ("stoi",)
    workers: int = 1
    mel: MelConfig = field(default_factory=MelConfig)
    hypotheses_path: str | None = None  # per-utterance decoded text, for CER
    cer_scope: str = "full"  # "full" or "window": which audio the hypotheses transcribe
    external_scores_path: str | None = None  # rows computed elsewhere, merged in
    precomputed_outputs_dir: str | None = None  # score <dir>/<utt>.wav instead of running a method

    def to_json(self) -> str:
        obj = asdict(self)
        obj["metrics"] = list(self.metrics)
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        obj = json.loads(text)
        if obj.get("noise") is not None:
            obj["noise"] = NoiseSpec(**obj["noise"])
        if obj.get("mel") is not None:
            obj["mel"] = MelConfig(**obj["mel"])
        obj["metrics"] = tuple(obj.get("metrics", ("stoi",)))
        return RunConfig(**obj)


def _utt_rng(seed: int, utt_id: str, purpose: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{purpose}:{utt_id}".encode()).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])


def draw_mask_onset(seed: int, utt_id: str, first: int, last: int) -> int:
    """Uniform onset in [first, last], deterministic per (seed, utt_id)."""
    rng = _utt_rng(seed, utt_id, "mask")
    return int(rng.integers(first, last + 1))


def _wav_length(path) -> tuple[int, int]:
    with wave.open(str(path), "rb") as r:
        return r.getnframes(), r.getframerate()


def gen_masks(
    entries: list[ManifestEntry],
    mask_ms: int,
    seed: int,
    sample_rate: int = 16000,
    edge_margin_ms: int = 100,
) -> tuple[dict[str, MaskSpec], list[dict]]:
    """Draw one uniform-onset mask per utterance, deterministic per (seed, utt).

    Utterances too short for the mask plus both edge margins are skipped and
    reported rather than failed.
    """
    width = int(round(mask_ms * sample_rate / 1000))
    margin = int(round(edge_margin_ms * sample_rate / 1000))
    masks: dict[str, MaskSpec] = {}
    skipped: list[dict] = []
    for entry in entries:
        try:
            n_raw, rate = _wav_length(entry.wav_path)
        except (OSError, EOFError, wave.Error) as exc:
            skipped.append({"utt": entry.utt_id, "kind": "io_error", "reason": str(exc)})
            continue
        n = n_raw if rate == sample_rate else int(round(n_raw * sample_rate / rate))
        last_onset = n - width - margin
        if width < 1 or last_onset < margin:
            skipped.append(
                {
                    "utt": entry.utt_id,
                    "kind": "too_short",
                    "reason": f"{n} samples too short for {mask_ms} ms mask",
                }
            )
            continue
        onset = draw_mask_onset(seed, entry.utt_id, margin, last_onset)
        masks[entry.utt_id] = MaskSpec(onset, onset + width - 1)
    return masks, skipped


def _load_signal(path, sample_rate: int) -> Waveform:
    w = read_wav(path)
    return resample(w, sample_rate) if w.sample_rate != sample_rate else w


def _fit_length(w: Waveform, n: int) -> Waveform:
    if len(w) == n:
        return w
    if len(w) > n:
        return Waveform(w.samples[:n], w.sample_rate)
    return Waveform(np.pad(w.samples, (0, n - len(w))), w.sample_rate)


def _build_deps(config: RunConfig, entry: ManifestEntry) -> InpaintDeps:
    deps = InpaintDeps(mel_config=config.mel, griffin_lim_iters=config.griffin_lim_iters)
    if config.method in ("pt", "ft"):
        if config.codebook_path is None:
            raise ValueError(f"method {config.method} requires a codebook")
        deps.codebook = load_codebook(config.codebook_path)
        if entry.embedding_path:
            seq = read_embeddings(entry.embedding_path)
            deps.embed = lambda w, mask_frames, _seq=seq: _seq
            from speechfill.inpaint import FrameGeometry

            deps.embed_geometry = FrameGeometry.of(seq)
    if config.method == "asr_tts":
        if not entry.synthetic_wav:
            raise ValueError("asr_tts requires synthetic_wav in the manifest")
        deps.synthetic = _load_signal(entry.synthetic_wav, config.sample_rate)
    return deps


def _eval_one(
    entry: ManifestEntry,
    mask: MaskSpec,
    config: RunConfig,
    hypotheses: dict[str, str],
) -> list[dict]:
    reference = _load_signal(entry.wav_path, config.sample_rate)
    if config.noise is not None:
        noise_rng = _utt_rng(config.seed, entry.utt_id, "noise")
        if config.noise.kind == "white":
            # fresh realization per utterance
            noise = white_noise(
                len(reference), config.sample_rate, seed=int(noise_rng.integers(1 << 31))
            )
        else:
            noise = _load_signal(config.noise.wav_path, config.sample_rate)
        reference = mix_noise_at_snr(
            reference, noise, config.noise.snr_db, seed=int(noise_rng.integers(1 << 31))
        )
    if config.precomputed_outputs_dir is not None:
        # reconstruction happened elsewhere (e.g. through the bridge); score it
        out_path = Path(config.precomputed_outputs_dir) / f"{entry.utt_id}.wav"
        output = _fit_length(_load_signal(out_path, config.sample_rate), len(reference))
    elif config.mode == INFORMED:
        deps = _build_deps(config, entry)
        output = run_informed(reference, mask, config.method, deps).waveform
    else:
        deps = _build_deps(config, entry)
        corrupted = apply_corruption(reference, mask)
        output = _fit_length(run_blind(corrupted, config.method, deps).waveform, len(reference))

    window = eval_window(mask, len(reference), config.sample_rate)
    ref_win = window.slice(reference)
    out_win = window.slice(output)

    rows = []
    base = {
        "utt": entry.utt_id,
        "mask_ms": config.mask_ms,
        "method": config.method,
        "mode": config.mode,
    }
    for metric in config.metrics:
        if metric == "stoi":
            value = stoi(ref_win, out_win).value
        elif metric == "snr":
            value = snr_measure(ref_win, out_win).value
        elif metric == "cer":
            hyp = hypotheses.get(entry.utt_id)
            if hyp is None or not entry.transcript:
                continue  # needs an external transcription of the output
            value = cer(entry.transcript, hyp).value
        else:
            raise ValueError(f"unknown metric {metric!r}")
        rows.append({**base, "metric": metric, "value": value})
    return rows


def _load_hypotheses(path) -> dict[str, str]:
    if not path:
        return {}
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[obj["utt"]] = obj["text"]
    return out


def _load_external_rows(path) -> list[dict]:
    if not path:
        return []
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def aggregate(rows: list[dict]) -> list[dict]:
    """Group by (metric, method, mode, mask_ms): mean plus two 95% half-widths.

    ci_normal uses the sample standard deviation; ci_binomial treats the mean
    of a [0, 1]-bounded metric as a proportion. Unbounded metrics leave the
    binomial column empty.
    """
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["metric"], row["method"], row["mode"], row["mask_ms"])
        groups.setdefault(key, []).append(float(row["value"]))
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        values = np.array(groups[key])
        n = len(values)
        mean = float(values.mean())
        ci_normal = float(CI_Z * values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        metric = key[0]
        if metric == "stoi" and 0.0 <= mean <= 1.0:
            ci_binomial = float(CI_Z * math.sqrt(mean * (1.0 - mean) / n))
        else:
            ci_binomial = None
        out.append(
            {
                "metric": key[0],
                "method": key[1],
                "mode": key[2],
                "mask_ms": key[3],
                "n": n,
                "mean": mean,
                "ci_normal": ci_normal,
                "ci_binomial": ci_binomial,
            }
        )
    return out


def _format_csv(aggregates: list[dict]) -> str:
    lines = ["metric,method,mode,mask_ms,n,mean,ci_normal,ci_binomial"]
    for agg in aggregates:
        binom = "" if agg["ci_binomial"] is None else f"{agg['ci_binomial']:.6f}"
        lines.append(
            f"{agg['metric']},{agg['method']},{agg['mode']},{agg['mask_ms']},"
            f"{agg['n']},{agg['mean']:.6f},{agg['ci_normal']:.6f},{binom}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class EvalRunResult:
    rows: list[dict]
    aggregates: list[dict]
    failures: list[dict]
    skipped: list[dict]

    @property
    def partial_failure(self) -> bool:
        return bool(self.failures)


def run_eval(entries: list[ManifestEntry], config: RunConfig, out_dir) -> EvalRunResult:
    """Evaluate one (method, mode, mask length) condition over a manifest.

    Per-utterance failures are recorded and the run continues. Files written:
    masks.jsonl, scores.jsonl, summary.csv, failures.jsonl (when any), and
    config.frozen.json.
    """
    if config.cer_scope not in ("full", "window"):
        raise ValueError(f"cer_scope must be 'full' or 'window', got {config.cer_scope!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    masks, skipped = gen_masks(
        entries, config.mask_ms, config.seed, config.sample_rate, config.edge_margin_ms
    )
    hypotheses = _load_hypotheses(config.hypotheses_path)

    work = [(entry, masks[entry.utt_id]) for entry in entries if entry.utt_id in masks]
    rows: list[dict] = []
    failures: list[dict] = [
        {"utt": item["utt"], "error": item["reason"]}
        for item in skipped
        if item["kind"] == "io_error"
    ]

    def job(item):
        entry, mask = item
        try:
            return entry.utt_id, _eval_one(entry, mask, config, hypotheses), None
        except Exception as exc:  # per-utterance isolation: the run continues
            return entry.utt_id, [], f"{type(exc).__name__}: {exc}"

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(job, work))
    else:
        outcomes = [job(item) for item in work]

    for utt_id, utt_rows, error in outcomes:
        if error is not None:
            failures.append({"utt": utt_id, "error": error})
        rows.extend(utt_rows)

    rows.extend(_load_external_rows(config.external_scores_path))
    rows.sort(
        key=lambda r: (r["utt"], r["metric"], str(r["method"]), str(r["mode"]), str(r["mask_ms"]))
    )
    aggregates = aggregate(rows)

    write_masks(masks, out_dir / "masks.jsonl", seed=config.seed)
    with open(out_dir / "scores.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (out_dir / "summary.csv").write_text(_format_csv(aggregates))
    (out_dir / "config.frozen.json").write_text(config.to_json())
    if failures:
        with open(out_dir / "failures.jsonl", "w") as fh:
            for failure in sorted(failures, key=lambda f: f["utt"]):
                fh.write(json.dumps(failure, sort_keys=True) + "\n")
    return EvalRunResult(rows, aggregates, failures, skipped)
