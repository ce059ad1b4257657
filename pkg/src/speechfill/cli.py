"""Command-line interface.

Subcommands: mask-gen, corrupt, train-codebook, quantize, inpaint,
asr-tts-assemble, eval, noise-mix. Run ``speechfill <subcommand> -h`` for the
flags of each one.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from speechfill import formats, harness
from speechfill.align import assemble_asr_tts
from speechfill.dsp import MelConfig, mel_spectrogram, mix_noise_at_snr, read_wav, resample, white_noise, write_wav
from speechfill.inpaint import FrameGeometry, InpaintDeps, MaskSpec, apply_corruption, run_blind, run_informed
from speechfill.quantize import load_codebook, save_codebook, train_kmeans, vq_cosine, vq_nearest

_METHOD_BY_FLAG = {"li": "li", "pt": "pt", "ft": "ft", "asr-tts": "asr_tts"}


def _load_at_rate(path, rate):
    w = read_wav(path)
    return resample(w, rate) if w.sample_rate != rate else w


def _mask_from_args(args) -> MaskSpec:
    if args.t1 is not None and args.t2 is not None:
        return MaskSpec(args.t1, args.t2)
    if args.mask:
        masks = formats.read_masks(args.mask)
        if args.utt:
            if args.utt not in masks:
                raise SystemExit(f"utterance {args.utt!r} not in {args.mask}")
            return masks[args.utt]
        if len(masks) == 1:
            return next(iter(masks.values()))
        raise SystemExit("--utt required when the mask file has several entries")
    raise SystemExit("need either --t1/--t2 or --mask [--utt]")


def _add_mask_args(p):
    p.add_argument("--mask", help="mask JSON-lines file")
    p.add_argument("--utt", help="utterance id inside the mask file")
    p.add_argument("--t1", type=int, help="first corrupted sample (inclusive)")
    p.add_argument("--t2", type=int, help="last corrupted sample (inclusive)")


def cmd_mask_gen(args) -> int:
    entries = formats.load_manifest(args.manifest)
    masks, skipped = harness.gen_masks(
        entries, args.mask_ms, args.seed, args.sample_rate, args.edge_margin_ms
    )
    formats.write_masks(masks, args.out, seed=args.seed)
    for item in skipped:
        print(f"skipped {item['utt']}: {item['reason']}", file=sys.stderr)
    print(f"wrote {len(masks)} masks to {args.out}")
    return 0


def cmd_corrupt(args) -> int:
    w = _load_at_rate(args.input, args.sample_rate)
    mask = _mask_from_args(args)
    write_wav(apply_corruption(w, mask), args.out)
    return 0


def cmd_train_codebook(args) -> int:
    cfg = MelConfig()
    sequences = []
    if args.manifest:
        for entry in formats.load_manifest(args.manifest):
            if args.features == "sief":
                if not entry.embedding_path:
                    raise SystemExit(f"{entry.utt_id}: no embedding_path in manifest")
                sequences.append(formats.read_embeddings(entry.embedding_path))
            else:
                sequences.append(mel_spectrogram(_load_at_rate(entry.wav_path, args.sample_rate), cfg))
    for path in args.inputs:
        if args.features == "sief":
            sequences.append(formats.read_embeddings(path))
        else:
            sequences.append(mel_spectrogram(_load_at_rate(path, args.sample_rate), cfg))
    if not sequences:
        raise SystemExit("no training inputs (use --manifest and/or positional files)")
    frames = np.vstack([s.frames for s in sequences])
    if args.subsample > 1:
        frames = frames[:: args.subsample]
    cb = train_kmeans(frames, k=args.k, seed=args.seed)
    save_codebook(cb, args.out)
    print(f"trained k={args.k} codebook on {frames.shape[0]} frames -> {args.out}")
    return 0


def cmd_quantize(args) -> int:
    cb = load_codebook(args.codebook)
    if args.features == "sief" or args.input.endswith(".sief"):
        seq = formats.read_embeddings(args.input)
    else:
        seq = mel_spectrogram(_load_at_rate(args.input, args.sample_rate), MelConfig())
    units = vq_cosine(seq, cb) if cb.kind == "cosine" else vq_nearest(seq, cb)
    formats.write_units(units, args.out)
    print(f"wrote {len(units)} units to {args.out}")
    return 0


def cmd_inpaint(args) -> int:
    w = _load_at_rate(args.input, args.sample_rate)
    method = _METHOD_BY_FLAG[args.method]
    deps = InpaintDeps(griffin_lim_iters=args.gl_iters)
    if args.codebook:
        deps.codebook = load_codebook(args.codebook)
    if args.embeddings:
        seq = formats.read_embeddings(args.embeddings)
        deps.embed = lambda _w, _mask_frames, _seq=seq: _seq
        deps.embed_geometry = FrameGeometry.of(seq)
    if args.decoder == "external":
        if not args.synth_wav:
            raise SystemExit("--decoder external requires --synth-wav")
        rendered = _load_at_rate(args.synth_wav, args.sample_rate)
        deps.decode = lambda _seq, _r=rendered: _r
        deps.decode_full = True  # external rendering covers the whole sequence
    if method == "asr_tts":
        if not args.synthetic:
            raise SystemExit("--method asr-tts requires --synthetic")
        deps.synthetic = _load_at_rate(args.synthetic, args.sample_rate)

    if args.mode == "blind":
        result = run_blind(w, method, deps)
    else:
        mask = _mask_from_args(args)
        result = run_informed(w, mask, method, deps)
    write_wav(result.waveform, args.out)
    return 0


def cmd_asr_tts_assemble(args) -> int:
    w = _load_at_rate(args.input, args.sample_rate)
    synthetic = _load_at_rate(args.synthetic, args.sample_rate)
    mask = _mask_from_args(args)
    out = assemble_asr_tts(w, synthetic, mask, fade=args.fade)
    write_wav(out, args.out)
    return 0


def cmd_eval(args) -> int:
    entries = formats.load_manifest(args.manifest)
    if args.config:
        config = harness.RunConfig.from_json(Path(args.config).read_text())
    else:
        config = harness.RunConfig()
    noise = config.noise
    if args.noise:
        noise = harness.NoiseSpec(args.noise, args.snr_db, args.noise_wav)
    overrides = dict(
        method=_METHOD_BY_FLAG[args.method] if args.method else config.method,
        mode=args.mode or config.mode,
        mask_ms=args.mask_ms if args.mask_ms is not None else config.mask_ms,
        seed=args.seed if args.seed is not None else config.seed,
        workers=args.workers if args.workers is not None else config.workers,
        codebook_path=args.codebook or config.codebook_path,
        noise=noise,
        griffin_lim_iters=args.gl_iters if args.gl_iters is not None else config.griffin_lim_iters,
        precomputed_outputs_dir=args.precomputed_outputs or config.precomputed_outputs_dir,
    )
    config = harness.RunConfig(**{**config.__dict__, **overrides})
    result = harness.run_eval(entries, config, args.out_dir)
    print(f"{len(result.rows)} scores, {len(result.failures)} failures -> {args.out_dir}")
    for failure in result.failures:
        print(f"failed {failure['utt']}: {failure['error']}", file=sys.stderr)
    return 1 if result.partial_failure else 0


def cmd_noise_mix(args) -> int:
    clean = _load_at_rate(args.input, args.sample_rate)
    if args.noise == "white":
        noise = white_noise(len(clean), clean.sample_rate, seed=args.seed)
    else:
        if not args.noise_wav:
            raise SystemExit("--noise crowd requires --noise-wav")
        noise = _load_at_rate(args.noise_wav, args.sample_rate)
    write_wav(mix_noise_at_snr(clean, noise, args.snr_db, seed=args.seed), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechfill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--sample-rate", type=int, default=16000)

    p = sub.add_parser("mask-gen", help="draw one random mask per manifest utterance")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mask-ms", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edge-margin-ms", type=int, default=100)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_mask_gen)

    p = sub.add_parser("corrupt", help="zero out a masked interval of a wav")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_mask_args(p)
    common(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("train-codebook", help="k-means codebook from mel or embedding files")
    p.add_argument("inputs", nargs="*", help="wav or .sief files")
    p.add_argument("--manifest")
    p.add_argument("--features", choices=["mel", "sief"], default="mel")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subsample", type=int, default=1, help="keep every Nth frame")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_train_codebook)

    p = sub.add_parser("quantize", help="map a signal or embedding file to unit indices")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--features", choices=["mel", "sief"], default="mel")
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("inpaint", help="reconstruct a corrupted interval")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=list(_METHOD_BY_FLAG), default="li")
    p.add_argument("--mode", choices=["informed", "blind"], default="informed")
    p.add_argument("--codebook")
    p.add_argument("--embeddings", help="SIEF file with precomputed embeddings")
    p.add_argument("--decoder", choices=["griffin-lim", "external"], default="griffin-lim")
    p.add_argument("--synth-wav", help="externally decoded waveform (with --decoder external)")
    p.add_argument("--synthetic", help="synthetic rendering (asr-tts method)")
    p.add_argument("--gl-iters", type=int, default=60)
    p.add_argument("--out", required=True)
    _add_mask_args(p)
    common(p)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("asr-tts-assemble", help="align + stretch + insert a synthetic rendering")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--fade", type=float, default=0.005)
    p.add_argument("--out", required=True)
    _add_mask_args(p)
    common(p)
    p.set_defaults(func=cmd_asr_tts_assemble)

    p = sub.add_parser("eval", help="run one evaluation condition over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", help="RunConfig JSON file; flags override it")
    p.add_argument("--method", choices=list(_METHOD_BY_FLAG))
    p.add_argument("--mode", choices=["informed", "blind"])
    p.add_argument("--mask-ms", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--codebook")
    p.add_argument("--noise", choices=["white", "crowd"])
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--noise-wav")
    p.add_argument("--gl-iters", type=int)
    p.add_argument("--precomputed-outputs", help="score <dir>/<utt>.wav files instead of running a method")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("noise-mix", help="add white or crowd noise at a target SNR")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--noise", choices=["white", "crowd"], required=True)
    p.add_argument("--noise-wav")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_noise_mix)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
