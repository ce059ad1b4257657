"""Speech inpainting toolkit.

Submodules:
    dsp       waveform I/O, resampling, mel analysis, Griffin-Lim, noise mixing
    quantize  k-means codebooks and the two vector-quantization rules
    inpaint   mask geometry, corruption, cross-fade stitching, pipelines
    align     DTW, interval mapping, WSOLA, synthetic-segment assembly
    metrics   STOI, CER, SNR, and mask-centered evaluation windows
    formats   binary embedding files, unit files, mask and manifest JSON
    harness   mask generation and corpus-level evaluation runs
    synth     deterministic synthetic test signals
    cli       command-line entry points
"""

from speechfill.align import DtwPath, WsolaConfig, assemble_asr_tts, dtw_align, map_interval, wsola_stretch
from speechfill.dsp import (
    EmbeddingSequence,
    MelConfig,
    Waveform,
    griffin_lim,
    mel_spectrogram,
    mix_noise_at_snr,
    read_wav,
    resample,
    white_noise,
    write_wav,
)
from speechfill.inpaint import (
    FrameGeometry,
    InpaintDeps,
    InpaintResult,
    MaskSpec,
    apply_corruption,
    interpolate_mel_linear,
    run_blind,
    run_informed,
    samples_to_frames,
    stitch_crossfade,
)
from speechfill.metrics import EvalWindow, Score, cer, eval_window, snr_measure, stoi
from speechfill.quantize import (
    Codebook,
    UnitSequence,
    load_codebook,
    lookup,
    save_codebook,
    train_kmeans,
    vq_cosine,
    vq_nearest,
)

__all__ = [
    "Codebook",
    "DtwPath",
    "EmbeddingSequence",
    "EvalWindow",
    "FrameGeometry",
    "InpaintDeps",
    "InpaintResult",
    "MaskSpec",
    "MelConfig",
    "Score",
    "UnitSequence",
    "Waveform",
    "WsolaConfig",
    "apply_corruption",
    "assemble_asr_tts",
    "cer",
    "dtw_align",
    "eval_window",
    "griffin_lim",
    "interpolate_mel_linear",
    "load_codebook",
    "lookup",
    "map_interval",
    "mel_spectrogram",
    "mix_noise_at_snr",
    "read_wav",
    "resample",
    "run_blind",
    "run_informed",
    "samples_to_frames",
    "save_codebook",
    "snr_measure",
    "stitch_crossfade",
    "stoi",
    "train_kmeans",
    "vq_cosine",
    "vq_nearest",
    "white_noise",
    "write_wav",
]

__version__ = "0.1.0"
