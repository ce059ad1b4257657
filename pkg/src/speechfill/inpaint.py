"""Mask geometry, corruption, cross-fade stitching, and gap-filling pipelines.

Sample intervals are inclusive on both ends. Frame l spans samples
[l * hop, l * hop + win); a frame counts as masked on ANY overlap with the
corrupted interval (conservative: prefer masking a frame to leaking corrupted
samples into context).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from speechfill.dsp import (
    EmbeddingSequence,
    MelConfig,
    Waveform,
    griffin_lim,
    mel_spectrogram,
    num_frames,
)
from speechfill.quantize import COSINE, Codebook, vq_cosine, vq_nearest, lookup

INFORMED = "informed"
BLIND = "blind"

METHOD_LI = "li"
METHOD_PT = "pt"
METHOD_FT = "ft"
METHOD_ASR_TTS = "asr_tts"

DEFAULT_FADE = 0.005


class MaskError(ValueError):
    """Corrupted-interval specification is invalid for the given signal."""


@dataclass(frozen=True)
class FrameGeometry:
    """Window span and hop of a frame-rate front end, in samples."""

    win_samples: int = 400
    hop_samples: int = 320
    sample_rate: int = 16000

    def __post_init__(self):
        if not (self.win_samples >= self.hop_samples >= 1):
            raise ValueError("need win_samples >= hop_samples >= 1")

    def n_frames(self, total_samples: int) -> int:
        return num_frames(total_samples, self.win_samples, self.hop_samples)

    def frame_span(self, l: int) -> tuple[int, int]:
        """Sample span [start, end) of frame l."""
        start = l * self.hop_samples
        return start, start + self.win_samples

    @staticmethod
    def of(seq: EmbeddingSequence) -> "FrameGeometry":
        return FrameGeometry(seq.win_samples, seq.hop_samples, seq.sample_rate)


@dataclass(frozen=True)
class MaskSpec:
    """Inclusive corrupted sample interval [t1, t2]."""

    t1: int
    t2: int

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < self.t1:
            raise MaskError(f"need 0 <= t1 <= t2, got [{self.t1}, {self.t2}]")

    @property
    def width(self) -> int:
        return self.t2 - self.t1 + 1

    def validate(self, total_samples: int) -> None:
        if self.t2 >= total_samples:
            raise MaskError(f"mask [{self.t1}, {self.t2}] outside signal of {total_samples} samples")

    def frame_interval(self, geom: FrameGeometry, total_samples: int) -> tuple[int, int]:
        return samples_to_frames(self.t1, self.t2, geom, total_samples)

    def to_json_dict(self) -> dict:
        return {"t1": self.t1, "t2": self.t2, "unit": "samples"}

    @staticmethod
    def from_json_dict(obj: dict) -> "MaskSpec":
        if obj.get("unit", "samples") != "samples":
            raise MaskError(f"unsupported mask unit {obj.get('unit')!r}")
        return MaskSpec(int(obj["t1"]), int(obj["t2"]))


@dataclass(frozen=True)
class InpaintResult:
    waveform: Waveform
    mask: MaskSpec | None
    mode: str
    method: str


def samples_to_frames(t1: int, t2: int, geom: FrameGeometry, total_samples: int) -> tuple[int, int]:
    """Smallest and largest frame whose span intersects [t1, t2].

    Frames near the end of a signal may not cover a trailing remainder shorter
    than one window; a mask entirely inside that tail overlaps no frame and is
    rejected.
    """
    if t1 < 0 or t2 < t1 or t2 >= total_samples:
        raise MaskError(f"invalid interval [{t1}, {t2}] for signal of {total_samples} samples")
    win, hop = geom.win_samples, geom.hop_samples
    total_frames = geom.n_frames(total_samples)  # raises if signal < one frame
    # frame l overlaps iff l*hop <= t2 and l*hop + win - 1 >= t1; pure integer
    # arithmetic, ceil(a/b) as -(-a // b)
    l1 = max(0, -(-(t1 - win + 1) // hop))
    l2 = min(total_frames - 1, t2 // hop)
    if l1 > l2:
        raise MaskError(
            f"interval [{t1}, {t2}] overlaps no analysis frame (uncovered signal tail)"
        )
    return l1, l2


def apply_corruption(w: Waveform, mask: MaskSpec) -> Waveform:
    """Zero out the corrupted interval; every other sample is untouched."""
    mask.validate(len(w))
    samples = w.samples.copy()
    samples[mask.t1 : mask.t2 + 1] = 0.0
    return Waveform(samples, w.sample_rate)


def interpolate_mel_linear(mel: EmbeddingSequence, frames: tuple[int, int] | None) -> EmbeddingSequence:
    """Replace masked frames with a linear ramp between the flanking frames.

    With an anchor on only one side (mask touching the sequence edge) the
    available anchor is held constant across the gap. A mask covering the whole
    sequence has no anchors and is rejected.
    """
    if frames is None:
        return EmbeddingSequence(mel.frames.copy(), mel.hop_samples, mel.win_samples, mel.sample_rate)
    l1, l2 = frames
    if l2 < l1:
        return EmbeddingSequence(mel.frames.copy(), mel.hop_samples, mel.win_samples, mel.sample_rate)
    if l1 < 0 or l2 >= mel.n_frames:
        raise MaskError(f"frame interval [{l1}, {l2}] outside sequence of {mel.n_frames} frames")
    left = mel.frames[l1 - 1] if l1 > 0 else None
    right = mel.frames[l2 + 1] if l2 + 1 < mel.n_frames else None
    if left is None and right is None:
        raise MaskError("entire sequence masked: no anchor frames for interpolation")
    if left is None:
        left = right
    if right is None:
        right = left
    out = mel.frames.copy()
    n_gap = l2 - l1 + 1
    weights = np.arange(1, n_gap + 1) / (n_gap + 1)
    out[l1 : l2 + 1] = left[None, :] + weights[:, None] * (right - left)[None, :]
    return EmbeddingSequence(out, mel.hop_samples, mel.win_samples, mel.sample_rate)


def stitch_crossfade(
    original: Waveform,
    generated: Waveform,
    mask: MaskSpec,
    fade: float = DEFAULT_FADE,
    offset: int = 0,
) -> Waveform:
    """Blend generated audio into the original across the mask.

    ``generated`` is placed so its first sample sits at ``offset`` on the
    original's time axis; it must cover the mask plus the fade flanks. Output:
    bit-identical to the original outside [t1 - F, t2 + F], pure generated
    inside the mask, and a linear ramp in the two fade zones (weight 0 at the
    outer edge, 1 at the mask boundary).
    """
    if generated.sample_rate != original.sample_rate:
        raise ValueError("sample-rate mismatch between original and generated")
    mask.validate(len(original))
    n = len(original)
    f = int(round(fade * original.sample_rate))
    lo = max(0, mask.t1 - f)
    hi = min(n - 1, mask.t2 + f)
    if offset > lo or offset + len(generated) - 1 < hi:
        raise ValueError(
            f"generated segment [{offset}, {offset + len(generated) - 1}] too short to cover "
            f"[{lo}, {hi}]"
        )
    out = original.samples.copy()
    gen = generated.samples
    t = np.arange(lo, hi + 1)
    if f > 0:
        ramp_up = (t - (mask.t1 - f)) / f
        ramp_down = ((mask.t2 + f) - t) / f
        weight = np.minimum(1.0, np.minimum(ramp_up, ramp_down))
    else:
        weight = np.ones_like(t, dtype=float)
    # orig + w * (gen - orig) rather than (1-w)*orig + w*gen: identical
    # generated audio then passes through exactly, not to within rounding
    region = original.samples[lo : hi + 1]
    out[lo : hi + 1] = region + weight * (gen[t - offset] - region)
    # the mask proper is generated outright, not a degenerate 1.0 * gen blend
    out[mask.t1 : mask.t2 + 1] = gen[mask.t1 - offset : mask.t2 + 1 - offset]
    return Waveform(out, original.sample_rate)


@dataclass
class InpaintDeps:
    """Pluggable pieces of the reconstruction pipelines.

    ``embed`` maps a waveform to frame embeddings; the ``mask_frames`` argument
    carries the corrupted frame interval in the informed case so an external
    encoder can flag those frames (the mel fixture just ignores it). ``decode``
    maps (possibly quantized) embeddings back to audio. Defaults wire the
    self-contained fixture path: mel analysis in, Griffin-Lim out.
    """

    mel_config: MelConfig = field(default_factory=MelConfig)
    codebook: Codebook | None = None
    embed: Callable[[Waveform, tuple[int, int] | None], EmbeddingSequence] | None = None
    embed_geometry: FrameGeometry | None = None
    decode: Callable[[EmbeddingSequence], Waveform] | None = None
    synthetic: Waveform | None = None
    fade: float = DEFAULT_FADE
    context_frames: int = 2
    decode_full: bool = False  # decode the whole sequence instead of the masked slice
    griffin_lim_iters: int = 60

    def embed_fn(self, w: Waveform, mask_frames=None) -> EmbeddingSequence:
        if self.embed is not None:
            return self.embed(w, mask_frames)
        return mel_spectrogram(w, self.mel_config)

    def geometry_for(self, sample_rate: int) -> FrameGeometry:
        """Frame geometry of the embedding space (needed before embedding to
        translate the sample mask into frame indices)."""
        if self.embed_geometry is not None:
            return self.embed_geometry
        return FrameGeometry(
            self.mel_config.win_samples(sample_rate),
            self.mel_config.hop_samples(sample_rate),
            sample_rate,
        )

    def decode_fn(self, seq: EmbeddingSequence) -> Waveform:
        if self.decode is not None:
            return self.decode(seq)
        return griffin_lim(seq, self.mel_config, iters=self.griffin_lim_iters)

    def quantize_fn(self, seq: EmbeddingSequence):
        if self.codebook is None:
            raise ValueError("codebook required for quantized reconstruction")
        if self.codebook.kind == COSINE:
            return vq_cosine(seq, self.codebook)
        return vq_nearest(seq, self.codebook)


def _slice_embeddings(seq: EmbeddingSequence, l1: int, l2: int) -> EmbeddingSequence:
    return EmbeddingSequence(seq.frames[l1 : l2 + 1], seq.hop_samples, seq.win_samples, seq.sample_rate)


def run_informed(w: Waveform, mask: MaskSpec | None, method: str, deps: InpaintDeps | None = None) -> InpaintResult:
    """Reconstruct only the masked interval; everything else passes through.

    ``mask=None`` means nothing is corrupted and the input is returned as is.
    Output length always equals input length, and samples outside the mask plus
    fade flanks are bit-identical to the input.
    """
    deps = deps or InpaintDeps()
    if method not in (METHOD_LI, METHOD_PT, METHOD_FT, METHOD_ASR_TTS):
        raise ValueError(f"unknown method {method!r}")
    if mask is None:
        return InpaintResult(w, None, INFORMED, method)
    mask.validate(len(w))

    if method == METHOD_ASR_TTS:
        # assembled externally from a synthetic rendering; see speechfill.align
        from speechfill.align import assemble_asr_tts

        if deps.synthetic is None:
            raise ValueError("asr_tts method requires deps.synthetic")
        out = assemble_asr_tts(w, deps.synthetic, mask, mel_cfg=deps.mel_config, fade=deps.fade)
        return InpaintResult(out, mask, INFORMED, method)

    corrupted = apply_corruption(w, mask)

    if method == METHOD_LI:
        mel = mel_spectrogram(corrupted, deps.mel_config)
        frames = mask.frame_interval(FrameGeometry.of(mel), len(w))
        filled = interpolate_mel_linear(mel, frames)
        generated = deps.decode_fn(filled)
        out = stitch_crossfade(w, generated, mask, fade=deps.fade, offset=0)
        return InpaintResult(out, mask, INFORMED, method)

    # pt / ft: quantized-unit reconstruction of the masked frames only
    geom = deps.geometry_for(w.sample_rate)
    l1, l2 = mask.frame_interval(geom, len(w))
    emb = deps.embed_fn(corrupted, (l1, l2))
    if (emb.hop_samples, emb.win_samples) != (geom.hop_samples, geom.win_samples):
        raise ValueError("embedding geometry does not match deps geometry")
    units = deps.quantize_fn(emb)
    centers = lookup(units, deps.codebook)
    if deps.decode_full:
        segment = deps.decode_fn(centers)
        offset = 0
    else:
        # decode only the masked frames, padded with warm-up context on each
        # side; the stitch trims back to the mask plus fades
        l1c = max(0, l1 - deps.context_frames)
        l2c = min(emb.n_frames - 1, l2 + deps.context_frames)
        segment = deps.decode_fn(_slice_embeddings(centers, l1c, l2c))
        offset = l1c * geom.hop_samples
    out = stitch_crossfade(w, segment, mask, fade=deps.fade, offset=offset)
    return InpaintResult(out, mask, INFORMED, method)


def run_blind(w_corrupted: Waveform, method: str, deps: InpaintDeps | None = None) -> InpaintResult:
    """Full resynthesis of a corrupted signal without knowing the mask position.

    Output is the decoder's natural length, (n_frames - 1) * hop + win for the
    embedding geometry; no sample of the input is copied through.
    """
    deps = deps or InpaintDeps()
    if method == METHOD_LI:
        raise ValueError("linear interpolation needs the mask position; it has no blind variant")
    if method == METHOD_ASR_TTS:
        raise ValueError("asr_tts needs the mask position; it has no blind variant")
    if method not in (METHOD_PT, METHOD_FT):
        raise ValueError(f"unknown method {method!r}")
    emb = deps.embed_fn(w_corrupted, None)
    units = deps.quantize_fn(emb)
    centers = lookup(units, deps.codebook)
    out = deps.decode_fn(centers)
    return InpaintResult(out, None, BLIND, method)
