"""Alignment machinery for assembling externally synthesized speech into a gap:
DTW between feature sequences, interval mapping along the path, WSOLA duration
adjustment, and the end-to-end assembly step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from speechfill.dsp import EmbeddingSequence, MelConfig, Waveform, mel_spectrogram
from speechfill.inpaint import DEFAULT_FADE, FrameGeometry, MaskSpec, stitch_crossfade


def _hann_no_zeros(n: int) -> np.ndarray:
    # Hann window with the zero endpoints trimmed off: every output sample
    # keeps nonzero window mass, so overlap-add normalization is exact at
    # segment boundaries.
    return np.hanning(n + 2)[1:-1]


class AlignmentCollapseError(ValueError):
    """DTW mapped the requested interval onto nothing usable."""


@dataclass(frozen=True)
class DtwPath:
    """Monotonic index pairs from (0, 0) to (M-1, N-1) and their total cost."""

    pairs: tuple
    total_cost: float

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("empty path")
        if self.pairs[0] != (0, 0):
            raise ValueError("path must start at the origin")
        for (i0, j0), (i1, j1) in zip(self.pairs, self.pairs[1:]):
            di, dj = i1 - i0, j1 - j0
            if (di, dj) not in ((1, 0), (0, 1), (1, 1)):
                raise ValueError(f"illegal step ({di}, {dj})")
        if self.total_cost < 0:
            raise ValueError("negative path cost")


@dataclass(frozen=True)
class WsolaConfig:
    """Overlap-add settings: 25 ms frames, 12.5 ms synthesis hop, 10 ms search."""

    frame_len: int = 400
    synthesis_hop: int = 200
    tolerance: int = 160

    def __post_init__(self):
        if not (self.frame_len > self.synthesis_hop > 0):
            raise ValueError("need frame_len > synthesis_hop > 0")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


def dtw_align(a: EmbeddingSequence, b: EmbeddingSequence, band: int | None = None) -> DtwPath:
    """Globally optimal monotonic alignment under per-frame Euclidean cost.

    Steps are (1,0), (0,1), (1,1) with no weights. When cumulative costs tie,
    the diagonal predecessor wins, then the (1,0) one, so the path is unique.
    ``band`` optionally restricts the search to |j - i*n/m| <= band around the
    scaled diagonal (useful for long inputs); None searches everything.
    """
    if a.n_frames == 0 or b.n_frames == 0:
        raise ValueError("cannot align an empty sequence")
    if a.dim != b.dim:
        raise ValueError(f"dim mismatch: {a.dim} vs {b.dim}")
    m, n = a.n_frames, b.n_frames
    # local cost matrix
    diff = a.frames[:, None, :] - b.frames[None, :, :]
    local = np.sqrt(np.sum(diff**2, axis=2))
    if band is not None:
        if band < 1:
            raise ValueError("band must be >= 1")
        i_idx = np.arange(m)[:, None]
        j_idx = np.arange(n)[None, :]
        outside = np.abs(j_idx - i_idx * (n / m)) > band
        # endpoints must stay reachable regardless of the band
        outside[0, 0] = outside[m - 1, n - 1] = False
        local = np.where(outside, np.inf, local)
    acc = np.full((m, n), np.inf)
    # 0 = (1,1) diagonal, 1 = (1,0), 2 = (0,1); preference order on ties
    step_from = np.zeros((m, n), dtype=np.int8)
    acc[0, 0] = local[0, 0]
    for i in range(1, m):
        acc[i, 0] = acc[i - 1, 0] + local[i, 0]
        step_from[i, 0] = 1
    for j in range(1, n):
        acc[0, j] = acc[0, j - 1] + local[0, j]
        step_from[0, j] = 2
    for i in range(1, m):
        row_prev = acc[i - 1]
        row = acc[i]
        for j in range(1, n):
            best = row_prev[j - 1]
            which = 0
            if row_prev[j] < best:
                best = row_prev[j]
                which = 1
            if row[j - 1] < best:
                best = row[j - 1]
                which = 2
            row[j] = best + local[i, j]
            step_from[i, j] = which
    if not math.isfinite(acc[m - 1, n - 1]):
        raise ValueError("band too narrow: no monotone path connects the endpoints")
    # backtrack
    pairs = [(m - 1, n - 1)]
    i, j = m - 1, n - 1
    while (i, j) != (0, 0):
        which = step_from[i, j]
        if which == 0:
            i, j = i - 1, j - 1
        elif which == 1:
            i -= 1
        else:
            j -= 1
        pairs.append((i, j))
    pairs.reverse()
    return DtwPath(tuple(pairs), float(acc[m - 1, n - 1]))


def map_interval(path: DtwPath, src_interval: tuple[int, int]) -> tuple[int, int]:
    """Project a source-side frame interval through the path onto the target side."""
    i1, i2 = src_interval
    js = [j for (i, j) in path.pairs if i1 <= i <= i2]
    if not js:
        raise AlignmentCollapseError(f"interval [{i1}, {i2}] outside the aligned source range")
    return min(js), max(js)


def _normalized_xcorr(candidate: np.ndarray, target: np.ndarray) -> float:
    denom = np.linalg.norm(candidate) * np.linalg.norm(target)
    if denom == 0.0:
        return 0.0
    return float(np.dot(candidate, target) / denom)


def wsola_stretch(w: Waveform, target_len: int, cfg: WsolaConfig = WsolaConfig()) -> Waveform:
    """Time-scale a signal to ``target_len`` samples without changing pitch.

    Hann-windowed segments are overlap-added every ``synthesis_hop`` samples;
    each segment is picked near its nominal analysis position, within
    ``tolerance`` samples, maximizing normalized cross-correlation with the
    natural continuation of the previous pick. The overlap-add result is
    trimmed or zero-padded to exactly ``target_len``.
    """
    if len(w) == 0:
        raise ValueError("empty input")
    if target_len < cfg.frame_len:
        raise ValueError(f"target_len {target_len} shorter than one frame ({cfg.frame_len})")
    x = w.samples
    frame, hop, tol = cfg.frame_len, cfg.synthesis_hop, cfg.tolerance
    n_out_frames = max(1, -(-(target_len - frame) // hop) + 1)
    # analysis positions advance at the input/output rate ratio
    ratio = len(x) / float(target_len)
    window = _hann_no_zeros(frame)

    # deltas ordered by |delta| so equal-correlation ties pick the smallest shift
    deltas = np.array(sorted(range(-tol, tol + 1), key=lambda d: (abs(d), d)), dtype=int)

    out_len = (n_out_frames - 1) * hop + frame
    out = np.zeros(out_len)
    norm = np.zeros(out_len)

    def segment(start: int) -> np.ndarray:
        # zero-pad outside the signal so edge candidates stay comparable
        seg = np.zeros(frame)
        s0, s1 = max(0, start), min(len(x), start + frame)
        if s1 > s0:
            seg[s0 - start : s1 - start] = x[s0:s1]
        return seg

    prev_pick = 0
    for k in range(n_out_frames):
        # not clamped to the signal: segment() zero-pads, so the identity rate
        # keeps exact alignment through the final partial frame
        nominal = int(round(k * hop * ratio))
        if k == 0:
            pick = nominal
        else:
            natural = segment(prev_pick + hop)
            best_corr, pick = -np.inf, nominal
            for d in deltas:
                start = nominal + d
                if start < -frame or start > len(x):
                    continue
                corr = _normalized_xcorr(segment(start), natural)
                if corr > best_corr:
                    best_corr, pick = corr, start
        piece = segment(pick) * window
        s = k * hop
        out[s : s + frame] += piece
        norm[s : s + frame] += window
        prev_pick = pick

    filled = norm > norm.max() * 1e-6
    out[filled] /= norm[filled]
    if out_len >= target_len:
        out = out[:target_len]
    else:
        out = np.pad(out, (0, target_len - out_len))
    return Waveform(out, w.sample_rate)


def assemble_asr_tts(
    original: Waveform,
    synthetic: Waveform,
    mask: MaskSpec,
    mel_cfg: MelConfig = MelConfig(),
    wsola_cfg: WsolaConfig = WsolaConfig(),
    fade: float = DEFAULT_FADE,
) -> Waveform:
    """Fill the mask with the matching stretch of an external synthetic rendering.

    Both signals are mel-analyzed and DTW-aligned; the synthetic frames mapped
    from the masked interval are cut, WSOLA-stretched to exactly the mask
    width, and cross-faded into the original. Output length equals the input
    length, bit-identical outside the mask plus fade flanks.
    """
    if synthetic.sample_rate != original.sample_rate:
        raise ValueError("sample-rate mismatch between original and synthetic")
    mask.validate(len(original))
    mel_orig = mel_spectrogram(original, mel_cfg)
    mel_synth = mel_spectrogram(synthetic, mel_cfg)
    path = dtw_align(mel_orig, mel_synth)
    l1, l2 = mask.frame_interval(FrameGeometry.of(mel_orig), len(original))
    j1, j2 = map_interval(path, (l1, l2))
    hop = mel_synth.hop_samples
    # carry the mask's intra-frame offsets over, so a self-aligned synthetic
    # signal yields exactly the original chunk positions
    s1 = max(0, j1 * hop + (mask.t1 - l1 * hop))
    s2 = min(len(synthetic) - 1, j2 * hop + (mask.t2 - l2 * hop))
    chunk = Waveform(synthetic.samples[s1 : s2 + 1], synthetic.sample_rate)
    if len(chunk) < wsola_cfg.frame_len:
        raise AlignmentCollapseError(
            f"mapped synthetic chunk of {len(chunk)} samples is too short to stretch"
        )
    stretched = wsola_stretch(chunk, mask.width, wsola_cfg)
    generated = original.samples.copy()
    generated[mask.t1 : mask.t2 + 1] = stretched.samples
    return stitch_crossfade(original, Waveform(generated, original.sample_rate), mask, fade=fade)
