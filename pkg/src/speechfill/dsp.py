"""Waveform I/O, resampling, mel analysis, Griffin-Lim decoding, and noise mixing.

All signal processing in this package runs on mono float64 waveforms. WAV files
are restricted to 16-bit PCM mono; everything else is rejected up front so that
downstream code never has to guess about scaling.
"""

from __future__ import annotations

import math
import warnings
import wave
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

DEFAULT_SAMPLE_RATE = 16000

INT16_SCALE = 32768.0


class AudioFormatError(Exception):
    """File is not a WAV variant this library reads."""


class NonMonoError(AudioFormatError):
    """WAV file has more than one channel."""


class UnsupportedSampleFormatError(AudioFormatError):
    """WAV file uses a bit depth or codec other than 16-bit PCM."""


@dataclass(frozen=True)
class Waveform:
    """Mono signal: float64 samples plus their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class MelConfig:
    """Mel analysis parameters.

    Defaults give 80 log-mel bands from 46 ms windows every 20 ms, a 1024-point
    FFT (next power of two above the window at 16 kHz), a Slaney-style
    filterbank spanning 0 Hz to Nyquist, and a log floor of 1e-10.
    """

    n_mels: int = 80
    window_len: float = 0.046
    hop_len: float = 0.020
    fft_size: int = 1024
    fmin: float = 0.0
    fmax: float | None = None
    log_floor: float = 1e-10

    def win_samples(self, sample_rate: int) -> int:
        return int(round(self.window_len * sample_rate))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(self.hop_len * sample_rate))

    def band_limit(self, sample_rate: int) -> float:
        return self.fmax if self.fmax is not None else sample_rate / 2.0

    def validate(self, sample_rate: int) -> None:
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if self.fft_size < self.win_samples(sample_rate):
            raise ValueError("fft_size must cover the analysis window")
        fmax = self.band_limit(sample_rate)
        if not (0 <= self.fmin < fmax <= sample_rate / 2.0):
            raise ValueError("need 0 <= fmin < fmax <= Nyquist")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


@dataclass
class EmbeddingSequence:
    """Frame-rate feature matrix with the geometry that produced it.

    ``frames`` is (n_frames, dim); ``hop_samples``/``win_samples`` record the
    analysis step and span so sample<->frame mapping stays possible downstream.
    """

    frames: np.ndarray
    hop_samples: int
    win_samples: int
    sample_rate: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ValueError("frames must be a 2-D matrix")
        if frames.size and not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        if frames.shape[0] > 0 and frames.shape[1] < 1:
            raise ValueError("frame dimension must be >= 1")
        if self.hop_samples < 1 or self.win_samples < self.hop_samples:
            raise ValueError("need win_samples >= hop_samples >= 1")
        self.frames = frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def read_wav(path) -> Waveform:
    """Read a 16-bit PCM mono WAV file into a [-1, 1] waveform.

    Raises FileNotFoundError for a missing file, NonMonoError for multichannel
    input, and UnsupportedSampleFormatError for any non-16-bit-PCM encoding.
    """
    try:
        reader = wave.open(str(path), "rb")
    except wave.Error as exc:
        raise AudioFormatError(f"not a readable WAV file: {path}") from exc
    with reader:
        if reader.getnchannels() != 1:
            raise NonMonoError(f"expected mono, got {reader.getnchannels()} channels: {path}")
        if reader.getcomptype() != "NONE":
            raise UnsupportedSampleFormatError(f"compressed WAV not supported: {path}")
        if reader.getsampwidth() != 2:
            raise UnsupportedSampleFormatError(
                f"expected 16-bit samples, got {8 * reader.getsampwidth()}-bit: {path}"
            )
        raw = reader.readframes(reader.getnframes())
        rate = reader.getframerate()
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / INT16_SCALE
    return Waveform(samples, rate)


def write_wav(w: Waveform, path) -> None:
    """Write a waveform as 16-bit PCM mono, clamping out-of-range samples."""
    out_of_range = int(np.count_nonzero(np.abs(w.samples) > 1.0))
    if out_of_range:
        warnings.warn(f"write_wav clamped {out_of_range} samples outside [-1, 1]")
    quantized = np.clip(np.rint(w.samples * INT16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(w.sample_rate)
        writer.writeframes(quantized.tobytes())


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Polyphase windowed-sinc resampling; identity when rates already match.

    Output length is round(len * target / source); the polyphase result is
    trimmed (or zero-padded, off-by-one cases only) to match.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.sample_rate:
        return w
    g = math.gcd(int(target_rate), w.sample_rate)
    out = sps.resample_poly(w.samples, target_rate // g, w.sample_rate // g)
    n_target = int(round(len(w) * target_rate / w.sample_rate))
    if len(out) < n_target:
        out = np.pad(out, (0, n_target - len(out)))
    return Waveform(out[:n_target], target_rate)


def hann_periodic(n: int) -> np.ndarray:
    return sps.get_window("hann", n, fftbins=True)


def frame_signal(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    """View of all length-``win`` frames fully inside ``x``, stepped by ``hop``."""
    if len(x) < win:
        raise ValueError("signal shorter than one frame")
    return np.lib.stride_tricks.sliding_window_view(x, win)[::hop]


def num_frames(total_samples: int, win: int, hop: int) -> int:
    if total_samples < win:
        raise ValueError("signal shorter than one frame")
    return (total_samples - win) // hop + 1


def _hz_to_mel(hz):
    # Slaney scale: linear below 1 kHz, logarithmic above.
    hz = np.asarray(hz, dtype=np.float64)
    f_sp = 200.0 / 3.0
    logstep = np.log(6.4) / 27.0
    mel = hz / f_sp
    return np.where(hz >= 1000.0, 15.0 + np.log(np.maximum(hz, 1000.0) / 1000.0) / logstep, mel)


def _mel_to_hz(mel):
    mel = np.asarray(mel, dtype=np.float64)
    f_sp = 200.0 / 3.0
    logstep = np.log(6.4) / 27.0
    hz = mel * f_sp
    return np.where(mel >= 15.0, 1000.0 * np.exp(logstep * (mel - 15.0)), hz)


def mel_filterbank(sample_rate: int, fft_size: int, n_mels: int, fmin: float, fmax: float) -> np.ndarray:
    """Slaney-normalized triangular filterbank, shape (n_mels, fft_size // 2 + 1)."""
    n_bins = fft_size // 2 + 1
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    mel_pts = np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    lower, center, upper = hz_pts[:-2], hz_pts[1:-1], hz_pts[2:]
    up = (fft_freqs[None, :] - lower[:, None]) / (center - lower)[:, None]
    down = (upper[:, None] - fft_freqs[None, :]) / (upper - center)[:, None]
    fb = np.maximum(0.0, np.minimum(up, down))
    fb *= (2.0 / (upper - lower))[:, None]
    return fb


def mel_band_centers(sample_rate: int, n_mels: int, fmin: float, fmax: float) -> np.ndarray:
    """Center frequencies (Hz) of the filterbank triangles."""
    mel_pts = np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2)
    return _mel_to_hz(mel_pts)[1:-1]


def mel_spectrogram(w: Waveform, cfg: MelConfig = MelConfig()) -> EmbeddingSequence:
    """Log-mel analysis: Hann-windowed power spectra folded onto mel bands.

    Frames start at 0 and step by the hop; only windows fully inside the
    signal are analyzed, so n_frames = (T - win) // hop + 1. Values are
    log(max(energy, log_floor)), hence always finite and >= log(log_floor).
    """
    cfg.validate(w.sample_rate)
    win = cfg.win_samples(w.sample_rate)
    hop = cfg.hop_samples(w.sample_rate)
    if len(w) < win:
        raise ValueError(f"waveform ({len(w)} samples) shorter than one window ({win})")
    frames = frame_signal(w.samples, win, hop) * hann_periodic(win)
    power = np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1)) ** 2
    fb = mel_filterbank(w.sample_rate, cfg.fft_size, cfg.n_mels, cfg.fmin, cfg.band_limit(w.sample_rate))
    logmel = np.log(np.maximum(power @ fb.T, cfg.log_floor))
    return EmbeddingSequence(logmel, hop, win, w.sample_rate)


def _stft(x: np.ndarray, win: int, hop: int, fft_size: int, window: np.ndarray) -> np.ndarray:
    return np.fft.rfft(frame_signal(x, win, hop) * window, n=fft_size, axis=1)


def _istft(spec: np.ndarray, win: int, hop: int, window: np.ndarray) -> np.ndarray:
    # Weighted overlap-add with the analysis window as synthesis window.
    frames = np.fft.irfft(spec, axis=1)[:, :win]
    n_frames = spec.shape[0]
    out_len = (n_frames - 1) * hop + win
    out = np.zeros(out_len)
    norm = np.zeros(out_len)
    wsq = window**2
    for l in range(n_frames):
        s = l * hop
        out[s : s + win] += frames[l] * window
        norm[s : s + win] += wsq
    # Samples under negligible window mass (a handful at each edge) are not
    # recoverable; dividing by their tiny norm would amplify noise instead.
    floor = norm.max() * 1e-2
    return np.where(norm >= floor, out / np.maximum(norm, floor), 0.0)


def _mel_pseudo_inverse(fb: np.ndarray, mel_power: np.ndarray, iters: int = 150) -> np.ndarray:
    """Nonnegative least-squares inversion of the filterbank, batched over frames.

    Multiplicative updates on s >= 0 minimizing ||s @ fb.T - mel_power|| row-wise.
    """
    proj = mel_power @ fb  # (L, n_bins), nonnegative
    s = np.maximum(proj, 1e-12)
    for _ in range(iters):
        denom = (s @ fb.T) @ fb + 1e-12
        s *= proj / denom
    return s


def griffin_lim(mel: EmbeddingSequence, cfg: MelConfig = MelConfig(), iters: int = 60) -> Waveform:
    """Reconstruct a waveform from a log-mel sequence by iterative phase estimation.

    The mel spectrum is lifted back to a linear-frequency magnitude spectrogram
    with a nonnegative pseudo-inverse of the filterbank, then phase is refined
    for ``iters`` rounds. Output length is (n_frames - 1) * hop + win.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if mel.dim != cfg.n_mels:
        raise ValueError(f"mel dim {mel.dim} does not match config n_mels {cfg.n_mels}")
    sample_rate = mel.sample_rate
    win, hop = mel.win_samples, mel.hop_samples
    if cfg.fft_size < win:
        raise ValueError("fft_size must cover the frame span")
    fb = mel_filterbank(sample_rate, cfg.fft_size, cfg.n_mels, cfg.fmin, cfg.band_limit(sample_rate))
    magnitude = np.sqrt(_mel_pseudo_inverse(fb, np.exp(mel.frames)))
    window = hann_periodic(win)
    spec = magnitude.astype(complex)  # zero initial phase, deterministic
    x = _istft(spec, win, hop, window)
    for _ in range(iters):
        rebuilt = _stft(x, win, hop, cfg.fft_size, window)
        phase = rebuilt / np.maximum(np.abs(rebuilt), 1e-12)
        x = _istft(magnitude * phase, win, hop, window)
    return Waveform(x, sample_rate)


def white_noise(n: int, sample_rate: int, seed: int) -> Waveform:
    """Seed-deterministic Gaussian noise (unit variance)."""
    rng = np.random.default_rng(seed)
    return Waveform(rng.standard_normal(n), sample_rate)


def mix_noise_at_snr(clean: Waveform, noise: Waveform, snr_db: float, seed: int = 0) -> Waveform:
    """Add noise scaled so the clean-to-noise power ratio equals ``snr_db``.

    Powers are full-signal mean squares. Noise shorter than the clean signal is
    tiled; the crop offset is drawn deterministically from ``seed``. An
    infinite ``snr_db`` is the no-noise sentinel and returns ``clean`` as is.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return clean
    if noise.sample_rate != clean.sample_rate:
        raise ValueError("sample-rate mismatch between clean and noise")
    if len(noise) == 0:
        raise ValueError("empty noise signal")
    p_clean = float(np.mean(clean.samples**2))
    if p_clean == 0.0:
        raise ValueError("silent clean signal: SNR undefined")
    n = len(clean)
    rng = np.random.default_rng(seed)
    src = noise.samples
    if len(src) >= n:
        offset = int(rng.integers(0, len(src) - n + 1))
        crop = src[offset : offset + n]
    else:
        reps = -(-(n + len(src)) // len(src))
        tiled = np.tile(src, reps)
        offset = int(rng.integers(0, len(src)))
        crop = tiled[offset : offset + n]
    p_noise = float(np.mean(crop**2))
    if p_noise == 0.0:
        raise ValueError("silent noise signal")
    gain = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    return Waveform(clean.samples + gain * crop, clean.sample_rate)
