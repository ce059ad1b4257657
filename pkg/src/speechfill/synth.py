"""Deterministic synthetic test signals.

No corpus ships with this package, so demos and evaluation smoke runs generate
their own audio: pure tones and vowel-like utterances (harmonic source shaped
by two gliding formant resonances).
"""

from __future__ import annotations

import numpy as np

from speechfill.dsp import DEFAULT_SAMPLE_RATE, Waveform


def tone(freq_hz: float, duration: float, sample_rate: int = DEFAULT_SAMPLE_RATE, amplitude: float = 0.5) -> Waveform:
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return Waveform(amplitude * np.sin(2 * np.pi * freq_hz * t), sample_rate)


def vowel_utterance(
    duration: float = 1.6,
    seed: int = 0,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    amplitude: float = 0.4,
) -> Waveform:
    """Vowel-like signal: harmonics of a fixed f0 under two gliding formants.

    The formant centers drift linearly across the utterance so that a gap is
    genuinely harder to fill the longer it is. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate

    f0 = float(rng.uniform(110.0, 220.0))
    f1 = np.linspace(rng.uniform(300.0, 500.0), rng.uniform(500.0, 900.0), n)
    f2 = np.linspace(rng.uniform(1000.0, 1400.0), rng.uniform(1600.0, 2400.0), n)
    bw1, bw2 = 130.0, 220.0

    x = np.zeros(n)
    max_harmonic = int(4000.0 // f0)
    for k in range(1, max_harmonic + 1):
        fk = k * f0
        gain = np.exp(-((fk - f1) ** 2) / (2 * bw1**2)) + 0.6 * np.exp(-((fk - f2) ** 2) / (2 * bw2**2))
        # 1/k source roll-off keeps the spectrum speech-shaped
        x += (gain / k) * np.sin(2 * np.pi * fk * t + rng.uniform(0, 2 * np.pi))

    # raised-cosine fade at both ends to avoid onset/offset clicks
    edge = int(0.02 * sample_rate)
    env = np.ones(n)
    ramp = 0.5 * (1 - np.cos(np.pi * np.arange(edge) / edge))
    env[:edge] = ramp
    env[-edge:] = ramp[::-1]
    x *= env

    peak = np.max(np.abs(x))
    if peak > 0:
        x *= amplitude / peak
    return Waveform(x, sample_rate)
