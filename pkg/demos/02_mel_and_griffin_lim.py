"""Mel analysis and neural-free resynthesis.

The 80-band log-mel front end (46 ms windows, 20 ms hop) is the feature space
of the linear-interpolation baseline and of the quantized reconstruction
fixtures. Griffin-Lim phase estimation turns a mel sequence back into audio
without any trained vocoder.
"""

from pathlib import Path

import numpy as np

from speechfill import MelConfig, griffin_lim, mel_spectrogram, write_wav
from speechfill.synth import vowel_utterance

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

cfg = MelConfig()
w = vowel_utterance(duration=1.2, seed=7)
mel = mel_spectrogram(w, cfg)
print(f"mel: {mel.n_frames} frames x {mel.dim} bands (win {mel.win_samples}, hop {mel.hop_samples})")
print(f"value range: [{mel.frames.min():.1f}, {mel.frames.max():.1f}] (floor = log(1e-10) = -23.0)")

for iters in (1, 60):
    rebuilt = griffin_lim(mel, cfg, iters=iters)
    err = np.abs(mel_spectrogram(rebuilt, cfg).frames - mel.frames).mean()
    print(f"griffin-lim {iters:>2} iterations: mel reconstruction L1 error {err:.3f}")

write_wav(griffin_lim(mel, cfg, iters=60), out_dir / "vowel_resynth.wav")
write_wav(w, out_dir / "vowel_original.wav")
print(f"wrote {out_dir}/vowel_original.wav and vowel_resynth.wav")
