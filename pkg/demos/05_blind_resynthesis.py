"""Blind gap filling: the mask position is unknown.

Without the mask location there is nothing to stitch around: the whole signal
is re-generated from its (corrupted) embedding sequence. The output is the
decoder's natural length and contains no verbatim input samples, so even an
uncorrupted signal comes back slightly different.
"""

from pathlib import Path

import numpy as np

from speechfill import InpaintDeps, MaskSpec, apply_corruption, mel_spectrogram, run_blind, train_kmeans, write_wav
from speechfill.metrics import stoi
from speechfill.synth import vowel_utterance

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

corpus = [vowel_utterance(1.6, seed=s) for s in range(20, 26)]
codebook = train_kmeans([mel_spectrogram(w) for w in corpus], k=48, seed=0)
deps = InpaintDeps(codebook=codebook)

w = corpus[0]
mel = mel_spectrogram(w)
expected_len = (mel.n_frames - 1) * mel.hop_samples + mel.win_samples

def pad(x, n):
    return np.pad(x[:n], (0, max(0, n - len(x))))

for label, signal in (("no gap", w), ("200 ms gap", apply_corruption(w, MaskSpec(9600, 12799)))):
    out = run_blind(signal, "pt", deps).waveform
    assert len(out) == expected_len
    from speechfill import Waveform

    score = stoi(w, Waveform(pad(out.samples, len(w)), w.sample_rate)).value
    print(f"blind resynthesis ({label}): length {len(out)}, STOI vs original {score:.3f}")
    write_wav(out, out_dir / f"blind_{label.split()[0]}.wav")

print(f"decoder natural length = (frames-1)*hop + win = {expected_len} (input had {len(w)})")
