"""Discrete units: k-means codebooks and the two quantization rules.

A codebook clusters frame embeddings; a signal then becomes a sequence of
centroid indices ("units"). Euclidean nearest-centroid is the rule for raw
embedding spaces; the cosine rule (projection + cosine argmax) mirrors a
softmax classification head whose temperature never changes the winner.
"""

from pathlib import Path

import numpy as np

from speechfill import (
    Codebook,
    lookup,
    mel_spectrogram,
    save_codebook,
    train_kmeans,
    vq_cosine,
    vq_nearest,
)
from speechfill.formats import write_units
from speechfill.synth import vowel_utterance

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

corpus = [mel_spectrogram(vowel_utterance(1.2, seed=s)) for s in range(6)]
codebook = train_kmeans(corpus, k=32, seed=0)
print(f"codebook: {codebook.size} centroids of dim {codebook.dim}")
save_codebook(codebook, out_dir / "mel32.sicb")

mel = corpus[0]
units = vq_nearest(mel, codebook)
print(f"units: {len(units)} indices, {len(np.unique(units.indices))} distinct")
print(f"first 20: {units.indices[:20].tolist()}")
write_units(units, out_dir / "utt0.units")

# quantize -> lookup -> quantize is a fixed point
again = vq_nearest(lookup(units, codebook), codebook)
print(f"re-quantizing the looked-up centroids reproduces the units: {np.array_equal(units.indices, again.indices)}")

# cosine rule with a random projection: scale of the input never matters
from speechfill import EmbeddingSequence

rng = np.random.default_rng(0)
cos_cb = Codebook(rng.normal(size=(32, 16)), kind="cosine", projection=rng.normal(size=(mel.dim, 16)))
a = vq_cosine(mel, cos_cb).indices
scaled = EmbeddingSequence(mel.frames * 50.0, mel.hop_samples, mel.win_samples, mel.sample_rate)
b = vq_cosine(scaled, cos_cb).indices
print(f"cosine units invariant to input scaling: {np.array_equal(a, b)}")
