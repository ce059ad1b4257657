"""Mask geometry: sample intervals, frame intervals, and zero-fill corruption.

Every reconstruction starts from a corrupted interval [t1, t2] in samples. The
frame front ends (400/320 analysis, 736/320 mel) see that interval as a span of
frames; any frame whose window touches a corrupted sample counts as masked.
"""

import numpy as np

from speechfill import FrameGeometry, MaskSpec, apply_corruption
from speechfill.synth import vowel_utterance

w = vowel_utterance(duration=1.0, seed=1)
print(f"utterance: {len(w)} samples at {w.sample_rate} Hz")

geom = FrameGeometry(win_samples=400, hop_samples=320, sample_rate=16000)
print(f"frame geometry 400/320 -> {geom.n_frames(len(w))} frames over one second")

# a 200 ms gap starting at 200 ms
mask = MaskSpec(t1=3200, t2=6399)
l1, l2 = mask.frame_interval(geom, len(w))
print(f"mask [{mask.t1}, {mask.t2}] ({mask.width} samples) covers frames [{l1}, {l2}]")
for l in (l1, l2):
    start, end = geom.frame_span(l)
    print(f"  frame {l} spans samples [{start}, {end})")

corrupted = apply_corruption(w, mask)
gap = corrupted.samples[mask.t1 : mask.t2 + 1]
outside = np.delete(corrupted.samples, np.arange(mask.t1, mask.t2 + 1))
print(f"energy inside the gap: {np.sum(gap**2):.1f}  (zero-filled)")
print(f"samples outside the gap changed: {np.any(outside != np.delete(w.samples, np.arange(mask.t1, mask.t2 + 1)))}")
