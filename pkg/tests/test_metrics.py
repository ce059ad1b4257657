import itertools
import math
from pathlib import Path

import numpy as np
import pytest

from oracles.brute_force import edit_distance_recursive
from speechfill.dsp import Waveform, mix_noise_at_snr, white_noise
from speechfill.inpaint import MaskSpec
from speechfill.metrics import Score, cer, eval_window, normalize_text, snr_measure, stoi
from speechfill.synth import vowel_utterance

FIXTURE = Path(__file__).parent / "data" / "stoi_fixture.npz"


class TestEvalWindow:
    def test_centered(self):
        win = eval_window(MaskSpec(15840, 16160), 32000, 16000)
        assert (win.start, win.end) == (8000, 24000)

    def test_shifted_not_shrunk(self):
        win = eval_window(MaskSpec(4700, 4900), 32000, 16000)
        assert (win.start, win.end) == (0, 16000)
        win = eval_window(MaskSpec(30000, 31000), 32000, 16000)
        assert (win.start, win.end) == (16000, 32000)

    def test_short_signal_whole(self):
        win = eval_window(MaskSpec(1000, 2000), 8000, 16000)
        assert (win.start, win.end) == (0, 8000)

    def test_always_one_second_when_possible(self, rng):
        for _ in range(50):
            total = int(rng.integers(16000, 64000))
            t1 = int(rng.integers(0, total - 1))
            t2 = int(rng.integers(t1, total - 1))
            win = eval_window(MaskSpec(t1, t2), total, 16000)
            assert win.end - win.start == 16000
            assert 0 <= win.start and win.end <= total


class TestStoi:
    def test_self_score_one(self):
        x = vowel_utterance(1.2, seed=3)
        assert abs(stoi(x, x).value - 1.0) <= 1e-6

    def test_noise_lowers_score(self):
        clean = vowel_utterance(1.2, seed=3)
        noisy = mix_noise_at_snr(clean, white_noise(len(clean), 16000, seed=1), 0.0, seed=2)
        assert stoi(clean, noisy).value < stoi(clean, clean).value

    def test_monotone_in_snr(self):
        clean = vowel_utterance(1.3, seed=8)
        noise = white_noise(len(clean), 16000, seed=4)
        scores = {
            snr: stoi(clean, mix_noise_at_snr(clean, noise, snr, seed=6)).value
            for snr in (20.0, 10.0, 0.0)
        }
        assert scores[20.0] > scores[10.0] > scores[0.0]

    def test_reference_fixture(self):
        data = np.load(FIXTURE)
        names = sorted({key.rsplit("__", 1)[0] for key in data.files})
        assert len(names) == 3
        for name in names:
            clean = Waveform(data[f"{name}__clean"].astype(np.float64), int(data[f"{name}__rate"]))
            degraded = Waveform(data[f"{name}__degraded"].astype(np.float64), int(data[f"{name}__rate"]))
            expected = float(data[f"{name}__expected"])
            assert stoi(clean, degraded).value == pytest.approx(expected, abs=1e-3), name

    def test_length_mismatch(self):
        a = vowel_utterance(1.0, seed=1)
        b = Waveform(a.samples[:-10], a.sample_rate)
        with pytest.raises(ValueError, match="length"):
            stoi(a, b)

    def test_rate_mismatch(self):
        a = vowel_utterance(1.0, seed=1)
        b = Waveform(a.samples, 22050)
        with pytest.raises(ValueError, match="rate"):
            stoi(a, b)

    def test_silent_clean_rejected(self):
        silent = Waveform(np.zeros(16000), 16000)
        other = vowel_utterance(1.0, seed=0)
        with pytest.raises(ValueError, match="silent"):
            stoi(silent, other)


class TestCer:
    def test_identity(self):
        assert cer("abc", "abc").value == 0.0

    def test_single_substitution(self):
        assert cer("abc", "axc").value == pytest.approx(1 / 3)

    def test_normalization(self):
        assert cer("Hello,  World!", "hello world").value == 0.0
        assert normalize_text("A  b,C! ") == "a bc"

    def test_exhaustive_short_pairs(self):
        alphabet = "abc"
        strings = [""] + [
            "".join(p) for n in (1, 2, 3) for p in itertools.product(alphabet, repeat=n)
        ]
        for ref in strings:
            if not ref:
                continue
            for hyp in strings:
                assert cer(ref, hyp).value == edit_distance_recursive(ref, hyp) / len(ref)

    def test_random_longer_pairs(self, rng):
        alphabet = "abc"
        for _ in range(120):
            m = int(rng.integers(1, 9))
            n = int(rng.integers(0, 9))
            ref = "".join(alphabet[i] for i in rng.integers(0, 3, m))
            hyp = "".join(alphabet[i] for i in rng.integers(0, 3, n))
            assert cer(ref, hyp).value == edit_distance_recursive(ref, hyp) / len(ref)

    def test_empty_reference(self):
        with pytest.raises(ValueError, match="empty reference"):
            cer("!!!", "abc")


class TestSnrMeasure:
    def test_identical_is_infinite(self):
        x = vowel_utterance(0.5, seed=2)
        assert snr_measure(x, x).value == math.inf

    def test_closes_loop_with_mixer(self):
        clean = vowel_utterance(1.0, seed=5)
        noisy = mix_noise_at_snr(clean, white_noise(len(clean), 16000, seed=3), 10.0, seed=4)
        assert snr_measure(clean, noisy).value == pytest.approx(10.0, abs=0.1)

    def test_scale_invariance(self):
        clean = vowel_utterance(0.8, seed=6)
        noisy = mix_noise_at_snr(clean, white_noise(len(clean), 16000, seed=8), 7.0, seed=9)
        doubled = snr_measure(
            Waveform(2 * clean.samples, 16000), Waveform(2 * noisy.samples, 16000)
        )
        assert doubled.value == pytest.approx(snr_measure(clean, noisy).value, abs=1e-9)

    def test_length_mismatch(self):
        x = vowel_utterance(0.5, seed=2)
        with pytest.raises(ValueError, match="length"):
            snr_measure(x, Waveform(x.samples[:-1], x.sample_rate))


class TestScoreValidation:
    def test_ranges(self):
        with pytest.raises(ValueError):
            Score("stoi", 1.5)
        with pytest.raises(ValueError):
            Score("cer", -0.1)
        with pytest.raises(ValueError):
            Score("stoi", math.nan)
        with pytest.raises(ValueError):
            Score("nope", 0.5)
        assert Score("snr", math.inf).value == math.inf
