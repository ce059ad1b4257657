import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from speechfill.dsp import write_wav
from speechfill.formats import ManifestEntry, save_manifest
from speechfill.harness import (
    NoiseSpec,
    RunConfig,
    aggregate,
    draw_mask_onset,
    gen_masks,
    run_eval,
)
from speechfill.synth import vowel_utterance


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    entries = []
    for i in range(4):
        w = vowel_utterance(1.4, seed=100 + i)
        path = root / f"utt{i:02d}.wav"
        write_wav(w, path)
        entries.append(ManifestEntry(f"utt{i:02d}", str(path), transcript="test utterance"))
    manifest = root / "manifest.jsonl"
    save_manifest(entries, manifest)
    return root, entries


class TestGenMasks:
    def test_deterministic(self, corpus):
        _, entries = corpus
        a, _ = gen_masks(entries, 200, seed=5)
        b, _ = gen_masks(entries, 200, seed=5)
        assert a == b
        c, _ = gen_masks(entries, 200, seed=6)
        assert a != c

    def test_width_rule(self, corpus):
        _, entries = corpus
        masks, skipped = gen_masks(entries, 200, seed=1)
        assert not skipped
        for mask in masks.values():
            assert mask.t2 - mask.t1 + 1 == 3200

    def test_margins_respected(self, corpus):
        _, entries = corpus
        masks, _ = gen_masks(entries, 100, seed=2, edge_margin_ms=100)
        for mask in masks.values():
            assert mask.t1 >= 1600
            assert mask.t2 <= int(1.4 * 16000) - 1600

    def test_too_short_skipped(self, corpus, tmp_path):
        root, entries = corpus
        short = vowel_utterance(0.3, seed=9)
        short_path = tmp_path / "short.wav"
        write_wav(short, short_path)
        all_entries = entries + [ManifestEntry("short", str(short_path))]
        masks, skipped = gen_masks(all_entries, 200, seed=1)
        assert len(masks) == len(entries)
        assert skipped and skipped[0]["utt"] == "short"

    def test_onsets_uniform(self):
        lo, hi = 0, 99
        draws = [draw_mask_onset(0, f"utt{i}", lo, hi) for i in range(10_000)]
        counts = np.bincount(draws, minlength=100)
        chi2 = ((counts - 100.0) ** 2 / 100.0).sum()
        p = stats.chi2.sf(chi2, df=99)
        assert p > 0.01


class TestAggregate:
    def test_matches_recomputation(self, rng):
        rows = [
            {
                "utt": f"u{i}",
                "metric": "stoi",
                "method": "li",
                "mode": "informed",
                "mask_ms": 200,
                "value": float(v),
            }
            for i, v in enumerate(rng.uniform(0.2, 0.9, 12))
        ]
        aggs = aggregate(rows)
        assert len(aggs) == 1
        values = np.array([r["value"] for r in rows])
        assert aggs[0]["n"] == 12
        assert aggs[0]["mean"] == pytest.approx(values.mean())
        assert aggs[0]["ci_normal"] == pytest.approx(1.96 * values.std(ddof=1) / np.sqrt(12))
        p = values.mean()
        assert aggs[0]["ci_binomial"] == pytest.approx(1.96 * np.sqrt(p * (1 - p) / 12))

    def test_single_value_no_ci(self):
        rows = [
            {"utt": "u", "metric": "snr", "method": "li", "mode": "informed", "mask_ms": 100, "value": 3.0}
        ]
        agg = aggregate(rows)[0]
        assert agg["ci_normal"] == 0.0
        assert agg["ci_binomial"] is None  # snr is unbounded


class TestRunEval:
    def _config(self, **kw):
        defaults = dict(method="li", mode="informed", mask_ms=200, seed=3, griffin_lim_iters=4)
        defaults.update(kw)
        return RunConfig(**defaults)

    def test_empty_manifest(self, tmp_path):
        result = run_eval([], self._config(), tmp_path / "out")
        assert result.rows == [] and not result.partial_failure
        assert (tmp_path / "out" / "summary.csv").exists()
        assert (tmp_path / "out" / "config.frozen.json").exists()

    def test_li_run_produces_scores(self, corpus, tmp_path):
        _, entries = corpus
        result = run_eval(entries, self._config(), tmp_path / "out")
        assert not result.failures
        assert len(result.rows) == len(entries)
        for row in result.rows:
            assert row["metric"] == "stoi"
            assert 0.0 <= row["value"] <= 1.0
        scores = [json.loads(l) for l in (tmp_path / "out" / "scores.jsonl").read_text().splitlines()]
        assert scores == result.rows

    def test_rerun_byte_identical_across_workers(self, corpus, tmp_path):
        _, entries = corpus
        run_eval(entries, self._config(workers=1), tmp_path / "a")
        run_eval(entries, self._config(workers=3), tmp_path / "b")
        for name in ("summary.csv", "scores.jsonl", "masks.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_partial_failure_continues(self, corpus, tmp_path):
        _, entries = corpus
        broken = entries + [ManifestEntry("missing", str(tmp_path / "nope.wav"))]
        result = run_eval(broken, self._config(), tmp_path / "out")
        assert result.partial_failure
        assert [f["utt"] for f in result.failures] == ["missing"]
        assert len(result.rows) == len(entries)  # the rest of the run completed

    def test_failure_inside_pipeline_is_isolated(self, corpus, tmp_path):
        _, entries = corpus
        config = self._config(method="pt")  # no codebook -> per-utterance failure
        result = run_eval(entries, config, tmp_path / "out")
        assert result.partial_failure
        assert len(result.failures) == len(entries)
        assert (tmp_path / "out" / "failures.jsonl").exists()

    def test_noise_condition(self, corpus, tmp_path):
        _, entries = corpus
        config = self._config(noise=NoiseSpec("white", 10.0), metrics=("stoi", "snr"))
        result = run_eval(entries, config, tmp_path / "out")
        assert not result.failures
        assert {r["metric"] for r in result.rows} == {"stoi", "snr"}

    def test_external_scores_merged(self, corpus, tmp_path):
        _, entries = corpus
        ext = tmp_path / "ext.jsonl"
        ext.write_text(
            json.dumps(
                {"utt": "utt00", "metric": "cer", "mask_ms": 200, "method": "li", "mode": "informed", "value": 0.25}
            )
            + "\n"
        )
        config = self._config(external_scores_path=str(ext))
        result = run_eval(entries, config, tmp_path / "out")
        metrics = {r["metric"] for r in result.rows}
        assert "cer" in metrics
        assert any(a["metric"] == "cer" for a in result.aggregates)

    def test_precomputed_outputs_scored(self, corpus, tmp_path):
        _, entries = corpus
        outputs = tmp_path / "outputs"
        outputs.mkdir()
        for entry in entries:  # perfect "reconstructions": copies of the originals
            (outputs / f"{entry.utt_id}.wav").write_bytes(Path(entry.wav_path).read_bytes())
        config = self._config(precomputed_outputs_dir=str(outputs))
        result = run_eval(entries, config, tmp_path / "out")
        assert not result.failures
        for row in result.rows:
            assert row["value"] == pytest.approx(1.0, abs=1e-6)

    def test_config_round_trip(self):
        config = self._config(noise=NoiseSpec("white", 0.0), workers=2)
        back = RunConfig.from_json(config.to_json())
        assert back == config
