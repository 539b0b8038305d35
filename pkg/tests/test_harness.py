import json
import math
import os
from dataclasses import replace

import numpy as np
import pytest

from normpack.cli import pack_main, verify_main, vol_main
from normpack.harness import (
    OUTPUT_DIR_ENV,
    ExperimentConfig,
    PipelineStageError,
    asymptotic_codegree_coeff,
    asymptotic_ik_delta,
    child_rng,
    child_seed,
    default_config,
    run_pipeline,
    sweep,
    verify_suite,
    write_sweep_csv,
)


class TestChildSeed:
    def test_stable(self):
        assert child_seed(1, "poisson") == child_seed(1, "poisson")

    def test_label_separates(self):
        assert child_seed(1, "poisson") != child_seed(1, "prune")

    def test_master_separates(self):
        assert child_seed(1, "poisson") != child_seed(2, "poisson")

    def test_rng_streams_independent(self):
        a = child_rng(1, "a").uniform(size=5)
        b = child_rng(1, "b").uniform(size=5)
        assert not np.allclose(a, b)


class TestConfig:
    def test_round_trip_identity(self):
        cfg = default_config(2, seed=9)
        text = cfg.to_json()
        again = ExperimentConfig.from_json(text)
        assert again == cfg
        assert again.to_json() == text

    def test_hash_ignores_workers_and_out_dir(self):
        cfg = default_config(2)
        assert replace(cfg, workers=8, out_dir="/tmp/x").hash() == cfg.hash()

    def test_hash_sensitive_to_science_fields(self):
        cfg = default_config(2)
        assert replace(cfg, Delta=31.0).hash() != cfg.hash()
        assert replace(cfg, seed=2).hash() != cfg.hash()

    def test_validation(self):
        cfg = default_config(2)
        with pytest.raises(ValueError):
            replace(cfg, Delta=-1.0)
        with pytest.raises(ValueError):
            replace(cfg, ik_delta=0.0)
        with pytest.raises(ValueError, match="seed"):
            replace(cfg, seed=1.5)

    def test_default_config_unknown_d(self):
        with pytest.raises(ValueError):
            default_config(7)

    def test_asymptotic_thresholds(self):
        assert asymptotic_ik_delta(2) == pytest.approx(2.0**-10)
        assert asymptotic_ik_delta(100) == 1e-6
        assert asymptotic_codegree_coeff(2) == pytest.approx(2.0**-9)
        assert asymptotic_codegree_coeff(100) == 1e-3


class TestRunPipeline:
    def test_smoke_d2(self):
        rec = run_pipeline(default_config(2, seed=3))
        assert rec.n_points > 0
        assert rec.packing["count"] > 0
        assert rec.packing["density"] > rec.packing["trivial_bound"]
        assert rec.prune_report["retained"] <= rec.prune_report["n_initial"]
        assert rec.preconditions == {
            "d_gt_10": False,
            "Delta_gt_d12": False,
            "Delta_le_Delta_K": True,
        }

    def test_deterministic_records(self):
        a = run_pipeline(default_config(3, seed=4))
        b = run_pipeline(default_config(3, seed=4))
        assert a.to_json() == b.to_json()

    def test_timing_excluded_from_json(self):
        rec = run_pipeline(default_config(2, seed=5))
        assert rec.timing  # populated
        assert "timing" not in json.loads(rec.to_json())

    def test_small_L_fails_before_sampling(self):
        cfg = replace(default_config(2), L=1.0)
        with pytest.raises(PipelineStageError) as exc:
            run_pipeline(cfg)
        assert exc.value.stage == "validate"

    def test_body_dimension_mismatch(self):
        cfg = replace(default_config(2), body={"kind": "lp", "d": 3, "p": 2, "scale": 1.0})
        with pytest.raises(PipelineStageError) as exc:
            run_pipeline(cfg)
        assert exc.value.stage == "normalize"

    def test_persists_record(self, tmp_path):
        cfg = replace(default_config(2, seed=6), out_dir=str(tmp_path))
        rec = run_pipeline(cfg)
        path = tmp_path / f"run_{cfg.hash()[:12]}.jsonl"
        assert path.exists()
        assert path.read_text().strip() == rec.to_json()

    def test_output_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        cfg = default_config(2, seed=7)
        run_pipeline(cfg)
        assert (tmp_path / f"run_{cfg.hash()[:12]}.jsonl").exists()


class TestSweep:
    def test_single_point_matches_run(self):
        template = default_config(2, seed=8)
        rows = sweep(template, deltas=[20.0])
        assert len(rows) == 1 and rows[0]["status"] == "ok"
        cfg = replace(
            template, Delta=20.0, seed=child_seed(template.seed, "sweep:0") % 2**31
        )
        rec = run_pipeline(cfg)
        assert rows[0]["density"] == rec.packing["density"]
        assert rows[0]["independent_set"] == rec.packing["count"]

    def test_axis_exclusive(self):
        template = default_config(2)
        with pytest.raises(ValueError):
            sweep(template, deltas=[20.0], ds=[2])
        with pytest.raises(ValueError):
            sweep(template)

    def test_error_rows_flagged(self):
        template = replace(default_config(2), L=20.0)
        rows = sweep(template, deltas=[20.0, 1e9])  # second exceeds point cap
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"].startswith("error:")
        assert rows[1]["density"] is None

    def test_worker_count_invariant(self):
        template = default_config(2, seed=10)
        rows1 = sweep(template, deltas=[15.0, 25.0], workers=1)
        rows8 = sweep(template, deltas=[15.0, 25.0], workers=8)
        assert rows1 == rows8

    def test_dimension_axis(self):
        rows = sweep(default_config(2, seed=11), ds=[2, 3])
        assert [r["d"] for r in rows] == [2, 3]
        assert all(r["status"] == "ok" for r in rows)

    def test_csv(self, tmp_path):
        rows = sweep(default_config(2, seed=12), deltas=[20.0])
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, path)
        header = path.read_text().splitlines()[0]
        assert header == "d,Delta,n_pre,n_post,independent_set,density,trivial_bound,log_delta_over_delta,status"


class TestVerifySuite:
    def test_fast_all_conclusive_no_violations(self):
        reports = verify_suite("fast", seed=1)
        assert len(reports) > 0
        assert all(r.violations == 0 for r in reports)
        assert all(r.conclusive for r in reports)

    def test_selector(self):
        reports = verify_suite("fast", seed=1, which="poisson")
        assert len(reports) == 1
        assert reports[0].check == "poisson_tail"

    def test_bad_level(self):
        with pytest.raises(ValueError):
            verify_suite("medium")


class TestCli:
    def _write_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(default_config(2, seed=13).to_json())
        return str(path)

    def _write_body(self, tmp_path):
        path = tmp_path / "body.json"
        path.write_text(json.dumps({"kind": "lp", "d": 2, "p": 2, "scale": 1.0}))
        return str(path)

    def test_pack_run(self, tmp_path, capsys):
        rc = pack_main(["run", self._write_config(tmp_path)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["packing"]["count"] > 0

    def test_pack_sweep(self, tmp_path, capsys):
        rc = pack_main(
            ["sweep", self._write_config(tmp_path), "--grid", "Delta=15,25", "--out", str(tmp_path)]
        )
        assert rc == 0
        assert (tmp_path / "sweep.csv").exists()
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2

    def test_vol_body_info(self, tmp_path, capsys):
        rc = vol_main(["body-info", self._write_body(tmp_path)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["volume"] == pytest.approx(math.pi)
        assert out["unit_volume_scale"] == pytest.approx(math.pi**-0.5)

    def test_vol_intersection(self, tmp_path, capsys):
        rc = vol_main(["intersection", self._write_body(tmp_path), "--x", "0,0", "--samples", "10000"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["value"] == pytest.approx(math.pi, rel=0.05)

    def test_verify_poisson(self, tmp_path, capsys):
        out_path = tmp_path / "reports.jsonl"
        rc = verify_main(["poisson", "--level", "fast", "--out", str(out_path)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "poisson_tail" in text
        assert "total violations: 0" in text
        assert out_path.exists()

    def test_bad_grid_axis(self, tmp_path):
        with pytest.raises(SystemExit):
            pack_main(["sweep", self._write_config(tmp_path), "--grid", "gamma=1,2"])
