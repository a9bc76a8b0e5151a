import csv
import io
import json
import subprocess
import sys

import pytest

from conftest import run_pipeline
from gazemetrics.bench import run_bench
from gazemetrics.cli import main as cli_main
from gazemetrics.compare import METRIC_COLUMNS, compare, compare_tables, read_metrics_table
from gazemetrics.gazelog import write_gaze_log
from gazemetrics.manifest import make_grid_manifest, save_manifest
from gazemetrics.replay import replay
from gazemetrics.server import start_server_thread
from gazemetrics.session import SessionConfig
from gazemetrics.simulate import ReadingProfile, simulate


@pytest.fixture(scope="module")
def manifest():
    return make_grid_manifest(10)


class TestSimulate:
    def test_clean_profile_reads_every_word_once(self, manifest):
        samples = simulate(manifest, ReadingProfile(seed=1))
        pipe = run_pipeline(samples, manifest)
        for w in manifest.words:
            m = pipe.state.word_metrics(w.word_index)
            assert m.f_count == 1, f"word {w.word_index}"
            assert m.fpr is False
        assert len(pipe.state.saccades) == len(manifest.words) - 1

    def test_forced_regression_sets_fpr(self, manifest):
        samples = simulate(manifest, ReadingProfile(seed=2, p_regress=1.0))
        pipe = run_pipeline(samples, manifest)
        m = pipe.state.word_metrics(3)
        assert m.fpr is True

    def test_sample_count_matches_rate_and_duration(self, manifest):
        profile = ReadingProfile(seed=3, fixation_mean_ms=200.0, fixation_sd_ms=0.0)
        samples = simulate(manifest, profile)
        # 200 ms at 300 Hz -> 60 samples per word
        assert len(samples) == 60 * len(manifest.words)

    def test_skip_leaves_zero_rows(self, manifest):
        samples = simulate(manifest, ReadingProfile(seed=4, p_skip=1.0))
        assert samples == []

    def test_deterministic_for_seed(self, manifest):
        p = ReadingProfile(seed=9, noise_px=3.0)
        assert simulate(manifest, p) == simulate(manifest, p)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["word_index", *columns])
        for i, row in enumerate(rows):
            w.writerow([i, *row])


class TestCompare:
    def test_identity(self, manifest, tmp_path):
        samples = simulate(manifest, ReadingProfile(seed=5, noise_px=2.0, p_regress=0.3))
        pipe = run_pipeline(samples, manifest)
        path = tmp_path / "m.csv"
        path.write_text(pipe.export_metrics_csv())
        report = compare(path, path)
        for name, m in report.metrics.items():
            if m.n == 0:
                continue
            assert m.mae == 0.0, name
            if m.rho is not None:
                assert m.rho == 1.0, name

    def test_hand_computed_pairs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, ["TFD"], [[1], [2], [3]])
        write_csv(b, ["TFD"], [[2], [4], [6]])
        m = compare(a, b).metrics["TFD"]
        assert m.rho == pytest.approx(1.0)
        assert m.mae == pytest.approx(2.0)

    def test_anticorrelated(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, ["TFD"], [[1], [2], [3]])
        write_csv(b, ["TFD"], [[3], [2], [1]])
        m = compare(a, b).metrics["TFD"]
        assert m.rho == pytest.approx(-1.0)
        assert m.mae == pytest.approx(4.0 / 3.0)

    def test_zero_variance_reports_na(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, ["TFD"], [[5], [5], [5]])
        write_csv(b, ["TFD"], [[1], [2], [3]])
        report = compare(a, b)
        assert report.metrics["TFD"].rho is None
        assert "n/a" in report.render()

    def test_symmetry(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, ["TFD", "FFD"], [[1, 10], [2, 30], [3, 20]])
        write_csv(b, ["TFD", "FFD"], [[2, 15], [4, 25], [5, 35]])
        ab = compare(a, b)
        ba = compare(b, a)
        for name in ("TFD", "FFD"):
            assert ab.metrics[name].rho == pytest.approx(ba.metrics[name].rho)
            assert ab.metrics[name].mae == pytest.approx(ba.metrics[name].mae)

    def test_pairwise_exclusion_of_blank_cells(self, tmp_path):
        a = tmp_path / "a.csv"
        a.write_text("word_index,FpD\n0,10\n1,\n2,30\n")
        b = tmp_path / "b.csv"
        b.write_text("word_index,FpD\n0,10\n1,99\n2,30\n")
        m = compare(a, b).metrics["FpD"]
        assert m.n == 2
        assert m.mae == 0.0

    def test_fpr_compared_numerically(self, manifest, tmp_path):
        samples = simulate(manifest, ReadingProfile(seed=6, p_regress=0.5))
        pipe = run_pipeline(samples, manifest)
        path = tmp_path / "m.csv"
        path.write_text(pipe.export_metrics_csv())
        table = read_metrics_table(path)
        fpr_values = {row["FpR"] for row in table.values() if "FpR" in row}
        assert fpr_values <= {0.0, 1.0}
        assert 1.0 in fpr_values


class TestReplayTiming:
    def test_speed_one_matches_log_duration(self, manifest, tmp_path):
        # 2 s of samples replayed at speed 1 should take ~2 s of wall time.
        profile = ReadingProfile(seed=7, fixation_mean_ms=150.0, fixation_sd_ms=0.0)
        samples = simulate(manifest, profile)
        log_span = (samples[-1].t_us - samples[0].t_us) / 1e6
        handle = start_server_thread(config=SessionConfig(), store_dir=tmp_path)
        try:
            result = replay(samples, manifest, handle.uri, speed=1.0, session="t")
        finally:
            handle.stop()
        assert result.wall_seconds == pytest.approx(log_span, rel=0.05)

    def test_speed_zero_metrics_equal_speed_one(self, manifest, tmp_path):
        samples = simulate(manifest, ReadingProfile(seed=8, noise_px=2.0))
        handle = start_server_thread(config=SessionConfig(), store_dir=tmp_path)
        try:
            replay(samples, manifest, handle.uri, speed=0, session="fast")
            replay(samples, manifest, handle.uri, speed=4.0, session="paced")
            hubs = handle.server.hubs
            deadline_csv_fast = hubs["fast"].pipeline.export_metrics_csv()
            deadline_csv_paced = hubs["paced"].pipeline.export_metrics_csv()
        finally:
            handle.stop()
        assert deadline_csv_fast == deadline_csv_paced
        assert (tmp_path / "fast.metrics.csv").read_text() == (
            tmp_path / "paced.metrics.csv"
        ).read_text()


class TestBench:
    def test_deterministic_event_counts(self, manifest):
        samples = simulate(manifest, ReadingProfile(seed=10, noise_px=2.0))
        config = SessionConfig()
        r1 = run_bench(samples, manifest, config, budget_us=1e9)
        r2 = run_bench(samples, manifest, config, budget_us=1e9)
        assert (r1.fixations, r1.saccades) == (r2.fixations, r2.saccades)
        assert r1.n == len(samples)

    def test_budget_verdict(self, manifest):
        samples = simulate(manifest, ReadingProfile(seed=10))
        generous = run_bench(samples, manifest, budget_us=1e9)
        assert generous.passed
        impossible = run_bench(samples, manifest, budget_us=1e-3)
        assert not impossible.passed


class TestCli:
    def run(self, *argv):
        return cli_main(list(argv))

    def test_simulate_oracle_compare_pipeline(self, tmp_path):
        log = tmp_path / "log.csv"
        man = tmp_path / "man.json"
        a = tmp_path / "a.csv"
        assert self.run(
            "simulate", "--words", "12", "--out", str(log), "--manifest-out", str(man), "--seed", "3"
        ) == 0
        assert self.run("oracle", "--log", str(log), "--manifest", str(man), "--out", str(a)) == 0
        assert self.run("compare", str(a), str(a)) == 0
        assert self.run("compare", str(a), str(a), "--json") == 0

    def test_bench_budget_exit_codes(self, tmp_path):
        log = tmp_path / "log.csv"
        man = tmp_path / "man.json"
        self.run("simulate", "--words", "10", "--out", str(log), "--manifest-out", str(man))
        ok = self.run(
            "bench", "--log", str(log), "--manifest", str(man), "--budget-us", "1000000"
        )
        assert ok == 0
        fail = self.run(
            "bench", "--log", str(log), "--manifest", str(man), "--budget-us", "0.000001"
        )
        assert fail == 1

    def test_missing_file_is_input_error(self, tmp_path):
        code = self.run("oracle", "--log", str(tmp_path / "nope.csv"), "--manifest", str(tmp_path / "m.json"))
        assert code == 2

    def test_export_round_trip(self, manifest, tmp_path):
        samples = simulate(manifest, ReadingProfile(seed=11, noise_px=1.0))
        pipe = run_pipeline(samples, manifest, store_dir=tmp_path, session_id="cli1")
        out = tmp_path / "re.csv"
        assert self.run("export", "--store", str(tmp_path), "--session", "cli1", "--out", str(out)) == 0
        assert out.read_text() == pipe.export_metrics_csv()

    def test_oracle_on_session_matches_engine(self, manifest, tmp_path):
        samples = simulate(manifest, ReadingProfile(seed=12, noise_px=2.0, p_regress=0.4))
        pipe = run_pipeline(samples, manifest, store_dir=tmp_path, session_id="cli2")
        out = tmp_path / "oracle.csv"
        assert self.run("oracle", "--store", str(tmp_path), "--session", "cli2", "--out", str(out)) == 0
        assert out.read_text() == pipe.export_metrics_csv()

    def test_oracle_session_config_mismatch_refused(self, manifest, tmp_path):
        samples = simulate(manifest, ReadingProfile(seed=13))
        run_pipeline(samples, manifest, store_dir=tmp_path, session_id="cli3")
        code = self.run(
            "oracle", "--store", str(tmp_path), "--session", "cli3", "--threshold", "45"
        )
        assert code == 2

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "gazemetrics.cli", "compare", "--help"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "usage: gazemetrics compare" in proc.stdout
