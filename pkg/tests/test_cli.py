"""End-to-end tests for the thin-client CLI (in-process service)."""

import json

import pytest
from click.testing import CliRunner

from posw.cli import EXIT_CAP, EXIT_IO, EXIT_VALIDATION, main
from posw.datasets import case_study_dataset, save_dataset
from posw.results import load_results


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def case_csv(tmp_path):
    path = tmp_path / "cases.csv"
    save_dataset(case_study_dataset(), path)
    return str(path)


@pytest.fixture
def case_json(tmp_path):
    # The JSON format carries class names; the CSV format does not.
    path = tmp_path / "cases.json"
    save_dataset(case_study_dataset(), path)
    return str(path)


def gen_args(out, seed=7, samples=30, fmt="csv"):
    return [
        "gen", "--samples", str(samples), "--peers", "5", "--classes", "5",
        "--seed", str(seed), "--output", out, "--format", fmt,
    ]


class TestGen:
    def test_produces_loadable_dataset(self, runner, tmp_path):
        out = str(tmp_path / "ds.csv")
        result = runner.invoke(main, gen_args(out))
        assert result.exit_code == 0, result.output
        from posw.datasets import load_dataset

        ds = load_dataset(out)
        assert ds.n_samples == 30
        assert ds.n_peers == 5

    def test_same_flags_byte_identical(self, runner, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert runner.invoke(main, gen_args(a)).exit_code == 0
        assert runner.invoke(main, gen_args(b)).exit_code == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_zero_samples_rejected(self, runner, tmp_path):
        result = runner.invoke(main, gen_args(str(tmp_path / "x.csv"), samples=0))
        assert result.exit_code == EXIT_VALIDATION

    def test_accuracy_list(self, runner, tmp_path):
        out = str(tmp_path / "ds.json")
        args = gen_args(out, fmt="json") + ["--accuracy", "0.87,0.87,0.86,0.88,0.84"]
        assert runner.invoke(main, args).exit_code == 0


class TestRun:
    def test_case_studies(self, runner, case_csv, tmp_path):
        out = str(tmp_path / "res.json")
        result = runner.invoke(main, ["run", "--input", case_csv, "--output", out])
        assert result.exit_code == 0, result.output
        payload = json.loads(open(out).read())
        assert [r["final_label"] for r in payload["records"]] == [0, 3]
        assert [r["rounds"] for r in payload["records"]] == [2, 3]
        assert "timing" in payload

    def test_reproducible_apart_from_timing(self, runner, case_csv, tmp_path):
        outs = []
        for name in ("one.json", "two.json"):
            out = str(tmp_path / name)
            assert runner.invoke(
                main, ["run", "--input", case_csv, "--output", out, "--seed", "3"]
            ).exit_code == 0
            payload = json.loads(open(out).read())
            payload.pop("timing")
            outs.append(json.dumps(payload, sort_keys=True))
        assert outs[0] == outs[1]

    def test_csv_output_round_trips(self, runner, case_json, tmp_path):
        out = str(tmp_path / "res.csv")
        assert runner.invoke(
            main, ["run", "--input", case_json, "--output", out, "--format", "csv"]
        ).exit_code == 0
        loaded = load_results(out)
        assert [r["final_class"] for r in loaded["records"]] == ["N", "F"]
        assert loaded["timing"] is not None

    def test_csv_bytes_reproducible_outside_timing_block(self, runner, case_csv, tmp_path):
        contents = []
        for name in ("one.csv", "two.csv"):
            out = tmp_path / name
            assert runner.invoke(
                main, ["run", "--input", case_csv, "--output", str(out), "--seed", "3"]
            ).exit_code == 0
            lines = out.read_bytes().splitlines(keepends=True)
            contents.append([ln for ln in lines if not ln.startswith(b"#timing")])
        assert contents[0] == contents[1]

    def test_missing_input_is_io_error(self, runner, tmp_path):
        result = runner.invoke(main, ["run", "--input", str(tmp_path / "nope.csv")])
        assert result.exit_code == EXIT_IO

    def test_malformed_row_is_validation_error(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "sample_id,peer_id,true_label,p_0,p_1\n"
            "a,0,,0.9,0.6\n"
            "a,1,,0.5,0.5\n"
        )
        result = runner.invoke(main, ["run", "--input", str(bad)])
        assert result.exit_code == EXIT_VALIDATION
        assert "row 2" in result.output

    def test_no_early_stop_flag(self, runner, case_csv, tmp_path):
        out = str(tmp_path / "res.json")
        assert runner.invoke(
            main, ["run", "--input", case_csv, "--output", out, "--no-early-stop"]
        ).exit_code == 0
        payload = json.loads(open(out).read())
        assert [r["rounds"] for r in payload["records"]] == [3, 4]

    def test_unanimous_dataset_finishes_in_one_round(self, runner, tmp_path):
        ds = tmp_path / "unanimous.csv"
        row = "{sid},{peer},,0.0,1.0,0.0\n"
        ds.write_text(
            "sample_id,peer_id,true_label,p_0,p_1,p_2\n"
            + "".join(row.format(sid=s, peer=p) for s in ("a", "b", "c") for p in range(4))
        )
        out = str(tmp_path / "res.json")
        assert runner.invoke(
            main, ["run", "--input", str(ds), "--output", out]
        ).exit_code == 0
        payload = json.loads(open(out).read())
        assert [r["rounds"] for r in payload["records"]] == [1, 1, 1]
        assert payload["summary"]["rounds_histogram"] == {"1": 3}


class TestCompare:
    def test_table_printed(self, runner, tmp_path):
        ds = str(tmp_path / "ds.csv")
        assert runner.invoke(main, gen_args(ds, samples=40)).exit_code == 0
        result = runner.invoke(main, ["compare", "--input", ds])
        assert result.exit_code == 0, result.output
        for name in ("posw", "majority", "bft", "soft", "peer_0", "peer_4"):
            assert name in result.output

    def test_method_subset_and_output_file(self, runner, tmp_path):
        ds = str(tmp_path / "ds.csv")
        out = str(tmp_path / "cmp.csv")
        assert runner.invoke(main, gen_args(ds, samples=40)).exit_code == 0
        result = runner.invoke(
            main, ["compare", "--input", ds, "--methods", "posw", "--output", out]
        )
        assert result.exit_code == 0
        loaded = load_results(out)
        assert [r["method"] for r in loaded["records"]] == ["posw"]

    def test_missing_truth_is_validation_error(self, runner, case_csv):
        result = runner.invoke(main, ["compare", "--input", case_csv])
        assert result.exit_code == EXIT_VALIDATION


class TestSimulate:
    def test_fault_free(self, runner, case_csv, tmp_path):
        out = str(tmp_path / "sim.json")
        result = runner.invoke(main, ["simulate", "--input", case_csv, "--output", out])
        assert result.exit_code == 0, result.output
        payload = json.loads(open(out).read())
        assert all(r["reference_match"] for r in payload["records"])

    def test_silent_flag(self, runner, case_csv):
        result = runner.invoke(main, ["simulate", "--input", case_csv, "--silent", "2"])
        assert result.exit_code == 0
        assert "peer 2: silent" in result.output

    def test_liar_flag_with_class_name(self, runner, case_json, tmp_path):
        out = str(tmp_path / "sim.json")
        result = runner.invoke(
            main, ["simulate", "--input", case_json, "--liar", "0:F:1.0", "--output", out]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(open(out).read())
        assert "fixed-liar(label=3" in payload["summary"]["fault_summary"]
        # Deviation from the fault-free run is visible per sample.
        assert any(not r["reference_match"] for r in payload["records"])

    def test_liar_flag_with_index_label(self, runner, case_csv):
        result = runner.invoke(main, ["simulate", "--input", case_csv, "--liar", "0:3:1.0"])
        assert result.exit_code == 0, result.output
        assert "fixed-liar(label=3" in result.output

    def test_bad_liar_spec(self, runner, case_csv):
        result = runner.invoke(main, ["simulate", "--input", case_csv, "--liar", "zap"])
        assert result.exit_code == EXIT_VALIDATION

    def test_cap_exceeded_exit_code(self, runner, tmp_path):
        ds = tmp_path / "block.csv"
        ds.write_text(
            "sample_id,peer_id,true_label,p_0,p_1,p_2\n"
            "a,0,,0.9,0.05,0.05\n"
            "a,1,,0.9,0.05,0.05\n"
            "a,2,,0.9,0.05,0.05\n"
            "a,3,,0.2,0.3,0.5\n"
        )
        result = runner.invoke(
            main,
            [
                "simulate", "--input", str(ds), "--liar", "3:2:0.99",
                "--no-early-stop", "--round-cap-factor", "1",
            ],
        )
        assert result.exit_code == EXIT_CAP
