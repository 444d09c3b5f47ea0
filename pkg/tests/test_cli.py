"""End-to-end tests for the command-line front end."""

import numpy as np
import pytest

from entrobench.cli import main
from entrobench.entropy import EntropyKind
from entrobench.harness import (CSV_HEADER, ClusterParams, ThresholdParams,
                                format_row, run_cluster_cell,
                                run_threshold_cell)
from entrobench.raster import decode_pgm, encode_pgm, median_filter_3x3
from entrobench.registration import SimilarityTransform, transform_apply
from entrobench.scenes import named_scene, scene_pair


def write_scene(tmp_path, name="five-region", size=64, noise=6.0, seed=0):
    img, truth = named_scene(name, size, size, noise, seed)
    img_p = tmp_path / "scene.pgm"
    truth_p = tmp_path / "truth.pgm"
    img_p.write_bytes(encode_pgm(img))
    truth_p.write_bytes(encode_pgm(truth))
    return img_p, truth_p, img, truth


def csv_rows(captured):
    lines = captured.strip().splitlines()
    assert lines[0] == CSV_HEADER
    return [line.split(",") for line in lines[1:]]


# ----------------------------------------------------------------- plumbing

def test_version_reports_schema(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert out.startswith("entrobench ")
    assert "csv schema 1" in out


def test_verb_is_required(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_verb_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["warp", "x.pgm"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["threshold", "x.pgm", "--entropy", "shannon", "--alpha", "2"],
    ["threshold", "x.pgm", "--entropy", "shannon", "--q", "2"],
    ["threshold", "x.pgm", "--entropy", "renyi", "--q", "2"],
    ["threshold", "x.pgm", "--entropy", "tsallis", "--alpha", "2"],
    ["threshold", "x.pgm", "--bins", "128"],
])
def test_bad_flag_combinations_exit_with_usage(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_missing_input_reports_error(tmp_path, capsys):
    rc = main(["threshold", str(tmp_path / "absent.pgm")])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


# -------------------------------------------------------------------- synth

def test_synth_writes_decodable_scene(tmp_path, capsys):
    out = tmp_path / "d"
    rc = main(["synth", "--spec", "two-region", "--width", "32",
               "--height", "32", "--seed", "4", "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    img = decode_pgm((out / "scene.pgm").read_bytes())
    truth = decode_pgm((out / "truth.pgm").read_bytes())
    expected_img, expected_truth = named_scene("two-region", 32, 32, 8.0, 4)
    assert np.array_equal(img, expected_img)
    assert np.array_equal(truth, expected_truth)
    assert str(out / "scene.pgm") in printed
    assert str(out / "truth.pgm") in printed


def test_synth_pair_seed_writes_registration_pair(tmp_path):
    out = tmp_path / "d"
    rc = main(["synth", "--spec", "five-region", "--width", "48",
               "--height", "48", "--seed", "1", "--pair-seed", "2",
               "--out", str(out)])
    assert rc == 0
    ref, mov, t_true = scene_pair("five-region", 48, 48, 8.0, 1, 2)
    assert np.array_equal(decode_pgm((out / "ref.pgm").read_bytes()), ref)
    assert np.array_equal(decode_pgm((out / "mov.pgm").read_bytes()), mov)
    parts = (out / "transform.txt").read_text().strip().split(",")
    assert [float(p) for p in parts] == \
        [t_true.dx, t_true.dy, t_true.theta, t_true.scale]


def test_synth_rejects_unknown_spec(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--spec", "city", "--out", str(tmp_path)])
    assert exc.value.code == 2


# -------------------------------------------------------------- task verbs

def test_threshold_verb_matches_library_cell(tmp_path, capsys):
    img_p, truth_p, img, truth = write_scene(tmp_path)
    rc = main(["threshold", str(img_p), "--truth", str(truth_p),
               "--entropy", "tsallis", "--q", "2", "--levels", "3",
               "--seed", "1"])
    assert rc == 0
    rows = csv_rows(capsys.readouterr().out)
    expected = run_threshold_cell(median_filter_3x3(img), truth,
                                  EntropyKind.tsallis(2.0),
                                  ThresholdParams(levels=(3,)), 3, 1, "scene")
    assert [r[:7] for r in rows] == \
        [format_row(e).split(",")[:7] for e in expected]
    assert [r[5] for r in rows] == ["kappa", "overall_accuracy"]


def test_threshold_verb_criterion_row_without_truth(tmp_path, capsys):
    img_p, _, img, _ = write_scene(tmp_path)
    rc = main(["threshold", str(img_p), "--no-preprocess"])
    assert rc == 0
    rows = csv_rows(capsys.readouterr().out)
    expected = run_threshold_cell(img, None, EntropyKind.shannon(),
                                  ThresholdParams(), 2, 0, "scene")
    assert len(rows) == 1 and rows[0][5] == "criterion"
    assert rows[0][6] == format_row(expected[0]).split(",")[6]


def test_threshold_verb_out_writes_rows_csv(tmp_path, capsys):
    img_p, truth_p, _, _ = write_scene(tmp_path, "two-region", 48, 4.0)
    out = tmp_path / "report"
    rc = main(["threshold", str(img_p), "--truth", str(truth_p),
               "--levels", "1", "--out", str(out)])
    assert rc == 0
    stdout_lines = capsys.readouterr().out.strip().splitlines()
    assert (out / "rows.csv").read_text(
        encoding="utf-8").strip().splitlines() == stdout_lines


def test_register_verb_recovers_known_shift(tmp_path, capsys):
    img, _ = named_scene("five-region", 128, 128, 6.0, 3)
    mov, _ = transform_apply(img, SimilarityTransform(3.0, -2.0, 0.0, 1.0))
    ref_p = tmp_path / "ref.pgm"
    mov_p = tmp_path / "mov.pgm"
    ref_p.write_bytes(encode_pgm(img))
    mov_p.write_bytes(encode_pgm(mov))
    rc = main(["register", str(ref_p), str(mov_p), "--entropy", "renyi",
               "--alpha", "2", "--true-transform=-3,2,0,1"])
    assert rc == 0
    rows = csv_rows(capsys.readouterr().out)
    values = {r[5]: float(r[6]) for r in rows}
    assert values["nccc"] >= 0.95
    assert values["rmse"] <= 0.5
    assert all(r[:3] == ["register", "renyi", "2.0"] for r in rows)


@pytest.mark.parametrize("transform", ["1,2,3", "0,0,0,9", "a,b,c,d"])
def test_register_verb_rejects_bad_transform(tmp_path, transform):
    img_p, _, _, _ = write_scene(tmp_path, size=32)
    with pytest.raises(SystemExit) as exc:
        main(["register", str(img_p), str(img_p),
              "--true-transform", transform])
    assert exc.value.code == 2


def test_cluster_verb_matches_library_cell(tmp_path, capsys):
    img_p, truth_p, img, truth = write_scene(tmp_path)
    rc = main(["cluster", str(img_p), "--truth", str(truth_p), "--k", "5",
               "--stride", "4", "--seed", "0"])
    assert rc == 0
    rows = csv_rows(capsys.readouterr().out)
    expected = run_cluster_cell(median_filter_3x3(img), truth,
                                EntropyKind.shannon(),
                                ClusterParams(k=5, stride=4), 0, "scene")
    assert [r[:7] for r in rows] == \
        [format_row(e).split(",")[:7] for e in expected]


def test_cluster_verb_auto_stride_runs(tmp_path, capsys):
    img_p, _, _, _ = write_scene(tmp_path, "two-region", 32, 4.0)
    rc = main(["cluster", str(img_p), "--k", "2"])
    assert rc == 0
    rows = csv_rows(capsys.readouterr().out)
    assert [r[5] for r in rows] == ["score"]


# -------------------------------------------------------------------- bench

BENCH_CFG = """\
[run]
tasks = threshold
entropies = shannon renyi:2
seeds = 0

[threshold]
levels = 1

[datasets]
s1 = scene:two-region width=48 height=48 noise=4
"""


def test_bench_runs_matrix_and_replays(tmp_path, capsys):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(BENCH_CFG, encoding="utf-8")
    out = tmp_path / "out"
    rc = main(["bench", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    assert "wrote" in capsys.readouterr().out
    lines = (out / "results.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == CSV_HEADER
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 4  # 2 kinds x (kappa, overall_accuracy)
    assert all(r[5] != "error" for r in rows)

    # replaying a row through the single-cell verb reproduces its value
    synth = tmp_path / "replay"
    main(["synth", "--spec", "two-region", "--width", "48", "--height", "48",
          "--noise", "4", "--seed", "0", "--out", str(synth)])
    capsys.readouterr()
    shannon_rows = [r for r in rows if r[1] == "shannon"]
    rc = main(["threshold", str(synth / "scene.pgm"),
               "--truth", str(synth / "truth.pgm"), "--levels", "1",
               "--seed", "0"])
    assert rc == 0
    replayed = csv_rows(capsys.readouterr().out)
    assert [(r[5], r[6]) for r in replayed] == \
        [(r[5], r[6]) for r in shannon_rows]


def test_bench_requires_output_directory(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(BENCH_CFG, encoding="utf-8")
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--config", str(cfg)])
    assert exc.value.code == 2


def test_bench_bad_config_reports_error(tmp_path, capsys):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("[run]\ntasks = threshold\n", encoding="utf-8")
    rc = main(["bench", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")
