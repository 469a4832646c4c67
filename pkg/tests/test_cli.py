import csv
import io
import json
import math

import numpy as np
import pytest

from pushci import (
    Binomial,
    build_interval_function,
    constrain,
    make_grid,
    min_standard_width,
    min_width,
    standard_interval,
)
from pushci.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_push_hand_instance_json(capsys):
    code, out, err = run_cli(
        capsys,
        "push", "--family", "hyper", "--n", "1", "--N", "2",
        "--gamma", "0.5", "--width", "1", "--format", "json", "--no-constrain",
    )
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert [float(v) for v in doc["breakpoints"]] == [-0.5, -0.5, 0.0, 0.5, math.inf]
    assert doc["exists"] is True
    assert [float(s["y_lo"]) for s in doc["segments"]] == [-0.5, 0.0, 0.5]


def test_push_nonexistent_width_exits_3(capsys):
    code, out, err = run_cli(
        capsys,
        "push", "--family", "binom", "--n", "10",
        "--gamma", "0.95", "--m", "2000", "--width", "0.001",
    )
    assert code == 3
    assert out == ""
    assert err.strip() == 'error code=no-interval msg="no interval of this width exists at this level"'


def test_width_not_representable_exits_2(capsys):
    code, out, err = run_cli(
        capsys,
        "push", "--family", "binom", "--n", "10",
        "--gamma", "0.8", "--m", "1000", "--width", "0.3185",
    )
    assert code == 2
    assert "width-not-representable" in err
    assert "0.318" in err and "0.319" in err  # nearest representable widths named


def test_width_and_r_flags_agree_bitwise(capsys):
    base = ["push", "--family", "binom", "--n", "10", "--gamma", "0.8", "--m", "1000"]
    code1, out1, _ = run_cli(capsys, *base, "--width", "0.35")
    code2, out2, _ = run_cli(capsys, *base, "--r", "350")
    assert code1 == code2 == 0
    assert out1 == out2


def test_usage_errors_are_single_line(capsys):
    code, out, err = run_cli(capsys, "push", "--family", "binom", "--n", "10")
    assert code == 2
    assert err.count("\n") == 1 and err.startswith("error code=usage")
    code, _, err = run_cli(capsys, "push", "--family", "normal", "--sigma", "1",
                           "--gamma", "0.9", "--width", "1")
    assert code == 2 and "--lo and --hi" in err
    code, _, err = run_cli(capsys)
    assert code == 2 and "subcommand" in err


def test_minwidth_matches_library(capsys):
    code, out, err = run_cli(
        capsys,
        "minwidth", "--family", "binom", "--n", "10", "--gamma", "0.8", "--m", "500",
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["gamma", "r", "width"]
    r_lib, _ = min_width(Binomial(10), make_grid(0, 1, 500, 1), 0.8)
    assert int(rows[0][1]) == r_lib

    code, out, _ = run_cli(
        capsys,
        "minwidth", "--family", "binom", "--n", "10", "--gamma", "0.8",
        "--m", "500", "--symmetric",
    )
    header, rows = parse_csv(out)
    assert header[-1] == "symmetric_width"
    assert float(rows[0][3]) >= float(rows[0][2]) - 1e-12


def test_minwidth_rejects_width_flag(capsys):
    code, _, err = run_cli(
        capsys,
        "minwidth", "--family", "binom", "--n", "10", "--gamma", "0.8",
        "--m", "500", "--width", "0.3",
    )
    assert code == 2 and "drop --width" in err


def test_coverage_exact_meets_level(capsys):
    code, out, _ = run_cli(
        capsys,
        "coverage", "--family", "binom", "--n", "10", "--gamma", "0.8",
        "--m", "200", "--r", "70",
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["theta", "coverage", "se", "method", "family", "gamma", "width"]
    assert len(rows) == 201
    assert all(float(r[1]) >= 0.8 - 1e-9 for r in rows)
    assert all(r[2] == "" for r in rows)  # exact mode has no standard errors
    assert {r[3] for r in rows} == {"exact"}


def test_coverage_mc_deterministic_and_compare_columns(capsys):
    args = [
        "coverage", "--family", "hyper", "--n", "5", "--N", "40",
        "--gamma", "0.8", "--r", "16", "--method", "mc", "--reps", "300",
        "--seed", "11", "--compare", "standard",
    ]
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    header, rows = parse_csv(out1)
    assert header[-2:] == ["std_coverage", "std_se"]
    assert len(rows) == 41


def test_simulate_is_mc_alias(capsys):
    common = [
        "--family", "hyper", "--n", "5", "--N", "40", "--gamma", "0.8",
        "--r", "16", "--reps", "200", "--seed", "3",
    ]
    _, out_sim, _ = run_cli(capsys, "simulate", *common)
    _, out_cov, _ = run_cli(capsys, "coverage", "--method", "mc", *common)
    assert out_sim == out_cov


def test_batch_processing(tmp_path, capsys):
    src = tmp_path / "strata.csv"
    src.write_text(
        "stratum,n,s,gamma\n"
        "a,25,5,\n"
        "broken,not_a_number,,\n"
        "b,40,,0.9\n"
        "c,30,31,\n"
    )
    out_path = tmp_path / "report.csv"
    code, out, err = run_cli(
        capsys,
        "batch", str(src), "--gamma", "0.95", "--m", "500", "--out", str(out_path),
    )
    assert code == 0
    assert 'error code=batch-row msg="line 3:' in err
    assert 'error code=batch-row msg="line 5:' in err
    header, rows = parse_csv(out_path.read_text())
    assert header[:6] == ["stratum", "n", "s", "gamma", "push_r", "push_width"]
    assert [r[0] for r in rows] == ["a", "b"]

    grid = make_grid(0, 1, 500, 1)
    fam = Binomial(25)
    r_star, res = min_width(fam, grid, 0.95)
    row_a = rows[0]
    assert int(row_a[4]) == r_star
    assert float(row_a[5]) == pytest.approx(grid.width_of(r_star), abs=1e-15)
    f = constrain(build_interval_function(res), 0, 1)
    assert (float(row_a[6]), float(row_a[7])) == f.value_at(5.0)
    r_std = min_standard_width(fam, grid, 0.95)
    assert float(row_a[8]) == pytest.approx(grid.width_of(r_std), abs=1e-15)
    want_std = standard_interval(fam, 5, grid.width_of(r_std), (0, 1))
    assert (float(row_a[9]), float(row_a[10])) == pytest.approx(want_std, abs=1e-15)
    # row b has no observed count: interval columns stay empty
    assert rows[1][6] == rows[1][7] == ""


def test_batch_jobs_parallel_output_identical(tmp_path, capsys):
    src = tmp_path / "strata.csv"
    src.write_text("stratum,n,s\n" + "".join(f"g{i},{20 + i},{i}\n" for i in range(6)))
    _, out1, _ = run_cli(capsys, "batch", str(src), "--gamma", "0.9", "--m", "300")
    _, out4, _ = run_cli(capsys, "batch", str(src), "--gamma", "0.9", "--m", "300", "--jobs", "4")
    assert out1 == out4


def test_batch_rejects_headerless_or_missing(tmp_path, capsys):
    src = tmp_path / "no_header.csv"
    src.write_text("a,25,5\n")
    code, _, err = run_cli(capsys, "batch", str(src), "--gamma", "0.9", "--m", "200")
    assert code == 1 and "header" in err
    code, _, err = run_cli(capsys, "batch", str(tmp_path / "missing.csv"), "--gamma", "0.9")
    assert code == 1 and "cannot read" in err


def test_reproduce_table1_desk_scale(capsys):
    code, out, _ = run_cli(capsys, "reproduce", "table1", "--scale", "desk")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["gamma", "push_r", "push_width", "z_coverage", "z_width_needed"]
    want = {
        0.7: (2.004, 0.684, 2.073),
        0.8: (2.494, 0.788, 2.563),
        0.9: (3.203, 0.891, 3.290),
        0.95: (3.822, 0.944, 3.920),
    }
    for row in rows:
        gamma = float(row[0])
        w_ref, zc_ref, zw_ref = want[gamma]
        assert float(row[2]) == pytest.approx(w_ref, abs=0.02)  # desk grid is coarse
        assert float(row[4]) == pytest.approx(zw_ref, abs=1e-3)


def test_reproduce_fig_min_desk_scale(capsys):
    code, out, _ = run_cli(capsys, "reproduce", "fig-min", "--scale", "desk")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["gamma", "variant", "width", "min_coverage"]
    by_variant = {}
    for g, variant, w, mc in rows:
        by_variant.setdefault(variant, []).append((float(g), float(w), float(mc)))
    # push and its symmetric version hold the level; the standard interval of
    # the same width falls below it
    for g, w, mc in by_variant["push"]:
        assert mc >= g - 1e-9
    for g, w, mc in by_variant["push-symmetric"]:
        assert mc >= g - 1e-9
    push_widths = {(g, w) for g, w, _ in by_variant["push"]}
    for g, w, mc in by_variant["standard"]:
        if (g, w) in push_widths:
            assert mc < g


def test_cli_outputs_are_deterministic(capsys):
    args = ["reproduce", "table1", "--scale", "desk", "--pretty"]
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    assert out1 == out2
