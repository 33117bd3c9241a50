import io
import json

import numpy as np
import pandas as pd
import pytest

from esg_merton.data import DataManager
from esg_merton.errors import DomainError
from esg_merton.handlers.utils import parse_float_list, parse_grid, parse_profile
from esg_merton.main import EXIT_FAILED, EXIT_IO, EXIT_OK, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    return pd.read_csv(io.StringIO(text))


def test_allocate_merton_weights(capsys):
    code, out, _ = run(capsys, "allocate", "--params", "fixture:idt_wmt", "--alpha-m", "-2.5")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["pi2"] == pytest.approx(0.2092, abs=1e-4)
    assert data["pi1"] == pytest.approx(1.1306, abs=1e-4)
    assert data["b"] == pytest.approx(data["bM"], rel=1e-13)


def test_allocate_with_kappa(capsys):
    code, out, _ = run(capsys, "allocate", "--params", "fixture:idt_wmt", "--alpha-m", "-3",
                       "--kappa", "0.5", "--scores", "fixture:idt_wmt")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["alphaB"] < data["alphaM"] < data["alphaG"] < 0

    code, _, err = run(capsys, "allocate", "--params", "fixture:idt_wmt", "--alpha-m", "-3",
                       "--kappa", "0.5", "--alpha-g", "-1", "--scores", "fixture:idt_wmt")
    assert code == EXIT_FAILED
    assert "--kappa" in err


def test_tradeoff_csv(capsys):
    code, out, _ = run(capsys, "tradeoff", "--params", "fixture:idt_wmt", "--alpha-m", "-4",
                       "--alpha-b-grid=-20:-4:0.5")
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame.columns) == ["alphaB", "alphaG", "pi1", "pi2", "pi3", "b"]
    assert len(frame) == 33
    assert frame["alphaG"].iloc[-1] == pytest.approx(-4.0)
    assert out.endswith("\n") and "\r" not in out


def test_dominance_json(capsys):
    code, out, _ = run(capsys, "dominance", "--params", "fixture:idt_wmt")
    data = json.loads(out)
    assert code == EXIT_OK
    assert data["m"] == pytest.approx(4.16, abs=0.01)
    assert data["alphaB"] == -5.0
    assert data["alphaGThreshold"] == pytest.approx(-0.4423, abs=0.005)
    assert data["pi2GreaterThanPi3"] is False

    code, out, _ = run(capsys, "dominance", "--params", "fixture:shen_dupont")
    assert json.loads(out)["pi2GreaterThanPi3"] is True

    code, _, _ = run(capsys, "dominance", "--params", "fixture:idt_wmt", "--alpha-m", "-2")
    assert code == EXIT_FAILED


def test_wel_no_green(capsys):
    code, out, _ = run(capsys, "wel", "--params", "fixture:idt_wmt", "--no-green",
                       "--alpha-g-grid=-0.02:-0.01:0.01", "-T", "12")
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame.columns) == ["alphaG", "q"]
    assert frame["q"].iloc[-1] == pytest.approx(0.0742, abs=2e-4)


def test_wel_kappa_grid(capsys):
    code, out, _ = run(capsys, "wel", "--params", "fixture:shen_dupont", "--alpha-m", "-3",
                       "--kappa-grid", "0:1:0.25", "--scores", "fixture:shen_dupont")
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame.columns) == ["kappa", "alphaG", "alphaB", "q", "logRetention"]
    assert len(frame) == 5
    assert frame["q"].iloc[0] == pytest.approx(0.0, abs=1e-12)

    code, _, err = run(capsys, "wel", "--params", "fixture:shen_dupont")
    assert code == EXIT_FAILED
    assert "--kappa-grid" in err


def test_sweep_and_indifference(capsys):
    code, out, _ = run(capsys, "sweep", "--vary", "kappa", "--grid", "0:1:0.5", "--params", "fixture:idt_wmt",
                       "--alpha-m", "-3", "--scores", "fixture:idt_wmt")
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame["label"]) == [0.0, 0.5, 1.0]
    np.testing.assert_allclose(frame["betaP"], 6.0464 / 4.0)

    code, out, _ = run(capsys, "indifference", "--kappa-list", "0,0.5", "--level", "-0.064",
                       "--alpha-m", "-2.5", "--scores", "fixture:idt_wmt")
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame.columns) == ["kappa", "xg", "xb", "p1", "p2", "C"]
    assert len(frame) == 100
    assert frame["xg"].min() == 0.5 and frame["xg"].max() == 2.0


def test_reproduce_is_deterministic(capsys):
    code, first, _ = run(capsys, "reproduce", "--figure", "11")
    code_again, second, _ = run(capsys, "reproduce", "--figure", "11")
    assert code == code_again == EXIT_OK
    assert first == second
    frame = read_csv(first)
    assert list(frame.columns) == ["pair", "alphaG", "q"]
    idt = frame[frame["pair"] == "idt_wmt"]
    assert idt["q"].iloc[-1] == pytest.approx(0.0742, abs=2e-4)


def test_reproduce_tradeoff_figure(capsys):
    code, out, _ = run(capsys, "reproduce", "--figure", "5")
    assert code == EXIT_OK
    frame = read_csv(out)
    assert list(frame.columns) == ["pair", "alphaM", "alphaB", "alphaG", "pi1", "pi2", "pi3", "b"]
    assert sorted(frame["alphaM"].unique()) == [-5.0, -4.0, -3.0, -2.0]

    code, _, err = run(capsys, "reproduce", "--figure", "99")
    assert code == EXIT_FAILED


def test_verify_command(capsys):
    code, out, _ = run(capsys, "verify", "--params", "fixture:idt_wmt", "--profile=-2.5,-1.5,-4",
                       "--paths", "20000", "--seed", "3")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["passed"] is True
    assert report["nPaths"] == 20000
    assert report["seed"] == 3


def test_verify_failure_still_prints_report(capsys, tmp_path):
    config = tmp_path / "strict.json"
    config.write_text(json.dumps({"VERIFICATION": {"Z_THRESHOLD": 1e-9}}), encoding="utf-8")
    code, out, _ = run(capsys, "--config", str(config), "verify", "--params", "fixture:idt_wmt",
                       "--profile=-2.5,-1.5,-4", "--weights", "1,0.1,0.5", "--paths", "2000", "--seed", "1")
    assert code == EXIT_FAILED
    assert json.loads(out)["passed"] is False


def test_exit_codes_for_errors(capsys, tmp_path):
    code, out, err = run(capsys, "allocate", "--params", "fixture:idt_wmt", "--alpha-m", "0.5")
    assert code == EXIT_FAILED
    assert out == ""
    assert "错误" in err

    code, _, err = run(capsys, "allocate", "--params", "fixture:nope", "--alpha-m", "-2")
    assert code == EXIT_FAILED

    code, _, err = run(capsys, "allocate", "--params", str(tmp_path / "missing.json"), "--alpha-m", "-2")
    assert code == EXIT_IO
    assert "文件错误" in err


def test_config_override_changes_json_indent(capsys, tmp_path):
    config = tmp_path / "settings.json"
    config.write_text(json.dumps({"OUTPUT": {"JSON_INDENT": 4}}), encoding="utf-8")
    code, out, _ = run(capsys, "--config", str(config), "allocate", "--params", "fixture:idt_wmt", "--alpha-m", "-2")
    assert code == EXIT_OK
    assert '\n    "alphaM"' in out


def test_estimate_writes_exact_params(capsys, tmp_path, write_prices_csv, write_rates_csv, estimation):
    prices, rates = write_prices_csv(), write_rates_csv()
    out_path = tmp_path / "params.json"
    code, out, _ = run(capsys, "estimate", "--prices", str(prices), "--rates", str(rates),
                       "--index", "SPX", "--green", "IDT", "--brown", "WMT", "--out", str(out_path))
    assert code == EXIT_OK
    assert str(out_path) in out

    expected = estimation.estimate(estimation.load_panel(prices, rates, "SPX", "IDT", "WMT")).params
    assert DataManager().read_params(out_path) == expected

    code, out, _ = run(capsys, "estimate", "--prices", str(prices), "--rates", str(rates),
                       "--index", "SPX", "--green", "IDT", "--brown", "WMT")
    data = json.loads(out)
    assert data["nObservations"] == 29
    assert "standardErrors" in data and "diagnostics" in data

    code, _, err = run(capsys, "allocate", "--params", str(out_path), "--alpha-m", "-2")
    assert code == EXIT_OK


def test_estimate_with_bad_file_exits_one(capsys, tmp_path, write_rates_csv):
    prices = tmp_path / "prices.csv"
    prices.write_text("date,ticker,adj_close\n2015-01-01,SPX,0\n", encoding="utf-8")
    code, _, err = run(capsys, "estimate", "--prices", str(prices), "--rates", str(write_rates_csv()),
                       "--index", "SPX", "--green", "IDT", "--brown", "WMT")
    assert code == EXIT_FAILED
    assert "第 1 行" in err


def test_scores_command(capsys, tmp_path, ratings_csv):
    code, out, _ = run(capsys, "scores", "--ratings", str(ratings_csv), "--green", "IDT", "--brown", "WMT")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["eGreen"] == pytest.approx(9.393939, abs=1e-6)
    assert data["eBrown"] == 6.0

    out_path = tmp_path / "scores.json"
    code, out, _ = run(capsys, "scores", "--ratings", str(ratings_csv), "--green", "IDT", "--brown", "WMT",
                       "--top", "1", "--out", str(out_path))
    assert code == EXIT_OK
    assert "IDT" in out
    assert json.loads(out_path.read_text(encoding="utf-8"))["eBrown"] == 6.0


def test_parse_grid():
    np.testing.assert_array_equal(parse_grid("0:1:0.25"), [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(parse_grid("1:0:-0.5"), [1.0, 0.5, 0.0])
    grid = parse_grid("-20:-4:0.1")
    assert len(grid) == 161
    assert grid[0] == -20.0 and grid[-1] == -4.0
    assert parse_grid("0:0.3:0.1")[-1] == 0.3
    np.testing.assert_array_equal(parse_grid("2:2:1"), [2.0])
    for bad in ("0:1:0", "0:1:-0.1", "a:b:c", "0:1", "0:inf:1"):
        with pytest.raises(DomainError):
            parse_grid(bad)


def test_parse_lists():
    assert parse_float_list("0, 0.5,1") == (0.0, 0.5, 1.0)
    assert parse_profile("-2.5,-1.5,-4").alpha_b == -4.0
    with pytest.raises(DomainError):
        parse_profile("-1,-2")
    with pytest.raises(DomainError):
        parse_float_list("")


def test_parser_requires_a_command():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args([])
    assert info.value.code == EXIT_FAILED


@pytest.mark.parametrize("argv", [
    ["allocate", "--params", "fixture:idt_wmt", "--alpha-m", "abc"],
    ["allocate", "--alpha-m", "-2"],
    ["rebalance", "--params", "fixture:idt_wmt"],
    [],
])
def test_usage_errors_exit_as_validation_failures(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_FAILED
    assert out == ""
    assert "usage:" in err
