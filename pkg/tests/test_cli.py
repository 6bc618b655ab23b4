"""Command-line interface: config handling, CSV output, exit codes."""

import os
import subprocess
import sys
import textwrap

import pytest

from amcpricer.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, load_config, main

BASE = """
[model]
maturity = 0.2
n_dates = 50

[product]
kind = asian_fixed
strike = 100
window = 1,2

[basis]
family = poly
rho = 2

[experiment]
n_runs = 2
n_train = 500
n_eval = 2000
seed = 0
"""


def write_cfg(tmp_path, text=BASE, name="exp.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def test_price_writes_csv(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "prices.csv"
    assert main(["price", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "product,basis,rho,M,price,std_err,time_s,seed"
    assert len(lines) == 3  # two windows x one family
    for line in lines[1:]:
        product, family, rho, m, price, se, time_s, seed = line.split(",")
        assert (product, family, rho) == ("asian_fixed", "poly", "2")
        assert m in ("1", "2")
        assert float(price) > 0.0
        assert float(se) >= 0.0
        assert time_s == "NA"
        assert seed == "0"


def test_price_to_stdout(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["price", "--config", cfg]) == EXIT_OK
    captured = capsys.readouterr().out.strip().splitlines()
    assert captured[0].startswith("product,basis")
    assert len(captured) == 3


def test_repeats_are_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["price", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["price", "--config", cfg, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_output_independent_of_thread_count(tmp_path):
    cfg = write_cfg(tmp_path)
    outs = []
    for threads, name in (("1", "t1.csv"), ("4", "t4.csv")):
        out = tmp_path / name
        env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads)
        proc = subprocess.run(
            [sys.executable, "-m", "amcpricer.cli", "price", "--config", cfg,
             "--out", str(out)],
            env=env,
            capture_output=True,
            text=True,
        )
        assert proc.returncode == EXIT_OK, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_seed_and_runs_overrides(tmp_path):
    cfg = write_cfg(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["price", "--config", cfg, "--out", str(a), "--seed", "7", "--runs", "1"])
    main(["price", "--config", cfg, "--out", str(b)])
    row_a = a.read_text().strip().splitlines()[1].split(",")
    row_b = b.read_text().strip().splitlines()[1].split(",")
    assert row_a[-1] == "7" and row_b[-1] == "0"
    assert row_a[4] != row_b[4]


def test_unknown_key_is_a_config_error(tmp_path):
    cfg = write_cfg(tmp_path, BASE + "\n[experiment]\npaths = 5\n")
    assert main(["price", "--config", cfg]) == EXIT_CONFIG


def test_unknown_section_is_a_config_error(tmp_path):
    cfg = write_cfg(tmp_path, BASE + "\n[simulation]\nn = 5\n")
    assert main(["price", "--config", cfg]) == EXIT_CONFIG


def test_missing_product_kind_is_a_config_error(tmp_path):
    cfg = write_cfg(tmp_path, "[model]\ns0 = 100\n")
    assert main(["price", "--config", cfg]) == EXIT_CONFIG


def test_missing_config_file_is_a_config_error(tmp_path):
    assert main(["price", "--config", str(tmp_path / "absent.ini")]) == EXIT_CONFIG


def test_load_config_applies_defaults(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    assert cfg.model["s0"] == 100.0
    assert cfg.basis["degree"] == 2
    assert cfg.experiment["antithetic"] is False


def test_numerical_failure_emits_na_and_exit_1(tmp_path):
    # a 10-column cap cannot hold the rho4 design near maturity, so the
    # run fails numerically; the row is kept with NA fields
    text = BASE.replace("window = 1,2", "window = 2").replace(
        "rho = 2", "rho = 4\nmax_columns = 10"
    )
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "na.csv"
    with pytest.warns(RuntimeWarning, match="pricing failed"):
        code = main(["price", "--config", cfg, "--out", str(out)])
    assert code == EXIT_NUMERICAL
    row = out.read_text().strip().splitlines()[1].split(",")
    assert row[4:7] == ["NA", "NA", "NA"]


def test_timing_flag_fills_the_time_column(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "timed.csv"
    main(["price", "--config", cfg, "--out", str(out), "--timing"])
    row = out.read_text().strip().splitlines()[1].split(",")
    assert float(row[6]) >= 0.0


def test_greeks_tree_method(tmp_path):
    text = BASE.replace("window = 1,2", "window = 1") + """
[greeks]
moneyness = 0.9,1.0
tree_steps = 200
"""
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "greeks.csv"
    assert main(["greeks", "--config", cfg, "--method", "tree", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "product,M,moneyness,delta,gamma,method"
    assert len(lines) == 3
    for line in lines[1:]:
        _, m, money, delta, gamma, method = line.split(",")
        assert method == "tree"
        assert -1.0 < float(delta) < 0.0
        assert float(gamma) > 0.0


def test_greeks_chebyshev_and_regression_smoke(tmp_path):
    text = BASE.replace("window = 1,2", "window = 2") + """
[greeks]
moneyness = 1.0
n_nodes = 3
cheb_runs = 2
cheb_paths = 2000
reg_paths = 4000
reg_runs = 1
"""
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "g2.csv"
    code = main(
        ["greeks", "--config", cfg, "--method", "chebyshev,regression", "--out", str(out)]
    )
    assert code == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 3
    methods = {line.split(",")[-1] for line in lines[1:]}
    assert methods == {"chebyshev", "regression"}


def test_greeks_rejects_unknown_method(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["greeks", "--config", cfg, "--method", "nope"]) == EXIT_CONFIG


def test_tree_greeks_need_a_degenerate_window(tmp_path):
    # window = 2 has no single-asset tree equivalent
    text = BASE.replace("window = 1,2", "window = 2")
    cfg = write_cfg(tmp_path, text)
    assert main(["greeks", "--config", cfg, "--method", "tree"]) == EXIT_CONFIG


def test_certificate_price_grid(tmp_path):
    text = """
[product]
kind = snowball
maturity_years = 1
coupon = 0.023
coupon_barrier = 1.0
capital_barrier = 0.35

[basis]
family = poly
rho = 4

[experiment]
n_runs = 2
n_train = 2000
n_eval = 8000
"""
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "cert.csv"
    assert main(["price", "--config", cfg, "--out", str(out)]) == EXIT_OK
    row = out.read_text().strip().splitlines()[1].split(",")
    assert row[0] == "snowball"
    assert row[3] == "NA"  # no moving window for certificates
    assert 0.8 < float(row[4]) < 1.2
