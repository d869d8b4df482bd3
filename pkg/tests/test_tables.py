import math

import pytest

from esn_rmt.experiments import ResultRow, config_from_mapping, run_experiment
from esn_rmt.tables import columns, infer_experiment, read_csv, write_csv


EXPECTED = {
    ("double_descent", False): [
        "model", "T", "N", "gamma", "lam", "teacher_rho", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
    ],
    ("double_descent", True): [
        "model", "T", "N", "gamma", "lam", "teacher_rho", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
        "mc_estimate", "mc_stderr",
    ],
    ("memory_grid", False): [
        "model", "T", "N", "lam", "rho", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
        "diff_bias2", "diff_variance", "diff_total",
    ],
    ("lambda_sweep", True): [
        "model", "T", "N", "lam", "phi",
        "bias2", "variance", "noise", "total", "alpha", "delta", "diverged",
        "mc_estimate", "mc_stderr",
    ],
}


@pytest.mark.parametrize("key", sorted(EXPECTED))
def test_fixed_headers(key):
    experiment, mc = key
    assert columns(experiment, mc) == EXPECTED[key]


def test_infer_experiment_from_header():
    assert infer_experiment(EXPECTED[("double_descent", False)]) == "double_descent"
    assert infer_experiment(EXPECTED[("memory_grid", False)]) == "memory_grid"
    assert infer_experiment(EXPECTED[("lambda_sweep", True)]) == "lambda_sweep"


def _round_trip(tmp_path, mapping):
    cfg = config_from_mapping(mapping)
    result = run_experiment(cfg)
    path = tmp_path / "results.csv"
    write_csv(path, result.experiment, result.rows, cfg.monte_carlo.enabled)
    experiment, records = read_csv(path)
    assert experiment == cfg.experiment
    assert len(records) == len(result.rows)
    for record, row in zip(records, result.rows):
        for key, value in record.items():
            assert value == getattr(row, key), key
    return path


def test_memory_grid_round_trip(tmp_path):
    _round_trip(tmp_path, {
        "experiment": "memory_grid", "T": 20,
        "sweep": {"N_grid": [10, 40], "rho_grid": [0.3, 1.0]},
    })


def test_double_descent_round_trip(tmp_path):
    _round_trip(tmp_path, {
        "experiment": "double_descent", "N": 40, "esn": {"n": 30},
        "sweep": {"gamma_grid": [0.5, 1.0], "rho_panels": [0.4]},
    })


def test_mc_round_trip_with_overlay(tmp_path):
    _round_trip(tmp_path, {
        "experiment": "lambda_sweep", "T": 20, "N": 40, "seed": 3,
        "sweep": {"lambda_grid": [0.5, 2.0]},
        "monte_carlo": {"enabled": True, "M": 150, "trials": 3},
    })


def test_diverged_row_serialization(tmp_path):
    rows = [ResultRow(model="ridge", T=4, N=4, gamma=1.0, lam=1e-9,
                      teacher_rho=0.5, diverged=True)]
    path = tmp_path / "d.csv"
    write_csv(path, "double_descent", rows, mc_enabled=False)
    _, records = read_csv(path)
    assert records[0]["diverged"] is True
    assert records[0]["total"] is None
    text = path.read_text()
    assert "nan" in text and "true" in text


def test_newlines_and_float_width(tmp_path):
    rows = [ResultRow(model="esn", T=2, N=3, lam=0.1, phi=0.9, bias2=1 / 3,
                      variance=0.0, noise=1.0, total=1 / 3 + 1.0, alpha=0.5,
                      delta=0.25)]
    path = tmp_path / "f.csv"
    write_csv(path, "lambda_sweep", rows, mc_enabled=False)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert b"0.33333333333333331" in raw  # 17 significant digits
