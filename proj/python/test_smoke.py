"""Smoke tests for the pyfphi extension module."""

import csv
import json
import math

import pyfphi


def test_symbols():
    assert pyfphi.next_friendly(7) == 8
    assert pyfphi.next_friendly(13) == 15
    assert pyfphi.jb2(1, 0, 0) == 2.0
    b = pyfphi.bracket_symbol([1, 0, 0], 1.5)
    assert abs(b - math.sqrt(2.0**1.5 - 0.25)) < 1e-14


def test_wick_scalars():
    assert abs(pyfphi.sigma_n(1.5, 1) - 3.1213203435596433) < 1e-12
    assert abs(pyfphi.sigma_n(1.5, 2) - 6.967377735) < 1e-6
    assert abs(pyfphi.alpha_n(1.3, 1) - 7.039656793311277) < 1e-9
    # Hermite identities
    assert pyfphi.hermite(2, 2.0, 1.0) == 3.0
    assert pyfphi.hermite(3, 2.0, 1.0) == 2.0
    assert pyfphi.hermite(4, 0.0, 0.7) == 3 * 0.7**2


def test_universality_coeffs_agree():
    sigma = pyfphi.continuum_sigma(1.3)
    assert abs(sigma - 10 * math.pi) < 1e-12
    coeffs = [0.0, 0.1, 0.001, 0.002]
    am = pyfphi.averaged_coeffs(coeffs, sigma)
    aq = pyfphi.averaged_coeffs_quadrature(coeffs, sigma)
    assert len(am) == len(aq) == 4
    for x, y in zip(am, aq):
        assert abs(x - y) <= 1e-10 * max(1.0, abs(x))


def test_counting_bound():
    r = pyfphi.count_basic(1.25, 4, 2, [2, 0, 0], -1)
    assert r["observed"] >= 1
    assert r["ratio"] == r["observed"] / r["bound"]
    assert r["ratio"] < 16.0


def test_run_subcommand_writes_outputs(tmp_path):
    out = tmp_path / "wt"
    summary = pyfphi.run_subcommand(
        "wick-table",
        {"alpha": "1.5", "trunc-n": "1", "out": str(out)},
    )
    assert "sigma_N" in summary
    with open(f"{out}.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert abs(float(rows[0]["sigma_n"]) - 3.1213203435596433) < 1e-12
    with open(f"{out}.json") as fh:
        side = json.load(fh)
    assert side["subcommand"] == "wick-table"
    assert side["version"] == pyfphi.__version__
    assert side["trunc_n"] == 1
    assert side["alpha"] == 1.5
    assert "dt" in side and "seed" in side


def test_logz_trivial_bound():
    # Jensen: log Z >= -alpha_N.
    logz, se, ess = pyfphi.estimate_logz(1.3, 1, 2000, seed=11)
    assert ess >= 1.0
    assert logz >= -pyfphi.alpha_n(1.3, 1)
