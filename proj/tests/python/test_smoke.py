import math

import pytest

import cpstir


def test_excursion_mean_x_d2():
    r = cpstir.excursion_mean("X", d=2, reps=100000, seed=7)
    assert r.n_reps == 100000
    assert abs(r.mean - 1 / 6) < 4 * r.std_error
    assert r.extra["d"] == 2


def test_matches_cli_for_same_seed():
    code, out, _ = cpstir.cli(["excursion-mean", "--kind", "X", "--d", "2", "--reps", "5000", "--seed", "7"])
    assert code == 0
    row = out.splitlines()[2].split(",")
    r = cpstir.excursion_mean("X", d=2, reps=5000, seed=7)
    assert float(row[4]) == r.mean


def test_green_constant():
    assert cpstir.green_origin_d3_quadrature(64) == pytest.approx(1.5163860591519780, rel=1e-12)
    assert cpstir.asymptotic_lower_bound(3, 100.0) == pytest.approx(1.000861, rel=1e-6)


def test_renewal_ratio_and_bound():
    r = cpstir.kappa_ratio(t=1e4, reps=200, seed=3)
    assert 0.8 < r.mean < 1.2
    paths, violations, _ = cpstir.kappa_bound(t=100.0, reps=200)
    assert paths == 200 and violations == 0


def test_genealogy():
    r = cpstir.psi_mean(1.2, 2.0, reps=20000, seed=1)
    assert abs(r.mean - math.exp(0.4)) < 4 * r.std_error
    s = cpstir.coupled_summary(1.5, 10.0, t=2.0, reps=50)
    assert s["violations"] == 0 and s["runs"] == 50
    assert cpstir.event_e_probability(1.0, 100.0) == pytest.approx(0.0064068, rel=1e-4)
    i = cpstir.event_i(reps=20000)
    assert i["audit_violations"] == 0
    verdict, growth, _ = cpstir.extinction_criterion(1.0, 100.0, 0.001)
    assert verdict == "extinct_guaranteed" and growth < 1


def test_contact_process():
    r = cpstir.survival_probability(0.0, 0.0, t=1.0, reps=20000, cap=1000)
    assert abs(r.mean - math.exp(-1)) < 4 * r.std_error


def test_errors_raise():
    with pytest.raises(ValueError):
        cpstir.excursion_mean("Z")
    with pytest.raises(ValueError):
        cpstir.kappa_ratio(u1="nope:1", reps=10)
