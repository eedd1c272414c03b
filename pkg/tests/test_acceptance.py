"""One pass/fail test per acceptance criterion, at the stated tolerances."""

import pytest

from biharm import acceptance


def _check(k):
    rec = acceptance.CRITERIA[k]()
    assert rec["pass"], rec
    return rec


def test_criterion_01_kernel_oracle():
    rec = _check(1)
    assert rec["seconds"] < 30


def test_criterion_02_conservation():
    rec = _check(2)
    assert rec["seconds"] < 120


def test_criterion_03_decay_exponent():
    rec = _check(3)
    assert rec["seconds"] < 60


def test_criterion_04_sign_changes():
    rec = _check(4)
    assert rec["seconds"] < 60


def test_criterion_05_solver_fidelity():
    rec = _check(5)
    assert rec["seconds"] < 120


def test_criterion_06_energy_law():
    rec = _check(6)
    assert rec["seconds"] < 180


def test_criterion_07_weight_certification():
    rec = _check(7)
    assert rec["seconds"] < 180


def test_criterion_08_l2_exponential_decay():
    rec = _check(8)
    assert rec["seconds"] < 180


def test_criterion_09_scaffold_bounds():
    rec = _check(9)
    assert rec["seconds"] < 120


def test_criterion_10_counterexample():
    rec = _check(10)
    assert rec["seconds"] < 120


def test_criterion_11_linfty_contraction():
    rec = _check(11)
    assert rec["seconds"] < 180
