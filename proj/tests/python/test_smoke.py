import math
import os

import numpy as np
import pytest

import renewalkit as rk

DATA = os.path.join(os.path.dirname(__file__), "..", "..", "data")

TWO_STATE = {
    "states": ["1", "2"],
    "rates": [{"from": "1", "to": "2", "rate": 1.0}, {"from": "2", "to": "1", "rate": 1.0}],
    "partition": [["1"], ["2"]],
    "initial": {"1": 1.0},
}


def test_expm_matches_closed_form():
    A = np.array([[-1.0, 1.0], [1.0, -1.0]])
    E = rk.expm(A, 0.5)
    assert E[0, 0] == pytest.approx(0.5 + 0.5 * math.exp(-1.0), abs=1e-14)


def test_two_state_kernel_is_exponential():
    k = rk.scalar_kernels(TWO_STATE, 5.0, 0.01)
    assert k["names"] == ["1", "2"]
    phi12 = k["phi"][1]
    assert np.max(np.abs(phi12 - np.exp(-k["t"]))) < 1e-10
    assert k["p_exact"][0, 1] == pytest.approx(1.0, abs=1e-14)


def test_solve_relaxes_to_half():
    s = rk.solve(TWO_STATE, 10.0, 0.001)
    expected = 0.5 + 0.5 * np.exp(-2.0 * s["t"])
    assert np.max(np.abs(s["N"][:, 0] - expected)) < 1e-5
    assert s["mass_drift"] < 1e-8


def test_ode_deviation_from_file():
    assert rk.ode_deviation(os.path.join(DATA, "erlang_chain.json"), 10.0, 0.001) < 1e-5


def test_markovianity_and_detailed_balance():
    v = rk.markovianity(TWO_STATE, 10.0, 0.001)
    assert v["markovian"]
    assert np.allclose(v["generator"], [[-1.0, 1.0], [1.0, -1.0]], atol=1e-6)
    cert = rk.detailed_balance(TWO_STATE)
    assert cert["present"]


def test_uniform_approximation():
    r = rk.approximate_uniform(1.0, 2.0, 0.05)
    assert r["attained"] and r["distance"] <= 0.05
    k = rk.scalar_kernels(r["network"], 4.0, 1e-3)
    assert k["p_exact"][0, 1] == pytest.approx(1.0, abs=1e-12)


def test_errors_are_python_exceptions():
    with pytest.raises(rk.InputError):
        rk.scalar_kernels({"states": ["1"]}, 1.0, 0.1)
    with pytest.raises(ValueError):
        rk.solve(TWO_STATE, 1.0, 0.3)


def test_demo_rows():
    assert "hopfield-fig4" in rk.presets()
    rows = rk.demo("hopfield-fig4")
    assert any(abs(r["target"] - 0.0625) < 1e-12 for r in rows)
