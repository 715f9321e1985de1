import numpy as np
import pytest

from qssm.optim import NelderMeadConfig, nelder_mead_minimize


def test_one_dimensional_quadratic():
    res = nelder_mead_minimize(lambda x: (x[0] - 3.0) ** 2, [0.0])
    assert abs(res.x[0] - 3.0) < 1e-4


def test_constant_objective_stops_on_value_tolerance():
    res = nelder_mead_minimize(lambda x: 1.5, [0.0, 0.0])
    assert res.reason == "fatol" and res.n_evals == 3


def test_rosenbrock():
    def rosen(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    res = nelder_mead_minimize(rosen, [-1.0, 1.0], NelderMeadConfig(max_evals=2000, xatol=1e-10, fatol=1e-14))
    assert res.fun < 1e-3
    assert res.n_evals <= 2000 + 2


def test_budget_exhaustion_returns_best_seen():
    calls = []

    def f(x):
        calls.append(float(x @ x))
        return calls[-1]

    res = nelder_mead_minimize(f, np.ones(4), NelderMeadConfig(max_evals=12))
    assert res.fun == pytest.approx(min(calls))
    assert res.trace == sorted(res.trace, reverse=True)
